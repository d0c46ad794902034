#include "vampire/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "vampire/errors.hpp"
#include "vampire/rng.hpp"
#include "vampire/vesseltrace.hpp"

namespace vampire::synthdata {

const std::array<std::string, kLabelCount> kLabelNames = {"HR", "HG", "HC", "HTG", "HTN"};

void LabeledSample::validate() const {
  int r = layers[0].rows, c = layers[0].cols;
  for (const auto& l : layers)
    if (l.rows != r || l.cols != c) throw DataError("sample layers have unequal dimensions");
  if (vessel_mask.rows != r || vessel_mask.cols != c)
    throw DataError("vessel_mask dimensions differ from layers");
  for (int l : labels)
    if (l != 0 && l != 1) throw DataError("labels must be binary");
}

void GenConfig::validate() const {
  if (image_size < 32) throw ConfigError("gen.image_size must be >= 32");
  if (n_patients < 1) throw ConfigError("gen.n_patients must be >= 1");
  if (eyes_per_patient != 1 && eyes_per_patient != 2)
    throw ConfigError("gen.eyes_per_patient must be 1 or 2");
  if (images_per_eye < 1) throw ConfigError("gen.images_per_eye must be >= 1");
  if (vessel_count_min < 0 || vessel_count_min > vessel_count_max)
    throw ConfigError("gen.vessel_count_range must be a nonempty range of counts >= 0");
  if (tortuosity_min < 1.0 || tortuosity_min > tortuosity_max)
    throw ConfigError("gen.tortuosity_range must be a nonempty range with min >= 1");
  if (noise_sigma < 0) throw ConfigError("gen.noise_sigma must be >= 0");
  if (label_flip_prob < 0 || label_flip_prob > 1)
    throw ConfigError("gen.label_flip_prob must be in [0,1]");
}

namespace {

struct Vec2 {
  double r = 0, c = 0;
};

// Stamps a disk of diameter `width` at the continuous point.
void stamp(Mask& mask, double r, double c, int width) {
  double rad = width / 2.0;
  int r0 = static_cast<int>(std::floor(r - rad)), r1 = static_cast<int>(std::ceil(r + rad));
  int c0 = static_cast<int>(std::floor(c - rad)), c1 = static_cast<int>(std::ceil(c + rad));
  for (int rr = r0; rr <= r1; ++rr)
    for (int cc = c0; cc <= c1; ++cc) {
      if (!mask.in_bounds(rr, cc)) continue;
      double dr = rr - r, dc = cc - c;
      if (dr * dr + dc * dc <= rad * rad) mask.at(rr, cc) = 1;
    }
}

void render_curve(Mask& mask, Vec2 p0, Vec2 p1, Vec2 p2, double wiggle_amp, double wiggle_freq,
                  double wiggle_phase, int width) {
  double chord = std::hypot(p2.r - p0.r, p2.c - p0.c);
  int steps = std::max(8, static_cast<int>(chord * 4));
  // unit normal of the chord, for the wiggle displacement
  double nr = -(p2.c - p0.c) / std::max(chord, 1e-9);
  double nc = (p2.r - p0.r) / std::max(chord, 1e-9);
  for (int i = 0; i <= steps; ++i) {
    double t = static_cast<double>(i) / steps;
    double u = 1.0 - t;
    double r = u * u * p0.r + 2 * u * t * p1.r + t * t * p2.r;
    double c = u * u * p0.c + 2 * u * t * p1.c + t * t * p2.c;
    double w = wiggle_amp * std::sin(2 * std::numbers::pi * wiggle_freq * t + wiggle_phase);
    stamp(mask, r + w * nr, c + w * nc, width);
  }
}

struct EyeGeometry {
  Mask mask;
  Grid brightness;  // per-pixel vessel brightness before layer contrast
};

EyeGeometry generate_eye_geometry(const GenConfig& cfg, std::uint64_t eye_index) {
  auto rng = substream(cfg.seed, RngStream::eye_geometry, eye_index);
  int n = cfg.image_size;
  EyeGeometry geo{Mask(n, n, 0), Grid(n, n, 0.0)};

  int n_vessels = std::uniform_int_distribution<int>(cfg.vessel_count_min,
                                                     cfg.vessel_count_max)(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int v = 0; v < n_vessels; ++v) {
    // endpoints on two different borders, chord at least 40% of the image
    Vec2 p0, p2;
    for (int attempt = 0; attempt < 32; ++attempt) {
      auto border_point = [&](int side) -> Vec2 {
        double t = unit(rng) * (n - 1);
        switch (side) {
          case 0: return {0.0, t};
          case 1: return {static_cast<double>(n - 1), t};
          case 2: return {t, 0.0};
          default: return {t, static_cast<double>(n - 1)};
        }
      };
      int s0 = std::uniform_int_distribution<int>(0, 3)(rng);
      int s1 = std::uniform_int_distribution<int>(0, 3)(rng);
      p0 = border_point(s0);
      p2 = border_point(s1);
      if (s0 != s1 && std::hypot(p2.r - p0.r, p2.c - p0.c) >= 0.4 * n) break;
    }
    double chord = std::hypot(p2.r - p0.r, p2.c - p0.c);
    double tau = std::uniform_real_distribution<double>(cfg.tortuosity_min,
                                                        cfg.tortuosity_max)(rng);
    // parabola with sagitta s over chord L has arc/chord ~ 1 + 8s^2/(3L^2)
    double sagitta = chord * std::sqrt(3.0 * std::max(0.0, tau - 1.0) / 8.0);
    double side = unit(rng) < 0.5 ? -1.0 : 1.0;
    double nr = -(p2.c - p0.c) / std::max(chord, 1e-9);
    double nc = (p2.r - p0.r) / std::max(chord, 1e-9);
    Vec2 mid{(p0.r + p2.r) / 2, (p0.c + p2.c) / 2};
    Vec2 ctrl{mid.r + side * 2 * sagitta * nr, mid.c + side * 2 * sagitta * nc};

    double wiggle_amp = (tau - 1.0) * 2.5 * unit(rng);
    double wiggle_freq = 2.0 + 2.0 * unit(rng);
    double wiggle_phase = 2 * std::numbers::pi * unit(rng);
    // width 1-4 px, weighted toward 2-4 so morphological opening keeps most mass
    double wdraw = unit(rng);
    int width = wdraw < 0.15 ? 1 : wdraw < 0.40 ? 2 : wdraw < 0.70 ? 3 : 4;
    double bright = 0.7 + 0.25 * unit(rng);

    Mask vm(n, n, 0);
    render_curve(vm, p0, ctrl, p2, wiggle_amp, wiggle_freq, wiggle_phase, width);

    // occasional side branch off the main curve
    int n_branches = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int b = 0; b < n_branches; ++b) {
      double t = 0.3 + 0.4 * unit(rng);
      double u = 1.0 - t;
      Vec2 at{u * u * p0.r + 2 * u * t * ctrl.r + t * t * p2.r,
              u * u * p0.c + 2 * u * t * ctrl.c + t * t * p2.c};
      Vec2 tangent{2 * (u * (ctrl.r - p0.r) + t * (p2.r - ctrl.r)),
                   2 * (u * (ctrl.c - p0.c) + t * (p2.c - ctrl.c))};
      double tl = std::hypot(tangent.r, tangent.c);
      if (tl < 1e-9) continue;
      double ang = (0.5 + 0.7 * unit(rng)) * (unit(rng) < 0.5 ? 1 : -1);
      double ca = std::cos(ang), sa = std::sin(ang);
      Vec2 dir{(tangent.r * ca - tangent.c * sa) / tl, (tangent.r * sa + tangent.c * ca) / tl};
      double blen = (0.2 + 0.3 * unit(rng)) * chord;
      Vec2 bend{at.r + dir.r * blen, at.c + dir.c * blen};
      Vec2 bctrl{(at.r + bend.r) / 2 + dir.c * blen * 0.15, (at.c + bend.c) / 2 - dir.r * blen * 0.15};
      render_curve(vm, at, bctrl, bend, 0.0, 1.0, 0.0, std::max(1, width - 1));
    }

    for (size_t i = 0; i < vm.size(); ++i)
      if (vm.v[i]) {
        geo.mask.v[i] = 1;
        geo.brightness.v[i] = std::max(geo.brightness.v[i], bright);
      }
  }
  return geo;
}

std::array<int, kLabelCount> labels_from_stats(const vesseltrace::VesselStats& st,
                                               const GenConfig& cfg) {
  std::array<double, kLabelCount> s{st.density, st.mean_tortuosity, st.mean_caliber,
                                    static_cast<double>(st.branch_count),
                                    st.density * st.mean_tortuosity};
  std::array<int, kLabelCount> labels{};
  for (int i = 0; i < kLabelCount; ++i) labels[i] = s[i] > cfg.label_thresholds[i] ? 1 : 0;
  return labels;
}

}  // namespace

std::vector<LabeledSample> generate_dataset(const GenConfig& cfg) {
  cfg.validate();
  std::vector<LabeledSample> samples;
  const std::array<double, 3> background{0.12, 0.10, 0.08};

  std::uint64_t eye_index = 0, sample_index = 0;
  for (int p = 0; p < cfg.n_patients; ++p) {
    auto prng = substream(cfg.seed, RngStream::patient_meta, static_cast<std::uint64_t>(p));
    int age = std::uniform_int_distribution<int>(35, 80)(prng);
    int gender = std::uniform_int_distribution<int>(0, 1)(prng);
    char pid[16];
    std::snprintf(pid, sizeof pid, "p%04d", p);

    for (int e = 0; e < cfg.eyes_per_patient; ++e, ++eye_index) {
      EyeGeometry geo = generate_eye_geometry(cfg, eye_index);
      auto stats = vesseltrace::vessel_stats(geo.mask);
      auto labels = labels_from_stats(stats, cfg);
      if (cfg.label_flip_prob > 0) {
        auto lrng = substream(cfg.seed, RngStream::label_noise, eye_index);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (auto& l : labels)
          if (unit(lrng) < cfg.label_flip_prob) l = 1 - l;
      }
      std::string eye_id = std::string(pid) + (e == 0 ? "_R" : "_L");

      for (int im = 0; im < cfg.images_per_eye; ++im, ++sample_index) {
        auto srng = substream(cfg.seed, RngStream::sample_noise, sample_index);
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        LabeledSample s;
        s.patient_id = pid;
        s.eye_id = eye_id;
        s.age = age;
        s.gender = gender;
        s.labels = labels;
        s.vessel_mask = geo.mask;
        for (int layer = 0; layer < 3; ++layer) {
          Grid g(cfg.image_size, cfg.image_size, background[layer]);
          for (size_t i = 0; i < g.size(); ++i) {
            if (geo.mask.v[i])
              g.v[i] = std::max(g.v[i], cfg.layer_contrast[layer] * geo.brightness.v[i]);
            if (cfg.noise_sigma > 0) g.v[i] += noise(srng);
            g.v[i] = std::clamp(g.v[i], 0.0, 1.0);
          }
          s.layers[layer] = std::move(g);
        }
        samples.push_back(std::move(s));
      }
    }
  }
  return samples;
}

std::filesystem::path write_dataset(const std::vector<LabeledSample>& samples,
                                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto manifest_path = dir / "manifest.csv";
  std::ofstream csv(manifest_path);
  if (!csv) throw DataError("cannot write manifest: " + manifest_path.string());
  csv << "patient_id,eye_id,sample_id,age,gender,HR,HG,HC,HTG,HTN,layer0,layer1,layer2,mask\n";

  std::map<std::string, int> per_eye_counter;
  for (const auto& s : samples) {
    int k = per_eye_counter[s.eye_id]++;
    char suffix[8];
    std::snprintf(suffix, sizeof suffix, "_%02d", k);
    std::string sample_id = s.eye_id + suffix;
    std::array<std::string, 3> layer_files;
    for (int l = 0; l < 3; ++l) {
      layer_files[l] = sample_id + "_l" + std::to_string(l) + ".pgm";
      write_pgm16(s.layers[l], dir / layer_files[l]);
    }
    std::string mask_file = sample_id + "_mask.pgm";
    write_pgm_mask(s.vessel_mask, dir / mask_file);
    csv << s.patient_id << "," << s.eye_id << "," << sample_id << "," << s.age << "," << s.gender;
    for (int l : s.labels) csv << "," << l;
    for (const auto& f : layer_files) csv << "," << f;
    csv << "," << mask_file << "\n";
  }
  return manifest_path;
}

std::vector<LabeledSample> read_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream csv(manifest_path);
  if (!csv) throw DataError("missing file: " + manifest_path.string());
  auto dir = manifest_path.parent_path();
  std::string line;
  if (!std::getline(csv, line)) throw DataError("empty manifest: " + manifest_path.string());
  const std::string expected_header =
      "patient_id,eye_id,sample_id,age,gender,HR,HG,HC,HTG,HTN,layer0,layer1,layer2,mask";
  if (line != expected_header)
    throw DataError("CSV column mismatch in manifest header: " + manifest_path.string());

  std::vector<LabeledSample> samples;
  int lineno = 1;
  while (std::getline(csv, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 14)
      throw DataError("CSV column mismatch at line " + std::to_string(lineno) + " (got " +
                      std::to_string(cols.size()) + " columns, expected 14)");
    LabeledSample s;
    s.patient_id = cols[0];
    s.eye_id = cols[1];
    try {
      s.age = std::stoi(cols[3]);
      s.gender = std::stoi(cols[4]);
      for (int l = 0; l < kLabelCount; ++l) s.labels[l] = std::stoi(cols[5 + l]);
    } catch (const std::exception&) {
      throw DataError("CSV numeric field parse failure at line " + std::to_string(lineno));
    }
    for (int l = 0; l < 3; ++l) s.layers[l] = read_pgm16(dir / cols[10 + l]);
    s.vessel_mask = read_pgm_mask(dir / cols[13]);
    s.validate();
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace vampire::synthdata
