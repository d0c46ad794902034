#include "vampire/imageprep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "vampire/errors.hpp"

namespace vampire::imageprep {

void PrepConfig::validate(int patch_size) const {
  if (median_kernel < 1 || median_kernel % 2 == 0)
    throw ConfigError("prep.median_kernel must be odd and >= 1");
  if (clahe_tiles < 1) throw ConfigError("prep.clahe_tiles must be >= 1");
  if (clahe_clip < 1.0) throw ConfigError("prep.clahe_clip must be >= 1");
  if (patch_size > 0 && target_size % patch_size != 0)
    throw ConfigError("prep.target_size must be divisible by the model patch size");
  if (crop_scale_min <= 0 || crop_scale_min > crop_scale_max || crop_scale_max > 1.0)
    throw ConfigError("prep.crop_scale range must satisfy 0 < min <= max <= 1");
  if (rotation_max < 0) throw ConfigError("prep.rotation_max must be >= 0");
}

Grid median_filter(const Grid& g, int kernel) {
  if (kernel % 2 == 0) throw ConfigError("median_filter: kernel must be odd");
  if (kernel > std::min(g.rows, g.cols)) throw ConfigError("median_filter: kernel exceeds image");
  int half = kernel / 2;
  Grid out(g.rows, g.cols);
  std::vector<double> window(static_cast<size_t>(kernel) * kernel);
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      size_t n = 0;
      for (int dr = -half; dr <= half; ++dr)
        for (int dc = -half; dc <= half; ++dc) {
          int rr = std::clamp(r + dr, 0, g.rows - 1);  // edge replication
          int cc = std::clamp(c + dc, 0, g.cols - 1);
          window[n++] = g.at(rr, cc);
        }
      auto mid = window.begin() + static_cast<long>(n / 2);
      std::nth_element(window.begin(), mid, window.begin() + static_cast<long>(n));
      out.at(r, c) = *mid;
    }
  return out;
}

Grid clahe(const Grid& g, int tiles, double clip) {
  if (g.size() == 0) throw ConfigError("clahe: empty grid");
  if (tiles < 1 || tiles > std::min(g.rows, g.cols))
    throw ConfigError("clahe: tile grid larger than image");
  constexpr int kBins = 256;

  auto bin_of = [&](double x) {
    return std::clamp(static_cast<int>(x * kBins), 0, kBins - 1);
  };

  // one clipped, renormalized CDF mapping per tile
  std::vector<std::array<double, kBins>> mapping(static_cast<size_t>(tiles) * tiles);
  std::vector<double> tile_r0(tiles), tile_c0(tiles);  // tile centers
  double tile_h = static_cast<double>(g.rows) / tiles;
  double tile_w = static_cast<double>(g.cols) / tiles;

  for (int tr = 0; tr < tiles; ++tr) {
    for (int tc = 0; tc < tiles; ++tc) {
      int r0 = static_cast<int>(std::floor(tr * tile_h));
      int r1 = tr == tiles - 1 ? g.rows : static_cast<int>(std::floor((tr + 1) * tile_h));
      int c0 = static_cast<int>(std::floor(tc * tile_w));
      int c1 = tc == tiles - 1 ? g.cols : static_cast<int>(std::floor((tc + 1) * tile_w));
      std::array<double, kBins> hist{};
      long count = 0;
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
          hist[bin_of(g.at(r, c))] += 1.0;
          ++count;
        }
      if (std::isfinite(clip)) {
        double limit = clip * static_cast<double>(count) / kBins;
        double excess = 0;
        for (auto& h : hist)
          if (h > limit) {
            excess += h - limit;
            h = limit;
          }
        double add = excess / kBins;  // single-pass uniform redistribution
        for (auto& h : hist) h += add;
      }
      auto& map = mapping[static_cast<size_t>(tr) * tiles + tc];
      double cum = 0;
      for (int b = 0; b < kBins; ++b) {
        cum += hist[b];
        map[b] = count > 0 ? cum / static_cast<double>(count) : 0.0;
      }
    }
  }
  for (int t = 0; t < tiles; ++t) {
    tile_r0[t] = (t + 0.5) * tile_h;
    tile_c0[t] = (t + 0.5) * tile_w;
  }

  Grid out(g.rows, g.cols);
  for (int r = 0; r < g.rows; ++r) {
    double fr = (r + 0.5) / tile_h - 0.5;
    int tr0 = std::clamp(static_cast<int>(std::floor(fr)), 0, tiles - 1);
    int tr1 = std::clamp(tr0 + 1, 0, tiles - 1);
    double wr = std::clamp(fr - tr0, 0.0, 1.0);
    for (int c = 0; c < g.cols; ++c) {
      double fc = (c + 0.5) / tile_w - 0.5;
      int tc0 = std::clamp(static_cast<int>(std::floor(fc)), 0, tiles - 1);
      int tc1 = std::clamp(tc0 + 1, 0, tiles - 1);
      double wc = std::clamp(fc - tc0, 0.0, 1.0);
      int b = bin_of(g.at(r, c));
      double m00 = mapping[static_cast<size_t>(tr0) * tiles + tc0][b];
      double m01 = mapping[static_cast<size_t>(tr0) * tiles + tc1][b];
      double m10 = mapping[static_cast<size_t>(tr1) * tiles + tc0][b];
      double m11 = mapping[static_cast<size_t>(tr1) * tiles + tc1][b];
      double val = (1 - wr) * ((1 - wc) * m00 + wc * m01) + wr * ((1 - wc) * m10 + wc * m11);
      out.at(r, c) = std::clamp(val, 0.0, 1.0);
    }
  }
  return out;
}

Grid resize_bilinear(const Grid& g, int target_rows, int target_cols) {
  if (target_rows < 2 || target_cols < 2) throw ConfigError("resize: target must be >= 2");
  if (target_rows == g.rows && target_cols == g.cols) return g;
  Grid out(target_rows, target_cols);
  double sr = target_rows > 1 ? static_cast<double>(g.rows - 1) / (target_rows - 1) : 0.0;
  double sc = target_cols > 1 ? static_cast<double>(g.cols - 1) / (target_cols - 1) : 0.0;
  for (int r = 0; r < target_rows; ++r) {
    double y = r * sr;
    int y0 = std::min(static_cast<int>(y), g.rows - 1);
    int y1 = std::min(y0 + 1, g.rows - 1);
    double wy = y - y0;
    for (int c = 0; c < target_cols; ++c) {
      double x = c * sc;
      int x0 = std::min(static_cast<int>(x), g.cols - 1);
      int x1 = std::min(x0 + 1, g.cols - 1);
      double wx = x - x0;
      out.at(r, c) = (1 - wy) * ((1 - wx) * g.at(y0, x0) + wx * g.at(y0, x1)) +
                     wy * ((1 - wx) * g.at(y1, x0) + wx * g.at(y1, x1));
    }
  }
  return out;
}

Mask resize_nearest(const Mask& m, int target_rows, int target_cols) {
  if (target_rows == m.rows && target_cols == m.cols) return m;
  Mask out(target_rows, target_cols);
  double sr = target_rows > 1 ? static_cast<double>(m.rows - 1) / (target_rows - 1) : 0.0;
  double sc = target_cols > 1 ? static_cast<double>(m.cols - 1) / (target_cols - 1) : 0.0;
  for (int r = 0; r < target_rows; ++r)
    for (int c = 0; c < target_cols; ++c) {
      int y = std::clamp(static_cast<int>(std::lround(r * sr)), 0, m.rows - 1);
      int x = std::clamp(static_cast<int>(std::lround(c * sc)), 0, m.cols - 1);
      out.at(r, c) = m.at(y, x);
    }
  return out;
}

Grid crop(const Grid& g, int r0, int c0, int h, int w) {
  Grid out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = g.at(r0 + r, c0 + c);
  return out;
}

Mask crop(const Mask& m, int r0, int c0, int h, int w) {
  Mask out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = m.at(r0 + r, c0 + c);
  return out;
}

namespace {

Grid flip_h(const Grid& g) {
  Grid out(g.rows, g.cols);
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) out.at(r, c) = g.at(r, g.cols - 1 - c);
  return out;
}

Mask flip_h(const Mask& m) {
  Mask out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out.at(r, c) = m.at(r, m.cols - 1 - c);
  return out;
}

// Rotation about the image center; out-of-range samples are zero.
Grid rotate_bilinear(const Grid& g, double angle_deg) {
  double a = angle_deg * std::numbers::pi / 180.0;
  double ca = std::cos(a), sa = std::sin(a);
  double cy = (g.rows - 1) / 2.0, cx = (g.cols - 1) / 2.0;
  Grid out(g.rows, g.cols, 0.0);
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      double dy = r - cy, dx = c - cx;
      double sy = cy + (ca * dy - sa * dx);  // inverse map
      double sx = cx + (sa * dy + ca * dx);
      int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
      double wy = sy - y0, wx = sx - x0;
      double acc = 0;
      for (int dy2 = 0; dy2 <= 1; ++dy2)
        for (int dx2 = 0; dx2 <= 1; ++dx2) {
          int yy = y0 + dy2, xx = x0 + dx2;
          if (!g.in_bounds(yy, xx)) continue;
          double w = (dy2 ? wy : 1 - wy) * (dx2 ? wx : 1 - wx);
          acc += w * g.at(yy, xx);
        }
      out.at(r, c) = acc;
    }
  return out;
}

Mask rotate_nearest(const Mask& m, double angle_deg) {
  double a = angle_deg * std::numbers::pi / 180.0;
  double ca = std::cos(a), sa = std::sin(a);
  double cy = (m.rows - 1) / 2.0, cx = (m.cols - 1) / 2.0;
  Mask out(m.rows, m.cols, 0);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      double dy = r - cy, dx = c - cx;
      int sy = static_cast<int>(std::lround(cy + (ca * dy - sa * dx)));
      int sx = static_cast<int>(std::lround(cx + (sa * dy + ca * dx)));
      if (m.in_bounds(sy, sx)) out.at(r, c) = m.at(sy, sx);
    }
  return out;
}

}  // namespace

synthdata::LabeledSample apply_augment(const synthdata::LabeledSample& s, const AugmentDraw& d) {
  synthdata::LabeledSample out = s;
  int rows = s.layers[0].rows, cols = s.layers[0].cols;

  if (d.crop_scale < 1.0) {
    int h = std::max(2, static_cast<int>(std::lround(rows * d.crop_scale)));
    int w = std::max(2, static_cast<int>(std::lround(cols * d.crop_scale)));
    int r0 = static_cast<int>(std::lround(d.crop_r * (rows - h)));
    int c0 = static_cast<int>(std::lround(d.crop_c * (cols - w)));
    for (auto& layer : out.layers) layer = resize_bilinear(crop(layer, r0, c0, h, w), rows, cols);
    out.vessel_mask = resize_nearest(crop(out.vessel_mask, r0, c0, h, w), rows, cols);
  }
  if (d.flip) {
    for (auto& layer : out.layers) layer = flip_h(layer);
    out.vessel_mask = flip_h(out.vessel_mask);
  }
  if (d.angle_deg != 0.0) {
    for (auto& layer : out.layers) layer = rotate_bilinear(layer, d.angle_deg);
    out.vessel_mask = rotate_nearest(out.vessel_mask, d.angle_deg);
  }
  return out;
}

synthdata::LabeledSample augment(const synthdata::LabeledSample& s, const PrepConfig& cfg,
                                 std::mt19937_64& rng) {
  AugmentDraw d;
  d.crop_scale = std::uniform_real_distribution<double>(cfg.crop_scale_min,
                                                        cfg.crop_scale_max)(rng);
  d.crop_r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  d.crop_c = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  d.flip = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.5;
  d.angle_deg =
      std::uniform_real_distribution<double>(-cfg.rotation_max, cfg.rotation_max)(rng);
  return apply_augment(s, d);
}

synthdata::LabeledSample preprocess(const synthdata::LabeledSample& s, const PrepConfig& cfg) {
  synthdata::LabeledSample out = s;
  for (auto& layer : out.layers) {
    layer = median_filter(layer, cfg.median_kernel);
    layer = clahe(layer, cfg.clahe_tiles, cfg.clahe_clip);
    layer = resize_bilinear(layer, cfg.target_size, cfg.target_size);
  }
  out.vessel_mask = resize_nearest(out.vessel_mask, cfg.target_size, cfg.target_size);
  return out;
}

}  // namespace vampire::imageprep
