#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vampire/grid.hpp"

namespace vampire::synthdata {

constexpr int kLabelCount = 5;
// HR, HG, HC, HTG, HTN
extern const std::array<std::string, kLabelCount> kLabelNames;

struct LabeledSample {
  std::array<Grid, 3> layers;  // superficial, deep, avascular
  Mask vessel_mask;
  std::array<int, kLabelCount> labels{};
  std::string patient_id;
  std::string eye_id;
  int age = 0;
  int gender = 0;  // {0,1}

  void validate() const;
};

struct GenConfig {
  int image_size = 64;
  int n_patients = 200;
  int eyes_per_patient = 2;
  int images_per_eye = 1;
  int vessel_count_min = 2;
  int vessel_count_max = 7;
  double tortuosity_min = 1.02;
  double tortuosity_max = 1.8;
  double noise_sigma = 0.05;
  // thresholds on: density, mean tortuosity, mean caliber, branch count,
  // density x tortuosity composite
  std::array<double, kLabelCount> label_thresholds{0.085, 1.10, 2.9, 3.5, 0.098};
  double label_flip_prob = 0.02;
  std::uint64_t seed = 1;
  // per-layer contrast of rendered vessels (superficial/deep/avascular)
  std::array<double, 3> layer_contrast{1.0, 0.6, 0.2};

  void validate() const;
};

// Deterministic for a fixed seed; labels derive from mask statistics of the
// eye geometry, so all images of one eye share labels.
std::vector<LabeledSample> generate_dataset(const GenConfig& cfg);

// Layers as 16-bit PGM, masks as maxval-1 PGM, plus a CSV manifest:
// patient_id,eye_id,sample_id,age,gender,HR,HG,HC,HTG,HTN,layer0,layer1,layer2,mask
std::filesystem::path write_dataset(const std::vector<LabeledSample>& samples,
                                    const std::filesystem::path& dir);
std::vector<LabeledSample> read_dataset(const std::filesystem::path& manifest_path);

}  // namespace vampire::synthdata
