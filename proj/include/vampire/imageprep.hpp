#pragma once

#include <random>

#include "vampire/grid.hpp"
#include "vampire/synthdata.hpp"

namespace vampire::imageprep {

struct PrepConfig {
  int median_kernel = 3;
  int clahe_tiles = 8;
  double clahe_clip = 2.0;     // relative clip limit; >= 1
  int target_size = 64;        // 448 at paper scale, 64 at desk scale
  double crop_scale_min = 0.8;
  double crop_scale_max = 1.0;
  double rotation_max = 15.0;  // degrees

  void validate(int patch_size) const;
};

Grid median_filter(const Grid& g, int kernel);

// Tile histograms (256 bins) clipped at clip x mean bin height, excess spread
// uniformly in one pass; per-pixel output bilinearly blended between the four
// surrounding tile mappings.
Grid clahe(const Grid& g, int tiles, double clip);

// Corner-aligned bilinear resize; exact identity when sizes match.
Grid resize_bilinear(const Grid& g, int target_rows, int target_cols);
Mask resize_nearest(const Mask& m, int target_rows, int target_cols);

// One concrete draw of the augmentation transform; all layers and the mask
// receive the identical geometry (mask resampled nearest-neighbor).
struct AugmentDraw {
  double crop_scale = 1.0;  // side fraction
  double crop_r = 0.0;      // top-left as fraction of slack
  double crop_c = 0.0;
  bool flip = false;
  double angle_deg = 0.0;
};

Grid crop(const Grid& g, int r0, int c0, int h, int w);
Mask crop(const Mask& m, int r0, int c0, int h, int w);

synthdata::LabeledSample apply_augment(const synthdata::LabeledSample& s, const AugmentDraw& d);
synthdata::LabeledSample augment(const synthdata::LabeledSample& s, const PrepConfig& cfg,
                                 std::mt19937_64& rng);

// median -> CLAHE -> resize on every layer; mask resized nearest-neighbor.
synthdata::LabeledSample preprocess(const synthdata::LabeledSample& s, const PrepConfig& cfg);

}  // namespace vampire::imageprep
