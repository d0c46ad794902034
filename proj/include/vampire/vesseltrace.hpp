#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vampire/grid.hpp"

namespace vampire::vesseltrace {

struct Pixel {
  int r = 0;
  int c = 0;
  bool operator==(const Pixel&) const = default;
};

inline int raster_index(const Pixel& p, int cols) { return p.r * cols + p.c; }

enum class NodeKind { endpoint, junction };

// Skeleton-pixel graph: endpoints/junctions as nodes, degree-2 pixel runs as edges.
// Edge chains include both terminal node pixels; interior pixels belong to
// exactly one chain.
struct VesselGraph {
  struct Node {
    Pixel pixel;
    NodeKind kind;
  };
  struct Edge {
    int node_a = -1;
    int node_b = -1;
    std::vector<Pixel> chain;  // node_a pixel first, node_b pixel last
  };
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adjacency;  // node -> incident edge ids
  int rows = 0, cols = 0;
};

// One vessel-following run; pixel-level or patch-level depending on stage.
struct PixelTrajectory {
  std::vector<Pixel> pixels;
};

struct Trajectory {
  std::vector<int> patches;
};

enum class RunKind : char { vessel = 'V', background = 'B', remainder = 'R' };

struct ScanRun {
  RunKind kind;
  int run_id = 0;
  int begin = 0;  // [begin, end) span into order
  int end = 0;
};

// Permutation of patch indices: vessel runs interleaved with background runs,
// raster remainder appended last.
struct ScanOrder {
  std::vector<int> order;
  std::vector<ScanRun> runs;
  int trajectory_count = 0;
  int grid_rows = 0, grid_cols = 0;
};

// Mask-derived statistics that drive the synthetic labels.
struct VesselStats {
  double density = 0.0;          // mask pixels / total pixels
  double mean_tortuosity = 0.0;  // length-weighted path/chord over edge chains
  double mean_caliber = 0.0;     // mask pixels / skeleton pixels
  int branch_count = 0;          // junction nodes in the skeleton graph
};

// Otsu threshold on a layer-0-weighted mean of the three layers, then one
// pass of 3x3 morphological opening. All-flat input yields an empty mask.
Mask segment_vessels(const std::array<Grid, 3>& layers);

// Drops 8-connected components below min_component pixels, then closes with a
// disk of close_radius (radius 0 skips closing).
Mask refine_mask(const Mask& mask, int min_component, int close_radius);

// Zhang-Suen iterative thinning to 1-px-wide 8-connected centerlines. A
// subiteration never erases a whole component: the smallest-raster flagged
// pixel of a dying component is retained, so component count is preserved.
Mask skeletonize(const Mask& mask);

Mask erode3x3(const Mask& m);
Mask dilate3x3(const Mask& m);
int count_components8(const Mask& m);

VesselGraph build_graph(const Mask& skeleton);

// DFS from each component root (smallest-raster endpoint, else smallest-raster
// node); neighbors in compass order E,SE,S,SW,W,NW,N,NE. Each maximal
// root-to-leaf path emits one trajectory; every edge appears exactly once.
std::vector<PixelTrajectory> extract_trajectories(const VesselGraph& graph);

// Maps pixel runs onto patch indices: consecutive duplicates collapsed,
// globally deduplicated, thin patches dropped, and runs split wherever a
// skip breaks 8-adjacency so every emitted run stays 8-connected.
std::vector<Trajectory> patchify_trajectories(const std::vector<PixelTrajectory>& pixel_trajs,
                                              const Mask& skeleton, int patch_size,
                                              double vessel_fraction_min);

ScanOrder build_scan_order(const std::vector<Trajectory>& patch_trajs, int grid_rows, int grid_cols);

ScanOrder linear_scan_order(int grid_rows, int grid_cols);
ScanOrder diagonal_scan_order(int grid_rows, int grid_cols);

// Full mask -> vessel scan order pipeline used by the model.
struct ScanConfig {
  int min_component = 4;
  int close_radius = 0;
  double vessel_fraction_min = 0.1;
};

ScanOrder vessel_scan_order(const Mask& mask, int patch_size, const ScanConfig& cfg = {});

VesselStats vessel_stats(const Mask& mask);

// CSV rows: position,patch_index,run_kind(V|B|R),run_id
std::string scan_order_csv(const ScanOrder& so);

}  // namespace vampire::vesseltrace
