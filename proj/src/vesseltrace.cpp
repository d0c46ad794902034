#include "vampire/vesseltrace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "vampire/errors.hpp"

namespace vampire::vesseltrace {

namespace {

// Compass order pinned for DFS determinism: E, SE, S, SW, W, NW, N, NE.
constexpr int kCompassDr[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kCompassDc[8] = {1, 1, 0, -1, -1, -1, 0, 1};

int compass_rank(int dr, int dc) {
  for (int k = 0; k < 8; ++k)
    if (kCompassDr[k] == dr && kCompassDc[k] == dc) return k;
  return 8;
}

inline bool on(const Mask& m, int r, int c) { return m.in_bounds(r, c) && m.at(r, c) != 0; }

int neighbor_count8(const Mask& m, int r, int c) {
  int n = 0;
  for (int k = 0; k < 8; ++k) n += on(m, r + kCompassDr[k], c + kCompassDc[k]) ? 1 : 0;
  return n;
}

// Flood-fill labeling, 8-connectivity. Returns component id per pixel (-1 background).
std::vector<int> label_components8(const Mask& m, int* out_count = nullptr) {
  std::vector<int> label(m.size(), -1);
  int next = 0;
  std::vector<int> stack;
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      int idx = r * m.cols + c;
      if (!m.v[idx] || label[idx] >= 0) continue;
      label[idx] = next;
      stack.push_back(idx);
      while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        int cr = cur / m.cols, cc = cur % m.cols;
        for (int k = 0; k < 8; ++k) {
          int nr = cr + kCompassDr[k], nc = cc + kCompassDc[k];
          if (!on(m, nr, nc)) continue;
          int nidx = nr * m.cols + nc;
          if (label[nidx] < 0) {
            label[nidx] = next;
            stack.push_back(nidx);
          }
        }
      }
      ++next;
    }
  }
  if (out_count) *out_count = next;
  return label;
}

// Zhang-Suen neighborhood ring p2..p9 = N,NE,E,SE,S,SW,W,NW.
constexpr int kRingDr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kRingDc[8] = {0, 1, 1, 1, 0, -1, -1, -1};

// True when deleting the pixel cannot split its neighborhood or close a hole:
// the foreground ring cells form one pixel-adjacent component and the pixel
// still touches background through a straight neighbor.
bool simple_point(const Mask& m, int r, int c) {
  bool ring[8];
  int cnt = 0;
  for (int k = 0; k < 8; ++k) {
    ring[k] = on(m, r + kRingDr[k], c + kRingDc[k]);
    cnt += ring[k] ? 1 : 0;
  }
  if (cnt == 0) return false;
  // ring positions 0,2,4,6 are the straight neighbors N,E,S,W
  if (ring[0] && ring[2] && ring[4] && ring[6]) return false;
  int comp = 0;
  bool seen[8] = {};
  for (int k = 0; k < 8; ++k) {
    if (!ring[k] || seen[k]) continue;
    ++comp;
    std::vector<int> st{k};
    seen[k] = true;
    while (!st.empty()) {
      int u = st.back();
      st.pop_back();
      for (int w = 0; w < 8; ++w) {
        if (!ring[w] || seen[w]) continue;
        if (std::abs(kRingDr[u] - kRingDr[w]) <= 1 && std::abs(kRingDc[u] - kRingDc[w]) <= 1) {
          seen[w] = true;
          st.push_back(w);
        }
      }
    }
  }
  return comp == 1;
}

std::vector<std::pair<int, int>> bresenham(int r0, int c0, int r1, int c1) {
  std::vector<std::pair<int, int>> line;
  int dr = std::abs(r1 - r0), dc = std::abs(c1 - c0);
  int sr = r0 < r1 ? 1 : -1, sc = c0 < c1 ? 1 : -1;
  int err = dc - dr;
  for (;;) {
    line.emplace_back(r0, c0);
    if (r0 == r1 && c0 == c1) break;
    int e2 = 2 * err;
    if (e2 > -dr) {
      err -= dr;
      c0 += sc;
    }
    if (e2 < dc) {
      err += dc;
      r0 += sr;
    }
  }
  return line;
}

}  // namespace

Mask erode3x3(const Mask& m) {
  Mask out(m.rows, m.cols, 0);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      bool keep = true;
      for (int dr = -1; dr <= 1 && keep; ++dr)
        for (int dc = -1; dc <= 1 && keep; ++dc)
          if (!on(m, r + dr, c + dc)) keep = false;
      out.at(r, c) = keep ? 1 : 0;
    }
  return out;
}

Mask dilate3x3(const Mask& m) {
  Mask out(m.rows, m.cols, 0);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      bool hit = false;
      for (int dr = -1; dr <= 1 && !hit; ++dr)
        for (int dc = -1; dc <= 1 && !hit; ++dc)
          if (on(m, r + dr, c + dc)) hit = true;
      out.at(r, c) = hit ? 1 : 0;
    }
  return out;
}

int count_components8(const Mask& m) {
  int n = 0;
  label_components8(m, &n);
  return n;
}

Mask segment_vessels(const std::array<Grid, 3>& layers) {
  const Grid& l0 = layers[0];
  for (int i = 1; i < 3; ++i)
    if (layers[i].rows != l0.rows || layers[i].cols != l0.cols)
      throw DimensionError("segment_vessels: layer dimensions differ");
  Grid w(l0.rows, l0.cols);
  for (size_t i = 0; i < w.size(); ++i)
    w.v[i] = 0.6 * layers[0].v[i] + 0.3 * layers[1].v[i] + 0.1 * layers[2].v[i];

  // Otsu on a 256-bin histogram.
  constexpr int kBins = 256;
  std::array<long, kBins> hist{};
  for (double x : w.v) {
    int b = std::clamp(static_cast<int>(x * kBins), 0, kBins - 1);
    hist[b]++;
  }
  long total = static_cast<long>(w.size());
  double sum_all = 0;
  for (int b = 0; b < kBins; ++b) sum_all += static_cast<double>(b) * hist[b];
  long w_bg = 0;
  double sum_bg = 0, best_var = 0;
  int best_t = -1;
  for (int t = 0; t < kBins - 1; ++t) {
    w_bg += hist[t];
    if (w_bg == 0) continue;
    long w_fg = total - w_bg;
    if (w_fg == 0) break;
    sum_bg += static_cast<double>(t) * hist[t];
    double mu_bg = sum_bg / w_bg;
    double mu_fg = (sum_all - sum_bg) / w_fg;
    double var = static_cast<double>(w_bg) * w_fg * (mu_bg - mu_fg) * (mu_bg - mu_fg);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  Mask mask(w.rows, w.cols, 0);
  if (best_t < 0) return mask;  // all-flat image: no threshold exists
  double thr = static_cast<double>(best_t + 1) / kBins;
  for (size_t i = 0; i < w.size(); ++i) mask.v[i] = w.v[i] >= thr ? 1 : 0;
  return dilate3x3(erode3x3(mask));
}

Mask refine_mask(const Mask& mask, int min_component, int close_radius) {
  if (min_component < 0) throw ConfigError("refine_mask: min_component must be >= 0");
  Mask out = mask;
  if (min_component > 0) {
    std::vector<int> label = label_components8(mask);
    std::map<int, int> sizes;
    for (int l : label)
      if (l >= 0) sizes[l]++;
    for (size_t i = 0; i < out.size(); ++i)
      if (label[i] >= 0 && sizes[label[i]] < min_component) out.v[i] = 0;
  }
  if (close_radius > 0) {
    // disk structuring element
    std::vector<std::pair<int, int>> disk;
    for (int dr = -close_radius; dr <= close_radius; ++dr)
      for (int dc = -close_radius; dc <= close_radius; ++dc)
        if (dr * dr + dc * dc <= close_radius * close_radius) disk.emplace_back(dr, dc);
    auto apply = [&](const Mask& m, bool dilation) {
      Mask res(m.rows, m.cols, 0);
      for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
          bool acc = !dilation;
          for (auto [dr, dc] : disk) {
            bool px = on(m, r + dr, c + dc);
            if (dilation) {
              if (px) {
                acc = true;
                break;
              }
            } else if (!px) {
              acc = false;
              break;
            }
          }
          res.at(r, c) = acc ? 1 : 0;
        }
      return res;
    };
    out = apply(apply(out, true), false);  // closing = dilate then erode
  }
  return out;
}

Mask skeletonize(const Mask& mask) {
  Mask img = mask;
  for (auto& x : img.v) x = x ? 1 : 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int step = 0; step < 2; ++step) {
      std::vector<int> flagged;
      for (int r = 0; r < img.rows; ++r) {
        for (int c = 0; c < img.cols; ++c) {
          if (!img.at(r, c)) continue;
          bool p[8];
          int B = 0;
          for (int k = 0; k < 8; ++k) {
            p[k] = on(img, r + kRingDr[k], c + kRingDc[k]);
            B += p[k] ? 1 : 0;
          }
          if (B < 2 || B > 6) continue;
          int A = 0;
          for (int k = 0; k < 8; ++k)
            if (!p[k] && p[(k + 1) % 8]) ++A;
          if (A != 1) continue;
          // ring: 0=N 1=NE 2=E 3=SE 4=S 5=SW 6=W 7=NW
          if (step == 0) {
            if (p[0] && p[2] && p[4]) continue;
            if (p[2] && p[4] && p[6]) continue;
          } else {
            if (p[0] && p[2] && p[6]) continue;
            if (p[0] && p[4] && p[6]) continue;
          }
          flagged.push_back(r * img.cols + c);
        }
      }
      if (flagged.empty()) continue;
      // Never erase a whole component: keep its smallest-raster flagged pixel.
      std::vector<int> label = label_components8(img);
      std::map<int, int> comp_size, comp_flagged;
      for (int i = 0; i < static_cast<int>(img.size()); ++i)
        if (img.v[i]) comp_size[label[i]]++;
      for (int idx : flagged) comp_flagged[label[idx]]++;
      std::set<int> dying;
      for (auto [comp, nf] : comp_flagged)
        if (nf == comp_size[comp]) dying.insert(comp);
      std::set<int> spared;
      for (int idx : flagged) {
        int comp = label[idx];
        if (dying.count(comp) && !spared.count(comp)) {
          spared.insert(comp);  // flagged list is in raster order
          continue;
        }
        img.v[idx] = 0;
        changed = true;
      }
    }
  }
  // Thinning can leave solid 2x2 blocks at dense crossings; peel removable
  // pixels until none remain so downstream graph extraction sees a true
  // 1-px skeleton.
  bool peeled = true;
  while (peeled) {
    peeled = false;
    for (int r = 0; r + 1 < img.rows && !peeled; ++r)
      for (int c = 0; c + 1 < img.cols && !peeled; ++c) {
        if (!(img.at(r, c) && img.at(r, c + 1) && img.at(r + 1, c) && img.at(r + 1, c + 1)))
          continue;
        const std::pair<int, int> cand[4] = {{r + 1, c + 1}, {r + 1, c}, {r, c + 1}, {r, c}};
        for (auto [pr, pc] : cand) {
          if (simple_point(img, pr, pc)) {
            img.at(pr, pc) = 0;
            peeled = true;
            break;
          }
        }
      }
  }
  return img;
}

VesselGraph build_graph(const Mask& skeleton) {
  for (int r = 0; r + 1 < skeleton.rows; ++r)
    for (int c = 0; c + 1 < skeleton.cols; ++c)
      if (skeleton.at(r, c) && skeleton.at(r, c + 1) && skeleton.at(r + 1, c) &&
          skeleton.at(r + 1, c + 1))
        throw StructuralError("build_graph: input is not 1-px thin (solid 2x2 block at row " +
                              std::to_string(r) + ", col " + std::to_string(c) + ")");

  VesselGraph g;
  g.rows = skeleton.rows;
  g.cols = skeleton.cols;
  std::vector<int> degree(skeleton.size(), 0);
  std::vector<int> node_of(skeleton.size(), -1);
  for (int r = 0; r < skeleton.rows; ++r)
    for (int c = 0; c < skeleton.cols; ++c)
      if (skeleton.at(r, c)) degree[r * skeleton.cols + c] = neighbor_count8(skeleton, r, c);

  for (int r = 0; r < skeleton.rows; ++r)
    for (int c = 0; c < skeleton.cols; ++c) {
      int idx = r * skeleton.cols + c;
      if (!skeleton.at(r, c) || degree[idx] == 2) continue;
      NodeKind kind = degree[idx] >= 3 ? NodeKind::junction : NodeKind::endpoint;
      node_of[idx] = static_cast<int>(g.nodes.size());
      g.nodes.push_back({{r, c}, kind});
    }

  std::vector<bool> consumed(skeleton.size(), false);  // chain interiors already traced
  auto add_edge = [&](int a, int b, std::vector<Pixel> chain) {
    g.edges.push_back({a, b, std::move(chain)});
  };

  for (size_t ni = 0; ni < g.nodes.size(); ++ni) {
    Pixel np = g.nodes[ni].pixel;
    for (int k = 0; k < 8; ++k) {
      int qr = np.r + kCompassDr[k], qc = np.c + kCompassDc[k];
      if (!on(skeleton, qr, qc)) continue;
      int qidx = qr * skeleton.cols + qc;
      if (node_of[qidx] >= 0) {
        // direct node-to-node adjacency: record once (smaller raster endpoint owns it)
        if (raster_index(np, skeleton.cols) < qidx)
          add_edge(static_cast<int>(ni), node_of[qidx], {np, {qr, qc}});
        continue;
      }
      if (consumed[qidx]) continue;
      // walk through degree-2 pixels until the next node
      std::vector<Pixel> chain{np};
      Pixel prev = np, cur{qr, qc};
      for (;;) {
        chain.push_back(cur);
        consumed[cur.r * skeleton.cols + cur.c] = true;
        Pixel next{-1, -1};
        for (int j = 0; j < 8; ++j) {
          int nr = cur.r + kCompassDr[j], nc = cur.c + kCompassDc[j];
          if (!on(skeleton, nr, nc)) continue;
          if (nr == prev.r && nc == prev.c) continue;
          next = {nr, nc};
          break;
        }
        if (next.r < 0) {
          // dangling chain end without a node: cannot happen for degree-2 runs
          throw StructuralError("build_graph: chain walk dead-ended");
        }
        int nidx = next.r * skeleton.cols + next.c;
        if (node_of[nidx] >= 0) {
          chain.push_back(next);
          add_edge(static_cast<int>(ni), node_of[nidx], std::move(chain));
          break;
        }
        prev = cur;
        cur = next;
      }
    }
  }

  // Pure cycles have no endpoint/junction: anchor them at their smallest pixel.
  for (int r = 0; r < skeleton.rows; ++r)
    for (int c = 0; c < skeleton.cols; ++c) {
      int idx = r * skeleton.cols + c;
      if (!skeleton.at(r, c) || degree[idx] != 2 || consumed[idx] || node_of[idx] >= 0) continue;
      int anchor = static_cast<int>(g.nodes.size());
      g.nodes.push_back({{r, c}, NodeKind::junction});
      node_of[idx] = anchor;
      std::vector<Pixel> chain{{r, c}};
      Pixel prev{r, c}, cur{-1, -1};
      for (int k = 0; k < 8; ++k) {
        int nr = r + kCompassDr[k], nc = c + kCompassDc[k];
        if (on(skeleton, nr, nc)) {
          cur = {nr, nc};
          break;
        }
      }
      while (cur.r != r || cur.c != c) {
        chain.push_back(cur);
        consumed[cur.r * skeleton.cols + cur.c] = true;
        Pixel next{-1, -1};
        for (int j = 0; j < 8; ++j) {
          int nr = cur.r + kCompassDr[j], nc = cur.c + kCompassDc[j];
          if (!on(skeleton, nr, nc)) continue;
          if (nr == prev.r && nc == prev.c) continue;
          next = {nr, nc};
          break;
        }
        prev = cur;
        cur = next;
      }
      chain.push_back({r, c});
      add_edge(anchor, anchor, std::move(chain));
    }

  g.adjacency.assign(g.nodes.size(), {});
  for (size_t e = 0; e < g.edges.size(); ++e) {
    g.adjacency[g.edges[e].node_a].push_back(static_cast<int>(e));
    if (g.edges[e].node_b != g.edges[e].node_a)
      g.adjacency[g.edges[e].node_b].push_back(static_cast<int>(e));
  }
  return g;
}

namespace {

// Chain oriented to start at the given node's pixel.
std::vector<Pixel> oriented_chain(const VesselGraph::Edge& e, const Pixel& from) {
  if (e.chain.front() == from) return e.chain;
  std::vector<Pixel> rev(e.chain.rbegin(), e.chain.rend());
  return rev;
}

struct DfsState {
  const VesselGraph& g;
  std::vector<bool> edge_visited;
  std::vector<PixelTrajectory>& out;
  std::vector<Pixel> path;
  std::set<std::pair<int, int>> path_set;

  void emit() {
    if (!path.empty()) {
      out.push_back({path});
      path.clear();
      path_set.clear();
    }
  }

  void append(const Pixel& p) {
    if (path_set.count({p.r, p.c})) return;  // cycle/parallel-edge closure
    path.push_back(p);
    path_set.insert({p.r, p.c});
  }

  void visit(int node) {
    Pixel np = g.nodes[node].pixel;
    // incident edges ordered by the compass direction of their first step
    std::vector<std::pair<int, int>> ranked;
    for (int e : g.adjacency[node]) {
      if (edge_visited[e]) continue;
      auto chain = oriented_chain(g.edges[e], np);
      int rank = 8;
      if (chain.size() >= 2) rank = compass_rank(chain[1].r - np.r, chain[1].c - np.c);
      ranked.emplace_back(rank, e);
    }
    std::sort(ranked.begin(), ranked.end());
    bool extended = false;
    for (auto [rank, e] : ranked) {
      if (edge_visited[e]) continue;
      edge_visited[e] = true;
      if (path.empty()) append(np);
      auto chain = oriented_chain(g.edges[e], np);
      for (size_t i = 1; i < chain.size(); ++i) append(chain[i]);
      int far = g.edges[e].node_a == node ? g.edges[e].node_b : g.edges[e].node_a;
      visit(far);
      extended = true;
    }
    if (!extended) emit();
  }
};

}  // namespace

std::vector<PixelTrajectory> extract_trajectories(const VesselGraph& graph) {
  std::vector<PixelTrajectory> out;
  if (graph.nodes.empty()) return out;

  // group nodes into components over the edge structure
  std::vector<int> comp(graph.nodes.size(), -1);
  int ncomp = 0;
  for (size_t i = 0; i < graph.nodes.size(); ++i) {
    if (comp[i] >= 0) continue;
    std::vector<int> st{static_cast<int>(i)};
    comp[i] = ncomp;
    while (!st.empty()) {
      int u = st.back();
      st.pop_back();
      for (int e : graph.adjacency[u]) {
        int v = graph.edges[e].node_a == u ? graph.edges[e].node_b : graph.edges[e].node_a;
        if (comp[v] < 0) {
          comp[v] = ncomp;
          st.push_back(v);
        }
      }
    }
    ++ncomp;
  }

  // root per component: smallest-raster endpoint, else smallest-raster node
  std::vector<int> root(ncomp, -1);
  auto better = [&](int cand, int cur) {
    if (cur < 0) return true;
    bool ce = graph.nodes[cand].kind == NodeKind::endpoint;
    bool re = graph.nodes[cur].kind == NodeKind::endpoint;
    if (ce != re) return ce;
    return raster_index(graph.nodes[cand].pixel, graph.cols) <
           raster_index(graph.nodes[cur].pixel, graph.cols);
  };
  for (size_t i = 0; i < graph.nodes.size(); ++i)
    if (better(static_cast<int>(i), root[comp[i]])) root[comp[i]] = static_cast<int>(i);

  // visit components in raster order of their root
  std::vector<int> order(root.begin(), root.end());
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return raster_index(graph.nodes[a].pixel, graph.cols) <
           raster_index(graph.nodes[b].pixel, graph.cols);
  });

  DfsState st{graph, std::vector<bool>(graph.edges.size(), false), out, {}, {}};
  for (int r : order) {
    if (graph.adjacency[r].empty()) {
      out.push_back({{graph.nodes[r].pixel}});
      continue;
    }
    st.visit(r);
    st.emit();
  }
  return out;
}

std::vector<Trajectory> patchify_trajectories(const std::vector<PixelTrajectory>& pixel_trajs,
                                              const Mask& skeleton, int patch_size,
                                              double vessel_fraction_min) {
  if (patch_size <= 0 || skeleton.rows % patch_size != 0 || skeleton.cols % patch_size != 0)
    throw ConfigError("patchify_trajectories: image size not divisible by patch size");
  int gr = skeleton.rows / patch_size, gc = skeleton.cols / patch_size;

  std::vector<int> skel_count(static_cast<size_t>(gr) * gc, 0);
  for (int r = 0; r < skeleton.rows; ++r)
    for (int c = 0; c < skeleton.cols; ++c)
      if (skeleton.at(r, c)) skel_count[(r / patch_size) * gc + c / patch_size]++;
  double thr = vessel_fraction_min * patch_size;

  std::vector<bool> seen(static_cast<size_t>(gr) * gc, false);
  auto adjacent8 = [&](int a, int b) {
    int ar = a / gc, ac = a % gc, br = b / gc, bc = b % gc;
    return std::abs(ar - br) <= 1 && std::abs(ac - bc) <= 1 && a != b;
  };

  std::vector<Trajectory> out;
  for (const auto& traj : pixel_trajs) {
    std::vector<int> mapped;
    for (const Pixel& p : traj.pixels) {
      int pidx = (p.r / patch_size) * gc + p.c / patch_size;
      if (mapped.empty() || mapped.back() != pidx) mapped.push_back(pidx);
    }
    Trajectory cur;
    auto flush = [&] {
      if (!cur.patches.empty()) out.push_back(std::move(cur));
      cur = {};
    };
    for (int pidx : mapped) {
      if (seen[pidx] || skel_count[pidx] < thr) continue;
      if (!cur.patches.empty() && !adjacent8(cur.patches.back(), pidx)) flush();
      cur.patches.push_back(pidx);
      seen[pidx] = true;
    }
    flush();
  }
  return out;
}

ScanOrder build_scan_order(const std::vector<Trajectory>& patch_trajs, int grid_rows,
                           int grid_cols) {
  int n = grid_rows * grid_cols;
  std::vector<bool> vessel(n, false);
  for (const auto& t : patch_trajs)
    for (int p : t.patches) {
      if (p < 0 || p >= n) throw ConfigError("build_scan_order: patch index out of range");
      if (vessel[p]) throw ConfigError("build_scan_order: duplicate patch across trajectories");
      vessel[p] = true;
    }

  std::vector<const Trajectory*> sorted;
  for (const auto& t : patch_trajs)
    if (!t.patches.empty()) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(),
            [](const Trajectory* a, const Trajectory* b) {
              return a->patches.front() < b->patches.front();
            });

  ScanOrder so;
  so.grid_rows = grid_rows;
  so.grid_cols = grid_cols;
  so.trajectory_count = static_cast<int>(sorted.size());
  std::vector<bool> emitted(n, false);
  int run_id = 0;

  auto open_run = [&](RunKind kind) {
    so.runs.push_back({kind, run_id++, static_cast<int>(so.order.size()),
                       static_cast<int>(so.order.size())});
  };
  auto emit = [&](int p) {
    so.order.push_back(p);
    emitted[p] = true;
    so.runs.back().end = static_cast<int>(so.order.size());
  };

  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0) {
      int from = sorted[i - 1]->patches.back();
      int to = sorted[i]->patches.front();
      auto line = bresenham(from / grid_cols, from % grid_cols, to / grid_cols, to % grid_cols);
      std::vector<int> background;
      for (auto [r, c] : line) {
        int p = r * grid_cols + c;
        if (!vessel[p] && !emitted[p]) background.push_back(p);
      }
      if (!background.empty()) {
        open_run(RunKind::background);
        for (int p : background) emit(p);
      }
    }
    open_run(RunKind::vessel);
    for (int p : sorted[i]->patches) emit(p);
  }

  bool remainder_open = false;
  for (int p = 0; p < n; ++p) {
    if (emitted[p]) continue;
    if (!remainder_open) {
      open_run(RunKind::remainder);
      remainder_open = true;
    }
    emit(p);
  }
  return so;
}

ScanOrder linear_scan_order(int grid_rows, int grid_cols) {
  ScanOrder so;
  so.grid_rows = grid_rows;
  so.grid_cols = grid_cols;
  so.order.resize(static_cast<size_t>(grid_rows) * grid_cols);
  std::iota(so.order.begin(), so.order.end(), 0);
  so.runs.push_back({RunKind::remainder, 0, 0, static_cast<int>(so.order.size())});
  return so;
}

ScanOrder diagonal_scan_order(int grid_rows, int grid_cols) {
  ScanOrder so;
  so.grid_rows = grid_rows;
  so.grid_cols = grid_cols;
  for (int d = 0; d <= grid_rows + grid_cols - 2; ++d)
    for (int r = 0; r < grid_rows; ++r) {
      int c = d - r;
      if (c >= 0 && c < grid_cols) so.order.push_back(r * grid_cols + c);
    }
  so.runs.push_back({RunKind::remainder, 0, 0, static_cast<int>(so.order.size())});
  return so;
}

ScanOrder vessel_scan_order(const Mask& mask, int patch_size, const ScanConfig& cfg) {
  Mask refined = refine_mask(mask, cfg.min_component, cfg.close_radius);
  Mask skel = skeletonize(refined);
  VesselGraph graph = build_graph(skel);
  auto pixel_trajs = extract_trajectories(graph);
  auto patch_trajs = patchify_trajectories(pixel_trajs, skel, patch_size, cfg.vessel_fraction_min);
  return build_scan_order(patch_trajs, mask.rows / patch_size, mask.cols / patch_size);
}

VesselStats vessel_stats(const Mask& mask) {
  VesselStats s;
  long mask_px = 0;
  for (auto v : mask.v) mask_px += v ? 1 : 0;
  s.density = static_cast<double>(mask_px) / static_cast<double>(mask.size());
  if (mask_px == 0) return s;

  Mask skel = skeletonize(mask);
  long skel_px = 0;
  for (auto v : skel.v) skel_px += v ? 1 : 0;
  if (skel_px == 0) return s;
  s.mean_caliber = static_cast<double>(mask_px) / static_cast<double>(skel_px);

  VesselGraph g = build_graph(skel);
  for (const auto& node : g.nodes)
    if (node.kind == NodeKind::junction) s.branch_count++;

  double tort_sum = 0, weight_sum = 0;
  for (const auto& e : g.edges) {
    if (e.chain.size() < 2) continue;
    double len = 0;
    for (size_t i = 1; i < e.chain.size(); ++i) {
      double dr = e.chain[i].r - e.chain[i - 1].r;
      double dc = e.chain[i].c - e.chain[i - 1].c;
      len += std::sqrt(dr * dr + dc * dc);
    }
    double dr = e.chain.back().r - e.chain.front().r;
    double dc = e.chain.back().c - e.chain.front().c;
    double chord = std::sqrt(dr * dr + dc * dc);
    if (chord < 2.0) continue;  // self-loops and stubs carry no direction
    double w = static_cast<double>(e.chain.size());
    tort_sum += w * (len / chord);
    weight_sum += w;
  }
  s.mean_tortuosity = weight_sum > 0 ? tort_sum / weight_sum : 0.0;
  return s;
}

std::string scan_order_csv(const ScanOrder& so) {
  std::ostringstream os;
  os << "position,patch_index,run_kind,run_id\n";
  for (const auto& run : so.runs)
    for (int pos = run.begin; pos < run.end; ++pos)
      os << pos << "," << so.order[pos] << "," << static_cast<char>(run.kind) << "," << run.run_id
         << "\n";
  return os.str();
}

}  // namespace vampire::vesseltrace
