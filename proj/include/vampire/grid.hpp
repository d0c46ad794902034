#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace vampire {

// Row-major 2D grid value type; the pixel substrate for images and masks.
template <typename T>
struct BasicGrid {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  BasicGrid() = default;
  BasicGrid(int r, int c, T fill = T{}) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

  T& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  const T& at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
  bool in_bounds(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }

  bool operator==(const BasicGrid& o) const {
    return rows == o.rows && cols == o.cols && v == o.v;
  }
};

using Grid = BasicGrid<double>;    // intensities in [0,1]
using Mask = BasicGrid<std::uint8_t>;  // binary {0,1}

// Binary PGM (P5). Intensity grids use maxval 65535 (big-endian 16-bit samples,
// per the PGM convention); masks use maxval 1 (one byte per pixel).
void write_pgm16(const Grid& g, const std::filesystem::path& path);
Grid read_pgm16(const std::filesystem::path& path);
void write_pgm_mask(const Mask& m, const std::filesystem::path& path);
Mask read_pgm_mask(const std::filesystem::path& path);

}  // namespace vampire
