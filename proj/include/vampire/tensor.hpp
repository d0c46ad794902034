#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vampire/errors.hpp"

namespace vampire::tensorcore {

// Dense row-major double tensor. grad is allocated lazily on first accumulation.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);

  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);

  std::int64_t size() const;
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  void ensure_grad();
  void zero_grad();

  std::string shape_str() const;
};

void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace vampire::tensorcore
