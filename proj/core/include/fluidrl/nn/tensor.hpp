#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluidrl {

// Dense row-major f64 tensor. Conv activations use [N,C,H,W].
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != static_cast<std::size_t>(numel_of(shape)))
      throw std::runtime_error("tensor: data does not match shape");
  }

  static long long numel_of(const std::vector<int>& s) {
    long long n = 1;
    for (int d : s) {
      if (d <= 0) throw std::runtime_error("tensor: bad dimension");
      n *= d;
    }
    return n;
  }

  long long numel() const { return static_cast<long long>(data.size()); }
  int dim(int i) const { return shape[i]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  // Rows and row width for 2d views; 1d tensors are a single column.
  int rows() const { return ndim() >= 1 ? shape[0] : 1; }
  int cols() const {
    long long c = 1;
    for (int i = 1; i < ndim(); ++i) c *= shape[i];
    return static_cast<int>(c);
  }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols() + c];
  }

  std::string shape_str() const {
    std::string s = "[";
    for (int i = 0; i < ndim(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

}  // namespace fluidrl
