#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace kgpf {

// Dense double-precision tensor. Rank 1 (vectors) and rank 2 (row-major
// matrices) are all the model needs.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  static Tensor vector(std::size_t n, double fill = 0.0) {
    Tensor t;
    t.shape = {n};
    t.data.assign(n, fill);
    return t;
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    Tensor t;
    t.shape = {rows, cols};
    t.data.assign(rows * cols, fill);
    return t;
  }
  static Tensor scalar(double v) {
    Tensor t = vector(1);
    t.data[0] = v;
    return t;
  }
  static Tensor from(std::vector<double> values) {
    Tensor t;
    t.shape = {values.size()};
    t.data = std::move(values);
    return t;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  void fill(double v) { data.assign(data.size(), v); }
};

// y = W x, W rank-2, x rank-1 of length cols(W).
void matvec(const Tensor& w, const Tensor& x, Tensor& out);
// y = W^T x, x of length rows(W).
void matvec_transposed(const Tensor& w, const Tensor& x, Tensor& out);
double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& a);

// Stable softmax (max subtraction). Errors on empty input.
Tensor softmax(const Tensor& v);
// Elementwise logistic function, saturation-safe.
Tensor sigmoid(const Tensor& v);
Tensor tanh_t(const Tensor& v);

}  // namespace kgpf
