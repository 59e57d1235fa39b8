#include "kgpf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kgpf {

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void matvec(const Tensor& w, const Tensor& x, Tensor& out) {
  const std::size_t r = w.shape[0], c = w.shape[1];
  if (x.size() != c) throw std::runtime_error("matvec: shape mismatch");
  out.shape = {r};
  out.data.resize(r);
  const double* wp = w.data.data();
  const double* xp = x.data.data();
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    const double* row = wp + i * c;
    for (std::size_t j = 0; j < c; ++j) acc += row[j] * xp[j];
    out.data[i] = acc;
  }
}

void matvec_transposed(const Tensor& w, const Tensor& x, Tensor& out) {
  const std::size_t r = w.shape[0], c = w.shape[1];
  if (x.size() != r) throw std::runtime_error("matvec_transposed: shape mismatch");
  out.shape = {c};
  out.data.assign(c, 0.0);
  const double* wp = w.data.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double xi = x.data[i];
    if (xi == 0.0) continue;
    const double* row = wp + i * c;
    for (std::size_t j = 0; j < c; ++j) out.data[j] += xi * row[j];
  }
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw std::runtime_error("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

double l2_norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

Tensor softmax(const Tensor& v) {
  if (v.size() == 0) throw std::runtime_error("softmax: empty input");
  Tensor out = Tensor::vector(v.size());
  const double mx = *std::max_element(v.data.begin(), v.data.end());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.data[i] = std::exp(v.data[i] - mx);
    z += out.data[i];
  }
  for (double& p : out.data) p /= z;
  return out;
}

Tensor sigmoid(const Tensor& v) {
  Tensor out = Tensor::vector(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v.data[i];
    // Split by sign so exp never overflows.
    out.data[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                         : std::exp(x) / (1.0 + std::exp(x));
  }
  return out;
}

Tensor tanh_t(const Tensor& v) {
  Tensor out = Tensor::vector(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = std::tanh(v.data[i]);
  return out;
}

}  // namespace kgpf
