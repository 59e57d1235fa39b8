#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "kgpf/tensor.hpp"

namespace kgpf {

// Seedable generator (xoshiro256**). Self-contained so draw sequences are
// identical across standard libraries; identical seed -> identical sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed);
  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53-bit resolution.
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Derived generator for a named component ("pretrain", "synth", ...).
  // All randomness flows from one root seed split into these streams.
  Rng stream(std::string_view name) const;
  // Derived generator for an indexed unit of work (epoch, query, rollout).
  Rng at(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

  std::uint64_t root_seed() const { return root_; }

 private:
  std::uint64_t root_ = 0;
  std::uint64_t s_[4];
};

// Draws index i with probability probs[i]. probs must sum to 1 (1e-6) and be
// nonnegative; both checked.
std::size_t sample_categorical(Rng& rng, const Tensor& probs);

// Elementwise Bernoulli draws; 1 = keep, 0 = drop. probs must be in [0, 1].
std::vector<std::uint8_t> sample_bernoulli(Rng& rng, const Tensor& probs);

}  // namespace kgpf
