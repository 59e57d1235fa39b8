#include "kgpf/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace kgpf {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

void Rng::reseed(std::uint64_t seed) {
  root_ = seed;
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::runtime_error("Rng::below: n must be positive");
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

Rng Rng::stream(std::string_view name) const {
  std::uint64_t mixed = root_ ^ fnv1a(name);
  return Rng(splitmix64(mixed));
}

Rng Rng::at(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  std::uint64_t mixed = root_;
  mixed = splitmix64(mixed) ^ (a * 0x9e3779b97f4a7c15ULL);
  mixed = splitmix64(mixed) ^ (b * 0xc2b2ae3d27d4eb4fULL);
  mixed = splitmix64(mixed) ^ (c * 0x165667b19e3779f9ULL);
  return Rng(splitmix64(mixed));
}

std::size_t sample_categorical(Rng& rng, const Tensor& probs) {
  if (probs.size() == 0) throw std::runtime_error("sample_categorical: empty");
  double sum = 0.0;
  for (double p : probs.data) {
    if (p < 0.0) throw std::runtime_error("sample_categorical: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::runtime_error("sample_categorical: probabilities do not sum to 1");
  const double u = rng.uniform() * sum;
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs.data[i];
    if (u < acc) return i;
  }
  // u landed in the rounding slack past the last bucket.
  return probs.size() - 1;
}

std::vector<std::uint8_t> sample_bernoulli(Rng& rng, const Tensor& probs) {
  std::vector<std::uint8_t> mask(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs.data[i];
    if (p < 0.0 || p > 1.0)
      throw std::runtime_error("sample_bernoulli: probability out of [0,1]");
    mask[i] = rng.uniform() < p ? 1 : 0;
  }
  return mask;
}

}  // namespace kgpf
