#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <random>

namespace mvb {

// Splittable counter-based generator (SplitMix64 with per-stream gamma).
// Each particle lineage owns one; a branch splits off an independent child stream.
class Stream {
 public:
  using result_type = std::uint64_t;
  static constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

  explicit Stream(std::uint64_t seed = 0, std::uint64_t gamma = kGoldenGamma) : seed_(seed), gamma_(gamma) {}

  // stream of replica r under master seed, independent of scheduling
  static Stream for_replica(std::uint64_t seed, std::uint64_t replica) {
    const std::uint64_t s = mix64(seed) + (replica + 1) * kGoldenGamma;
    return Stream(mix64(s), mix_gamma(s + kGoldenGamma));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(next_seed()); }

  // in [0, 1)
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() {
    std::normal_distribution<double> nd;  // fresh each call: no cached state between draws
    return nd(*this);
  }

  Stream split() {
    const std::uint64_t s = (*this)();
    return Stream(s, mix_gamma(next_seed()));
  }

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t mix_gamma(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
    z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
    z = (z ^ (z >> 33)) | 1ULL;
    const int n = std::popcount(z ^ (z >> 1));
    return n < 24 ? z ^ 0xaaaaaaaaaaaaaaaaULL : z;
  }

  std::uint64_t next_seed() { return seed_ += gamma_; }

  std::uint64_t seed_;
  std::uint64_t gamma_;
};

}  // namespace mvb
