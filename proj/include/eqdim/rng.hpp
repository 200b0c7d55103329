#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace eqdim {

// Derivation of independent, replayable generator streams.
//
// Streams are keyed by (root seed, stage tag, index). The mt19937_64 engine
// is fully specified by the standard and the uniform doubles below avoid
// std::uniform_real_distribution, so sequences are identical across
// platforms and standard library implementations.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_tag(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  std::uint64_t h = seed ^ 0x51'7c'c1'b7'27'22'0a'95ULL;
  for (char c : tag) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = h;
  std::uint64_t m = splitmix64(s);
  s = m ^ index;
  return splitmix64(s);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  static RngStream derive(std::uint64_t root_seed, std::string_view stage, std::uint64_t index) {
    return RngStream(mix_tag(root_seed, stage, index));
  }

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(uniform() * static_cast<double>(n)) % n;
  }

  std::complex<double> unit_complex() {
    const double t = 2.0 * 3.14159265358979323846 * uniform();
    return {std::cos(t), std::sin(t)};
  }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(t);
    have_cached_ = true;
    return r * std::cos(t);
  }

  std::complex<double> complex_normal() { return {normal(), normal()}; }

 private:
  std::mt19937_64 eng_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace eqdim
