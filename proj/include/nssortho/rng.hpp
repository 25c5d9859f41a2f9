#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nss {

// splitmix64: used to expand a root seed into independent per-stream seeds
// (one per Monte-Carlo trial / synthetic draw), so results do not depend on
// how work is scheduled across threads.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t s = root;
  std::uint64_t a = splitmix64(s);
  s = root ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  std::uint64_t b = splitmix64(s);
  return a ^ b ^ (stream * 0xda942042e4dd58b5ULL);
}

// mt19937_64 with hand-rolled uniform and Box-Muller normal transforms.
// std::normal_distribution is not bit-portable across standard libraries;
// this is, given the fixed engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on (0, 1): 53-bit mantissa, zero excluded so log() is safe.
  double uniform() {
    std::uint64_t bits = engine_() >> 11;
    double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace nss
