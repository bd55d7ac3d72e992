#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace svcscale {

// splitmix64 finalizer; used to derive well-separated stream seeds.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One generator per (cell, replicate, purpose) derived from the master seed
// by counter mixing, so parallel schedules cannot change any stream. The
// normal sampler is hand-rolled Box-Muller on top of the (standardized)
// mt19937_64 bit stream, keeping output identical across platforms.
class SubstreamRng {
 public:
  SubstreamRng(uint64_t master, uint64_t cell, uint64_t replicate, uint64_t purpose)
      : engine_(mix64(mix64(mix64(mix64(master) ^ cell) ^ (replicate << 1 | 1)) ^
                      (purpose << 2 | 2))) {}

  explicit SubstreamRng(uint64_t seed) : engine_(mix64(seed)) {}

  // uniform on (0,1), never exactly 0 or 1
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (hasSpare_) {
      hasSpare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    hasSpare_ = true;
    return radius * std::cos(angle);
  }

  Eigen::VectorXd normals(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  bool hasSpare_ = false;
  double spare_ = 0.0;
};

}  // namespace svcscale
