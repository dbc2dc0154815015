#pragma once

// Counter-based random number generation (Philox4x32-10).
//
// Stream layout: a generator is addressed by (seed, stream). The 64-bit seed
// forms the Philox key (lo word, hi word); the 64-bit stream id occupies
// counter words 2..3 and the within-stream block counter occupies words 0..1.
// Every (seed, stream) pair therefore yields an independent sequence of 2^64
// blocks of 128 bits, identical on every platform. Parallel estimators derive
// one stream per work item (sample index, restart index, column index) so
// results do not depend on scheduling.
//
// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC 2011.

#include <array>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace otl {

namespace detail {

constexpr uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void philox_round(std::array<uint32_t, 4>& ctr, const std::array<uint32_t, 2>& key) {
  const uint64_t p0 = static_cast<uint64_t>(kPhiloxM4x32A) * ctr[0];
  const uint64_t p1 = static_cast<uint64_t>(kPhiloxM4x32B) * ctr[2];
  const uint32_t lo0 = static_cast<uint32_t>(p0), hi0 = static_cast<uint32_t>(p0 >> 32);
  const uint32_t lo1 = static_cast<uint32_t>(p1), hi1 = static_cast<uint32_t>(p1 >> 32);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

inline std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> ctr,
                                             std::array<uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kPhiloxW32A;
      key[1] += kPhiloxW32B;
    }
    philox_round(ctr, key);
  }
  return ctr;
}

}  // namespace detail

class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream)
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        stream_lo_(static_cast<uint32_t>(stream)),
        stream_hi_(static_cast<uint32_t>(stream >> 32)) {}

  uint32_t next_u32() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  uint64_t next_u64() {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1], safe as a log() argument.
  double uniform01_open_left() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; values are produced in pairs.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01_open_left();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // Uniform point on S^{d-1}.
  Eigen::VectorXd sphere_point(Eigen::Index d) {
    Eigen::VectorXd v = normal_vector(d);
    double nrm = v.norm();
    while (nrm == 0.0) {  // probability zero in practice
      v = normal_vector(d);
      nrm = v.norm();
    }
    return v / nrm;
  }

 private:
  void refill() {
    block_ = detail::philox4x32_10({counter_lo_, counter_hi_, stream_lo_, stream_hi_}, key_);
    if (++counter_lo_ == 0) ++counter_hi_;
    pos_ = 0;
  }

  std::array<uint32_t, 2> key_;
  uint32_t stream_lo_, stream_hi_;
  uint32_t counter_lo_ = 0, counter_hi_ = 0;
  std::array<uint32_t, 4> block_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace otl
