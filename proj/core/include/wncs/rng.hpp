#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "wncs/linalg.hpp"

namespace wncs {

// Philox4x32-10 counter-based generator. A stream is addressed by
// (seed, replicate, role); draws within a stream consume successive counter
// values. Streams never overlap, replicates can run in any order, and the
// same (seed, replicate, role) always reproduces the same sequence.
struct Philox4x32 {
  static constexpr std::uint32_t kW32A = 0x9E3779B9u;
  static constexpr std::uint32_t kW32B = 0xBB67AE85u;
  static constexpr std::uint32_t kM4x32A = 0xD2511F53u;
  static constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> x,
                                            std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM4x32A) * x[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM4x32B) * x[2];
      x = {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k[1],
           static_cast<std::uint32_t>(p0)};
      k[0] += kW32A;
      k[1] += kW32B;
    }
    return x;
  }
};

enum class StreamRole : std::uint32_t {
  kProcessNoise = 0,
  kMeasurementNoise = 1,
  kInitialState = 2,
  kPolicyMix = 3,
  kLinkDraws = 4,
  kCouplingOmega = 5,
};

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t replicate, StreamRole role)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        rep_lo_(static_cast<std::uint32_t>(replicate)),
        rep_hi_role_((static_cast<std::uint32_t>(replicate >> 32) << 3) |
                     static_cast<std::uint32_t>(role)) {}

  // Uniform on [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_bits() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next_bits() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via the Box-Muller transform (pairs, one cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double t = 2.0 * std::numbers::pi * uniform();
    cached_ = r * std::sin(t);
    have_cached_ = true;
    return r * std::cos(t);
  }

 private:
  std::uint64_t next_bits() {
    if (word_ == 0) {
      out_ = Philox4x32::block({static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32),
                                rep_lo_, rep_hi_role_},
                               key_);
      ++block_;
    }
    const int w = word_;
    word_ = (word_ + 2) & 3;
    return (static_cast<std::uint64_t>(out_[w]) << 32) | out_[w + 1];
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t rep_lo_;
  std::uint32_t rep_hi_role_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> out_{};
  int word_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Draws x ~ N(0, cov) as F z with F a symmetric square-root factor of cov.
class GaussianVectorSampler {
 public:
  explicit GaussianVectorSampler(const MatrixXd& cov)
      : factor_(covariance_factor(cov)), z_(cov.rows()) {}

  const VectorXd& sample(RandomStream& stream) {
    for (Eigen::Index i = 0; i < z_.size(); ++i) z_[i] = stream.normal();
    out_.noalias() = factor_ * z_;
    return out_;
  }

  Eigen::Index dim() const { return factor_.rows(); }

 private:
  MatrixXd factor_;
  VectorXd z_;
  VectorXd out_;
};

}  // namespace wncs
