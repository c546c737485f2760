#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace ergoperiod {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32-10 block function (Salmon et al., SC'11).
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

/// Maps 64 random bits onto [0, 1) with 53-bit resolution.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based random stream keyed by (seed, stream id).
///
/// Two streams with the same key produce the same sequence regardless of
/// which thread draws from them, so Monte Carlo loops key streams by logical
/// task index and stay reproducible for any worker count. Block `b` of stream
/// `s` under seed `k` is philox4x32({b_lo, b_hi, s_lo, s_hi}, {k_lo, k_hi}).
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  double uniform();
  /// Standard normal via Box-Muller; implementation-independent, unlike
  /// std::normal_distribution.
  double normal();
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Index drawn from a probability vector (weights need not be normalised).
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Random-access draws for keyed infinite sequences: value number `index` of
/// the sequence identified by (key, tag). Used by the shift systems so that a
/// noise path is a pure function of its key.
double keyed_uniform(std::uint64_t key, std::uint64_t tag, std::uint64_t index);
double keyed_normal(std::uint64_t key, std::uint64_t tag, std::uint64_t index);

/// Index drawn from weights using a single uniform u in [0,1).
std::size_t categorical_from_uniform(std::span<const double> weights, double u);

}  // namespace ergoperiod
