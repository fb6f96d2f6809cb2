#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace monomvn {

/// Philox4x32-10 counter-based generator (Salmon et al., 2011).
///
/// A (key, counter) pair fully determines the output, so independent
/// streams are obtained by reserving the upper half of the counter for a
/// stream identifier.  Satisfies UniformRandomBitGenerator with 64-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> out_{};
  int pos_ = 4;
};

/// Seedable random stream with the handful of variates the samplers need.
/// Rates, not scales, parameterize gamma-family draws throughout.
class Rng {
 public:
  using result_type = Philox4x32::result_type;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : engine_(seed, stream) {}

  static constexpr result_type min() { return Philox4x32::min(); }
  static constexpr result_type max() { return Philox4x32::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double rate);
  double gamma(double shape, double rate);
  double inv_gamma(double shape, double rate) { return 1.0 / gamma(shape, rate); }
  double beta(double a, double b);
  /// Uniform integer on {0, ..., n-1}.
  std::size_t index(std::size_t n);

 private:
  Philox4x32 engine_;
};

/// Stream identifiers reserved by the engine beside the per-column ones.
namespace streams {
inline constexpr std::uint64_t common_nu = 0xC0FFEEull;
inline constexpr std::uint64_t replicate_base = 1ull << 32;
}  // namespace streams

}  // namespace monomvn
