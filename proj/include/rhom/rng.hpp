#pragma once

// Counter-based random streams. A stream is a pure function of
// (master_seed, experiment, trial, stage): draws never depend on which
// worker executes a trial or in what order trials run.

#include <cmath>
#include <cstdint>
#include <string_view>

#include "rhom/units.hpp"

namespace rhom {

enum class Stage : std::uint32_t {
  emission_a = 1,
  emission_b,
  slow_drift,
  conversion_a,
  conversion_b,
  channel_a,
  channel_b,
  drift_batch,
  beamsplitter,
  detector,
  darks,
  generic,
};

struct RngStreamSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t experiment = 0;
  std::uint64_t trial = 0;
  Stage stage = Stage::generic;
};

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Stable 64-bit identifier for an experiment label (FNV-1a).
inline constexpr std::uint64_t experiment_id(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : label) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// SplitMix64 stream keyed by an RngStreamSpec. The n-th draw is
/// mix64(key + n * gamma), so the generator is a counter over a keyed hash.
class StreamRng {
 public:
  explicit StreamRng(const RngStreamSpec& spec) : key_(derive_key(spec)) {}

  static constexpr std::uint64_t derive_key(const RngStreamSpec& spec) {
    std::uint64_t k = detail::mix64(spec.master_seed + detail::golden_gamma);
    k = detail::mix64(k ^ (spec.experiment + 0x632be59bd9b4e019ULL));
    k = detail::mix64(k ^ (spec.trial * detail::golden_gamma + 0x8cb92ba72f3d8dd7ULL));
    k = detail::mix64(k ^ static_cast<std::uint64_t>(spec.stage));
    return k;
  }

  std::uint64_t next_u64() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::golden_gamma);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Box-Muller, one output per call (stateless between calls).
  double normal(double mean = 0.0, double sigma = 1.0) {
    const double u1 = uniform();
    const double u2 = uniform();
    return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * units::pi * u2);
  }

  /// Inverse-CDF Cauchy draw with location 0.
  double cauchy(double scale) {
    if (scale == 0.0) return 0.0;
    return scale * std::tan(units::pi * (uniform() - 0.5));
  }

  /// Poisson count; Knuth multiplication split into chunks for large means.
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 0.0) {
      const double chunk = mean > 30.0 ? 30.0 : mean;
      mean -= chunk;
      const double limit = std::exp(-chunk);
      double prod = uniform();
      while (prod > limit) {
        ++total;
        prod *= uniform();
      }
    }
    return total;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline StreamRng make_stream(std::uint64_t seed, std::uint64_t experiment, std::uint64_t trial,
                             Stage stage) {
  return StreamRng(RngStreamSpec{seed, experiment, trial, stage});
}

}  // namespace rhom
