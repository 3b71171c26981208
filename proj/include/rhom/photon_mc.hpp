#pragma once

// Stochastic emission: per-pulse photon records with multiphoton companions
// and Lorentzian frequency noise.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "rhom/errors.hpp"
#include "rhom/model_core.hpp"
#include "rhom/rng.hpp"
#include "rhom/units.hpp"

namespace rhom {

enum class PhotonKind : std::uint8_t { primary, companion, noise };

struct PhotonRecord {
  int source_id = 1;
  std::uint64_t pulse_index = 0;
  double nominal_emit_time_ps = 0.0;
  double gamma_rad = 0.0;       // amplitude decay rate, preserved by every stage
  double wavelength_nm = 0.0;
  double freq_offset = 0.0;     // rad/ps from the common reference
  double pol_angle_rad = 0.0;   // [0, pi)
  double quad_phase_ps2 = 0.0;
  double extra_delay_ps = 0.0;
  PhotonKind kind = PhotonKind::primary;
  bool alive = true;

  bool is_companion() const { return kind == PhotonKind::companion; }
  bool is_noise() const { return kind == PhotonKind::noise; }
};

/// Fixed-capacity photon list for one pulse window of one arm.
class PhotonBatch {
 public:
  static constexpr std::size_t capacity = 8;

  void push(const PhotonRecord& p) {
    if (size_ == capacity) detail::fail<std::length_error>("photon batch capacity exceeded");
    items_[size_++] = p;
  }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  PhotonRecord& operator[](std::size_t i) { return items_[i]; }
  const PhotonRecord& operator[](std::size_t i) const { return items_[i]; }
  PhotonRecord* begin() { return items_.data(); }
  PhotonRecord* end() { return items_.data() + size_; }
  const PhotonRecord* begin() const { return items_.data(); }
  const PhotonRecord* end() const { return items_.data() + size_; }

  std::size_t alive_count() const {
    std::size_t n = 0;
    for (const auto& p : *this) n += p.alive ? 1 : 0;
    return n;
  }

 private:
  std::array<PhotonRecord, capacity> items_{};
  std::size_t size_ = 0;
};

/// Importance sampling for rare survival events. A Bernoulli(p) decision is
/// drawn with probability max(p, floor) and the likelihood ratio is folded
/// into `weight`. floor == 0 gives analog sampling with weight 1.
struct Importance {
  double floor = 0.0;
  double weight = 1.0;

  bool draw(StreamRng& rng, double p) {
    if (floor <= 0.0 || p >= floor || p <= 0.0) return rng.bernoulli(p);
    const bool hit = rng.bernoulli(floor);
    weight *= hit ? p / floor : (1.0 - p) / (1.0 - floor);
    return hit;
  }
};

enum class CorrelationMode { independent, consecutive_pair };

/// Smaller root of 2b/(1+b)^2 = g2: probability of a companion photon per
/// emitted primary that reproduces the pulsed HBT central-peak ratio.
inline double companion_prob_from_g2(double g2_zero) {
  if (!(g2_zero >= 0.0 && g2_zero < 1.0))
    detail::fail("g2_zero must lie in [0, 1) (got ", g2_zero, ")");
  if (g2_zero > 0.5)
    detail::fail("g2_zero ", g2_zero, " exceeds 0.5: no companion probability in [0, 1) reproduces it");
  return g2_zero / ((1.0 - g2_zero) + std::sqrt(1.0 - 2.0 * g2_zero));
}

inline double sample_fast_offset(const DephasingDecomposition& d, StreamRng& rng) {
  return rng.cauchy(d.gamma_fast_star);
}

inline double sample_slow_offset(const DephasingDecomposition& d, StreamRng& rng) {
  return rng.cauchy(d.gamma_slow);
}

/// Fast + slow Cauchy offset. In consecutive-pair mode the slow term is
/// drawn once into `shared_slow` and reused by the partner photon.
inline double sample_frequency_offset(const DephasingDecomposition& d, CorrelationMode mode,
                                      StreamRng& rng, std::optional<double>& shared_slow) {
  const double fast = sample_fast_offset(d, rng);
  if (mode == CorrelationMode::independent) return fast + sample_slow_offset(d, rng);
  if (!shared_slow) shared_slow = sample_slow_offset(d, rng);
  return fast + *shared_slow;
}

struct EmissionSpec {
  int source_id = 1;
  double beta = 0.0;        // companion probability per pulse (given a primary attempt)
  double slow_offset = 0.0; // spectral-diffusion term for this pulse window
};

/// Photons emitted by one excitation pulse: a primary with probability
/// eta_sys and an independent companion with probability eta_sys * beta.
/// Both share the pulse's slow offset and get independent fast offsets.
inline PhotonBatch sample_pulse_emission(const EmitterParams& e, const DephasingDecomposition& d,
                                         std::uint64_t pulse_index, const EmissionSpec& spec,
                                         StreamRng& rng, Importance& imp) {
  PhotonBatch out;
  PhotonRecord base;
  base.source_id = spec.source_id;
  base.pulse_index = pulse_index;
  base.nominal_emit_time_ps = static_cast<double>(pulse_index) * units::period_ps(e.rep_rate_hz);
  base.gamma_rad = d.gamma_rad;
  base.wavelength_nm = e.wavelength_nm;

  if (imp.draw(rng, e.eta_sys)) {
    PhotonRecord p = base;
    p.freq_offset = sample_fast_offset(d, rng) + spec.slow_offset;
    out.push(p);
  }
  if (spec.beta > 0.0 && rng.bernoulli(e.eta_sys * spec.beta)) {
    PhotonRecord c = base;
    c.kind = PhotonKind::companion;
    c.freq_offset = sample_fast_offset(d, rng) + spec.slow_offset;
    out.push(c);
  }
  return out;
}

inline PhotonBatch sample_pulse_emission(const EmitterParams& e, const DephasingDecomposition& d,
                                         std::uint64_t pulse_index, const EmissionSpec& spec,
                                         StreamRng& rng) {
  Importance analog;
  return sample_pulse_emission(e, d, pulse_index, spec, rng, analog);
}

}  // namespace rhom
