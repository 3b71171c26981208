#pragma once

// Quantum frequency conversion by difference-frequency generation.

#include <cmath>
#include <limits>
#include <string>

#include "rhom/errors.hpp"
#include "rhom/photon_mc.hpp"
#include "rhom/rng.hpp"
#include "rhom/units.hpp"

namespace rhom {

struct QfcParams {
  std::string label = "QFC";
  double eta_max = 0.48;
  double p_max_mw = 271.0;
  double raman_coeff = 0.0;          // noise counts/s per mW inside the filter band and gate
  double pump_wavelength_nm = 2049.98;
  double pzt_step_pm = 0.03;
  double filter_band_ghz = 10.0;
  double pump_mw = 271.0;            // operating pump power

  void validate() const {
    using detail::fail;
    if (!(eta_max > 0.0 && eta_max <= 1.0)) fail(label, ": eta_max must lie in (0, 1] (got ", eta_max, ")");
    if (!(p_max_mw > 0.0)) fail(label, ": p_max_mw must be > 0 (got ", p_max_mw, ")");
    if (!(raman_coeff >= 0.0)) fail(label, ": raman_coeff must be >= 0 (got ", raman_coeff, ")");
    if (!(pump_mw >= 0.0)) fail(label, ": pump_mw must be >= 0 (got ", pump_mw, ")");
    if (!(pump_wavelength_nm > 0.0)) fail(label, ": pump_wavelength_nm must be > 0 (got ", pump_wavelength_nm, ")");
    if (!(filter_band_ghz > 0.0)) fail(label, ": filter_band_ghz must be > 0 (got ", filter_band_ghz, ")");
  }
};

/// Pump wavelength for down-conversion signal -> target:
/// 1/pump = 1/signal - 1/target.
inline double solve_pump_wavelength(double signal_nm, double target_nm) {
  if (!(signal_nm > 0.0)) detail::fail("signal wavelength must be > 0 (got ", signal_nm, ")");
  if (!(signal_nm < target_nm))
    detail::fail<NoSolutionError>("no pump: down-conversion needs signal < target (got signal=",
                                  signal_nm, " nm, target=", target_nm, " nm)");
  return 1.0 / (1.0 / signal_nm - 1.0 / target_nm);
}

inline double converted_wavelength(double signal_nm, double pump_nm) {
  if (!(signal_nm > 0.0)) detail::fail("signal wavelength must be > 0 (got ", signal_nm, ")");
  if (!(pump_nm > signal_nm))
    detail::fail("pump wavelength must exceed signal (got pump=", pump_nm, " nm, signal=", signal_nm, " nm)");
  return 1.0 / (1.0 / signal_nm - 1.0 / pump_nm);
}

/// Frequency step (MHz) for a wavelength step (pm) at the given wavelength.
inline double pzt_frequency_step(double delta_lambda_pm, double at_wavelength_nm) {
  if (!(at_wavelength_nm > 0.0)) detail::fail("wavelength must be > 0 (got ", at_wavelength_nm, ")");
  const double lambda_m = at_wavelength_nm * 1e-9;
  return units::c_m_per_s * (delta_lambda_pm * 1e-12) / (lambda_m * lambda_m) * 1e-6;
}

/// eta(P) = eta_max sin^2((pi/2) sqrt(P / P_max)); beyond P_max the curve
/// rolls off along the same sin^2.
inline double conversion_efficiency(double pump_mw, const QfcParams& q) {
  if (!(pump_mw >= 0.0)) detail::fail("pump power must be >= 0 (got ", pump_mw, " mW)");
  const double s = std::sin(0.5 * units::pi * std::sqrt(pump_mw / q.p_max_mw));
  return q.eta_max * s * s;
}

/// Conversion SNR in dB; +inf when there is no noise at all.
inline double conversion_snr(double pump_mw, double signal_rate_hz, const QfcParams& q) {
  if (!(signal_rate_hz > 0.0)) detail::fail("signal rate must be > 0 (got ", signal_rate_hz, " Hz)");
  const double noise = q.raman_coeff * pump_mw;
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal_rate_hz * conversion_efficiency(pump_mw, q) / noise);
}

/// Raman coefficient that makes conversion_snr(P_max) equal `snr_db`.
inline double calibrate_raman_coeff(const QfcParams& q, double signal_rate_hz, double snr_db) {
  const double signal = signal_rate_hz * conversion_efficiency(q.p_max_mw, q);
  return signal / (q.p_max_mw * std::pow(10.0, snr_db / 10.0));
}

struct ConversionNoise {
  std::uint64_t noise_photons = 0;
};

/// Converts one photon in place. Survival with probability eta(P); the
/// wavelength becomes the converted one while frequency offset, linewidth,
/// polarization and timing are untouched.
inline void apply_conversion(PhotonRecord& photon, const QfcParams& q, double pump_mw,
                             StreamRng& rng, Importance& imp) {
  if (!photon.alive) return;
  if (!imp.draw(rng, conversion_efficiency(pump_mw, q))) {
    photon.alive = false;
    return;
  }
  photon.wavelength_nm = converted_wavelength(photon.wavelength_nm, q.pump_wavelength_nm);
}

inline void apply_conversion(PhotonRecord& photon, const QfcParams& q, double pump_mw, StreamRng& rng) {
  Importance analog;
  apply_conversion(photon, q, pump_mw, rng, analog);
}

/// Mean noise photons per pulse window: raman_coeff * P counts/s spread
/// over the pulse period.
inline double noise_per_pulse(const QfcParams& q, double pump_mw, double rep_rate_hz) {
  return q.raman_coeff * pump_mw / rep_rate_hz;
}

/// Poisson noise photons emitted in one pulse period, flagged as noise and
/// appended to `batch`. Only the `window_fraction` of the period that a
/// detector gate observes is sampled; arrival times are drawn later,
/// uniformly over that gate.
inline ConversionNoise sample_conversion_noise(PhotonBatch& batch, const QfcParams& q, double pump_mw,
                                               double rep_rate_hz, double converted_nm, int source_id,
                                               std::uint64_t pulse_index, StreamRng& rng,
                                               double window_fraction = 1.0) {
  ConversionNoise n;
  n.noise_photons = rng.poisson(noise_per_pulse(q, pump_mw, rep_rate_hz) * window_fraction);
  for (std::uint64_t k = 0; k < n.noise_photons && batch.size() < PhotonBatch::capacity; ++k) {
    PhotonRecord p;
    p.source_id = source_id;
    p.pulse_index = pulse_index;
    p.kind = PhotonKind::noise;
    p.wavelength_nm = converted_nm;
    // Unpolarized: a uniformly random axis.
    p.pol_angle_rad = units::pi * rng.uniform();
    batch.push(p);
  }
  return n;
}

}  // namespace rhom
