#pragma once

// Fiber propagation: attenuation, chromatic dispersion as accumulated
// quadratic spectral phase, polarization wander with a receiver polarizer,
// and bounded arrival-time drift.

#include <cmath>

#include "rhom/errors.hpp"
#include "rhom/photon_mc.hpp"
#include "rhom/rng.hpp"
#include "rhom/units.hpp"

namespace rhom {

/// Polarization random-walk scale (rad per sqrt(hour)) at which one hour of
/// wander costs `loss` on average behind the polarizer:
/// E[sin^2 theta] = (1 - exp(-2 sigma^2)) / 2 for theta ~ N(0, sigma^2).
inline double pol_walk_scale_for_loss(double loss, double hours = 1.0) {
  if (!(loss >= 0.0 && loss < 0.5)) detail::fail("polarization loss must lie in [0, 0.5) (got ", loss, ")");
  if (!(hours > 0.0)) detail::fail("hours must be > 0 (got ", hours, ")");
  return std::sqrt(-0.5 * std::log(1.0 - 2.0 * loss) / hours);
}

struct FiberParams {
  double length_km = 151.0;
  double loss_db_per_km = 0.19;
  double dispersion_ps_nm_km = 18.0;
  double pol_drift_rad_per_sqrt_hr = pol_walk_scale_for_loss(0.10);
  double time_drift_ps_per_hr = 10.0;
  double temp_stability_k = 0.1;

  void validate(const char* label = "fiber") const {
    using detail::fail;
    if (!(length_km >= 0.0) || !std::isfinite(length_km)) fail(label, ": length_km must be finite and >= 0 (got ", length_km, ")");
    if (!(loss_db_per_km >= 0.0)) fail(label, ": loss_db_per_km must be >= 0 (got ", loss_db_per_km, ")");
    if (!(dispersion_ps_nm_km >= 0.0)) fail(label, ": dispersion_ps_nm_km must be >= 0 (got ", dispersion_ps_nm_km, ")");
    if (!(pol_drift_rad_per_sqrt_hr >= 0.0)) fail(label, ": pol_drift_rad_per_sqrt_hr must be >= 0 (got ", pol_drift_rad_per_sqrt_hr, ")");
    if (!(time_drift_ps_per_hr >= 0.0)) fail(label, ": time_drift_ps_per_hr must be >= 0 (got ", time_drift_ps_per_hr, ")");
    if (!(temp_stability_k >= 0.0)) fail(label, ": temp_stability_k must be >= 0 (got ", temp_stability_k, ")");
  }
};

inline double fiber_loss_db(double length_km, double loss_db_per_km) { return length_km * loss_db_per_km; }

inline double transmission_probability(double length_km, double loss_db_per_km) {
  if (!(length_km >= 0.0) || !(loss_db_per_km >= 0.0))
    detail::fail("fiber length and loss must be >= 0 (got ", length_km, " km, ", loss_db_per_km, " dB/km)");
  return std::pow(10.0, -fiber_loss_db(length_km, loss_db_per_km) / 10.0);
}

/// beta2 = -D lambda^2 / (2 pi c), in ps^2/km.
inline double beta2_from_dispersion(double d_ps_nm_km, double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) detail::fail("wavelength must be > 0 (got ", wavelength_nm, ")");
  return -d_ps_nm_km * wavelength_nm * wavelength_nm / (2.0 * units::pi * units::c_nm_per_ps);
}

/// Lorentzian FWHM bandwidth in nm for a coherence time T2: dnu = 1/(pi T2).
inline double coherence_bandwidth_nm(double coherence_time_ps, double wavelength_nm) {
  const double dnu_per_ps = 1.0 / (units::pi * coherence_time_ps);
  return wavelength_nm * wavelength_nm * dnu_per_ps / units::c_nm_per_ps;
}

/// Group-delay spread D * L * dlambda accumulated by a photon of the given
/// coherence time.
inline double group_delay_spread(double coherence_time_ps, double length_km, double d_ps_nm_km,
                                 double wavelength_nm) {
  if (!(coherence_time_ps > 0.0)) detail::fail("coherence time must be > 0 (got ", coherence_time_ps, ")");
  if (!(length_km >= 0.0)) detail::fail("length must be >= 0 (got ", length_km, ")");
  return d_ps_nm_km * length_km * coherence_bandwidth_nm(coherence_time_ps, wavelength_nm);
}

inline double group_delay_spread(double coherence_time_ps, double length_km, const FiberParams& f,
                                 double wavelength_nm = 1582.75) {
  return group_delay_spread(coherence_time_ps, length_km, f.dispersion_ps_nm_km, wavelength_nm);
}

/// Effective D that reproduces a quoted spread.
inline double fit_effective_dispersion(double spread_ps, double coherence_time_ps, double length_km,
                                       double wavelength_nm = 1582.75) {
  return spread_ps / (length_km * coherence_bandwidth_nm(coherence_time_ps, wavelength_nm));
}

/// Arrival-time offset after `elapsed_hr` since the last re-synchronization:
/// uniform within +-rate*elapsed. Drawn once per trial batch.
inline double sample_time_drift(const FiberParams& f, double elapsed_hr, StreamRng& rng) {
  const double bound = f.time_drift_ps_per_hr * elapsed_hr;
  if (bound == 0.0) return 0.0;
  return bound * (2.0 * rng.uniform() - 1.0);
}

inline double wrap_pol_angle(double theta) {
  double r = std::fmod(theta, units::pi);
  if (r < 0.0) r += units::pi;
  return r;
}

struct ChannelConditions {
  double elapsed_hr = 0.0;     // polarization wander accumulated since last alignment
  double drift_ps = 0.0;       // batch arrival-time offset from sample_time_drift
  double wavelength_nm = 1582.75;
};

/// Propagates one photon in place: loss, dispersion phase, polarization
/// wander followed by projection onto the receiver axis, time drift.
inline void apply_channel(PhotonRecord& photon, const FiberParams& f, const ChannelConditions& cond,
                          StreamRng& rng, Importance& imp) {
  if (!photon.alive) return;
  if (!imp.draw(rng, transmission_probability(f.length_km, f.loss_db_per_km))) {
    photon.alive = false;
    return;
  }
  photon.quad_phase_ps2 += beta2_from_dispersion(f.dispersion_ps_nm_km, cond.wavelength_nm) * f.length_km;
  photon.extra_delay_ps += cond.drift_ps;

  const double sigma = f.pol_drift_rad_per_sqrt_hr * std::sqrt(cond.elapsed_hr);
  const double theta = sigma > 0.0 ? wrap_pol_angle(photon.pol_angle_rad + rng.normal(0.0, sigma))
                                   : photon.pol_angle_rad;
  if (theta != 0.0) {
    const double s = std::sin(theta);
    if (rng.bernoulli(s * s)) {
      photon.alive = false;
      return;
    }
  }
  photon.pol_angle_rad = 0.0;
}

inline void apply_channel(PhotonRecord& photon, const FiberParams& f, const ChannelConditions& cond,
                          StreamRng& rng) {
  Importance analog;
  apply_channel(photon, f, cond, rng, analog);
}

}  // namespace rhom
