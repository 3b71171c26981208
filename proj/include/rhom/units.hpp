#pragma once

// Unit conventions used throughout rhom:
//   times in ps, rates in 1/ps, angular frequencies in rad/ps,
//   wavelengths in nm, lengths in km, powers in mW.
// Conversions from lab units (GHz, MHz, Hz, pm) happen only here.

#include <cmath>
#include <numbers>

namespace rhom::units {

inline constexpr double pi = std::numbers::pi;

/// Speed of light in vacuum (m/s).
inline constexpr double c_m_per_s = 299792458.0;
/// Speed of light in nm/ps.
inline constexpr double c_nm_per_ps = c_m_per_s * 1e9 / 1e12;

inline constexpr double ps_per_s = 1e12;

/// FWHM to standard deviation for a Gaussian.
inline constexpr double fwhm_to_sigma = 1.0 / 2.354820045030949;

inline constexpr double ghz_to_rad_per_ps(double ghz) { return 2.0 * pi * ghz * 1e-3; }
inline constexpr double rad_per_ps_to_ghz(double w) { return w / (2.0 * pi * 1e-3); }

inline constexpr double hz_to_per_ps(double hz) { return hz / ps_per_s; }
inline constexpr double period_ps(double rep_rate_hz) { return ps_per_s / rep_rate_hz; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace rhom::units
