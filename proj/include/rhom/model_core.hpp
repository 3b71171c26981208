#pragma once

// Analytic layer: emitter description, dephasing split, wavepacket overlaps
// and closed-form interference visibilities. Every function here is pure.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "rhom/errors.hpp"
#include "rhom/quadrature.hpp"
#include "rhom/units.hpp"

namespace rhom {

/// One quantum-dot single-photon source.
struct EmitterParams {
  std::string label = "QD";
  double t1_ps = 78.0;            // radiative lifetime
  double t2_ps = 126.0;           // coherence time
  double m_consecutive = 0.919;   // 12.5-ns same-source HOM indistinguishability
  double g2_zero = 0.072;
  double wavelength_nm = 893.16;
  double eta_sys = 0.25;
  double rep_rate_hz = 80.3e6;

  double gamma_rad() const { return 1.0 / t1_ps; }
  double gamma_coh() const { return 1.0 / t2_ps; }

  void validate() const {
    using detail::fail;
    if (!(t1_ps > 0.0)) fail(label, ": t1_ps must be > 0 (got ", t1_ps, ")");
    if (!(t2_ps > 0.0)) fail(label, ": t2_ps must be > 0 (got ", t2_ps, ")");
    if (t2_ps > 2.0 * t1_ps)
      fail(label, ": t2_ps must satisfy T2 <= 2*T1 (got T2=", t2_ps, ", 2*T1=", 2.0 * t1_ps, ")");
    if (!(m_consecutive > 0.0 && m_consecutive <= 1.0))
      fail(label, ": m_consecutive must lie in (0, 1] (got ", m_consecutive, ")");
    if (!(g2_zero >= 0.0 && g2_zero < 1.0))
      fail(label, ": g2_zero must lie in [0, 1) (got ", g2_zero, ")");
    if (!(eta_sys > 0.0 && eta_sys <= 1.0))
      fail(label, ": eta_sys must lie in (0, 1] (got ", eta_sys, ")");
    if (!(wavelength_nm > 0.0)) fail(label, ": wavelength_nm must be > 0 (got ", wavelength_nm, ")");
    if (!(rep_rate_hz > 0.0)) fail(label, ": rep_rate_hz must be > 0 (got ", rep_rate_hz, ")");
    const double ratio = t2_ps / (2.0 * t1_ps);
    if (m_consecutive < ratio)
      fail<InconsistencyError>(label, ": m_consecutive must be >= T2/(2*T1) = ", ratio, " (got ",
                               m_consecutive, ")");
  }
};

namespace presets {

inline EmitterParams qd1() {
  return {"QD1", 78.0, 126.0, 0.919, 0.072, 893.16, 0.25, 80.3e6};
}
inline EmitterParams qd2() {
  return {"QD2", 69.9, 105.0, 0.839, 0.051, 891.92, 0.20, 80.3e6};
}

}  // namespace presets

/// Split of the total dephasing into a fast part (uncorrelated photon to
/// photon) and a slow spectral-diffusion part (common over 12.5 ns).
/// gamma_rad/2 + gamma_fast_star + gamma_slow == 1/T2.
struct DephasingDecomposition {
  double gamma_rad = 0.0;
  double gamma_fast_star = 0.0;
  double gamma_slow = 0.0;

  double total_linewidth() const { return 0.5 * gamma_rad + gamma_fast_star + gamma_slow; }
  /// Cauchy scale of the per-photon frequency offset (fast + slow).
  double offset_scale() const { return gamma_fast_star + gamma_slow; }
};

inline double transform_limit_ratio(double t1_ps, double t2_ps) {
  if (!(t1_ps > 0.0)) detail::fail("t1_ps must be > 0 (got ", t1_ps, ")");
  if (!(t2_ps > 0.0)) detail::fail("t2_ps must be > 0 (got ", t2_ps, ")");
  if (t2_ps > 2.0 * t1_ps)
    detail::fail("t2_ps must satisfy T2 <= 2*T1 (got T2=", t2_ps, ", 2*T1=", 2.0 * t1_ps, ")");
  return t2_ps / (2.0 * t1_ps);
}

inline DephasingDecomposition decompose_dephasing(const EmitterParams& e) {
  e.validate();
  const double gamma = e.gamma_rad();
  const double gamma_f = gamma / (2.0 * e.m_consecutive);
  DephasingDecomposition d;
  d.gamma_rad = gamma;
  d.gamma_fast_star = std::max(0.0, gamma_f - 0.5 * gamma);
  // Evaluated as a difference of the two closed forms; tiny negative values
  // only arise from rounding when M == T2/(2*T1).
  d.gamma_slow = std::max(0.0, e.gamma_coh() - gamma_f);
  return d;
}

/// Squared overlap of two one-sided exponential wavepackets with decay
/// rates gamma1, gamma2 (1/ps) and angular-frequency difference delta.
inline double overlap_closed_form(double gamma1, double gamma2, double delta) {
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0))
    detail::fail("overlap rates must be > 0 (got ", gamma1, ", ", gamma2, ")");
  const double a = 0.5 * (gamma1 + gamma2);
  return gamma1 * gamma2 / (a * a + delta * delta);
}

/// As overlap_closed_form, with wavepacket 2 starting `delay_ps` after
/// wavepacket 1. The leading packet's tail that precedes the other is lost.
inline double overlap_closed_form(double gamma1, double gamma2, double delta, double delay_ps) {
  const double base = overlap_closed_form(gamma1, gamma2, delta);
  if (delay_ps == 0.0) return base;
  const double lead = delay_ps > 0.0 ? gamma1 : gamma2;
  return base * std::exp(-lead * std::abs(delay_ps));
}

/// Ensemble-averaged HOM visibility between two independent emitters whose
/// photons carry Lorentzian frequency noise, with fixed center detuning
/// (rad/ps). Equals V = [G1 G2 / A] (g1+g2) / ((g1+g2)^2 + detuning^2).
inline double remote_visibility(const EmitterParams& e1, const EmitterParams& e2,
                                double detuning_rad_per_ps) {
  e1.validate();
  e2.validate();
  const double g1 = e1.gamma_rad();
  const double g2 = e2.gamma_rad();
  const double a = 0.5 * (g1 + g2);
  const double coh = e1.gamma_coh() + e2.gamma_coh();
  return (g1 * g2 / a) * coh / (coh * coh + detuning_rad_per_ps * detuning_rad_per_ps);
}

/// Same-source HOM visibility for photons emitted 12.5 ns apart: the slow
/// term is common-mode, so only twice the fast dephasing remains.
inline double consecutive_visibility(const DephasingDecomposition& d) {
  return d.gamma_rad / (d.gamma_rad + 2.0 * d.gamma_fast_star);
}

namespace detail {
inline void check_visibility_inputs(double v, double g2a, double g2b) {
  if (!(v >= 0.0 && v <= 1.0)) fail("visibility must lie in [0, 1] (got ", v, ")");
  if (!(g2a >= 0.0 && g2a < 1.0)) fail("g2_a must lie in [0, 1) (got ", g2a, ")");
  if (!(g2b >= 0.0 && g2b < 1.0)) fail("g2_b must lie in [0, 1) (got ", g2b, ")");
}
}  // namespace detail

/// Additive multiphoton correction: V_int = V_raw + (g2_a + g2_b)/2.
inline double corrected_visibility(double v_raw, double g2_a, double g2_b) {
  detail::check_visibility_inputs(v_raw, g2_a, g2_b);
  return std::clamp(v_raw + 0.5 * (g2_a + g2_b), 0.0, 1.0);
}

/// Inverse of corrected_visibility.
inline double predicted_raw_visibility(double v_intrinsic, double g2_a, double g2_b) {
  detail::check_visibility_inputs(v_intrinsic, g2_a, g2_b);
  return std::clamp(v_intrinsic - 0.5 * (g2_a + g2_b), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Frequency-domain overlap with quadratic spectral phase.

struct GridSpec {
  std::size_t points = 4096;
  double span_multiplier = 40.0;
};

/// Lorentzian spectral amplitude of a one-sided exponential wavepacket,
/// carrying an accumulated quadratic spectral phase quad_phase * w^2 / 2.
struct SpectralAmplitude {
  double gamma_rad = 0.0;      // 1/ps
  double center_offset = 0.0;  // rad/ps
  double quad_phase = 0.0;     // ps^2 (beta2 * L)
  GridSpec grid{};

  /// Amplitude without the quadratic phase. |.|^2 integrates to 1.
  std::complex<double> envelope(double w) const {
    const double norm = std::sqrt(gamma_rad / (2.0 * units::pi));
    return norm / std::complex<double>(0.5 * gamma_rad, -(w - center_offset));
  }
};

namespace detail {

inline void check_grid(const SpectralAmplitude& s) {
  if (!(s.gamma_rad > 0.0)) fail("spectral gamma_rad must be > 0 (got ", s.gamma_rad, ")");
  if (s.grid.span_multiplier < 20.0)
    fail<ResolutionError>("grid span multiplier ", s.grid.span_multiplier,
                          " is below the minimum of 20x max(gamma, |center offset|)");
  if (s.grid.points < 256 || s.grid.points % 16 != 0)
    fail<ResolutionError>("grid point count must be a multiple of 16 and >= 256 (got ",
                          s.grid.points, ")");
}

/// Integral of conj(a(w)) b(w) exp(i kappa w^2 / 2) over the real line.
/// Without a phase difference the line is split at the midpoint of the two
/// centers and each half is angle-mapped around its peak. With a chirp the
/// integral runs over a finite window on uniform Gauss-Legendre panels; the
/// tails decay like 1/(kappa w^3) and only the leading integration-by-parts
/// term is added.
inline std::complex<double> spectral_inner(const SpectralAmplitude& a, const SpectralAmplitude& b) {
  check_grid(a);
  check_grid(b);
  if (a.grid.points != b.grid.points || a.grid.span_multiplier != b.grid.span_multiplier)
    fail<ResolutionError>("spectral grids are incompatible");

  const double kappa = b.quad_phase - a.quad_phase;
  const double center = 0.5 * (a.center_offset + b.center_offset);
  double base = std::max({a.gamma_rad, b.gamma_rad, std::abs(a.center_offset - b.center_offset)});
  if (kappa != 0.0) base = std::max(base, std::abs(center));
  const double half = a.grid.span_multiplier * base;
  const double lo = center - half;
  const double hi = center + half;
  const std::size_t panels = a.grid.points / 16;

  auto integrand = [&](double w) {
    auto v = std::conj(a.envelope(w)) * b.envelope(w);
    if (kappa != 0.0) v *= std::polar(1.0, 0.5 * kappa * w * w);
    return v;
  };

  if (kappa == 0.0) {
    // Map each half-line onto an angle around the nearer Lorentzian peak,
    // w = peak + hwhm * tan(theta); the mapped integrand is bounded and smooth.
    const SpectralAmplitude& left = a.center_offset <= b.center_offset ? a : b;
    const SpectralAmplitude& right = a.center_offset <= b.center_offset ? b : a;
    const double hl = 0.5 * left.gamma_rad;
    const double hr = 0.5 * right.gamma_rad;
    auto mapped = [&](double peak, double hwhm) {
      return [&integrand, peak, hwhm](double theta) {
        const double c = std::cos(theta);
        return integrand(peak + hwhm * std::tan(theta)) * (hwhm / (c * c));
      };
    };
    const std::size_t half_panels = panels / 2;
    auto lower = quad::integrate(mapped(left.center_offset, hl), -0.5 * units::pi,
                                 std::atan((center - left.center_offset) / hl), half_panels);
    auto upper = quad::integrate(mapped(right.center_offset, hr),
                                 std::atan((center - right.center_offset) / hr), 0.5 * units::pi,
                                 half_panels);
    return lower + upper;
  }

  const double phase_span = 0.5 * std::abs(kappa) * (lo * lo + hi * hi);
  const auto needed = static_cast<std::size_t>(std::ceil(phase_span / 8.0));
  if (needed > panels)
    fail<ResolutionError>("grid of ", a.grid.points, " points cannot resolve quadratic phase ",
                          kappa, " ps^2 (needs ", needed * 16, " points)");
  if ((hi - lo) / static_cast<double>(panels) > 0.5 * std::min(a.gamma_rad, b.gamma_rad))
    fail<ResolutionError>("grid of ", a.grid.points, " points cannot resolve linewidth ",
                          std::min(a.gamma_rad, b.gamma_rad), " over span ", hi - lo);
  auto core = quad::integrate(integrand, lo, hi, panels);
  const std::complex<double> i(0.0, 1.0);
  auto upper = -integrand(hi) / (i * kappa * hi);
  auto lower = integrand(lo) / (i * kappa * lo);
  return core + upper + lower;
}

}  // namespace detail

/// Total spectral density on the quadrature grid; 1 within 1e-6 for a
/// well-formed amplitude.
inline double spectral_norm(const SpectralAmplitude& a) {
  SpectralAmplitude flat = a;
  flat.quad_phase = 0.0;
  return detail::spectral_inner(flat, flat).real();
}

/// |<a|b>|^2 including the difference of the accumulated quadratic phases.
/// A common phase cancels exactly, so only quad_phase differences matter.
inline double overlap_numeric(const SpectralAmplitude& a, const SpectralAmplitude& b) {
  return std::norm(detail::spectral_inner(a, b));
}

/// Same overlap on panels that widen geometrically away from the two peaks
/// and shrink where the quadratic phase turns quickly, so well separated
/// narrow lines cost a few hundred panels rather than a uniform grid fine
/// enough for the linewidth across the whole span. The grid fields of the
/// amplitudes are ignored.
inline double overlap_adaptive(const SpectralAmplitude& a, const SpectralAmplitude& b) {
  using detail::fail;
  if (!(a.gamma_rad > 0.0) || !(b.gamma_rad > 0.0))
    fail("spectral gamma_rad must be > 0 (got ", a.gamma_rad, ", ", b.gamma_rad, ")");
  const double kappa = b.quad_phase - a.quad_phase;
  if (kappa == 0.0) return overlap_numeric({a.gamma_rad, a.center_offset, 0.0, {}}, {b.gamma_rad, b.center_offset, 0.0, {}});

  const double gmin = std::min(a.gamma_rad, b.gamma_rad);
  const double gmax = std::max(a.gamma_rad, b.gamma_rad);
  const double p_lo = std::min(a.center_offset, b.center_offset);
  const double p_hi = std::max(a.center_offset, b.center_offset);
  const double center = 0.5 * (p_lo + p_hi);
  const double k = std::abs(kappa);
  // Cut the line where the leading integration-by-parts term describes the
  // tail to 1e-3 (|kappa w| times the envelope scale d >= 1e3), keeping the
  // stationary point w = 0 inside. Slow tails are cut at 1e7 linewidths.
  auto reach = [&](double anchor) {
    const double x = std::abs(anchor);
    const double d = 0.5 * (-x + std::sqrt(x * x + 4e3 / k));
    return std::clamp(d, 40.0 * gmax, 1e7 * gmax);
  };
  const double lo = std::min(p_lo, 0.0) - reach(std::min(p_lo, 0.0));
  const double hi = std::max(p_hi, 0.0) + reach(std::max(p_hi, 0.0));

  auto integrand = [&](double w) {
    return std::conj(a.envelope(w)) * b.envelope(w) * std::polar(1.0, 0.5 * kappa * w * w);
  };
  std::size_t used = 0;
  constexpr std::size_t max_panels = 1u << 20;
  std::complex<double> sum = 0.0;
  // Walk from `from` to `to`, stepping by the local scale.
  auto walk = [&](double from, double to) {
    const double dir = to > from ? 1.0 : -1.0;
    double w = from;
    while (dir * (to - w) > 0.0) {
      const double d = std::min(std::abs(w - p_lo), std::abs(w - p_hi));
      double h = std::max(0.5 * gmin, 0.5 * d);
      h = std::min({h, 4.0 / (k * (std::abs(w) + h)), std::sqrt(8.0 / k)});
      h = std::min(h, dir * (to - w));
      const double next = w + dir * h;
      sum += quad::integrate(integrand, std::min(w, next), std::max(w, next), 1);
      w = next;
      if (++used > max_panels)
        fail<ResolutionError>("adaptive overlap exceeded ", max_panels, " panels (offsets ", a.center_offset, ", ",
                              b.center_offset, " rad/ps, phase difference ", kappa, " ps^2)");
    }
  };
  walk(p_lo, lo);
  walk(p_lo, center);
  walk(p_hi, center);
  walk(p_hi, hi);
  const std::complex<double> i(0.0, 1.0);
  if (k * std::abs(hi) * (hi - p_hi) >= 100.0) sum += -integrand(hi) / (i * kappa * hi);
  if (k * std::abs(lo) * (p_lo - lo) >= 100.0) sum += integrand(lo) / (i * kappa * lo);
  return std::norm(sum);
}

}  // namespace rhom
