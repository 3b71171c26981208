#pragma once

// Analytic coincidence rate and signal-to-noise versus total fiber length.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rhom/errors.hpp"
#include "rhom/units.hpp"

namespace rhom {

struct ScenarioParams {
  std::string label = "current";
  double rep_rate_hz = 80.3e6;
  double eta_sys_a = 0.2;
  double eta_sys_b = 0.2;
  double eta_qfc_a = 0.48;
  double eta_qfc_b = 0.52;
  double eta_det = 0.76;
  double loss_db_per_km = 0.19;
  double dark_rate_hz = 300.0;
  double coincidence_window_ps = 100.0;
  double kappa_sys = 1.0;

  void validate() const {
    using detail::fail;
    auto prob = [&](const char* name, double v) {
      if (!(v > 0.0 && v <= 1.0)) fail(label, ": ", name, " must lie in (0, 1] (got ", v, ")");
    };
    prob("eta_sys_a", eta_sys_a);
    prob("eta_sys_b", eta_sys_b);
    prob("eta_qfc_a", eta_qfc_a);
    prob("eta_qfc_b", eta_qfc_b);
    prob("eta_det", eta_det);
    if (!(rep_rate_hz > 0.0)) fail(label, ": rep_rate_hz must be > 0 (got ", rep_rate_hz, ")");
    if (!(loss_db_per_km >= 0.0)) fail(label, ": loss_db_per_km must be >= 0 (got ", loss_db_per_km, ")");
    if (!(dark_rate_hz >= 0.0)) fail(label, ": dark_rate_hz must be >= 0 (got ", dark_rate_hz, ")");
    if (!(coincidence_window_ps > 0.0))
      fail(label, ": coincidence_window_ps must be > 0 (got ", coincidence_window_ps, ")");
    if (!(kappa_sys > 0.0)) fail(label, ": kappa_sys must be > 0 (got ", kappa_sys, ")");
  }
};

namespace scenarios {

inline ScenarioParams current() { return {}; }

inline ScenarioParams improved() {
  ScenarioParams s;
  s.label = "improved";
  s.rep_rate_hz = 2.6e9;
  s.eta_sys_a = s.eta_sys_b = 0.8;
  s.loss_db_per_km = 0.16;
  return s;
}

}  // namespace scenarios

struct ArmProbabilities {
  double a = 0.0;
  double b = 0.0;
};

/// Per-arm detection probability per pulse with each arm carrying L/2.
inline ArmProbabilities arm_probabilities(double total_length_km, const ScenarioParams& s) {
  if (!(total_length_km >= 0.0)) detail::fail("total length must be >= 0 (got ", total_length_km, " km)");
  const double t = std::pow(10.0, -s.loss_db_per_km * 0.5 * total_length_km / 10.0);
  return {s.kappa_sys * s.eta_sys_a * s.eta_qfc_a * s.eta_det * t,
          s.kappa_sys * s.eta_sys_b * s.eta_qfc_b * s.eta_det * t};
}

/// Cross-detector coincidence rate for distinguishable photons.
inline double coincidence_rate(double total_length_km, const ScenarioParams& s) {
  const auto p = arm_probabilities(total_length_km, s);
  return s.rep_rate_hz * p.a * p.b * 0.5;
}

inline double dark_prob_per_window(const ScenarioParams& s) {
  return s.dark_rate_hz * s.coincidence_window_ps / units::ps_per_s;
}

inline double accidental_rate(double total_length_km, const ScenarioParams& s) {
  const auto p = arm_probabilities(total_length_km, s);
  const double q = dark_prob_per_window(s);
  return s.rep_rate_hz * ((p.a + p.b) * q + q * q) * 0.5;
}

/// 10 log10(signal / accidentals); +inf when there are no accidentals.
inline double snr_db(double total_length_km, const ScenarioParams& s) {
  const double acc = accidental_rate(total_length_km, s);
  if (acc == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(coincidence_rate(total_length_km, s) / acc);
}

/// kappa_sys that puts coincidence_rate(length) at target_rate.
inline double calibrate_kappa(ScenarioParams s, double length_km, double target_rate_hz) {
  if (!(target_rate_hz > 0.0)) detail::fail("target rate must be > 0 (got ", target_rate_hz, ")");
  s.kappa_sys = 1.0;
  return std::sqrt(target_rate_hz / coincidence_rate(length_km, s));
}

struct CurveRow {
  double length_km = 0.0;
  double rate_hz = 0.0;
  double snr_db = 0.0;
  std::string scenario;
};

struct Crossing {
  std::string scenario;
  double target_db = 0.0;
  std::optional<double> length_km;
};

/// Length at which snr_db falls through target_db, found by bisection
/// inside [lo, hi]. Nothing is returned when the target is not bracketed.
inline std::optional<double> snr_crossing(const ScenarioParams& s, double target_db, double lo_km, double hi_km) {
  double flo = snr_db(lo_km, s) - target_db;
  const double fhi = snr_db(hi_km, s) - target_db;
  if (!(flo >= 0.0 && fhi <= 0.0) || !std::isfinite(fhi)) return std::nullopt;
  for (int it = 0; it < 200 && hi_km - lo_km > 1e-9; ++it) {
    const double mid = 0.5 * (lo_km + hi_km);
    const double f = snr_db(mid, s) - target_db;
    if (f >= 0.0) {
      lo_km = mid;
      flo = f;
    } else {
      hi_km = mid;
    }
  }
  return 0.5 * (lo_km + hi_km);
}

struct CurveTable {
  std::vector<CurveRow> rows;
  std::vector<Crossing> crossings;
};

inline CurveTable sweep_curves(std::span<const double> lengths_km, std::span<const ScenarioParams> scenarios,
                               double target_db = 10.0) {
  CurveTable t;
  if (lengths_km.empty() || scenarios.empty()) return t;
  double lo = lengths_km.front();
  double hi = lengths_km.front();
  for (double l : lengths_km) {
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  for (const auto& s : scenarios) {
    s.validate();
    for (double l : lengths_km) t.rows.push_back({l, coincidence_rate(l, s), snr_db(l, s), s.label});
    t.crossings.push_back({s.label, target_db, snr_crossing(s, target_db, lo, hi)});
  }
  return t;
}

inline void write_curves_csv(std::ostream& os, const CurveTable& t) {
  os << "length_km,rate_hz,snr_db,scenario\n";
  for (const auto& r : t.rows)
    os << detail::concat(r.length_km) << "," << detail::concat(r.rate_hz) << "," << detail::concat(r.snr_db) << ","
       << r.scenario << "\n";
}

}  // namespace rhom
