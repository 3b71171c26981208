#pragma once

// Named experiments built from an ExperimentConfig, and their file output.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhom/channel.hpp"
#include "rhom/config.hpp"
#include "rhom/detection.hpp"
#include "rhom/experiment.hpp"
#include "rhom/linkbudget.hpp"
#include "rhom/model_core.hpp"
#include "rhom/qfc.hpp"
#include "rhom/units.hpp"

namespace rhom {

struct SummaryRecord {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
  std::string provenance;  // mc | analytic | oracle | calibration
};

struct OutputFile {
  std::string suffix;  // becomes <preset>_s<seed>_<suffix>
  std::string content;
};

struct ResultBundle {
  std::string preset;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string config_echo;
  std::vector<OutputFile> files;
  std::vector<SummaryRecord> summary;

  void add(std::string name, double value, double err, std::string provenance) {
    summary.push_back({std::move(name), value, err, std::move(provenance)});
  }
};

namespace preset_detail {

inline std::string length_tag(double km) {
  std::ostringstream os;
  os << km << "km";
  return os.str();
}

inline std::string histogram_csv(const CoincidenceHistogram& h) {
  std::ostringstream os;
  write_histogram_csv(os, h);
  return os.str();
}

inline double beta_for(const ExperimentConfig& c, const EmitterParams& e) {
  return c.run.multiphoton ? companion_prob_from_g2(e.g2_zero) : 0.0;
}

inline HistogramSpec hom_histogram(const ExperimentConfig& c) {
  const double bins = std::ceil(c.detector.gate_window_ps / c.bin_width_ps);
  return {c.bin_width_ps, bins * c.bin_width_ps};
}

}  // namespace preset_detail

/// Remote two-source setup with each arm carrying half of `total_km`.
inline HomSetup remote_setup(const ExperimentConfig& c, double total_km, double detuning_ghz,
                             const std::string& label) {
  HomSetup s;
  s.label = label;
  s.mode = CorrelationMode::independent;
  s.det = c.detector;
  s.importance_floor = c.run.importance_floor;
  s.hist = preset_detail::hom_histogram(c);
  auto arm = [&](ArmSetup& a, const EmitterParams& e, const QfcBlock& q, const FiberParams& f, int id) {
    a.emitter = e;
    a.source_id = id;
    a.beta = preset_detail::beta_for(c, e);
    a.convert = true;
    a.qfc = q.params;
    a.propagate = true;
    a.fiber = f;
    a.fiber.length_km = 0.5 * total_km;
    a.channel_wavelength_nm = q.target_wavelength_nm;
    a.pol_elapsed_hr = c.run.pol_elapsed_hr;
    a.drift_elapsed_hr = c.run.drift_elapsed_hr;
  };
  arm(s.a, c.emitter1, c.qfc1, c.fiber1, 1);
  arm(s.b, c.emitter2, c.qfc2, c.fiber2, 2);
  s.b.freq_shift = units::ghz_to_rad_per_ps(detuning_ghz);
  return s;
}

/// Same-source pair separated by one pulse period, no conversion or fiber.
/// The reference run rotates one photon to the orthogonal polarization.
inline HomSetup consecutive_setup(const ExperimentConfig& c, const EmitterParams& e, bool orthogonal,
                                  const std::string& label) {
  HomSetup s;
  s.label = label;
  s.mode = CorrelationMode::consecutive_pair;
  s.det = c.detector;
  s.importance_floor = c.run.importance_floor;
  s.hist = preset_detail::hom_histogram(c);
  for (ArmSetup* a : {&s.a, &s.b}) {
    a->emitter = e;
    a->beta = preset_detail::beta_for(c, e);
    a->convert = false;
    a->propagate = false;
    a->source_id = 1;
  }
  if (orthogonal) s.b.pol_rotation_rad = 0.5 * units::pi;
  return s;
}

struct RateCheck {
  Estimate mc;
  double analytic = 0.0;
};

/// End-to-end MC coincidence rate for distinguishable photons without
/// companions, darks or conversion noise, next to the link-budget formula
/// with the same constants (kappa_sys = mean polarizer transmission).
inline RateCheck mc_rate_check(const ExperimentConfig& c, double total_km, std::uint64_t trials,
                               std::uint64_t seed, unsigned workers) {
  ExperimentConfig pure = c;
  pure.run.multiphoton = false;
  HomSetup s = remote_setup(pure, total_km, 0.0, "rate-check/" + preset_detail::length_tag(total_km));
  s.det.dark_rate_hz = 0.0;
  s.a.conversion_noise = s.b.conversion_noise = false;
  s.b.pol_rotation_rad = 0.5 * units::pi;
  const HomRun run = run_hom(s, trials, seed, workers);

  ScenarioParams sp;
  sp.label = "mc-chain";
  sp.rep_rate_hz = c.emitter1.rep_rate_hz;
  sp.eta_sys_a = c.emitter1.eta_sys;
  sp.eta_sys_b = c.emitter2.eta_sys;
  sp.eta_qfc_a = conversion_efficiency(c.qfc1.params.pump_mw, c.qfc1.params);
  sp.eta_qfc_b = conversion_efficiency(c.qfc2.params.pump_mw, c.qfc2.params);
  sp.eta_det = c.detector.efficiency;
  sp.loss_db_per_km = c.fiber1.loss_db_per_km;
  sp.dark_rate_hz = 0.0;
  sp.kappa_sys = pol_pass_probability(c.fiber1, c.run.pol_elapsed_hr);
  return {coincidence_rate_estimate(run, c.emitter1.rep_rate_hz), coincidence_rate(total_km, sp)};
}

namespace preset_detail {

struct RemotePair {
  HomRun resonant;
  HomRun reference;
  HomSetup resonant_setup;
  HomSetup reference_setup;
};

inline RemotePair run_remote_pair(const ExperimentConfig& c, double total_km, unsigned workers) {
  const std::string tag = c.run.preset + "/" + length_tag(total_km);
  RemotePair p{{}, {}, remote_setup(c, total_km, c.run.detuning_ghz, tag + "/resonant"),
               remote_setup(c, total_km, c.run.reference_detuning_ghz, tag + "/reference")};
  p.resonant = run_hom(p.resonant_setup, c.run.trials, c.run.seed, workers);
  p.reference = run_hom(p.reference_setup, c.run.trials, c.run.seed, workers);
  return p;
}

inline void stamp(CoincidenceHistogram& h, const ResultBundle& b) {
  h.seed = b.seed;
  h.config_hash = b.config_hash;
}

inline void run_hbt_preset(const ExperimentConfig& c, unsigned workers, ResultBundle& b) {
  for (const auto& e : {c.emitter1, c.emitter2}) {
    HbtSetup s;
    s.label = "hbt/" + e.label;
    s.emitter = e;
    s.beta = beta_for(c, e);
    s.det = c.detector;
    s.hist = {c.bin_width_ps, c.histogram_range_ps};
    HbtRun run = run_hbt(s, c.run.hbt_pulses, c.run.seed, workers);
    stamp(run.hist, b);
    const Estimate g2 = extract_g2_zero(run.hist, units::period_ps(e.rep_rate_hz));
    b.add("g2_zero_" + e.label, g2.value, g2.stderr_, "mc");
    b.add("companion_prob_" + e.label, s.beta, 0.0, "analytic");
    b.files.push_back({"histogram_" + e.label + ".csv", histogram_csv(run.hist)});
  }
}

inline void run_consecutive_preset(const ExperimentConfig& c, unsigned workers, ResultBundle& b) {
  for (const auto& e : {c.emitter1, c.emitter2}) {
    const std::string tag = "hom-consecutive/" + e.label;
    const HomSetup par = consecutive_setup(c, e, false, tag + "/parallel");
    const HomSetup orth = consecutive_setup(c, e, true, tag + "/orthogonal");
    HomRun rp = run_hom(par, c.run.trials, c.run.seed, workers);
    HomRun ro = run_hom(orth, c.run.trials, c.run.seed, workers);
    stamp(rp.hist, b);
    stamp(ro.hist, b);
    const auto v = extract_visibility(rp.hist, ro.hist, 2.0 * rp.hist.spec().half_range_ps);
    b.add("visibility_raw_" + e.label, v.visibility, v.stderr_, "mc");
    const double g2 = c.run.multiphoton ? e.g2_zero : 0.0;
    b.add("visibility_corrected_" + e.label, corrected_visibility(v.visibility, g2, g2), v.stderr_, "mc");
    b.add("m_consecutive_model_" + e.label, consecutive_visibility(decompose_dephasing(e)), 0.0, "analytic");
    b.files.push_back({"histogram_" + e.label + "_parallel.csv", histogram_csv(rp.hist)});
    b.files.push_back({"histogram_" + e.label + "_orthogonal.csv", histogram_csv(ro.hist)});
  }
}

inline void run_qfc_preset(const ExperimentConfig& c, ResultBundle& b) {
  std::ostringstream os;
  os << "qfc,pump_mw,efficiency,snr_db\n";
  for (const auto* q : {&c.qfc1, &c.qfc2}) {
    const auto& p = q->params;
    for (int i = 1; i <= 60; ++i) {
      const double pump = p.p_max_mw * 1.2 * i / 60.0;
      os << p.label << "," << config_detail::format_double(pump) << ","
         << config_detail::format_double(conversion_efficiency(pump, p)) << ","
         << config_detail::format_double(conversion_snr(pump, q->snr_signal_rate_hz, p)) << "\n";
    }
  }
  b.files.push_back({"curves.csv", os.str()});
  for (auto [e, q] : {std::pair{&c.emitter1, &c.qfc1}, std::pair{&c.emitter2, &c.qfc2}}) {
    const auto& p = q->params;
    b.add("pump_wavelength_nm_" + p.label, solve_pump_wavelength(e->wavelength_nm, q->target_wavelength_nm), 0.0,
          "analytic");
    b.add("converted_wavelength_nm_" + p.label, converted_wavelength(e->wavelength_nm, p.pump_wavelength_nm), 0.0,
          "analytic");
    b.add("efficiency_at_operating_pump_" + p.label, conversion_efficiency(p.pump_mw, p), 0.0, "analytic");
    b.add("snr_db_at_operating_pump_" + p.label, conversion_snr(p.pump_mw, q->snr_signal_rate_hz, p), 0.0,
          "analytic");
    b.add("raman_coeff_" + p.label, p.raman_coeff, 0.0, "calibration");
    b.add("pzt_step_mhz_" + p.label, pzt_frequency_step(p.pzt_step_pm, q->target_wavelength_nm), 0.0, "analytic");
  }
}

inline void run_remote_preset(const ExperimentConfig& c, unsigned workers, ResultBundle& b) {
  const double g2a = c.run.multiphoton ? c.emitter1.g2_zero : 0.0;
  const double g2b = c.run.multiphoton ? c.emitter2.g2_zero : 0.0;
  for (double km : c.run.lengths_km) {
    RemotePair p = run_remote_pair(c, km, workers);
    stamp(p.resonant.hist, b);
    stamp(p.reference.hist, b);
    const std::string tag = length_tag(km);
    const double full = 2.0 * p.resonant.hist.spec().half_range_ps;
    const auto v = extract_visibility(p.resonant.hist, p.reference.hist, full);
    b.add("visibility_raw_" + tag, v.visibility, v.stderr_, "mc");
    b.add("visibility_corrected_" + tag, corrected_visibility(v.visibility, g2a, g2b), v.stderr_, "mc");
    b.add("visibility_oracle_" + tag,
          windowed_visibility_oracle(density_model(p.resonant_setup), density_model(p.reference_setup),
                                     std::numeric_limits<double>::infinity()),
          0.0, "oracle");
    b.files.push_back({"histogram_" + tag + "_resonant.csv", histogram_csv(p.resonant.hist)});
    b.files.push_back({"histogram_" + tag + "_reference.csv", histogram_csv(p.reference.hist)});
  }
  const double det = units::ghz_to_rad_per_ps(c.run.detuning_ghz);
  const double ref = units::ghz_to_rad_per_ps(c.run.reference_detuning_ghz);
  b.add("visibility_model_resonant", remote_visibility(c.emitter1, c.emitter2, det), 0.0, "analytic");
  b.add("visibility_model_reference", remote_visibility(c.emitter1, c.emitter2, ref), 0.0, "analytic");
}

inline void run_window_preset(const ExperimentConfig& c, unsigned workers, ResultBundle& b) {
  const double km = c.fiber1.length_km + c.fiber2.length_km;
  RemotePair p = run_remote_pair(c, km, workers);
  stamp(p.resonant.hist, b);
  stamp(p.reference.hist, b);
  const HomDensityModel mr = density_model(p.resonant_setup);
  const HomDensityModel mf = density_model(p.reference_setup);
  std::ostringstream os;
  write_visibility_header(os);
  std::vector<double> windows = c.run.windows_ps;
  windows.push_back(2.0 * p.resonant.hist.spec().half_range_ps);
  for (double w : windows) {
    const auto v = extract_visibility(p.resonant.hist, p.reference.hist, w);
    write_visibility_row(os, v);
    const std::string tag = config_detail::format_double(w) + "ps";
    b.add("visibility_window_" + tag, v.visibility, v.stderr_, "mc");
    b.add("visibility_oracle_window_" + tag, windowed_visibility_oracle(mr, mf, w), 0.0, "oracle");
  }
  b.files.push_back({"visibility.csv", os.str()});
  b.files.push_back({"histogram_resonant.csv", histogram_csv(p.resonant.hist)});
  b.files.push_back({"histogram_reference.csv", histogram_csv(p.reference.hist)});
}

inline void run_length_preset(const ExperimentConfig& c, unsigned workers, ResultBundle& b) {
  std::ostringstream os;
  os << "length_km,visibility,stderr,model_raw\n";
  const double intrinsic = remote_visibility(c.emitter1, c.emitter2, units::ghz_to_rad_per_ps(c.run.detuning_ghz));
  const double g2a = c.run.multiphoton ? c.emitter1.g2_zero : 0.0;
  const double g2b = c.run.multiphoton ? c.emitter2.g2_zero : 0.0;
  const double model = predicted_raw_visibility(intrinsic, g2a, g2b);
  double lo = 1.0;
  double hi = 0.0;
  for (double km : c.run.lengths_km) {
    RemotePair p = run_remote_pair(c, km, workers);
    const auto v = extract_visibility(p.resonant.hist, p.reference.hist, 2.0 * p.resonant.hist.spec().half_range_ps);
    os << config_detail::format_double(km) << "," << config_detail::format_double(v.visibility) << ","
       << config_detail::format_double(v.stderr_) << "," << config_detail::format_double(model) << "\n";
    b.add("visibility_raw_" + length_tag(km), v.visibility, v.stderr_, "mc");
    lo = std::min(lo, v.visibility);
    hi = std::max(hi, v.visibility);
  }
  if (!c.run.lengths_km.empty()) b.add("visibility_spread", hi - lo, 0.0, "mc");
  b.files.push_back({"curve.csv", os.str()});
}

inline void run_dispersion_preset(const ExperimentConfig& c, ResultBundle& b) {
  const double g1 = c.emitter1.gamma_rad();
  const double g2 = c.emitter2.gamma_rad();
  const double lambda = c.qfc1.target_wavelength_nm;
  const double beta2 = beta2_from_dispersion(c.fiber1.dispersion_ps_nm_km, lambda);
  std::ostringstream os;
  os << "length_km,symmetric_overlap,asymmetric_overlap\n";
  const double max_km = c.fiber1.length_km;
  const int steps = 30;
  for (int i = 0; i <= steps; ++i) {
    const double km = max_km * i / steps;
    const double phi = beta2 * km;
    const double sym = overlap_numeric({g1, 0.0, phi, {}}, {g2, 0.0, phi, {}});
    const double asym = overlap_numeric({g1, 0.0, phi, {}}, {g2, 0.0, 0.0, {}});
    os << config_detail::format_double(km) << "," << config_detail::format_double(sym) << ","
       << config_detail::format_double(asym) << "\n";
  }
  b.files.push_back({"overlap.csv", os.str()});
  const double phi = beta2 * max_km;
  b.add("overlap_undispersed", overlap_closed_form(g1, g2, 0.0), 0.0, "analytic");
  b.add("overlap_symmetric", overlap_numeric({g1, 0.0, phi, {}}, {g2, 0.0, phi, {}}), 0.0, "analytic");
  b.add("overlap_asymmetric", overlap_numeric({g1, 0.0, phi, {}}, {g2, 0.0, 0.0, {}}), 0.0, "analytic");
  b.add("beta2_ps2_per_km", beta2, 0.0, "analytic");
  for (const auto& e : {c.emitter1, c.emitter2})
    b.add("group_delay_spread_ps_" + e.label, group_delay_spread(e.t2_ps, max_km, c.fiber1, lambda), 0.0, "analytic");
}

inline void run_linkbudget_preset(const ExperimentConfig& c, unsigned workers, ResultBundle& b) {
  const auto& sc = c.scenario;
  std::vector<double> lengths;
  for (double l = 0.0; l <= sc.length_max_km + 1e-9; l += sc.length_step_km) lengths.push_back(l);
  const std::vector<ScenarioParams> scenarios{sc.make(false), sc.make(true)};
  const CurveTable t = sweep_curves(lengths, scenarios, sc.target_snr_db);
  std::ostringstream os;
  write_curves_csv(os, t);
  b.files.push_back({"curves.csv", os.str()});
  b.add("kappa_sys", sc.kappa_sys, 0.0, "calibration");
  for (const auto& x : t.crossings)
    b.add("snr_crossing_km_" + x.scenario, x.length_km.value_or(std::numeric_limits<double>::quiet_NaN()), 0.0,
          "analytic");
  b.add("rate_hz_improved_at_calibration", coincidence_rate(sc.calibration_length_km, scenarios[1]), 0.0, "analytic");
  b.add("snr_db_improved_at_calibration", snr_db(sc.calibration_length_km, scenarios[1]), 0.0, "analytic");
  for (double km : c.run.lengths_km) {
    if (km <= 0.0) continue;
    const RateCheck r = mc_rate_check(c, km, c.run.trials, c.run.seed, workers);
    b.add("mc_rate_hz_" + length_tag(km), r.mc.value, r.mc.stderr_, "mc");
    b.add("analytic_rate_hz_" + length_tag(km), r.analytic, 0.0, "analytic");
  }
}

}  // namespace preset_detail

/// Runs the preset named in the configuration.
inline ResultBundle run_preset(const ExperimentConfig& c, unsigned workers = 1) {
  validate_config(c);
  ResultBundle b;
  b.preset = c.run.preset;
  b.seed = c.run.seed;
  b.config_echo = echo_config(c);
  b.config_hash = config_hash(c);
  const auto& p = c.run.preset;
  using namespace preset_detail;
  if (p == "hbt") run_hbt_preset(c, workers, b);
  else if (p == "hom-consecutive") run_consecutive_preset(c, workers, b);
  else if (p == "qfc-curves") run_qfc_preset(c, b);
  else if (p == "hom-remote") run_remote_preset(c, workers, b);
  else if (p == "window-sweep") run_window_preset(c, workers, b);
  else if (p == "length-sweep") run_length_preset(c, workers, b);
  else if (p == "dispersion-demo") run_dispersion_preset(c, b);
  else if (p == "linkbudget") run_linkbudget_preset(c, workers, b);
  return b;
}

inline std::string summary_jsonl(const ResultBundle& b) {
  std::string out;
  for (const auto& r : b.summary) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["value"] = r.value;
    j["stderr"] = r.stderr_;
    j["provenance"] = r.provenance;
    j["preset"] = b.preset;
    j["seed"] = b.seed;
    j["config_hash"] = b.config_hash;
    out += j.dump() + "\n";
  }
  return out;
}

inline std::string output_stem(const ResultBundle& b) { return b.preset + "_s" + std::to_string(b.seed); }

/// Writes every file of the bundle, the summary and the effective config.
/// Returns the written paths.
inline std::vector<std::filesystem::path> emit_outputs(const ResultBundle& b, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
    written.push_back(path);
  };
  const std::string stem = output_stem(b);
  put(stem + "_config.ini", b.config_echo);
  if (!b.summary.empty()) put(stem + "_summary.jsonl", summary_jsonl(b));
  for (const auto& f : b.files) put(stem + "_" + f.suffix, f.content);
  return written;
}

}  // namespace rhom
