#pragma once

// Experiment configuration: INI-style sections of key = value pairs.
// Every key has a default taken from the reference parameter set, unknown
// keys are rejected, and the effective configuration can be echoed back in
// a form that parses to the identical values.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rhom/channel.hpp"
#include "rhom/detection.hpp"
#include "rhom/errors.hpp"
#include "rhom/linkbudget.hpp"
#include "rhom/model_core.hpp"
#include "rhom/qfc.hpp"

namespace rhom {

inline const std::vector<std::string>& known_presets() {
  static const std::vector<std::string> names{"hbt",          "hom-consecutive", "qfc-curves",      "hom-remote",
                                              "window-sweep", "length-sweep",    "dispersion-demo", "linkbudget"};
  return names;
}

struct RunConfig {
  std::string preset;
  std::uint64_t seed = 1;
  std::uint64_t trials = 1000000;
  std::uint64_t hbt_pulses = 10000000;
  double detuning_ghz = 0.0;
  double reference_detuning_ghz = 38.0;
  double importance_floor = 0.9;
  double pol_elapsed_hr = 1.0;
  double drift_elapsed_hr = 0.0;
  bool multiphoton = true;
  std::vector<double> lengths_km{0.024, 101.0, 201.0, 302.0};
  std::vector<double> windows_ps{20.0, 50.0, 100.0, 200.0, 400.0};
};

struct QfcBlock {
  QfcParams params;
  double target_wavelength_nm = 1582.75;
  double snr_db = 29.8;               // quoted SNR at p_max_mw, used to calibrate raman_coeff
  double snr_signal_rate_hz = 20.2e6; // signal rate entering the converter at that point
};

struct ScenarioBlock {
  double eta_det = 0.76;
  double eta_qfc_a = 0.48;
  double eta_qfc_b = 0.52;
  double dark_rate_hz = 300.0;
  double coincidence_window_ps = 100.0;
  double current_rep_rate_hz = 80.3e6;
  double current_eta_sys = 0.2;
  double current_loss_db_per_km = 0.19;
  double improved_rep_rate_hz = 2.6e9;
  double improved_eta_sys = 0.8;
  double improved_loss_db_per_km = 0.16;
  double calibration_length_km = 600.0;
  double calibration_rate_hz = 0.012;
  double kappa_sys = 0.0;             // 0 until calibrated
  double target_snr_db = 10.0;
  double length_max_km = 1000.0;
  double length_step_km = 5.0;

  ScenarioParams make(bool improved) const {
    ScenarioParams s;
    s.label = improved ? "improved" : "current";
    s.rep_rate_hz = improved ? improved_rep_rate_hz : current_rep_rate_hz;
    s.eta_sys_a = s.eta_sys_b = improved ? improved_eta_sys : current_eta_sys;
    s.loss_db_per_km = improved ? improved_loss_db_per_km : current_loss_db_per_km;
    s.eta_qfc_a = eta_qfc_a;
    s.eta_qfc_b = eta_qfc_b;
    s.eta_det = eta_det;
    s.dark_rate_hz = dark_rate_hz;
    s.coincidence_window_ps = coincidence_window_ps;
    s.kappa_sys = kappa_sys > 0.0 ? kappa_sys : 1.0;
    return s;
  }
};

struct ExperimentConfig {
  RunConfig run;
  EmitterParams emitter1 = presets::qd1();
  EmitterParams emitter2 = presets::qd2();
  QfcBlock qfc1;
  QfcBlock qfc2;
  FiberParams fiber1;
  FiberParams fiber2;
  DetectorParams detector;
  double bin_width_ps = 10.0;
  double histogram_range_ps = 100000.0;
  ScenarioBlock scenario;

  ExperimentConfig() {
    qfc1.params.label = "QFC1";
    qfc2.params.label = "QFC2";
    qfc2.params.eta_max = 0.52;
    qfc2.params.p_max_mw = 461.0;
    qfc2.params.pump_mw = 461.0;
    qfc2.params.pump_wavelength_nm = 2043.46;
    qfc2.snr_db = 28.5;
    qfc2.snr_signal_rate_hz = 16.2e6;
  }
};

namespace config_detail {

using Target = std::variant<double*, std::uint64_t*, std::string*, bool*, std::vector<double>*>;

struct Field {
  std::string section;
  std::string key;
  Target target;
};

inline std::vector<Field> fields(ExperimentConfig& c) {
  std::vector<Field> f;
  auto add = [&](const char* section, const char* key, Target t) { f.push_back({section, key, t}); };
  auto& r = c.run;
  add("run", "preset", &r.preset);
  add("run", "seed", &r.seed);
  add("run", "trials", &r.trials);
  add("run", "hbt_pulses", &r.hbt_pulses);
  add("run", "detuning_ghz", &r.detuning_ghz);
  add("run", "reference_detuning_ghz", &r.reference_detuning_ghz);
  add("run", "importance_floor", &r.importance_floor);
  add("run", "pol_elapsed_hr", &r.pol_elapsed_hr);
  add("run", "drift_elapsed_hr", &r.drift_elapsed_hr);
  add("run", "multiphoton", &r.multiphoton);
  add("run", "lengths_km", &r.lengths_km);
  add("run", "windows_ps", &r.windows_ps);
  for (auto [name, e] : {std::pair{"emitter1", &c.emitter1}, std::pair{"emitter2", &c.emitter2}}) {
    add(name, "label", &e->label);
    add(name, "t1_ps", &e->t1_ps);
    add(name, "t2_ps", &e->t2_ps);
    add(name, "m_consecutive", &e->m_consecutive);
    add(name, "g2_zero", &e->g2_zero);
    add(name, "wavelength_nm", &e->wavelength_nm);
    add(name, "eta_sys", &e->eta_sys);
    add(name, "rep_rate_hz", &e->rep_rate_hz);
  }
  for (auto [name, q] : {std::pair{"qfc1", &c.qfc1}, std::pair{"qfc2", &c.qfc2}}) {
    add(name, "label", &q->params.label);
    add(name, "eta_max", &q->params.eta_max);
    add(name, "p_max_mw", &q->params.p_max_mw);
    add(name, "pump_mw", &q->params.pump_mw);
    add(name, "pump_wavelength_nm", &q->params.pump_wavelength_nm);
    add(name, "target_wavelength_nm", &q->target_wavelength_nm);
    add(name, "pzt_step_pm", &q->params.pzt_step_pm);
    add(name, "filter_band_ghz", &q->params.filter_band_ghz);
    add(name, "snr_db", &q->snr_db);
    add(name, "snr_signal_rate_hz", &q->snr_signal_rate_hz);
    add(name, "raman_coeff", &q->params.raman_coeff);
  }
  for (auto [name, fb] : {std::pair{"fiber1", &c.fiber1}, std::pair{"fiber2", &c.fiber2}}) {
    add(name, "length_km", &fb->length_km);
    add(name, "loss_db_per_km", &fb->loss_db_per_km);
    add(name, "dispersion_ps_nm_km", &fb->dispersion_ps_nm_km);
    add(name, "pol_drift_rad_per_sqrt_hr", &fb->pol_drift_rad_per_sqrt_hr);
    add(name, "time_drift_ps_per_hr", &fb->time_drift_ps_per_hr);
    add(name, "temp_stability_k", &fb->temp_stability_k);
  }
  add("detector", "efficiency", &c.detector.efficiency);
  add("detector", "jitter_fwhm_ps", &c.detector.jitter_fwhm_ps);
  add("detector", "dark_rate_hz", &c.detector.dark_rate_hz);
  add("detector", "gate_window_ps", &c.detector.gate_window_ps);
  add("detector", "bin_width_ps", &c.bin_width_ps);
  add("detector", "histogram_range_ps", &c.histogram_range_ps);
  auto& s = c.scenario;
  add("scenario", "eta_det", &s.eta_det);
  add("scenario", "eta_qfc_a", &s.eta_qfc_a);
  add("scenario", "eta_qfc_b", &s.eta_qfc_b);
  add("scenario", "dark_rate_hz", &s.dark_rate_hz);
  add("scenario", "coincidence_window_ps", &s.coincidence_window_ps);
  add("scenario", "current_rep_rate_hz", &s.current_rep_rate_hz);
  add("scenario", "current_eta_sys", &s.current_eta_sys);
  add("scenario", "current_loss_db_per_km", &s.current_loss_db_per_km);
  add("scenario", "improved_rep_rate_hz", &s.improved_rep_rate_hz);
  add("scenario", "improved_eta_sys", &s.improved_eta_sys);
  add("scenario", "improved_loss_db_per_km", &s.improved_loss_db_per_km);
  add("scenario", "calibration_length_km", &s.calibration_length_km);
  add("scenario", "calibration_rate_hz", &s.calibration_rate_hz);
  add("scenario", "kappa_sys", &s.kappa_sys);
  add("scenario", "target_snr_db", &s.target_snr_db);
  add("scenario", "length_max_km", &s.length_max_km);
  add("scenario", "length_step_km", &s.length_step_km);
  return f;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void config_fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

inline double parse_double(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    config_fail(where, "expected a number, got '" + text + "'");
  return v;
}

inline void assign(const std::string& where, Target target, const std::string& text) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          *p = parse_double(where, text);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          const std::string t = trim(text);
          std::uint64_t v = 0;
          const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
          if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
            config_fail(where, "expected a non-negative integer, got '" + text + "'");
          *p = v;
        } else if constexpr (std::is_same_v<T, std::string>) {
          *p = trim(text);
        } else if constexpr (std::is_same_v<T, bool>) {
          const std::string t = trim(text);
          if (t == "true") *p = true;
          else if (t == "false") *p = false;
          else config_fail(where, "expected true or false, got '" + text + "'");
        } else {
          p->clear();
          std::stringstream ss(text);
          std::string item;
          while (std::getline(ss, item, ',')) {
            if (trim(item).empty()) continue;
            p->push_back(parse_double(where, item));
          }
        }
      },
      target);
}

inline std::string render(Target target) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_double(*p);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          return std::to_string(*p);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return *p;
        } else if constexpr (std::is_same_v<T, bool>) {
          return *p ? "true" : "false";
        } else {
          std::string out;
          for (std::size_t i = 0; i < p->size(); ++i) out += (i ? "," : "") + format_double((*p)[i]);
          return out;
        }
      },
      target);
}

template <class Fn>
void checked(const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    config_fail(where, e.what());
  }
}

}  // namespace config_detail

/// Range checks that do not belong to any single parameter struct.
/// A document may leave the preset out and let the command line supply it.
inline void validate_config(const ExperimentConfig& c, bool require_preset = true) {
  using config_detail::checked;
  using config_detail::config_fail;
  const auto& r = c.run;
  if (r.preset.empty() && require_preset) config_fail("[run] preset", "missing; expected one of the known presets");
  const auto& names = known_presets();
  if (!r.preset.empty() && std::find(names.begin(), names.end(), r.preset) == names.end())
    config_fail("[run] preset", "unknown preset '" + r.preset + "'");
  if (r.trials < 1) config_fail("[run] trials", "must be >= 1");
  if (r.hbt_pulses < 1) config_fail("[run] hbt_pulses", "must be >= 1");
  if (!(r.importance_floor >= 0.0 && r.importance_floor < 1.0))
    config_fail("[run] importance_floor", "must lie in [0, 1)");
  if (!(r.pol_elapsed_hr >= 0.0)) config_fail("[run] pol_elapsed_hr", "must be >= 0");
  if (!(r.drift_elapsed_hr >= 0.0)) config_fail("[run] drift_elapsed_hr", "must be >= 0");
  if (!std::isfinite(r.detuning_ghz)) config_fail("[run] detuning_ghz", "must be finite");
  if (!std::isfinite(r.reference_detuning_ghz)) config_fail("[run] reference_detuning_ghz", "must be finite");
  for (double l : r.lengths_km)
    if (!(l >= 0.0) || !std::isfinite(l)) config_fail("[run] lengths_km", "every length must be finite and >= 0");
  for (double w : r.windows_ps)
    if (!(w > 0.0) || !std::isfinite(w)) config_fail("[run] windows_ps", "every window must be finite and > 0");

  checked("[emitter1]", [&] { c.emitter1.validate(); });
  checked("[emitter2]", [&] { c.emitter2.validate(); });
  for (auto [name, q] : {std::pair{"[qfc1]", &c.qfc1}, std::pair{"[qfc2]", &c.qfc2}}) {
    checked(name, [&] { q->params.validate(); });
    if (!(q->target_wavelength_nm > 0.0)) config_fail(std::string(name) + " target_wavelength_nm", "must be > 0");
    if (!(q->snr_signal_rate_hz > 0.0)) config_fail(std::string(name) + " snr_signal_rate_hz", "must be > 0");
  }
  checked("[fiber1]", [&] { c.fiber1.validate("fiber1"); });
  checked("[fiber2]", [&] { c.fiber2.validate("fiber2"); });
  checked("[detector]", [&] { c.detector.validate(); });
  checked("[detector]", [&] { CoincidenceHistogram(HistogramSpec{c.bin_width_ps, c.histogram_range_ps}); });
  const auto& s = c.scenario;
  checked("[scenario]", [&] {
    s.make(false).validate();
    s.make(true).validate();
  });
  if (!(s.kappa_sys >= 0.0)) config_fail("[scenario] kappa_sys", "must be >= 0 (0 = calibrate)");
  if (!(s.calibration_length_km >= 0.0)) config_fail("[scenario] calibration_length_km", "must be >= 0");
  if (!(s.calibration_rate_hz > 0.0)) config_fail("[scenario] calibration_rate_hz", "must be > 0");
  if (!(s.length_max_km > 0.0)) config_fail("[scenario] length_max_km", "must be > 0");
  if (!(s.length_step_km > 0.0)) config_fail("[scenario] length_step_km", "must be > 0");
}

/// Parses a configuration document. Missing keys keep their defaults; the
/// converters' raman_coeff is calibrated from their quoted SNR unless given.
inline ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  ExperimentConfig c;
  auto table = config_detail::fields(c);
  std::set<std::string> sections;
  for (const auto& f : table) sections.insert(f.section);
  std::set<std::string> seen;

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      config_detail::config_fail(section, "key outside of any [section]");
    if (!sections.count(section)) config_detail::config_fail("[" + section + "]", "unknown section");
    for (const auto& [key, value] : body) {
      const std::string where = "[" + section + "] " + key;
      auto it = std::find_if(table.begin(), table.end(),
                             [&](const config_detail::Field& f) { return f.section == section && f.key == key; });
      if (it == table.end()) config_detail::config_fail(where, "unknown key");
      config_detail::assign(where, it->target, value.data());
      seen.insert(section + "." + key);
    }
  }

  validate_config(c, false);
  for (auto [name, q] : {std::pair{"qfc1", &c.qfc1}, std::pair{"qfc2", &c.qfc2}}) {
    if (seen.count(std::string(name) + ".raman_coeff")) continue;
    q->params.raman_coeff = calibrate_raman_coeff(q->params, q->snr_signal_rate_hz, q->snr_db);
  }
  if (!seen.count("scenario.kappa_sys"))
    c.scenario.kappa_sys = calibrate_kappa(c.scenario.make(true), c.scenario.calibration_length_km,
                                           c.scenario.calibration_rate_hz);
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// Effective configuration, every key, doubles at full precision.
inline std::string echo_config(const ExperimentConfig& c) {
  ExperimentConfig copy = c;
  std::string out;
  std::string section;
  for (const auto& f : config_detail::fields(copy)) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + config_detail::render(f.target) + "\n";
  }
  return out;
}

/// FNV-1a over the echoed configuration, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : echo_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rhom
