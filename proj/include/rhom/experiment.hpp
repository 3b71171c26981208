#pragma once

// Monte-Carlo experiments: remote and consecutive HOM interference and
// pulsed HBT, executed trial-parallel with counter-based streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rhom/channel.hpp"
#include "rhom/detection.hpp"
#include "rhom/model_core.hpp"
#include "rhom/parallel.hpp"
#include "rhom/photon_mc.hpp"
#include "rhom/qfc.hpp"
#include "rhom/rng.hpp"
#include "rhom/units.hpp"

namespace rhom {

/// Everything one arm does to its photons between excitation and the
/// beamsplitter.
struct ArmSetup {
  EmitterParams emitter = presets::qd1();
  int source_id = 1;
  double beta = 0.0;                  // companion probability per pulse
  bool convert = true;
  QfcParams qfc;
  bool conversion_noise = true;
  bool propagate = true;
  FiberParams fiber;
  double pol_elapsed_hr = 1.0;        // wander since last polarization alignment
  double drift_elapsed_hr = 0.0;      // time since last re-synchronization
  double freq_shift = 0.0;            // rad/ps added after conversion
  double pol_rotation_rad = 0.0;      // applied right before the beamsplitter
  double delay_ps = 0.0;              // fixed delay-line mismatch
  // Dispersion is evaluated here when set; otherwise at each photon's own
  // wavelength. Arms whose pumps are tuned to a common target share it, so
  // rounding in the pump values does not leave a residual chirp.
  double channel_wavelength_nm = 0.0;
};

struct HomSetup {
  std::string label = "hom";
  ArmSetup a;
  ArmSetup b;
  CorrelationMode mode = CorrelationMode::independent;
  DetectorParams det;
  /// Bernoulli survival decisions below this probability are importance
  /// sampled at this probability; 0 runs the analog simulation.
  double importance_floor = 0.9;
  HistogramSpec hist{10.0, 1000.0};

  void validate() const {
    a.emitter.validate();
    b.emitter.validate();
    if (a.convert) a.qfc.validate();
    if (b.convert) b.qfc.validate();
    if (a.propagate) a.fiber.validate("fiber1");
    if (b.propagate) b.fiber.validate("fiber2");
    det.validate();
    if (!(importance_floor >= 0.0 && importance_floor < 1.0))
      detail::fail("importance_floor must lie in [0, 1) (got ", importance_floor, ")");
    if (mode == CorrelationMode::consecutive_pair && (a.propagate || b.propagate || a.convert || b.convert))
      detail::fail("consecutive-pair mode takes both photons from one source without conversion or fiber");
  }
};

/// Mean probability that a photon passes the receiver polarizer after
/// `elapsed` hours of wander.
inline double pol_pass_probability(const FiberParams& f, double elapsed_hr) {
  const double s = f.pol_drift_rad_per_sqrt_hr * std::sqrt(elapsed_hr);
  return 0.5 * (1.0 + std::exp(-2.0 * s * s));
}

inline double arm_efficiency(const ArmSetup& arm) {
  double p = arm.emitter.eta_sys;
  if (arm.convert) p *= conversion_efficiency(arm.qfc.pump_mw, arm.qfc);
  if (arm.propagate) {
    p *= transmission_probability(arm.fiber.length_km, arm.fiber.loss_db_per_km);
    p *= pol_pass_probability(arm.fiber, arm.pol_elapsed_hr);
  }
  return p;
}

/// Ratio by which importance sampling inflates an arm's signal survival.
inline double arm_importance_boost(const ArmSetup& arm, double floor) {
  auto boost = [floor](double p) { return floor > 0.0 && p < floor && p > 0.0 ? floor / p : 1.0; };
  double b = boost(arm.emitter.eta_sys);
  if (arm.convert) b *= boost(conversion_efficiency(arm.qfc.pump_mw, arm.qfc));
  if (arm.propagate) b *= boost(transmission_probability(arm.fiber.length_km, arm.fiber.loss_db_per_km));
  return b;
}

namespace detail {

inline double arm_transmission(const ArmSetup& arm) {
  return arm.propagate ? transmission_probability(arm.fiber.length_km, arm.fiber.loss_db_per_km) : 1.0;
}

/// Gate-uniform click probability on one detector: darks plus the share of
/// conversion noise that reaches it.
inline double flat_click_probability(const HomSetup& s) {
  double flat = s.det.dark_prob_per_gate();
  for (const ArmSetup* arm : {&s.a, &s.b}) {
    if (!arm->convert || !arm->conversion_noise) continue;
    const double n = noise_per_pulse(arm->qfc, arm->qfc.pump_mw, arm->emitter.rep_rate_hz) *
                     std::min(1.0, s.det.gate_window_ps / units::period_ps(arm->emitter.rep_rate_hz));
    const double pol = arm->propagate ? 0.5 : 1.0;
    flat += n * arm_transmission(*arm) * pol * 0.5 * s.det.efficiency;
  }
  return flat;
}

}  // namespace detail

/// Leading-order analytic coincidence model matching a setup.
inline HomDensityModel density_model(const HomSetup& s) {
  HomDensityModel m;
  const auto& e1 = s.a.emitter;
  const auto& e2 = s.b.emitter;
  m.gamma1 = e1.gamma_rad();
  m.gamma2 = e2.gamma_rad();
  if (s.mode == CorrelationMode::consecutive_pair) {
    // A shared slow offset cancels; only the fast part separates the photons.
    const auto d = decompose_dephasing(e1);
    m.coh1 = m.coh2 = 0.5 * d.gamma_rad + d.gamma_fast_star;
  } else {
    m.coh1 = e1.gamma_coh();
    m.coh2 = e2.gamma_coh();
  }
  m.detuning = s.b.freq_shift - s.a.freq_shift;
  const double c = std::cos(s.b.pol_rotation_rad - s.a.pol_rotation_rad);
  m.pol_overlap = c * c;
  m.beta1 = s.a.beta;
  m.beta2 = s.b.beta;
  m.p1 = arm_efficiency(s.a) * s.det.efficiency;
  m.p2 = arm_efficiency(s.b) * s.det.efficiency;
  m.flat1 = m.flat2 = detail::flat_click_probability(s);
  m.gate_ps = s.det.gate_window_ps;
  m.jitter_sigma_ps = s.det.jitter_sigma_ps();
  return m;
}

struct HomRun {
  CoincidenceHistogram hist;
  std::uint64_t trials = 0;
  double weight_sum_sq = 0.0;  // sum over trials of (weighted pairs in the trial)^2
};

namespace detail {

inline void emit_arm(const ArmSetup& arm, const DephasingDecomposition& d, std::uint64_t pulse, double slow,
                     StreamRng& rng, Importance& imp, PhotonBatch& out) {
  out = sample_pulse_emission(arm.emitter, d, pulse, EmissionSpec{arm.source_id, arm.beta, slow}, rng, imp);
  for (auto& p : out) p.extra_delay_ps += arm.delay_ps;
}

inline double gate_fraction(const ArmSetup& arm, const DetectorParams& det) {
  return std::min(1.0, det.gate_window_ps / units::period_ps(arm.emitter.rep_rate_hz));
}

inline void transport_arm(const ArmSetup& arm, std::uint64_t pulse, double drift_ps, double noise_fraction,
                          StreamRng& conv_rng, StreamRng& chan_rng, Importance& imp, PhotonBatch& batch) {
  if (arm.convert) {
    for (auto& p : batch) apply_conversion(p, arm.qfc, arm.qfc.pump_mw, conv_rng, imp);
    if (arm.conversion_noise) {
      const double nm = converted_wavelength(arm.emitter.wavelength_nm, arm.qfc.pump_wavelength_nm);
      sample_conversion_noise(batch, arm.qfc, arm.qfc.pump_mw, arm.emitter.rep_rate_hz, nm, arm.source_id, pulse,
                              conv_rng, noise_fraction);
    }
  }
  for (auto& p : batch)
    if (!p.is_noise()) p.freq_offset += arm.freq_shift;
  if (arm.propagate) {
    ChannelConditions cond;
    cond.elapsed_hr = arm.pol_elapsed_hr;
    cond.drift_ps = drift_ps;
    for (auto& p : batch) {
      if (arm.channel_wavelength_nm > 0.0)
        cond.wavelength_nm = arm.channel_wavelength_nm;
      else if (arm.convert)
        cond.wavelength_nm = p.wavelength_nm;
      apply_channel(p, arm.fiber, cond, chan_rng, imp);
    }
  }
  for (auto& p : batch) p.pol_angle_rad += arm.pol_rotation_rad;
}

/// Beamsplitter: the i-th surviving signal photon of each arm interfere,
/// everything else exits through a random port on its own.
inline void beamsplit(const PhotonBatch& a, const PhotonBatch& b, const DetectorParams& det, StreamRng& rng,
                      std::vector<Arrival>& out) {
  std::array<const PhotonRecord*, PhotonBatch::capacity> sa{};
  std::array<const PhotonRecord*, PhotonBatch::capacity> sb{};
  std::size_t na = 0;
  std::size_t nb = 0;
  for (const auto& p : a)
    if (p.alive && !p.is_noise()) sa[na++] = &p;
  for (const auto& p : b)
    if (p.alive && !p.is_noise()) sb[nb++] = &p;
  const std::size_t pairs = std::min(na, nb);
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto o = hom_sample_pair(*sa[i], *sb[i], rng);
    out.push_back(o->first);
    out.push_back(o->second);
  }
  for (std::size_t i = pairs; i < na; ++i) out.push_back(route_single(*sa[i], det, rng));
  for (std::size_t i = pairs; i < nb; ++i) out.push_back(route_single(*sb[i], det, rng));
  for (const auto* batch : {&a, &b})
    for (const auto& p : *batch)
      if (p.alive && p.is_noise()) out.push_back(route_single(p, det, rng));
}

}  // namespace detail

inline constexpr std::uint64_t hom_block_size = 1u << 14;

/// Runs `trials` pulse pairs and histograms every detector-1/detector-2
/// click pair (t1 - t2) with its importance weight.
inline HomRun run_hom(const HomSetup& s, std::uint64_t trials, std::uint64_t seed, unsigned workers = 1) {
  s.validate();
  const std::uint64_t exp = experiment_id(s.label);
  const auto da = decompose_dephasing(s.a.emitter);
  const auto db = decompose_dephasing(s.b.emitter);
  DarkSampling darks;
  if (s.importance_floor > 0.0)
    darks.boost = std::sqrt(arm_importance_boost(s.a, s.importance_floor) * arm_importance_boost(s.b, s.importance_floor));

  struct Partial {
    CoincidenceHistogram hist;
    double w2 = 0.0;
  };

  auto work = [&](BlockRange r) {
    Partial part{CoincidenceHistogram(s.hist, s.label)};
    double drift_a = 0.0;
    double drift_b = 0.0;
    if (s.a.propagate || s.b.propagate) {
      auto rng = make_stream(seed, exp, r.index, Stage::drift_batch);
      if (s.a.propagate) drift_a = sample_time_drift(s.a.fiber, s.a.drift_elapsed_hr, rng);
      if (s.b.propagate) drift_b = sample_time_drift(s.b.fiber, s.b.drift_elapsed_hr, rng);
    }
    PhotonBatch ba;
    PhotonBatch bb;
    std::vector<Arrival> arrivals;
    std::vector<ClickRecord> clicks;
    for (std::uint64_t t = r.begin; t < r.end; ++t) {
      Importance imp{s.importance_floor, 1.0};
      auto em_a = make_stream(seed, exp, t, Stage::emission_a);
      auto em_b = make_stream(seed, exp, t, Stage::emission_b);
      double slow_a = 0.0;
      double slow_b = 0.0;
      if (s.mode == CorrelationMode::consecutive_pair) {
        auto rng = make_stream(seed, exp, t, Stage::slow_drift);
        slow_a = slow_b = sample_slow_offset(da, rng);
        detail::emit_arm(s.a, da, 2 * t, slow_a, em_a, imp, ba);
        detail::emit_arm(s.b, da, 2 * t + 1, slow_b, em_b, imp, bb);
      } else {
        slow_a = sample_slow_offset(da, em_a);
        slow_b = sample_slow_offset(db, em_b);
        detail::emit_arm(s.a, da, t, slow_a, em_a, imp, ba);
        detail::emit_arm(s.b, db, t, slow_b, em_b, imp, bb);
      }
      auto conv_a = make_stream(seed, exp, t, Stage::conversion_a);
      auto conv_b = make_stream(seed, exp, t, Stage::conversion_b);
      auto chan_a = make_stream(seed, exp, t, Stage::channel_a);
      auto chan_b = make_stream(seed, exp, t, Stage::channel_b);
      detail::transport_arm(s.a, t, drift_a, detail::gate_fraction(s.a, s.det), conv_a, chan_a, imp, ba);
      detail::transport_arm(s.b, t, drift_b, detail::gate_fraction(s.b, s.det), conv_b, chan_b, imp, bb);

      arrivals.clear();
      clicks.clear();
      auto bs = make_stream(seed, exp, t, Stage::beamsplitter);
      detail::beamsplit(ba, bb, s.det, bs, arrivals);
      auto det = make_stream(seed, exp, t, Stage::detector);
      apply_detector(arrivals, s.det, 0.0, det, imp, darks, clicks);

      double n_pairs = 0.0;
      for (const auto& c1 : clicks) {
        if (c1.detector_id != 1) continue;
        for (const auto& c2 : clicks) {
          if (c2.detector_id != 2) continue;
          part.hist.fill(c1.timestamp_ps - c2.timestamp_ps, imp.weight);
          n_pairs += 1.0;
        }
      }
      part.w2 += n_pairs * n_pairs * imp.weight * imp.weight;
    }
    return part;
  };

  HomRun run{CoincidenceHistogram(s.hist, s.label), trials, 0.0};
  run_blocks<Partial>(trials, hom_block_size, workers, work, [&](Partial&& p) {
    run.hist.merge(p.hist);
    run.weight_sum_sq += p.w2;
  });
  return run;
}

/// Coincidence rate (Hz) implied by a run: weighted pairs per trial times
/// the repetition rate, with its standard error.
inline Estimate coincidence_rate_estimate(const HomRun& run, double rep_rate_hz) {
  const double n = static_cast<double>(run.trials);
  const double mean = run.hist.total_pairs() / n;
  const double var = std::max(0.0, run.weight_sum_sq / n - mean * mean) / n;
  return {rep_rate_hz * mean, rep_rate_hz * std::sqrt(var)};
}

// ---------------------------------------------------------------------------
// Pulsed HBT on a single source.

struct HbtSetup {
  std::string label = "hbt";
  EmitterParams emitter = presets::qd1();
  double beta = 0.0;
  DetectorParams det;
  HistogramSpec hist{10.0, 100000.0};
};

/// Splits one pulse's photons at a 50:50 beamsplitter and detects them;
/// darks are uniform over the whole period. Timestamps are absolute.
inline void hbt_pulse_clicks(const PhotonBatch& batch, const DetectorParams& det, double period_ps,
                             std::uint64_t pulse, StreamRng& rng, std::vector<ClickRecord>& out) {
  const double t0 = static_cast<double>(pulse) * period_ps;
  const double sigma = det.jitter_sigma_ps();
  for (const auto& p : batch) {
    if (!p.alive) continue;
    const int port = rng.uniform() < 0.5 ? 1 : 2;
    if (!rng.bernoulli(det.efficiency)) continue;
    const double t = t0 + p.extra_delay_ps + rng.exponential(p.gamma_rad) + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
    out.push_back({port, t, origin_of(p)});
  }
  const double mean = det.dark_rate_hz * period_ps / units::ps_per_s;
  for (int id = 1; id <= 2; ++id) {
    const std::uint64_t k = mean > 0.0 ? rng.poisson(mean) : 0;
    for (std::uint64_t i = 0; i < k; ++i) out.push_back({id, t0 + period_ps * rng.uniform(), ClickOrigin::dark});
  }
}

inline constexpr std::uint64_t hbt_block_size = 1u << 16;

struct HbtRun {
  CoincidenceHistogram hist;
  std::uint64_t pulses = 0;
  std::uint64_t clicks = 0;
};

inline HbtRun run_hbt(const HbtSetup& s, std::uint64_t pulses, std::uint64_t seed, unsigned workers = 1) {
  s.emitter.validate();
  s.det.validate();
  const std::uint64_t exp = experiment_id(s.label);
  const auto d = decompose_dephasing(s.emitter);
  const double period = units::period_ps(s.emitter.rep_rate_hz);

  std::vector<ClickRecord> all;
  auto work = [&](BlockRange r) {
    std::vector<ClickRecord> clicks;
    for (std::uint64_t t = r.begin; t < r.end; ++t) {
      auto em = make_stream(seed, exp, t, Stage::emission_a);
      const double slow = sample_slow_offset(d, em);
      const auto batch = sample_pulse_emission(s.emitter, d, t, EmissionSpec{1, s.beta, slow}, em);
      auto det = make_stream(seed, exp, t, Stage::detector);
      hbt_pulse_clicks(batch, s.det, period, t, det, clicks);
    }
    return clicks;
  };
  run_blocks<std::vector<ClickRecord>>(pulses, hbt_block_size, workers, work, [&](std::vector<ClickRecord>&& c) {
    all.insert(all.end(), c.begin(), c.end());
  });
  HbtRun run{accumulate_histogram(all, s.hist, period, s.label), pulses, all.size()};
  return run;
}

}  // namespace rhom
