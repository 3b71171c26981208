#pragma once

// Beamsplitter interference, SNSPD detection, coincidence histograms and the
// extraction of g2(0) and HOM visibility.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rhom/errors.hpp"
#include "rhom/model_core.hpp"
#include "rhom/photon_mc.hpp"
#include "rhom/quadrature.hpp"
#include "rhom/rng.hpp"
#include "rhom/units.hpp"

namespace rhom {

struct DetectorParams {
  double efficiency = 0.76;
  double jitter_fwhm_ps = 70.0;
  double dark_rate_hz = 300.0;
  double gate_window_ps = 1000.0;

  double jitter_sigma_ps() const { return jitter_fwhm_ps * units::fwhm_to_sigma; }
  /// The gate opens a quarter gate before the nominal arrival.
  double gate_open_ps() const { return -0.25 * gate_window_ps; }
  double gate_close_ps() const { return 0.75 * gate_window_ps; }
  double dark_prob_per_gate() const { return dark_rate_hz * gate_window_ps / units::ps_per_s; }

  void validate() const {
    using detail::fail;
    if (!(efficiency > 0.0 && efficiency <= 1.0)) fail("detector: efficiency must lie in (0, 1] (got ", efficiency, ")");
    if (!(jitter_fwhm_ps >= 0.0)) fail("detector: jitter_fwhm_ps must be >= 0 (got ", jitter_fwhm_ps, ")");
    if (!(dark_rate_hz >= 0.0)) fail("detector: dark_rate_hz must be >= 0 (got ", dark_rate_hz, ")");
    if (!(gate_window_ps > 0.0)) fail("detector: gate_window_ps must be > 0 (got ", gate_window_ps, ")");
  }
};

enum class ClickOrigin : std::uint8_t { signal, companion, noise, dark };

inline const char* to_string(ClickOrigin o) {
  switch (o) {
    case ClickOrigin::signal: return "signal";
    case ClickOrigin::companion: return "companion";
    case ClickOrigin::noise: return "noise";
    case ClickOrigin::dark: return "dark";
  }
  return "?";
}

inline ClickOrigin origin_of(const PhotonRecord& p) {
  switch (p.kind) {
    case PhotonKind::primary: return ClickOrigin::signal;
    case PhotonKind::companion: return ClickOrigin::companion;
    case PhotonKind::noise: return ClickOrigin::noise;
  }
  return ClickOrigin::signal;
}

/// A photon leaving the beamsplitter towards detector `port` (1 or 2).
struct Arrival {
  int port = 1;
  double time_ps = 0.0;
  ClickOrigin origin = ClickOrigin::signal;
};

struct ClickRecord {
  int detector_id = 1;
  double timestamp_ps = 0.0;
  ClickOrigin origin = ClickOrigin::signal;
};

// ---------------------------------------------------------------------------
// Two-photon interference at a 50:50 beamsplitter.

namespace detail {

/// Overlap of two photons with different accumulated dispersion, including
/// a fixed delay. Around the mean frequency w0 the phase difference acts as
/// a group delay kappa*w0 plus a residual chirp. The Lorentzian tails make
/// the overlap sensitive to that chirp at order sqrt(kappa)*gamma, so the
/// closed form with the delay is used only when this is below 1e-5;
/// otherwise the spectral integral is evaluated directly.
inline double chirped_overlap(const PhotonRecord& p1, const PhotonRecord& p2, double delay_ps) {
  const double kappa = p2.quad_phase_ps2 - p1.quad_phase_ps2;
  const double gmin = std::min(p1.gamma_rad, p2.gamma_rad);
  const double gmax = std::max(p1.gamma_rad, p2.gamma_rad);
  const double delta = p2.freq_offset - p1.freq_offset;
  const double center = 0.5 * (p1.freq_offset + p2.freq_offset);
  const double width = std::max(gmax, std::abs(delta));
  // |<a|b>| <= integral of |a||b|, which for well separated lines is of
  // order (g/delta) ln(delta/g) whatever the chirp.
  const bool far = std::abs(delta) > 4.0 * gmax &&
                   std::pow(gmax / std::abs(delta) * (2.0 + std::log(4.0 * std::abs(delta) / gmin)), 2) < 1e-5;
  if (far || (std::sqrt(std::abs(kappa)) * gmax <= 1e-5 && std::abs(kappa) * width * width <= 1e-6))
    return overlap_closed_form(p1.gamma_rad, p2.gamma_rad, delta, delay_ps + kappa * center);

  const double lead = delay_ps >= 0.0 ? p1.gamma_rad : p2.gamma_rad;
  return std::exp(-lead * std::abs(delay_ps)) *
         overlap_adaptive({p1.gamma_rad, p1.freq_offset, p1.quad_phase_ps2, {}},
                          {p2.gamma_rad, p2.freq_offset, p2.quad_phase_ps2, {}});
}

}  // namespace detail

/// Per-shot squared overlap of two photon records, including polarization
/// and relative delay. Quadrature is used only when the accumulated
/// quadratic phases differ.
inline double shot_overlap(const PhotonRecord& p1, const PhotonRecord& p2) {
  const double delta = p2.freq_offset - p1.freq_offset;
  const double delay = p2.extra_delay_ps - p1.extra_delay_ps;
  double o = 0.0;
  if (p1.quad_phase_ps2 == p2.quad_phase_ps2) {
    o = overlap_closed_form(p1.gamma_rad, p2.gamma_rad, delta, delay);
  } else {
    o = detail::chirped_overlap(p1, p2, delay);
  }
  const double c = std::cos(p2.pol_angle_rad - p1.pol_angle_rad);
  return o * c * c;
}

struct HomOutcome {
  Arrival first;
  Arrival second;
  double overlap = 0.0;
  bool cross_port = false;
};

/// Samples the output ports and detection times of two photons meeting at
/// a 50:50 beamsplitter. Cross-port with probability (1 - O)/2. Times are
/// drawn by rejection from the two product marginals (envelope weight 2)
/// against the (anti)symmetrized density
///   |a|^2 + |b|^2 -+ 2 c |a||b| cos(delta (x - y)),
/// a = psi1(x) psi2(y), b = psi2(x) psi1(y), c = polarization overlap.
inline std::optional<HomOutcome> hom_sample_pair(const PhotonRecord& p1, const PhotonRecord& p2,
                                                 StreamRng& rng) {
  if (!p1.alive || !p2.alive) return std::nullopt;
  HomOutcome out;
  out.overlap = shot_overlap(p1, p2);
  out.cross_port = rng.uniform() < 0.5 * (1.0 - out.overlap);

  const double g1 = p1.gamma_rad;
  const double g2 = p2.gamma_rad;
  const double d1 = p1.extra_delay_ps;
  const double d2 = p2.extra_delay_ps;
  const double delta = p2.freq_offset - p1.freq_offset;
  const double cp = std::cos(p2.pol_angle_rad - p1.pol_angle_rad);
  const double pol = cp * cp;
  const double sign = out.cross_port ? -1.0 : 1.0;

  auto intensity = [](double gamma, double delay, double t) {
    return t < delay ? 0.0 : gamma * std::exp(-gamma * (t - delay));
  };

  double x = 0.0;
  double y = 0.0;
  for (;;) {
    if (rng.uniform() < 0.5) {
      x = d1 + rng.exponential(g1);
      y = d2 + rng.exponential(g2);
    } else {
      x = d2 + rng.exponential(g2);
      y = d1 + rng.exponential(g1);
    }
    const double a2 = intensity(g1, d1, x) * intensity(g2, d2, y);
    const double b2 = intensity(g2, d2, x) * intensity(g1, d1, y);
    const double f = a2 + b2 + sign * 2.0 * pol * std::sqrt(a2 * b2) * std::cos(delta * (x - y));
    if (rng.uniform() * 2.0 * (a2 + b2) <= f) break;
  }

  const ClickOrigin o1 = origin_of(p1);
  const ClickOrigin o2 = origin_of(p2);
  if (out.cross_port) {
    out.first = {1, x, o1};
    out.second = {2, y, o2};
  } else {
    const int port = rng.uniform() < 0.5 ? 1 : 2;
    out.first = {port, x, o1};
    out.second = {port, y, o2};
  }
  return out;
}

/// A photon that meets no partner: random port, exponential decay time.
/// Noise photons arrive uniformly over the detector gate instead.
inline Arrival route_single(const PhotonRecord& p, const DetectorParams& det, StreamRng& rng) {
  Arrival a;
  a.port = rng.uniform() < 0.5 ? 1 : 2;
  a.origin = origin_of(p);
  if (p.is_noise())
    a.time_ps = det.gate_open_ps() + det.gate_window_ps * rng.uniform();
  else
    a.time_ps = p.extra_delay_ps + rng.exponential(p.gamma_rad);
  return a;
}

// ---------------------------------------------------------------------------
// Detection.

struct DarkSampling {
  double boost = 1.0;  // importance factor on the dark-count mean
};

/// Efficiency, Gaussian jitter and gate acceptance for each arrival, plus
/// Poisson dark clicks uniform in the gate on both detectors. `offset_ps`
/// shifts the gate and every timestamp (absolute time of the pulse).
inline void apply_detector(std::span<const Arrival> arrivals, const DetectorParams& det,
                           double offset_ps, StreamRng& rng, Importance& imp, const DarkSampling& darks,
                           std::vector<ClickRecord>& out) {
  const double sigma = det.jitter_sigma_ps();
  for (const auto& a : arrivals) {
    if (!rng.bernoulli(det.efficiency)) continue;
    const double t = a.time_ps + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
    if (t < det.gate_open_ps() || t >= det.gate_close_ps()) continue;
    out.push_back({a.port, offset_ps + t, a.origin});
  }
  const double mean = det.dark_prob_per_gate();
  if (mean <= 0.0) return;
  const double biased = mean * darks.boost;
  for (int id = 1; id <= 2; ++id) {
    const std::uint64_t k = rng.poisson(biased);
    if (darks.boost != 1.0)
      imp.weight *= std::pow(mean / biased, static_cast<double>(k)) * std::exp(biased - mean);
    for (std::uint64_t i = 0; i < k; ++i)
      out.push_back({id, offset_ps + det.gate_open_ps() + det.gate_window_ps * rng.uniform(), ClickOrigin::dark});
  }
}

inline std::vector<ClickRecord> apply_detector(std::span<const Arrival> arrivals, const DetectorParams& det,
                                               StreamRng& rng) {
  std::vector<ClickRecord> out;
  Importance analog;
  apply_detector(arrivals, det, 0.0, rng, analog, DarkSampling{}, out);
  return out;
}

// ---------------------------------------------------------------------------
// Histograms.

struct HistogramSpec {
  double bin_width_ps = 10.0;
  double half_range_ps = 100000.0;
};

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct WindowSum {
  double counts = 0.0;
  double variance = 0.0;
};

/// Binned t1 - t2 coincidences. Bins carry (possibly weighted) counts and
/// the sum of squared weights for error propagation. Bin edges sit on
/// multiples of the bin width, so zero delay is a bin edge.
class CoincidenceHistogram {
 public:
  CoincidenceHistogram() = default;
  explicit CoincidenceHistogram(HistogramSpec spec, std::string label = {}) : label(std::move(label)), spec_(spec) {
    if (!(spec.bin_width_ps > 0.0)) detail::fail("bin width must be > 0 (got ", spec.bin_width_ps, ")");
    if (!(spec.half_range_ps > 0.0)) detail::fail("histogram range must be > 0 (got ", spec.half_range_ps, ")");
    const double n = spec.half_range_ps / spec.bin_width_ps;
    if (std::abs(n - std::round(n)) > 1e-9)
      detail::fail("bin width ", spec.bin_width_ps, " ps must divide the half range ", spec.half_range_ps, " ps");
    const auto bins = static_cast<std::size_t>(2 * std::llround(n));
    counts_.assign(bins, 0.0);
    sumw2_.assign(bins, 0.0);
  }

  const HistogramSpec& spec() const { return spec_; }
  std::size_t bins() const { return counts_.size(); }
  double bin_center(std::size_t i) const {
    return -spec_.half_range_ps + (static_cast<double>(i) + 0.5) * spec_.bin_width_ps;
  }
  double count(std::size_t i) const { return counts_[i]; }
  double overflow() const { return overflow_; }
  double total_pairs() const { return total_; }

  void fill(double tau_ps, double weight = 1.0) {
    total_ += weight;
    const double pos = (tau_ps + spec_.half_range_ps) / spec_.bin_width_ps;
    if (pos < 0.0 || pos >= static_cast<double>(counts_.size())) {
      overflow_ += weight;
      overflow_w2_ += weight * weight;
      return;
    }
    const auto i = static_cast<std::size_t>(pos);
    counts_[i] += weight;
    sumw2_[i] += weight * weight;
  }

  void merge(const CoincidenceHistogram& other) {
    if (other.spec_.bin_width_ps != spec_.bin_width_ps || other.spec_.half_range_ps != spec_.half_range_ps)
      detail::fail("cannot merge histograms with different binning");
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      counts_[i] += other.counts_[i];
      sumw2_[i] += other.sumw2_[i];
    }
    overflow_ += other.overflow_;
    overflow_w2_ += other.overflow_w2_;
    total_ += other.total_;
  }

  double binned_sum() const {
    double s = 0.0;
    for (double c : counts_) s += c;
    return s;
  }

  /// Counts with lo <= tau < hi; partially covered bins contribute in
  /// proportion to the covered fraction.
  WindowSum window_sum(double lo, double hi) const {
    WindowSum w;
    const double width = spec_.bin_width_ps;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      const double left = -spec_.half_range_ps + static_cast<double>(i) * width;
      const double covered = std::min(hi, left + width) - std::max(lo, left);
      if (covered <= 0.0) continue;
      const double frac = std::min(1.0, covered / width);
      w.counts += frac * counts_[i];
      w.variance += frac * sumw2_[i];
    }
    return w;
  }

  WindowSum central(double window_ps) const { return window_sum(-0.5 * window_ps, 0.5 * window_ps); }

  std::string label;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::string> warnings;

 private:
  HistogramSpec spec_{};
  std::vector<double> counts_;
  std::vector<double> sumw2_;
  double overflow_ = 0.0;
  double overflow_w2_ = 0.0;
  double total_ = 0.0;
};

/// CSV: metadata block of "# key: value" lines, then bin_center_ps,counts.
inline void write_histogram_csv(std::ostream& os, const CoincidenceHistogram& h) {
  os << "# label: " << h.label << "\n";
  os << "# seed: " << h.seed << "\n";
  os << "# config_hash: " << h.config_hash << "\n";
  os << "# total_pairs: " << detail::concat(h.total_pairs()) << "\n";
  os << "bin_center_ps,counts\n";
  for (std::size_t i = 0; i < h.bins(); ++i)
    os << detail::concat(h.bin_center(i)) << "," << detail::concat(h.count(i)) << "\n";
}

/// Pairs every detector-1 click with every detector-2 click within the
/// histogram range and bins t1 - t2. Input order does not matter.
inline CoincidenceHistogram accumulate_histogram(std::span<const ClickRecord> clicks, HistogramSpec spec,
                                                 std::optional<double> pulse_period_ps = std::nullopt,
                                                 std::string label = {}) {
  CoincidenceHistogram h(spec, std::move(label));
  if (pulse_period_ps && spec.half_range_ps < *pulse_period_ps)
    h.warnings.push_back(detail::concat("histogram half range ", spec.half_range_ps,
                                        " ps is shorter than the pulse period ", *pulse_period_ps,
                                        " ps: side peaks are lost"));
  std::vector<double> t1;
  std::vector<double> t2;
  for (const auto& c : clicks) (c.detector_id == 1 ? t1 : t2).push_back(c.timestamp_ps);
  std::sort(t1.begin(), t1.end());
  std::sort(t2.begin(), t2.end());
  std::size_t lo = 0;
  for (double a : t1) {
    while (lo < t2.size() && t2[lo] <= a - spec.half_range_ps) ++lo;
    for (std::size_t j = lo; j < t2.size() && t2[j] < a + spec.half_range_ps; ++j) h.fill(a - t2[j]);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Extraction.

/// Pulsed HBT g2(0): central-peak area over the mean side-peak area, peaks
/// integrated over +-period/2.
inline Estimate extract_g2_zero(const CoincidenceHistogram& h, double period_ps) {
  const double half = 0.5 * period_ps;
  const auto side_peaks = static_cast<int>(std::floor((h.spec().half_range_ps - half) / period_ps + 1e-9));
  if (side_peaks < 3)
    detail::fail("g2 extraction needs >= 3 side peaks per side; range ", h.spec().half_range_ps,
                 " ps holds ", side_peaks);
  const WindowSum center = h.window_sum(-half, half);
  WindowSum side;
  for (int k = 1; k <= side_peaks; ++k) {
    for (int s : {-1, 1}) {
      const double mid = s * k * period_ps;
      const WindowSum w = h.window_sum(mid - half, mid + half);
      side.counts += w.counts;
      side.variance += w.variance;
    }
  }
  if (side.counts <= 0.0) detail::fail<UndefinedError>("g2 undefined: side peaks are empty");
  const double mean_side = side.counts / (2.0 * side_peaks);
  Estimate e;
  e.value = center.counts / mean_side;
  const double rel2 = (center.counts > 0.0 ? center.variance / (center.counts * center.counts) : 0.0) +
                      side.variance / (side.counts * side.counts);
  e.stderr_ = center.counts > 0.0 ? e.value * std::sqrt(rel2)
                                  : std::sqrt(std::max(1.0, center.variance)) / mean_side;
  return e;
}

struct VisibilityResult {
  double window_ps = 0.0;
  double visibility = 0.0;
  double stderr_ = 0.0;
  double n_res = 0.0;
  double n_ref = 0.0;
};

/// V = 1 - N_res / N_ref within |tau| <= window/2 of the central peak.
inline VisibilityResult extract_visibility(const CoincidenceHistogram& res, const CoincidenceHistogram& ref,
                                           double window_ps) {
  if (!(window_ps > 0.0)) detail::fail("visibility window must be > 0 (got ", window_ps, ")");
  if (0.5 * window_ps > res.spec().half_range_ps || 0.5 * window_ps > ref.spec().half_range_ps)
    detail::fail("visibility window ", window_ps, " ps exceeds the histogram range");
  const WindowSum a = res.central(window_ps);
  const WindowSum b = ref.central(window_ps);
  if (b.counts <= 0.0) detail::fail<UndefinedError>("visibility undefined: reference window holds no counts");
  VisibilityResult v;
  v.window_ps = window_ps;
  v.n_res = a.counts;
  v.n_ref = b.counts;
  const double ratio = a.counts / b.counts;
  v.visibility = 1.0 - ratio;
  const double rel2 = (a.counts > 0.0 ? a.variance / (a.counts * a.counts) : 0.0) + b.variance / (b.counts * b.counts);
  v.stderr_ = a.counts > 0.0 ? ratio * std::sqrt(rel2) : std::sqrt(std::max(1.0, a.variance)) / b.counts;
  return v;
}

inline void write_visibility_header(std::ostream& os) { os << "window_ps,visibility,stderr,n_res,n_ref\n"; }

inline void write_visibility_row(std::ostream& os, const VisibilityResult& v) {
  os << detail::concat(v.window_ps) << "," << detail::concat(v.visibility) << "," << detail::concat(v.stderr_)
     << "," << detail::concat(v.n_res) << "," << detail::concat(v.n_ref) << "\n";
}

// ---------------------------------------------------------------------------
// Analytic time-resolved coincidence density (leading order in the
// per-arm detection probability), used as the windowed-visibility oracle.

struct HomDensityModel {
  double gamma1 = 0.0;       // 1/T1 of each source
  double gamma2 = 0.0;
  double coh1 = 0.0;         // 1/T2 of each source
  double coh2 = 0.0;
  double detuning = 0.0;     // rad/ps
  double pol_overlap = 1.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double p1 = 1.0;           // detection-eligible probability per primary attempt
  double p2 = 1.0;
  double flat1 = 0.0;        // gate-uniform click probability (darks + noise), detector 1
  double flat2 = 0.0;        // same for detector 2
  double gate_ps = 1000.0;
  double jitter_sigma_ps = 0.0;  // per detector
};

namespace detail {

/// Integral of exp(-a|t|) cos(w t) against the window [-h, h] convolved with
/// a Gaussian of width sigma; h = inf gives the full integral.
inline double windowed_exp_cos(double a, double w, double h, double sigma) {
  if (!std::isfinite(h)) return 2.0 * a / (a * a + w * w);
  if (sigma == 0.0) {
    // closed form of 2 * int_0^h exp(-a t) cos(w t) dt
    const double d = a * a + w * w;
    return 2.0 * (a + std::exp(-a * h) * (w * std::sin(w * h) - a * std::cos(w * h))) / d;
  }
  const double reach = h + 12.0 * sigma;
  const double scale = std::min(0.5 / std::max(a, 1e-12), 5.0);
  const auto panels = static_cast<std::size_t>(std::ceil(reach / std::min(scale, w > 0.0 ? 1.0 / w : scale))) + 8;
  const double s = sigma;
  auto f = [&](double t) {
    const double acc = quad::normal_cdf((h - t) / s) - quad::normal_cdf((-h - t) / s);
    return std::exp(-a * t) * std::cos(w * t) * acc;
  };
  return 2.0 * quad::integrate(f, 0.0, reach, panels);
}

}  // namespace detail

/// Expected coincidences per trial with |t1 - t2| <= window/2.
/// Use window = +inf for the full central peak.
inline double expected_coincidences(const HomDensityModel& m, double window_ps) {
  const double h = 0.5 * window_ps;
  const double sigma = std::sqrt(2.0) * m.jitter_sigma_ps;
  const double a = 0.5 * (m.gamma1 + m.gamma2);
  const double s = m.coh1 + m.coh2 - a;

  const double cross_w = m.p1 * m.p2 * (1.0 + m.beta1) * (1.0 + m.beta2);
  const double pref = 0.25 * m.gamma1 * m.gamma2 / (m.gamma1 + m.gamma2);
  const double cross = pref * (detail::windowed_exp_cos(m.gamma1, 0.0, h, sigma) +
                               detail::windowed_exp_cos(m.gamma2, 0.0, h, sigma) -
                               2.0 * m.pol_overlap * detail::windowed_exp_cos(a + s, m.detuning, h, sigma));
  double same = 0.0;
  same += m.p1 * m.p1 * m.beta1 * 0.25 * m.gamma1 * detail::windowed_exp_cos(m.gamma1, 0.0, h, sigma);
  same += m.p2 * m.p2 * m.beta2 * 0.25 * m.gamma2 * detail::windowed_exp_cos(m.gamma2, 0.0, h, sigma);

  // Signal click probability per detector.
  const double sig = 0.5 * (m.p1 * (1.0 + m.beta1) + m.p2 * (1.0 + m.beta2));
  const double g = m.gate_ps;
  double flat = 0.0;
  if (!std::isfinite(h)) {
    flat = m.flat1 * sig + m.flat2 * sig + m.flat1 * m.flat2;
  } else {
    // A gate-uniform click against a signal click near zero delay.
    const double inside = std::min(h, 0.25 * g) + std::min(h, 0.75 * g);
    flat = (m.flat1 + m.flat2) * sig * inside / g;
    const double tri = std::min(h, g);
    flat += m.flat1 * m.flat2 * (2.0 * tri / g - tri * tri / (g * g));
  }
  return cross_w * cross + same + flat;
}

inline double windowed_visibility_oracle(const HomDensityModel& resonant, const HomDensityModel& reference,
                                         double window_ps) {
  return 1.0 - expected_coincidences(resonant, window_ps) / expected_coincidences(reference, window_ps);
}

}  // namespace rhom
