#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rhom/detection.hpp"
#include "rhom/experiment.hpp"

using namespace rhom;

namespace {

PhotonRecord photon(double gamma, double offset = 0.0, double pol = 0.0) {
  PhotonRecord p;
  p.gamma_rad = gamma;
  p.freq_offset = offset;
  p.pol_angle_rad = pol;
  return p;
}

DetectorParams ideal_detector() {
  DetectorParams d;
  d.efficiency = 1.0;
  d.jitter_fwhm_ps = 0.0;
  d.dark_rate_hz = 0.0;
  return d;
}

// g2(0) of a pulsed source whose per-pulse photons come from `make_batch`.
template <class F>
Estimate pulsed_g2(F make_batch, std::uint64_t pulses, std::uint64_t seed) {
  const double period = 12450.0;
  DetectorParams det = ideal_detector();
  det.jitter_fwhm_ps = 70.0;
  std::vector<ClickRecord> clicks;
  for (std::uint64_t i = 0; i < pulses; ++i) {
    auto rng = make_stream(seed, 0, i, Stage::emission_a);
    const PhotonBatch b = make_batch(rng);
    auto drng = make_stream(seed, 0, i, Stage::detector);
    hbt_pulse_clicks(b, det, period, i, drng, clicks);
  }
  const auto h = accumulate_histogram(clicks, {100.0, 68500.0});
  return extract_g2_zero(h, period);
}

}  // namespace

TEST(DetectorParams, GateAndDarkProbability) {
  DetectorParams d;
  EXPECT_DOUBLE_EQ(d.gate_open_ps(), -250.0);
  EXPECT_DOUBLE_EQ(d.gate_close_ps(), 750.0);
  EXPECT_NEAR(d.dark_prob_per_gate(), 3e-7, 1e-20);
  EXPECT_NEAR(d.jitter_sigma_ps(), 70.0 / (2 * std::sqrt(2 * std::log(2.0))), 1e-12);
}

TEST(ShotOverlap, PolarizationAndDetuning) {
  const double g = 1.0 / 78.0;
  EXPECT_NEAR(shot_overlap(photon(g), photon(g)), 1.0, 1e-15);
  EXPECT_NEAR(shot_overlap(photon(g), photon(g, 0.0, M_PI / 2)), 0.0, 1e-15);
  EXPECT_NEAR(shot_overlap(photon(g), photon(g, 0.0, M_PI / 4)), 0.5, 1e-15);
  EXPECT_NEAR(shot_overlap(photon(g), photon(g, g)), 0.5, 1e-15);
}

TEST(ShotOverlap, ChirpedPairsMatchSpectralIntegral) {
  for (double kappa : {1e-7, 1e-3, 0.3}) {
    for (double c : {0.0, 2.0, 20.0}) {
      auto a = photon(1.0 / 78.0, c);
      auto b = photon(1.0 / 69.9, c + 0.005);
      b.quad_phase_ps2 = kappa;
      const double direct = overlap_adaptive({a.gamma_rad, c, 0.0, {}}, {b.gamma_rad, c + 0.005, kappa, {}});
      EXPECT_NEAR(shot_overlap(a, b), direct, 1e-5) << kappa << " " << c;
      // A residual chirp always costs overlap relative to the unchirped pair.
      EXPECT_LT(direct, overlap_closed_form(a.gamma_rad, b.gamma_rad, 0.005, 0.0));
    }
  }
}

TEST(ShotOverlap, FarDetunedChirpedPairIsNegligible) {
  auto a = photon(1.0 / 78.0, -0.0005);
  auto b = photon(1.0 / 69.9, -55.6);
  b.quad_phase_ps2 = 1e-3;
  double o = 1.0;
  EXPECT_NO_THROW(o = shot_overlap(a, b));
  EXPECT_LT(o, 1e-5);
}

TEST(HomSampling, CrossPortProbability) {
  const double g = 1.0 / 78.0;
  for (double overlap_target : {1.0, 0.5, 0.0}) {
    // pol angle chosen so that cos^2 equals the target overlap
    const double pol = std::acos(std::sqrt(overlap_target));
    const int n = 100000;
    int cross = 0;
    for (int i = 0; i < n; ++i) {
      auto rng = make_stream(1, 0, i, Stage::beamsplitter);
      const auto out = hom_sample_pair(photon(g), photon(g, 0.0, pol), rng);
      ASSERT_TRUE(out.has_value());
      cross += out->cross_port ? 1 : 0;
      if (!out->cross_port) {
        EXPECT_EQ(out->first.port, out->second.port);
      }
    }
    const double p = 0.5 * (1 - overlap_target);
    EXPECT_NEAR(cross / double(n), p, 4 * std::sqrt(std::max(p * (1 - p), 1e-6) / n) + 1e-9);
  }
}

TEST(HomSampling, DeadPhotonGivesNoPair) {
  auto rng = make_stream(2, 0, 0, Stage::beamsplitter);
  PhotonRecord dead = photon(0.01);
  dead.alive = false;
  EXPECT_FALSE(hom_sample_pair(dead, photon(0.01), rng).has_value());
}

TEST(HomSampling, CrossPortDelayDistributionWithDetuning) {
  // Equal lifetimes, detuning D: the cross-port delay density is
  // proportional to exp(-G|t|) (1 - cos(D t)).
  const double g = 1.0 / 78.0;
  const double d = 2.0 * g;
  const int n = 400000;
  double sum = 0.0;
  double sum2 = 0.0;
  int m = 0;
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(3, 0, i, Stage::beamsplitter);
    const auto out = hom_sample_pair(photon(g), photon(g, d), rng);
    if (!out->cross_port) continue;
    const double c = std::cos(d * (out->first.time_ps - out->second.time_ps));
    sum += c;
    sum2 += c * c;
    ++m;
  }
  const double i0 = 2.0 / g;
  const double i1 = 2.0 * g / (g * g + d * d);
  const double i2 = 1.0 / g + g / (g * g + 4 * d * d);
  const double expected = (i1 - i2) / (i0 - i1);
  const double mean = sum / m;
  const double se = std::sqrt((sum2 / m - mean * mean) / m);
  EXPECT_NEAR(mean, expected, 4 * se);
  // Cross-port fraction (1 - O)/2 with O = G^2/(G^2 + D^2).
  EXPECT_NEAR(m / double(n), 0.5 * (1 - g * g / (g * g + d * d)), 0.005);
}

TEST(HomSampling, MarginalTimesAreExponential) {
  // Fully distinguishable photons: each arrival keeps its own decay.
  const double g1 = 1.0 / 78.0;
  const double g2 = 1.0 / 69.9;
  const int n = 200000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(4, 0, i, Stage::beamsplitter);
    const auto out = hom_sample_pair(photon(g1), photon(g2, 0.0, M_PI / 2), rng);
    total += out->first.time_ps + out->second.time_ps;
  }
  EXPECT_NEAR(total / n, 78.0 + 69.9, 1.0);
}

TEST(RouteSingle, NoiseUniformInGate) {
  DetectorParams det;
  PhotonRecord noise;
  noise.kind = PhotonKind::noise;
  auto rng = make_stream(5, 0, 0, Stage::beamsplitter);
  double lo = 1e9;
  double hi = -1e9;
  for (int i = 0; i < 10000; ++i) {
    const auto a = route_single(noise, det, rng);
    EXPECT_EQ(a.origin, ClickOrigin::noise);
    lo = std::min(lo, a.time_ps);
    hi = std::max(hi, a.time_ps);
  }
  EXPECT_GE(lo, -250.0);
  EXPECT_LT(hi, 750.0);
  EXPECT_LT(lo, -240.0);
  EXPECT_GT(hi, 740.0);
}

TEST(Detector, EfficiencyThinningAndGate) {
  DetectorParams det = ideal_detector();
  det.efficiency = 0.76;
  const int n = 100000;
  std::vector<Arrival> arrivals(n, Arrival{1, 0.0, ClickOrigin::signal});
  arrivals.push_back({2, 800.0, ClickOrigin::signal});  // outside the gate
  arrivals.push_back({2, -300.0, ClickOrigin::signal});
  auto rng = make_stream(6, 0, 0, Stage::detector);
  const auto clicks = apply_detector(arrivals, det, rng);
  EXPECT_NEAR(clicks.size() / double(n), 0.76, 4 * std::sqrt(0.76 * 0.24 / n));
  for (const auto& c : clicks) EXPECT_EQ(c.detector_id, 1);
}

TEST(Detector, DarkCountMean) {
  DetectorParams det = ideal_detector();
  det.dark_rate_hz = 1e8;  // 0.1 per gate
  const int n = 100000;
  std::size_t darks = 0;
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(7, 0, i, Stage::detector);
    darks += apply_detector({}, det, rng).size();
  }
  EXPECT_NEAR(darks / double(n), 0.2, 4 * std::sqrt(0.2 / n));
}

TEST(Detector, BoostedDarksAreUnbiased) {
  DetectorParams det = ideal_detector();
  det.dark_rate_hz = 300.0;
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(8, 0, i, Stage::detector);
    Importance imp;
    std::vector<ClickRecord> out;
    apply_detector({}, det, 0.0, rng, imp, DarkSampling{1e5}, out);
    sum += imp.weight * static_cast<double>(out.size());
  }
  EXPECT_NEAR(sum / n / (2 * det.dark_prob_per_gate()), 1.0, 0.02);
}

TEST(Histogram, FillMergeAndConservation) {
  HistogramSpec spec{10.0, 100.0};
  CoincidenceHistogram a(spec);
  CoincidenceHistogram b(spec);
  CoincidenceHistogram c(spec);
  auto rng = make_stream(9, 0, 0, Stage::generic);
  for (int i = 0; i < 300; ++i) {
    CoincidenceHistogram& h = i % 3 == 0 ? a : (i % 3 == 1 ? b : c);
    h.fill(rng.normal(0.0, 60.0), 0.5 + rng.uniform());
  }
  CoincidenceHistogram left = a;
  left.merge(b);
  left.merge(c);
  CoincidenceHistogram bc = b;
  bc.merge(c);
  CoincidenceHistogram right = a;
  right.merge(bc);
  for (std::size_t i = 0; i < left.bins(); ++i) EXPECT_NEAR(left.count(i), right.count(i), 1e-12);
  EXPECT_NEAR(left.binned_sum() + left.overflow(), left.total_pairs(), 1e-9);
  EXPECT_NEAR(left.total_pairs(), a.total_pairs() + b.total_pairs() + c.total_pairs(), 1e-9);
  EXPECT_THROW(a.merge(CoincidenceHistogram({5.0, 100.0})), ValidationError);
  EXPECT_THROW(CoincidenceHistogram({7.0, 100.0}), ValidationError);
}

TEST(Histogram, WindowProration) {
  CoincidenceHistogram h({10.0, 100.0});
  h.fill(2.0);   // bin [0, 10)
  h.fill(-7.0);  // bin [-10, 0)
  h.fill(55.0);
  EXPECT_NEAR(h.central(10.0).counts, 1.0, 1e-12);
  EXPECT_NEAR(h.central(20.0).counts, 2.0, 1e-12);
  EXPECT_NEAR(h.window_sum(50.0, 55.0).counts, 0.5, 1e-12);
  EXPECT_NEAR(h.window_sum(-100.0, 100.0).counts, 3.0, 1e-12);
}

TEST(Histogram, AccumulateMatchesAllPairs) {
  auto rng = make_stream(10, 0, 0, Stage::generic);
  std::vector<ClickRecord> clicks;
  for (int i = 0; i < 400; ++i)
    clicks.push_back({rng.uniform() < 0.5 ? 1 : 2, 5000.0 * rng.uniform(), ClickOrigin::signal});
  HistogramSpec spec{10.0, 300.0};
  const auto h = accumulate_histogram(clicks, spec);
  CoincidenceHistogram brute(spec);
  for (const auto& x : clicks)
    for (const auto& y : clicks)
      if (x.detector_id == 1 && y.detector_id == 2 && std::abs(x.timestamp_ps - y.timestamp_ps) < 300.0)
        brute.fill(x.timestamp_ps - y.timestamp_ps);
  for (std::size_t i = 0; i < h.bins(); ++i) EXPECT_EQ(h.count(i), brute.count(i)) << i;

  std::vector<ClickRecord> shuffled(clicks.rbegin(), clicks.rend());
  const auto h2 = accumulate_histogram(shuffled, spec);
  for (std::size_t i = 0; i < h.bins(); ++i) EXPECT_EQ(h.count(i), h2.count(i));
}

TEST(Histogram, WarnsWhenRangeMissesSidePeaks) {
  const auto h = accumulate_histogram({}, {10.0, 1000.0}, 12453.0);
  EXPECT_EQ(h.warnings.size(), 1u);
}

TEST(Histogram, CsvLayout) {
  CoincidenceHistogram h({10.0, 20.0}, "demo");
  h.seed = 5;
  h.config_hash = "abc";
  h.fill(1.0);
  std::ostringstream os;
  write_histogram_csv(os, h);
  EXPECT_EQ(os.str(),
            "# label: demo\n# seed: 5\n# config_hash: abc\n# total_pairs: 1\nbin_center_ps,counts\n"
            "-15,0\n-5,0\n5,1\n15,0\n");
}

TEST(G2, PoissonianSourceGivesUnity) {
  const auto est = pulsed_g2(
      [](StreamRng& rng) {
        PhotonBatch b;
        const auto k = std::min<std::uint64_t>(rng.poisson(0.5), PhotonBatch::capacity);
        for (std::uint64_t i = 0; i < k; ++i) b.push(photon(1.0 / 78.0));
        return b;
      },
      200000, 11);
  EXPECT_NEAR(est.value, 1.0, std::max(0.02, 4 * est.stderr_));
}

TEST(G2, CompanionProbabilityClosure) {
  for (double beta : {0.01, companion_prob_from_g2(0.072), 0.1}) {
    const auto est = pulsed_g2(
        [beta](StreamRng& rng) {
          PhotonBatch b;
          if (rng.bernoulli(0.6)) b.push(photon(1.0 / 78.0));
          if (rng.bernoulli(0.6 * beta)) {
            PhotonRecord c = photon(1.0 / 78.0);
            c.kind = PhotonKind::companion;
            b.push(c);
          }
          return b;
        },
        400000, 12);
    const double expected = 2 * beta / ((1 + beta) * (1 + beta));
    EXPECT_NEAR(est.value, expected, 4 * est.stderr_) << beta;
  }
}

TEST(G2, RefusesShortRangeAndEmptySides) {
  CoincidenceHistogram short_range({10.0, 20000.0});
  EXPECT_THROW(extract_g2_zero(short_range, 12453.0), ValidationError);
  CoincidenceHistogram empty({10.0, 100000.0});
  EXPECT_THROW(extract_g2_zero(empty, 12453.0), UndefinedError);
}

TEST(Visibility, RatioAndErrors) {
  CoincidenceHistogram res({10.0, 100.0});
  CoincidenceHistogram ref({10.0, 100.0});
  for (int i = 0; i < 25; ++i) res.fill(0.0);
  for (int i = 0; i < 100; ++i) ref.fill(0.0);
  const auto v = extract_visibility(res, ref, 20.0);
  EXPECT_NEAR(v.visibility, 0.75, 1e-12);
  EXPECT_NEAR(v.stderr_, 0.25 * std::sqrt(1.0 / 25 + 1.0 / 100), 1e-12);
  EXPECT_THROW(extract_visibility(res, ref, 400.0), ValidationError);
  EXPECT_THROW(extract_visibility(res, CoincidenceHistogram({10.0, 100.0}), 20.0), UndefinedError);
}

TEST(Oracle, WindowedExpCosAgainstDirectIntegral) {
  // exp(-a|t|) cos(w t) weighted by the probability that t plus Gaussian
  // noise lands in [-h, h], integrated over the whole line.
  auto direct = [](double a, double w, double h, double sigma) {
    const double reach = sigma > 0 ? h + 12 * sigma + 40.0 / a : h;
    const int n = 400000;
    const double dt = 2 * reach / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = -reach + (i + 0.5) * dt;
      const double acc = sigma > 0 ? 0.5 * (std::erf((h - t) / (sigma * std::sqrt(2.0))) -
                                            std::erf((-h - t) / (sigma * std::sqrt(2.0))))
                                   : (std::abs(t) <= h ? 1.0 : 0.0);
      s += std::exp(-a * std::abs(t)) * std::cos(w * t) * acc * dt;
    }
    return s;
  };
  for (double sigma : {0.0, 42.0})
    for (double h : {10.0, 50.0, 200.0})
      for (double w : {0.0, 0.01, 0.2}) {
        const double a = 1.0 / 74.0;
        EXPECT_NEAR(detail::windowed_exp_cos(a, w, h, sigma), direct(a, w, h, sigma), 1e-3) << sigma << " " << h
                                                                                           << " " << w;
      }
  EXPECT_NEAR(detail::windowed_exp_cos(0.01, 0.0, INFINITY, 30.0), 200.0, 1e-9);
}

TEST(Oracle, PerfectInterferenceCancelsWithoutNoise) {
  HomDensityModel m;
  m.gamma1 = m.gamma2 = 1.0 / 78.0;
  m.coh1 = m.coh2 = 0.5 / 78.0;
  EXPECT_NEAR(expected_coincidences(m, INFINITY), 0.0, 1e-12);
  HomDensityModel ref = m;
  ref.pol_overlap = 0.0;
  // Distinguishable photons: half the pairs split.
  EXPECT_NEAR(expected_coincidences(ref, INFINITY), 0.5, 1e-12);
  EXPECT_NEAR(windowed_visibility_oracle(m, ref, 100.0), 1.0, 1e-9);
}
