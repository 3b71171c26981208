#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "rhom/photon_mc.hpp"

using namespace rhom;

TEST(CompanionProbability, ReproducesCentralPeakRatio) {
  for (double g : {0.0, 0.01, 0.051, 0.072, 0.2, 0.5}) {
    const double b = companion_prob_from_g2(g);
    EXPECT_NEAR(2 * b / ((1 + b) * (1 + b)), g, 1e-14) << g;
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
  EXPECT_NEAR(companion_prob_from_g2(0.072), 0.03885, 1e-5);
  EXPECT_THROW(companion_prob_from_g2(0.6), ValidationError);
  EXPECT_THROW(companion_prob_from_g2(-0.1), ValidationError);
}

TEST(PhotonBatch, CapacityIsEnforced) {
  PhotonBatch b;
  for (std::size_t i = 0; i < PhotonBatch::capacity; ++i) b.push({});
  EXPECT_THROW(b.push({}), std::length_error);
  b[0].alive = false;
  EXPECT_EQ(b.alive_count(), PhotonBatch::capacity - 1);
}

TEST(Importance, AnalogWhenFloorIsZero) {
  auto rng = make_stream(1, 0, 0, Stage::generic);
  Importance imp;
  for (int i = 0; i < 1000; ++i) imp.draw(rng, 0.3);
  EXPECT_EQ(imp.weight, 1.0);
}

TEST(Importance, WeightedHitsAreUnbiased) {
  const double p = 1e-3;
  const int n = 200000;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(2, 0, i, Stage::generic);
    Importance imp{0.5};
    const double x = imp.draw(rng, p) ? imp.weight : 0.0;
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, p, 4 * se);
  // The relative error is far below what analog sampling would give.
  EXPECT_LT(se / p, 0.2 * std::sqrt((1 - p) / (p * n)));
}

TEST(Emission, PrimaryAndCompanionRates) {
  const auto e = presets::qd1();
  const auto d = decompose_dephasing(e);
  const double beta = companion_prob_from_g2(e.g2_zero);
  const int n = 400000;
  int primaries = 0;
  int companions = 0;
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(3, 0, i, Stage::emission_a);
    const auto batch = sample_pulse_emission(e, d, i, {1, beta, 0.0}, rng);
    for (const auto& p : batch) {
      EXPECT_EQ(p.gamma_rad, 1.0 / 78.0);
      EXPECT_EQ(p.wavelength_nm, e.wavelength_nm);
      (p.is_companion() ? companions : primaries)++;
    }
  }
  const double pp = e.eta_sys;
  const double pc = e.eta_sys * beta;
  EXPECT_NEAR(primaries / double(n), pp, 4 * std::sqrt(pp * (1 - pp) / n));
  EXPECT_NEAR(companions / double(n), pc, 4 * std::sqrt(pc * (1 - pc) / n));
}

TEST(Emission, NominalTimeFollowsRepetitionPeriod) {
  auto e = presets::qd1();
  e.eta_sys = 1.0;
  const auto d = decompose_dephasing(e);
  auto rng = make_stream(4, 0, 0, Stage::emission_a);
  const auto batch = sample_pulse_emission(e, d, 7, {2, 0.0, 0.0}, rng);
  ASSERT_EQ(batch.size(), 1u);
  EXPECT_NEAR(batch[0].nominal_emit_time_ps, 7 * 1e12 / 80.3e6, 1e-6);
  EXPECT_EQ(batch[0].source_id, 2);
}

TEST(FrequencyOffset, FastPartHasCauchyScale) {
  const auto d = decompose_dephasing(presets::qd1());
  auto rng = make_stream(5, 0, 0, Stage::generic);
  const int n = 200000;
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += std::abs(sample_fast_offset(d, rng)) < d.gamma_fast_star ? 1 : 0;
  // Half the Cauchy mass lies within one scale of the center.
  EXPECT_NEAR(inside / double(n), 0.5, 4 * std::sqrt(0.25 / n));
}

TEST(FrequencyOffset, ConsecutivePairsShareTheSlowTerm) {
  auto e = presets::qd1();
  const auto d = decompose_dephasing(e);
  auto rng = make_stream(6, 0, 0, Stage::generic);
  const int n = 200000;
  int inside_pair = 0;
  int inside_indep = 0;
  for (int i = 0; i < n; ++i) {
    std::optional<double> shared;
    const double a = sample_frequency_offset(d, CorrelationMode::consecutive_pair, rng, shared);
    const double b = sample_frequency_offset(d, CorrelationMode::consecutive_pair, rng, shared);
    ASSERT_TRUE(shared.has_value());
    std::optional<double> unused;
    const double c = sample_frequency_offset(d, CorrelationMode::independent, rng, unused);
    const double x = sample_frequency_offset(d, CorrelationMode::independent, rng, unused);
    EXPECT_FALSE(unused.has_value());
    inside_pair += std::abs(a - b) < 2 * d.gamma_fast_star ? 1 : 0;
    inside_indep += std::abs(c - x) < 2 * d.offset_scale() ? 1 : 0;
  }
  // Differences are Cauchy with scale 2*fast (pairs) and 2*(fast+slow).
  EXPECT_NEAR(inside_pair / double(n), 0.5, 4 * std::sqrt(0.25 / n));
  EXPECT_NEAR(inside_indep / double(n), 0.5, 4 * std::sqrt(0.25 / n));
}
