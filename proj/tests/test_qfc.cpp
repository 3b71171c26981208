#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "rhom/qfc.hpp"

using namespace rhom;

namespace {

QfcParams qfc1() {
  QfcParams q;
  q.label = "QFC1";
  q.eta_max = 0.48;
  q.p_max_mw = 271.0;
  q.pump_wavelength_nm = 2049.98;
  return q;
}

}  // namespace

TEST(PumpWavelength, MatchesEnergyConservation) {
  // 1/893.16 - 1/1582.75 in inverse nm, inverted.
  const double expected = 1.0 / (1.0 / 893.16 - 1.0 / 1582.75);
  EXPECT_NEAR(solve_pump_wavelength(893.16, 1582.75), expected, 1e-9);
  EXPECT_NEAR(solve_pump_wavelength(893.16, 1582.75), 2049.98, 0.05);
  EXPECT_NEAR(solve_pump_wavelength(891.92, 1582.75), 2043.46, 0.01);
}

TEST(PumpWavelength, NoSolutionForUpConversionTarget) {
  EXPECT_THROW(solve_pump_wavelength(1600.0, 1582.75), NoSolutionError);
}

TEST(PumpWavelength, RoundTripThroughConversion) {
  const double pump = solve_pump_wavelength(891.92, 1582.75);
  EXPECT_NEAR(converted_wavelength(891.92, pump), 1582.75, 1e-9);
}

TEST(PztStep, FrequencyForWavelengthStep) {
  // c * dlambda / lambda^2 at the pump wavelength.
  const double mhz = 299792458.0 * 0.03e-12 / std::pow(2049.98e-9, 2) * 1e-6;
  EXPECT_NEAR(pzt_frequency_step(0.03, 2049.98), mhz, 1e-9);
  EXPECT_NEAR(pzt_frequency_step(0.03, 2049.98), 2.14, 0.01);
  // The same step seen on the converted photon.
  EXPECT_NEAR(pzt_frequency_step(0.03, 1582.75), 3.6, 0.05);
}

TEST(ConversionEfficiency, SaturationCurve) {
  const auto q = qfc1();
  EXPECT_DOUBLE_EQ(conversion_efficiency(0.0, q), 0.0);
  EXPECT_NEAR(conversion_efficiency(271.0, q), 0.48, 1e-15);
  EXPECT_NEAR(conversion_efficiency(271.0 / 4, q), 0.48 * 0.5, 1e-15);
  // Past the maximum the efficiency falls again.
  EXPECT_LT(conversion_efficiency(350.0, q), 0.48);
  double prev = -1.0;
  for (double p = 0.0; p <= 271.0; p += 1.0) {
    const double e = conversion_efficiency(p, q);
    EXPECT_GE(e, prev);
    prev = e;
  }
  EXPECT_THROW(conversion_efficiency(-1.0, q), ValidationError);
}

TEST(ConversionSnr, InfiniteWithoutNoise) {
  auto q = qfc1();
  q.raman_coeff = 0.0;
  EXPECT_EQ(conversion_snr(100.0, 1e6, q), std::numeric_limits<double>::infinity());
}

TEST(ConversionSnr, CalibrationHitsTarget) {
  auto q = qfc1();
  q.raman_coeff = calibrate_raman_coeff(q, 1e6, 24.0);
  EXPECT_NEAR(conversion_snr(271.0, 1e6, q), 24.0, 1e-12);
  // At low power both signal and noise are linear in P, and the ratio is
  // pi^2/4 better than at saturation.
  EXPECT_NEAR(conversion_snr(1e-6, 1e6, q), 24.0 + 10 * std::log10(M_PI * M_PI / 4), 1e-6);
  EXPECT_GT(conversion_snr(10.0, 1e6, q), 24.0);
}

TEST(Conversion, SurvivalAndWavelength) {
  const auto q = qfc1();
  const int n = 200000;
  int survived = 0;
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(1, 0, i, Stage::conversion_a);
    PhotonRecord p;
    p.wavelength_nm = 893.16;
    p.freq_offset = 0.01;
    p.gamma_rad = 1.0 / 78.0;
    p.pol_angle_rad = 0.3;
    apply_conversion(p, q, 271.0, rng);
    if (!p.alive) continue;
    ++survived;
    EXPECT_NEAR(p.wavelength_nm, converted_wavelength(893.16, 2049.98), 1e-12);
    EXPECT_EQ(p.freq_offset, 0.01);
    EXPECT_EQ(p.gamma_rad, 1.0 / 78.0);
    EXPECT_EQ(p.pol_angle_rad, 0.3);
  }
  EXPECT_NEAR(survived / double(n), 0.48, 4 * std::sqrt(0.48 * 0.52 / n));
}

TEST(Conversion, DeadPhotonsStayDead) {
  auto rng = make_stream(2, 0, 0, Stage::conversion_a);
  PhotonRecord p;
  p.alive = false;
  p.wavelength_nm = 893.16;
  apply_conversion(p, qfc1(), 271.0, rng);
  EXPECT_FALSE(p.alive);
  EXPECT_EQ(p.wavelength_nm, 893.16);
}

TEST(ConversionNoise, PoissonMeanScalesWithPumpAndWindow) {
  auto q = qfc1();
  q.raman_coeff = 37.0;
  const double rep = 80.3e6;
  const double fraction = 0.25;
  const int n = 400000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(3, 0, i, Stage::conversion_a);
    PhotonBatch batch;
    const auto noise = sample_conversion_noise(batch, q, 271.0, rep, 1582.75, 1, i, rng, fraction * 1e4);
    total += static_cast<double>(noise.noise_photons);
    for (const auto& p : batch) {
      EXPECT_TRUE(p.is_noise());
      EXPECT_GE(p.pol_angle_rad, 0.0);
      EXPECT_LT(p.pol_angle_rad, M_PI);
    }
  }
  // Noise is tiny per pulse; the window factor is scaled up here only to
  // give the estimator enough counts.
  const double mean = 37.0 * 271.0 / rep * fraction * 1e4;
  EXPECT_NEAR(total / n, mean, 4 * std::sqrt(mean / n));
}

TEST(QfcParams, Validation) {
  auto q = qfc1();
  q.eta_max = 1.5;
  EXPECT_THROW(q.validate(), ValidationError);
  q = qfc1();
  q.raman_coeff = -1.0;
  EXPECT_THROW(q.validate(), ValidationError);
}
