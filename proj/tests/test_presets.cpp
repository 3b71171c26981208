#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rhom/presets.hpp"

using namespace rhom;

namespace {

ExperimentConfig small(const std::string& preset, std::uint64_t trials = 20000) {
  auto c = parse_config(std::string{});
  c.run.preset = preset;
  c.run.trials = trials;
  c.run.hbt_pulses = trials;
  c.run.lengths_km = {302.0};
  return c;
}

std::map<std::string, SummaryRecord> by_name(const ResultBundle& b) {
  std::map<std::string, SummaryRecord> m;
  for (const auto& r : b.summary) m[r.name] = r;
  return m;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rhom_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Presets, RemoteSetupSplitsLength) {
  const auto c = small("hom-remote");
  const auto s = remote_setup(c, 302.0, 0.0, "x");
  EXPECT_EQ(s.a.fiber.length_km, 151.0);
  EXPECT_EQ(s.b.fiber.length_km, 151.0);
  EXPECT_TRUE(s.a.convert);
  EXPECT_GT(s.a.beta, 0.0);
  const auto detuned = remote_setup(c, 302.0, 38.0, "y");
  EXPECT_NEAR(detuned.b.freq_shift - detuned.a.freq_shift, units::ghz_to_rad_per_ps(38.0), 1e-12);
}

TEST(Presets, DispersionDemoSummary) {
  const auto b = run_preset(small("dispersion-demo"));
  const auto m = by_name(b);
  EXPECT_NEAR(m.at("overlap_undispersed").value, 0.997, 1e-3);
  EXPECT_NEAR(m.at("overlap_symmetric").value, m.at("overlap_undispersed").value, 1e-6);
  EXPECT_LT(m.at("overlap_asymmetric").value, 0.7);
  ASSERT_EQ(b.files.size(), 1u);
  EXPECT_EQ(b.files[0].content.rfind("length_km,symmetric_overlap,asymmetric_overlap\n", 0), 0u);
}

TEST(Presets, QfcCurvesSummary) {
  const auto b = run_preset(small("qfc-curves"));
  const auto m = by_name(b);
  EXPECT_NEAR(m.at("pump_wavelength_nm_QFC1").value, 2049.98, 0.05);
  EXPECT_NEAR(m.at("pump_wavelength_nm_QFC2").value, 2043.46, 0.05);
  EXPECT_NEAR(m.at("efficiency_at_operating_pump_QFC2").value, 0.52, 1e-12);
  EXPECT_NEAR(m.at("converted_wavelength_nm_QFC1").value, 1582.75, 0.05);
}

TEST(Presets, LinkbudgetReportsCrossingsAndRateChecks) {
  auto c = small("linkbudget", 200000);
  c.run.lengths_km = {100.0};
  const auto b = run_preset(c, 4);
  const auto m = by_name(b);
  EXPECT_NEAR(m.at("rate_hz_improved_at_calibration").value, 0.012, 1e-9);
  const auto& mc = m.at("mc_rate_hz_100km");
  EXPECT_NEAR(mc.value, m.at("analytic_rate_hz_100km").value, 4 * mc.stderr_);
  EXPECT_TRUE(m.count("snr_crossing_km_current"));
}

TEST(Presets, RemoteRunIsDeterministicAcrossWorkers) {
  const auto c = small("hom-remote", 20000);
  const auto a = run_preset(c, 1);
  const auto b = run_preset(c, 3);
  EXPECT_EQ(summary_jsonl(a), summary_jsonl(b));
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) EXPECT_EQ(a.files[i].content, b.files[i].content);
}

TEST(Presets, SummaryJsonCarriesProvenance) {
  const auto b = run_preset(small("dispersion-demo"));
  std::istringstream in(summary_jsonl(b));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("name"));
    EXPECT_TRUE(j.contains("stderr"));
    EXPECT_EQ(j["preset"], "dispersion-demo");
    EXPECT_EQ(j["config_hash"], b.config_hash);
    ++n;
  }
  EXPECT_EQ(n, static_cast<int>(b.summary.size()));
}

TEST(Presets, EmitOutputsWritesEchoSummaryAndFiles) {
  const auto b = run_preset(small("dispersion-demo"));
  const auto dir = scratch("emit");
  const auto paths = emit_outputs(b, dir);
  EXPECT_EQ(paths.size(), 3u);
  std::ifstream echo(dir / "dispersion-demo_s1_config.ini");
  std::stringstream text;
  text << echo.rdbuf();
  // The echoed configuration reproduces the run exactly.
  EXPECT_EQ(config_hash(parse_config(text.str())), b.config_hash);
  EXPECT_TRUE(std::filesystem::exists(dir / "dispersion-demo_s1_overlap.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Presets, UnwritableDirectoryIsARuntimeError) {
  const auto b = run_preset(small("dispersion-demo"));
  EXPECT_THROW(emit_outputs(b, "/proc/rhom/forbidden"), std::runtime_error);
}

TEST(Presets, MissingPresetRejected) {
  auto c = parse_config(std::string{});
  EXPECT_THROW(run_preset(c), ConfigError);
}
