#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "blockade/experiments.hpp"
#include "test_support.hpp"

using namespace blockade;
using blockade::test_support::code_of;

namespace {

ExperimentConfig driven_config(ExperimentKind kind, std::size_t n) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.system = SystemSpec::reference_device(n);
  cfg.system.cavity_truncation = 7;
  cfg.truncation.adaptive = false;
  return cfg;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("blockade_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(SweepAxis, RangesAndUnits) {
  const auto lin = SweepAxis::range(-1.0, 1.0, 5);
  EXPECT_EQ(lin.values, (std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0}));
  const auto log = SweepAxis::range(0.1, 1000.0, 5, AxisSpacing::Log);
  EXPECT_DOUBLE_EQ(log.values.front(), 0.1);
  EXPECT_DOUBLE_EQ(log.values.back(), 1000.0);
  EXPECT_NEAR(log.values[2], 10.0, 1e-12);
  EXPECT_EQ(SweepAxis::range(3.0, 7.0, 1).values, std::vector<double>{3.0});
  EXPECT_EQ(code_of([] { SweepAxis::range(0.0, 1.0, 0); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { SweepAxis::range(0.0, 1.0, 3, AxisSpacing::Log); }), ErrorCode::ConfigInvalid);

  const SystemSpec s = SystemSpec::reference_device(2);
  EXPECT_NEAR(SweepAxis::list({2.0}, AxisUnit::Kappa).resolve(s)[0], 0.2, 1e-15);
  EXPECT_NEAR(SweepAxis::list({2.0}, AxisUnit::G).resolve(s)[0], 26.4, 1e-12);
  EXPECT_DOUBLE_EQ(SweepAxis::list({2.0}).resolve(s)[0], 2.0);
}

TEST(DriveRule, SelectsPolaritonsAndCavity) {
  SystemSpec s = SystemSpec::reference_device(2);
  const double split = std::sqrt(2.0) * 13.2;
  EXPECT_NEAR(drive_frequency(s, DriveRule::LowerPolariton), 5230.0 - split, 1e-9);
  EXPECT_NEAR(drive_frequency(s, DriveRule::UpperPolariton), 5230.0 + split, 1e-9);
  EXPECT_NEAR(drive_frequency(s, DriveRule::Auto), 5230.0 - split, 1e-9);
  EXPECT_DOUBLE_EQ(drive_frequency(s, DriveRule::Cavity), 5230.0);
  EXPECT_DOUBLE_EQ(drive_frequency(with_detuning(s, 43 * 13.2), DriveRule::Auto), 5230.0);
  EXPECT_EQ(code_of([&] { drive_frequency(s, DriveRule::Fixed); }), ErrorCode::MissingDrive);
  s.drive = Drive{0.1, 5200.0};
  EXPECT_DOUBLE_EQ(drive_frequency(s, DriveRule::Fixed), 5200.0);
  EXPECT_EQ(code_of([] { mean_coupling(SystemSpec::identical(5230.0, 0, 5230.0, 1.0, 0.1, 0.1)); }),
            ErrorCode::NoPolariton);
  EXPECT_EQ(drive_rule_from_string("upper"), DriveRule::UpperPolariton);
  EXPECT_EQ(code_of([] { drive_rule_from_string("middle"); }), ErrorCode::ConfigInvalid);
}

TEST(SolveDriven, GrowsTruncationUntilTailIsSmall) {
  SystemSpec s = SystemSpec::identical(5230.0, 0, 5230.0, 0.0, 0.1, 0.0, 6);
  s.drive = Drive{0.15, 5230.0};  // coherent state with <n> = 9
  TruncationPolicy policy;
  const DrivenSolve r = solve_driven(s, policy);
  EXPECT_GT(r.spec.cavity_truncation, 6);
  EXPECT_LE(r.truncation_tail, policy.tail_tolerance);
  EXPECT_NEAR(r.mean_photon_number, 9.0, 1e-3);
  EXPECT_NEAR(*r.g2, 1.0, 1e-3);

  policy.adaptive = false;
  EXPECT_EQ(solve_driven(s, policy).spec.cavity_truncation, 6);
  s.drive.reset();
  EXPECT_EQ(code_of([&] { solve_driven(s, policy); }), ErrorCode::MissingDrive);
}

TEST(Experiments, AvoidedCrossingRecoversCoupling) {
  ExperimentConfig cfg = driven_config(ExperimentKind::AvoidedCrossing, 1);
  cfg.sweep["detuning"] = SweepAxis::range(-60.0, 60.0, 25);
  const SweepResult r = run_avoided_crossing(cfg);
  EXPECT_EQ(r.failures(), 0u);
  EXPECT_NEAR(r.summary_value("fitted_g_mhz"), 13.7, 1e-6);
  EXPECT_NEAR(r.summary_value("fitted_center_mhz"), 0.0, 1e-6);
  EXPECT_NEAR(r.summary_value("min_splitting_mhz"), 27.4, 1e-9);
  EXPECT_NEAR(r.value(12, "lower_cavity_weight"), 0.5, 1e-12);
  EXPECT_TRUE(std::isnan(r.summary_value("nope")));
  EXPECT_EQ(code_of([&] { r.value(0, "nope"); }), ErrorCode::IndexOutOfRange);
}

TEST(Experiments, G2MapMatchesIndependentSolverAndBothRoutes) {
  ExperimentConfig cfg = driven_config(ExperimentKind::G2Map, 1);
  cfg.sweep["detuning"] = SweepAxis::list({0.0});
  cfg.sweep["amplitude"] = SweepAxis::list({1.0, 10.0}, AxisUnit::Kappa);
  const SweepResult r = run_g2_map(cfg);
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.failures(), 0u);
  EXPECT_NEAR(r.value(0, "g2_operator") / 0.0023939629212262593, 1.0, 1e-6);
  EXPECT_NEAR(r.value(1, "g2_operator") / 0.1700477233099946, 1.0, 1e-6);
  EXPECT_NEAR(r.value(1, "p_ge2") / 0.005974099846902553, 1.0, 1e-6);
  EXPECT_NEAR(r.param(1, "eta_over_kappa"), 10.0, 1e-12);
  EXPECT_EQ(r.summary_value("route_points_compared"), 2.0);
  EXPECT_LE(r.summary_value("route_max_rel_diff"), 0.1);
  EXPECT_TRUE(r.spectra.empty());
}

TEST(Experiments, PnrVsAmplitudeAntibunchingWeakens) {
  ExperimentConfig cfg = driven_config(ExperimentKind::PnrVsAmplitude, 2);
  cfg.sweep["amplitude"] = SweepAxis::list({1.0, 3.0, 10.0}, AxisUnit::Kappa);
  const SweepResult r = run_pnr_vs_amplitude(cfg);
  ASSERT_EQ(r.points.size(), 3u);
  ASSERT_EQ(r.spectra.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.points[i].status, "ok");
    EXPECT_TRUE(r.spectra[i].has_value());
    EXPECT_LT(r.value(i, "g2_operator"), 1.0);
  }
  EXPECT_LT(r.value(0, "g2_operator"), r.value(1, "g2_operator"));
  EXPECT_LT(r.value(1, "g2_operator"), r.value(2, "g2_operator"));
  EXPECT_NEAR(r.value(2, "g2_operator") / 0.232, 1.0, 2e-3);
}

TEST(Experiments, DriveFrequencySweepPeaksAtPolaritons) {
  ExperimentConfig cfg = driven_config(ExperimentKind::PnrVsDriveFreq, 2);
  cfg.truncation.adaptive = false;
  cfg.system.cavity_truncation = 3;
  std::vector<double> dd;
  for (double x = -22.0; x <= 22.0; x += 0.5) dd.push_back(x);
  cfg.sweep["drive_detuning"] = SweepAxis::list(dd);
  cfg.sweep["amplitude"] = SweepAxis::list({0.05});
  const SweepResult r = run_pnr_vs_drive_freq(cfg);
  const double split = std::sqrt(2.0) * 13.2;
  EXPECT_NEAR(r.summary_value("expected_lower_mhz"), -split, 1e-9);
  EXPECT_NEAR(r.summary_value("peak_drive_detuning_lower_mhz"), -split, 0.25);
  EXPECT_NEAR(r.summary_value("peak_drive_detuning_upper_mhz"), split, 0.25);
}

TEST(Experiments, CalibrationRecoversDriveScale) {
  ExperimentConfig cfg = driven_config(ExperimentKind::Calibration, 1);
  cfg.system.cavity_truncation = 3;
  cfg.sweep["drive_amp_v"] = SweepAxis::list({0.5, 0.75, 1.0, 1.25});
  cfg.calibration.eta_per_volt = 1.0;
  cfg.calibration.duration_us = 6.0;
  cfg.calibration.samples = 601;
  const SweepResult r = run_calibration(cfg);
  EXPECT_EQ(r.failures(), 0u) << r.points.at(0).status << ' ' << r.points.at(0).message;
  ASSERT_EQ(r.traces.size(), 8u);
  EXPECT_NEAR(r.summary_value("eta_per_volt_lower"), 1.0, 0.05);
  EXPECT_NEAR(r.summary_value("eta_per_volt_upper"), 1.0, 0.05);
  EXPECT_NEAR(r.summary_value("element_square_sum_over_eta2"), 1.0, 0.05);
  EXPECT_NEAR(r.value(0, "cavity_amplitude"), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Experiments, ValidationRejectsBadConfigs) {
  ExperimentConfig cfg = driven_config(ExperimentKind::G2Map, 1);
  cfg.sweep["detuning"] = SweepAxis::list({0.0});
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::ConfigInvalid);  // no amplitude axis
  cfg.sweep["amplitude"] = SweepAxis::list({-1.0});
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::ConfigInvalid);
  cfg.sweep["amplitude"] = SweepAxis::list({1.0});
  EXPECT_NO_THROW(cfg.validate());
  cfg.sweep["drive_amp_v"] = SweepAxis::list({1.0});
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::ConfigInvalid);
  cfg.sweep.erase("drive_amp_v");
  cfg.threads = 0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::ConfigInvalid);
  cfg.threads = 1;
  cfg.readout.points_per_linewidth = 4;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::ConfigInvalid);

  ExperimentConfig ac = driven_config(ExperimentKind::AvoidedCrossing, 2);
  ac.sweep["detuning"] = SweepAxis::list({0.0});
  EXPECT_EQ(code_of([&] { ac.validate(); }), ErrorCode::ConfigInvalid);

  ExperimentConfig cal = driven_config(ExperimentKind::Calibration, 1);
  cal.sweep["drive_amp_v"] = SweepAxis::list({0.1});
  cal.calibration.samples = 10;
  EXPECT_EQ(code_of([&] { cal.validate(); }), ErrorCode::ConfigInvalid);
}

TEST(Experiments, ThreadCountDoesNotChangeResults) {
  ExperimentConfig cfg = driven_config(ExperimentKind::G2Map, 1);
  cfg.sweep["detuning"] = SweepAxis::list({0.0, 2.0}, AxisUnit::G);
  cfg.sweep["amplitude"] = SweepAxis::list({1.0, 5.0}, AxisUnit::Kappa);
  cfg.readout.noise = 1e-4;
  cfg.readout.min_prominence = 0.01;
  cfg.seed = 7;
  const SweepResult a = run_g2_map(cfg);
  cfg.threads = 2;
  const SweepResult b = run_g2_map(cfg);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].params, b.points[i].params);
    for (std::size_t k = 0; k < a.points[i].values.size(); ++k) {
      const double x = a.points[i].values[k], y = b.points[i].values[k];
      if (std::isnan(x)) {
        EXPECT_TRUE(std::isnan(y));
      } else {
        EXPECT_DOUBLE_EQ(x, y) << a.value_names[k];
      }
    }
  }
}

TEST(Experiments, SeededNoiseIsReproducible) {
  ExperimentConfig cfg = driven_config(ExperimentKind::PnrVsAmplitude, 1);
  cfg.sweep["amplitude"] = SweepAxis::list({5.0}, AxisUnit::Kappa);
  cfg.readout.noise = 1e-3;
  cfg.readout.min_prominence = 0.02;
  cfg.seed = 11;
  const SweepResult a = run_pnr_vs_amplitude(cfg);
  const SweepResult b = run_pnr_vs_amplitude(cfg);
  ASSERT_EQ(a.spectra.size(), 1u) << a.points.at(0).status << ' ' << a.points.at(0).message;
  ASSERT_EQ(b.spectra.size(), 1u);
  ASSERT_TRUE(a.spectra[0] && b.spectra[0]);
  EXPECT_EQ(a.spectra[0]->response(), b.spectra[0]->response());
  cfg.seed = 12;
  const SweepResult c = run_pnr_vs_amplitude(cfg);
  ASSERT_EQ(c.spectra.size(), 1u);
  ASSERT_TRUE(c.spectra[0]);
  EXPECT_NE(a.spectra[0]->response(), c.spectra[0]->response());
}

TEST(Experiments, WritesOutputFiles) {
  const auto dir = scratch_dir("outputs");
  ExperimentConfig cfg = driven_config(ExperimentKind::PnrVsAmplitude, 1);
  cfg.sweep["amplitude"] = SweepAxis::list({1.0, 5.0}, AxisUnit::Kappa);
  const auto out = run_experiment(cfg);
  const auto written = write_experiment_outputs(cfg, out, (dir / "amp.csv").string());
  ASSERT_EQ(written.size(), 3u);
  for (const auto& p : written) EXPECT_TRUE(std::filesystem::exists(p)) << p;
  EXPECT_TRUE(std::filesystem::exists(dir / "amp.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "amp_spectra.csv"));

  std::ifstream csv(dir / "amp.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_NE(header.find("eta_over_kappa"), std::string::npos);
  EXPECT_NE(header.find("g2_operator"), std::string::npos);
  std::ifstream spectra(dir / "amp_spectra.csv");
  std::string line;
  std::getline(spectra, line);
  EXPECT_NE(line.find("freq_ghz,response"), std::string::npos);
  std::size_t rows = 0;
  while (std::getline(spectra, line)) ++rows;
  EXPECT_EQ(rows, out.sweep->spectra[0]->size() + out.sweep->spectra[1]->size());

  ExperimentConfig ladder;
  ladder.kind = ExperimentKind::LadderTable;
  ladder.ladder.emitters = {1, 2};
  ladder.ladder.n_max = 3;
  const auto lw = write_experiment_outputs(ladder, run_experiment(ladder), (dir / "ladder.csv").string());
  EXPECT_EQ(lw.size(), 1u);
  std::filesystem::remove_all(dir);
}
