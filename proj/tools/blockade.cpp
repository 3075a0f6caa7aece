// Command-line front end: run sweeps from config files, analyze spectra,
// export excitation ladders and calibrate drive amplitudes from Rabi traces.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "blockade/config_io.hpp"
#include "blockade/eigenstructure.hpp"
#include "blockade/errors.hpp"
#include "blockade/experiments.hpp"
#include "blockade/model.hpp"
#include "blockade/pnr.hpp"

namespace {

using nlohmann::ordered_json;

struct Globals {
  std::string out;
  int threads = 0;
  int truncation = 0;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw blockade::Error(blockade::ErrorCode::IoError, "cannot write '" + path + "'");
  f << text;
}

ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

int cmd_run(const Globals& g, const std::string& config_path) {
  blockade::ExperimentConfig cfg = blockade::load_experiment_config(config_path);
  if (g.threads > 0) cfg.threads = g.threads;
  if (g.truncation > 0) {
    cfg.system.cavity_truncation = g.truncation;
    cfg.truncation.max_truncation = std::max(cfg.truncation.max_truncation, g.truncation);
  }
  const std::string out = g.out.empty() ? cfg.output : g.out;
  if (out.empty()) throw blockade::Error(blockade::ErrorCode::ConfigInvalid, "no output path (config 'output' or --out)");
  cfg.validate();

  const blockade::ExperimentOutput result = blockade::run_experiment(cfg);
  for (const auto& path : blockade::write_experiment_outputs(cfg, result, out)) std::cout << "wrote " << path << '\n';
  if (result.sweep) {
    const auto& s = *result.sweep;
    std::cout << blockade::to_string(cfg.kind) << ": " << s.points.size() << " points, " << s.failures()
              << " failed\n";
    for (const auto& [k, v] : s.summary) std::cout << "  " << k << " = " << v << '\n';
  }
  return 0;
}

int cmd_analyze(const Globals& g, const std::string& path, double chi, double omega_w, const std::string& ladder_text,
                const blockade::AnalysisOptions& options, const std::string& source_text) {
  const blockade::LineLadder ladder = blockade::LineLadder::parse(ladder_text);
  const auto source =
      source_text == "simulated" ? blockade::SpectrumSource::Simulated : blockade::SpectrumSource::Measured;
  const auto spectra = blockade::read_spectrum_csv_file(path, source);

  auto analyze_one = [&](const blockade::PnrSpectrum& s) {
    return ordered_json::parse(
        blockade::analysis_to_json(blockade::analyze_spectrum(s, chi, omega_w, ladder, options), -1));
  };

  ordered_json doc;
  int status = 0;
  if (spectra.size() == 1 && std::isnan(spectra.front().meta().drive_amp_v)) {
    doc = analyze_one(spectra.front());
  } else {
    doc = ordered_json::array();
    for (const auto& s : spectra) {
      ordered_json item;
      item["drive_amp_v"] = finite_or_null(s.meta().drive_amp_v);
      try {
        item["report"] = analyze_one(s);
      } catch (const blockade::Error& e) {
        item["error"] = e.what();
        status = 2;
      }
      doc.push_back(std::move(item));
    }
  }
  emit(doc.dump(2) + "\n", g.out);
  return status;
}

int cmd_ladder(const Globals& g, const std::vector<int>& counts, int n_max, double omega_c, double omega_a, double coupling) {
  const auto ladder = blockade::EigenLadder::build(counts, n_max, omega_c, omega_a, coupling);
  std::ostringstream csv;
  ladder.write_csv(csv);
  emit(csv.str(), g.out);
  return 0;
}

int cmd_calibrate(const Globals& g, const std::string& path, std::size_t max_points, double cavity_amplitude) {
  const auto traces = blockade::read_traces_csv_file(path);
  ordered_json fits = ordered_json::array();
  std::vector<double> amps, rates;
  for (const auto& t : traces) {
    ordered_json item;
    item["drive_amp_v"] = t.drive_amp_v;
    try {
      const blockade::RabiFit fit = blockade::fit_rabi(t.times_us, t.population);
      item["rabi_rate_mhz"] = fit.rabi_rate;
      item["decay_rate"] = fit.decay_rate;
      item["amplitude"] = fit.amplitude;
      item["offset"] = fit.offset;
      item["residual"] = fit.residual;
      amps.push_back(t.drive_amp_v);
      rates.push_back(fit.rabi_rate);
    } catch (const blockade::Error& e) {
      item["error"] = e.what();
    }
    fits.push_back(std::move(item));
  }
  ordered_json doc;
  doc["fits"] = std::move(fits);
  const blockade::DriveCalibration cal = blockade::calibrate_drive(amps, rates, max_points);
  doc["slope_mhz_per_v"] = cal.slope;
  doc["intercept_mhz"] = cal.intercept;
  doc["used_points"] = cal.used_points;
  doc["residuals_mhz"] = cal.residuals;
  doc["used"] = cal.used;
  doc["cavity_amplitude"] = cavity_amplitude;
  doc["eta_per_volt"] = blockade::drive_from_rabi_rate(cal.slope, cavity_amplitude);
  emit(doc.dump(2) + "\n", g.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon blockade simulation and PNR analysis toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--out", g.out, "Output path (default: config 'output' for run, stdout otherwise)");
  app.add_option("--threads", g.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--truncation", g.truncation, "Starting cavity truncation n_max")->check(CLI::PositiveNumber);

  const blockade::Witness ref = blockade::SystemSpec::reference_witness();
  const double ref_chi = blockade::witness_chi(ref, 5230.0);
  const double ref_w = blockade::lamb_shifted_witness_freq(ref, 5230.0) / 1000.0;

  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->fallthrough();
  std::string config_path;
  run->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);

  auto* analyze = app.add_subcommand("analyze", "Extract P(n) and g2 from a PNR spectrum CSV");
  analyze->fallthrough();
  std::string spectrum_path, ladder_text = "dispersive", source_text = "measured", weight_text = "prominence";
  double chi = ref_chi, omega_w = ref_w;
  blockade::AnalysisOptions options;
  analyze->add_option("spectrum", spectrum_path, "Spectrum CSV (freq_ghz,response or freq_ghz,drive_amp_v,response)")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--chi", chi, "Dispersive shift chi (MHz)")->capture_default_str();
  analyze->add_option("--omega-w", omega_w, "Lamb-shifted witness frequency (GHz)")->capture_default_str();
  analyze->add_option("--ladder", ladder_text, "dispersive | resonant:N")->capture_default_str();
  analyze->add_option("--min-prominence", options.min_prominence_fraction, "Prominence cut, fraction of max")
      ->capture_default_str();
  analyze->add_option("--tolerance", options.tolerance_chi, "Assignment tolerance in units of chi")
      ->capture_default_str();
  analyze->add_option("--max-order", options.max_order, "Highest correlation order m")->capture_default_str();
  analyze->add_option("--weight", weight_text, "prominence | area")
      ->check(CLI::IsMember({"prominence", "area"}))
      ->capture_default_str();
  analyze->add_option("--source", source_text, "measured | simulated (measured spectra are sign-normalized)")
      ->check(CLI::IsMember({"measured", "simulated"}))
      ->capture_default_str();

  auto* ladder = app.add_subcommand("ladder", "Export the excitation ladder as CSV");
  ladder->fallthrough();
  std::vector<int> counts{3};
  int n_max = 6;
  double omega_c = 5230.0, omega_a = 5230.0, coupling = 13.2;
  ladder->add_option("--N", counts, "Emitter count(s)")->capture_default_str();
  ladder->add_option("--n-max", n_max, "Highest excitation manifold")->capture_default_str();
  ladder->add_option("--omega-c", omega_c, "Cavity frequency (MHz)")->capture_default_str();
  ladder->add_option("--omega-a", omega_a, "Emitter frequency (MHz)")->capture_default_str();
  ladder->add_option("--g", coupling, "Coupling (MHz)")->capture_default_str();

  auto* calibrate = app.add_subcommand("calibrate", "Fit Rabi traces and derive the rate-per-volt slope");
  calibrate->fallthrough();
  std::string traces_path;
  std::size_t max_points = 4;
  double cavity_amplitude = 1.0 / std::sqrt(2.0);
  calibrate->add_option("traces", traces_path, "Traces CSV (drive_amp_v,time_us,population)")
      ->required()
      ->check(CLI::ExistingFile);
  calibrate->add_option("--max-points", max_points, "Lowest-amplitude points used in the line fit")
      ->capture_default_str();
  calibrate->add_option("--cavity-amplitude", cavity_amplitude, "|<vac|a|polariton>| used to convert rate to eta")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(g, config_path);
    if (*analyze) {
      options.weight = weight_text == "area" ? blockade::PeakWeight::Area : blockade::PeakWeight::Prominence;
      return cmd_analyze(g, spectrum_path, chi, omega_w, ladder_text, options, source_text);
    }
    if (*ladder) return cmd_ladder(g, counts, n_max, omega_c, omega_a, coupling);
    if (*calibrate) return cmd_calibrate(g, traces_path, max_points, cavity_amplitude);
  } catch (const blockade::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
