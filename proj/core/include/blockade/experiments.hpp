#pragma once

// Declarative sweep runner. An ExperimentConfig names an experiment kind, a
// base SystemSpec and the sweep axes; run_experiment evaluates every grid point
// (optionally on a worker pool) and returns results in grid order.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blockade/eigenstructure.hpp"
#include "blockade/model.hpp"
#include "blockade/pnr.hpp"

namespace blockade {

enum class ExperimentKind { AvoidedCrossing, PnrVsAmplitude, PnrVsDriveFreq, G2Map, Calibration, LadderTable };

std::string to_string(ExperimentKind kind);
/// Throws ConfigInvalid for unknown names.
ExperimentKind experiment_kind_from_string(const std::string& name);

/// Scale applied to axis values: plain MHz, multiples of the cavity decay, or
/// multiples of the mean emitter coupling.
enum class AxisUnit { Mhz, Kappa, G };
enum class AxisSpacing { Linear, Log };

struct SweepAxis {
  std::vector<double> values;  ///< in `unit`
  AxisUnit unit = AxisUnit::Mhz;

  /// `steps` points from start to stop inclusive. Log spacing needs start, stop > 0.
  static SweepAxis range(double start, double stop, int steps, AxisSpacing spacing = AxisSpacing::Linear,
                         AxisUnit unit = AxisUnit::Mhz);
  static SweepAxis list(std::vector<double> values, AxisUnit unit = AxisUnit::Mhz);
  /// Values converted to MHz using the spec's cavity decay and mean coupling.
  std::vector<double> resolve(const SystemSpec& spec) const;
};

/// How the drive frequency is chosen at each detuning.
enum class DriveRule {
  Cavity,          ///< omega_d = omega_c
  LowerPolariton,  ///< lowest single-excitation mode with cavity weight
  UpperPolariton,  ///< highest single-excitation mode with cavity weight
  Auto,            ///< Cavity when |Delta| >= 10 g, LowerPolariton otherwise
  Fixed,           ///< use system.drive.freq unchanged
};

std::string to_string(DriveRule rule);
DriveRule drive_rule_from_string(const std::string& name);

/// Witness parameters used to synthesize and analyze spectra. The readout
/// witness is not part of the simulated Hilbert space.
struct ReadoutSettings {
  Witness witness = SystemSpec::reference_witness();
  std::optional<double> linewidth;  ///< MHz; defaults to the witness decay
  double points_per_linewidth = 10.0;
  double min_prominence = 1e-6;  ///< fraction of the largest line
  double tolerance_chi = 0.25;
  double noise = 0.0;  ///< std. dev. of additive Gaussian noise on synthesized spectra
};

struct TruncationPolicy {
  bool adaptive = true;
  double tail_tolerance = 1e-6;  ///< target for P(n_max)
  int max_truncation = 120;
};

struct CalibrationSettings {
  double eta_per_volt = 1.0;  ///< MHz of drive amplitude per volt
  double duration_us = 10.0;
  int samples = 2001;
  std::size_t fit_points = 4;
};

struct LadderSettings {
  std::vector<int> emitters{1, 2, 3};
  int n_max = 6;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::G2Map;
  SystemSpec system = SystemSpec::reference_device(1);
  /// Named axes. Recognized names per kind:
  ///   avoided_crossing: detuning
  ///   pnr_vs_amplitude: amplitude, detuning (optional, default {0})
  ///   pnr_vs_drive_freq: drive_detuning, amplitude (optional, default system.drive)
  ///   g2_map: detuning, amplitude
  ///   calibration: drive_amp_v
  std::map<std::string, SweepAxis> sweep;
  DriveRule drive_rule = DriveRule::Auto;
  ReadoutSettings readout;
  TruncationPolicy truncation;
  CalibrationSettings calibration;
  LadderSettings ladder;
  std::string output;
  std::optional<std::uint64_t> seed;  ///< only consulted when readout.noise > 0
  int threads = 1;

  /// Throws ConfigInvalid when required axes are missing, empty or unknown for
  /// the kind, or kind-specific preconditions fail.
  void validate() const;
};

struct SweepPoint {
  std::vector<double> params;        ///< aligned with SweepResult::param_names
  std::vector<double> values;        ///< aligned with SweepResult::value_names; NaN if unavailable
  std::vector<double> distribution;  ///< P(n); empty when not computed
  std::string status = "ok";         ///< "ok" or an error code name
  std::string message;
};

struct SweepResult {
  ExperimentKind kind = ExperimentKind::G2Map;
  std::vector<std::string> param_names;
  std::vector<std::string> value_names;
  std::vector<SweepPoint> points;
  /// Synthesized spectra aligned with points (pnr kinds); failed points hold none.
  std::vector<std::optional<PnrSpectrum>> spectra;
  /// Simulated Rabi traces aligned with points (calibration only).
  std::vector<std::optional<RabiTrace>> traces;
  /// Kind-specific fit results, e.g. fitted_g or calibration slopes.
  std::vector<std::pair<std::string, double>> summary;
  std::vector<std::string> notes;

  std::size_t failures() const;
  /// Column lookup; throws IndexOutOfRange for unknown names.
  double param(std::size_t point, const std::string& name) const;
  double value(std::size_t point, const std::string& name) const;
  /// NaN when absent.
  double summary_value(const std::string& name) const;
};

struct DrivenSolve {
  SystemSpec spec;  ///< with the drive and the truncation actually used
  std::vector<double> distribution;
  double mean_photon_number = 0.0;
  std::optional<double> g2;
  double truncation_tail = 0.0;
  double residual = 0.0;
};

/// Steady state of a driven spec, growing the cavity truncation
/// (n_max <- 1.5 n_max + 2) until P(n_max) <= tail_tolerance.
DrivenSolve solve_driven(SystemSpec spec, const TruncationPolicy& policy);

/// Drive frequency selected by `rule` for the spec's current emitter frequencies.
double drive_frequency(const SystemSpec& spec, DriveRule rule);

/// Spec with every emitter moved to omega_c + detuning.
SystemSpec with_detuning(SystemSpec spec, double detuning_mhz);

/// Mean emitter coupling (MHz). Throws NoPolariton without emitters.
double mean_coupling(const SystemSpec& spec);

SweepResult run_avoided_crossing(const ExperimentConfig& cfg);
SweepResult run_pnr_vs_amplitude(const ExperimentConfig& cfg);
SweepResult run_pnr_vs_drive_freq(const ExperimentConfig& cfg);
SweepResult run_g2_map(const ExperimentConfig& cfg);
SweepResult run_calibration(const ExperimentConfig& cfg);
EigenLadder run_ladder_table(const ExperimentConfig& cfg);

struct ExperimentOutput {
  ExperimentKind kind = ExperimentKind::G2Map;
  std::optional<SweepResult> sweep;
  std::optional<EigenLadder> ladder;
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// Long-format CSV: parameter tuple, status, scalar observables, then one row
/// per photon number (n, P_n) for points that carry a distribution.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
/// Long-format spectra: parameter tuple, freq_ghz, response.
void write_sweep_spectra_csv(std::ostream& out, const SweepResult& result);
std::string sweep_report_json(const ExperimentConfig& cfg, const SweepResult& result, int indent = 2);

/// Writes `path` (CSV) plus a sibling .json report, a `_spectra.csv` file when
/// spectra exist and `_traces_<polariton>.csv` files for calibration runs.
/// Ladder tables write the CSV only. Returns the paths written.
std::vector<std::string> write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentOutput& output,
                                                  const std::string& path);

}  // namespace blockade
