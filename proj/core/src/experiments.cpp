#include "blockade/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "blockade/config_io.hpp"
#include "blockade/dynamics.hpp"
#include "blockade/errors.hpp"
#include "csv_format.hpp"

namespace blockade {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMhzPerGhz = 1000.0;
constexpr double kBrightWeight = 1e-9;

void config_error(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

const SweepAxis* find_axis(const ExperimentConfig& cfg, const std::string& name) {
  const auto it = cfg.sweep.find(name);
  return it == cfg.sweep.end() ? nullptr : &it->second;
}

std::vector<double> axis_values(const ExperimentConfig& cfg, const std::string& name, const SystemSpec& spec,
                                std::vector<double> fallback = {}) {
  const SweepAxis* axis = find_axis(cfg, name);
  return axis ? axis->resolve(spec) : fallback;
}

std::string cell(double v) { return std::isnan(v) ? std::string() : detail::format_number(v); }

template <class T, class F>
std::vector<T> evaluate(std::size_t count, int threads, F&& fn) {
  std::vector<T> out(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) out[i] = fn(i);
  };
  const auto workers = static_cast<std::size_t>(std::clamp<long>(threads, 1, static_cast<long>(std::max<std::size_t>(count, 1))));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

struct Evaluated {
  SweepPoint point;
  std::optional<PnrSpectrum> spectrum;
  std::optional<RabiTrace> trace;
};

// Runs `body`, turning library errors into a tagged point instead of aborting the sweep.
template <class F>
Evaluated guarded(std::vector<double> params, std::size_t n_values, F&& body) {
  Evaluated e;
  e.point.params = std::move(params);
  e.point.values.assign(n_values, kNaN);
  try {
    body(e);
  } catch (const Error& err) {
    e.point.status = std::string(to_string(err.code()));
    e.point.message = err.what();
    e.point.distribution.clear();
    e.spectrum.reset();
    e.trace.reset();
  } catch (const std::exception& err) {
    e.point.status = "internal-error";
    e.point.message = err.what();
    e.point.distribution.clear();
    e.spectrum.reset();
    e.trace.reset();
  }
  return e;
}

SweepResult collect(ExperimentKind kind, std::vector<std::string> params, std::vector<std::string> values,
                    std::vector<Evaluated> evaluated) {
  SweepResult r;
  r.kind = kind;
  r.param_names = std::move(params);
  r.value_names = std::move(values);
  bool any_spectrum = false;
  bool any_trace = false;
  for (auto& e : evaluated) {
    any_spectrum = any_spectrum || e.spectrum.has_value();
    any_trace = any_trace || e.trace.has_value();
  }
  for (auto& e : evaluated) {
    r.points.push_back(std::move(e.point));
    if (any_spectrum) r.spectra.push_back(std::move(e.spectrum));
    if (any_trace) r.traces.push_back(std::move(e.trace));
  }
  return r;
}

std::size_t column_of(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorCode::IndexOutOfRange, "no column '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

double emitter_detuning(const SystemSpec& spec) {
  if (spec.emitters.empty()) return kNaN;
  double sum = 0.0;
  for (const auto& e : spec.emitters) sum += e.freq;
  return sum / static_cast<double>(spec.emitters.size()) - spec.cavity_freq;
}

double mean_decay(const SystemSpec& spec) {
  if (spec.emitters.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : spec.emitters) sum += e.decay;
  return sum / static_cast<double>(spec.emitters.size());
}

LineLadder ladder_for(const SystemSpec& spec) {
  if (spec.emitters.empty()) return LineLadder::dispersive();
  return LineLadder::resonant(static_cast<int>(spec.emitters.size()), emitter_detuning(spec) / mean_coupling(spec));
}

double readout_linewidth(const ReadoutSettings& r) {
  const double lw = r.linewidth.value_or(r.witness.decay);
  if (!(lw > 0.0)) config_error("readout linewidth must be positive");
  return lw;
}

// Grid covering every line with appreciable weight plus a margin on each side.
std::vector<double> spectrum_grid(const std::vector<double>& p, double chi, double w_tilde_mhz,
                                  const LineLadder& ladder, const ReadoutSettings& r) {
  const double lw = readout_linewidth(r);
  int top = 1;
  for (std::size_t n = 0; n < p.size(); ++n) {
    if (p[n] > 1e-12) top = std::max(top, static_cast<int>(n));
  }
  double lo = w_tilde_mhz, hi = w_tilde_mhz;
  for (int n = 0; n <= top; ++n) {
    const double c = w_tilde_mhz + ladder.offset(n) * chi;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  const double margin = std::max(20.0 * lw, std::abs(chi));
  lo -= margin;
  hi += margin;
  const double step = lw / r.points_per_linewidth;
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) grid[i] = (lo + step * static_cast<double>(i)) / kMhzPerGhz;
  return grid;
}

struct SpectrumRoute {
  PnrSpectrum spectrum;
  std::optional<double> g2;
  std::vector<double> distribution;
};

SpectrumRoute spectrum_route(const std::vector<double>& p, const SystemSpec& spec, const ExperimentConfig& cfg,
                             std::size_t point_index, SpectrumMeta meta) {
  const ReadoutSettings& r = cfg.readout;
  const double chi = witness_chi(r.witness, spec.cavity_freq);
  const double w_tilde = lamb_shifted_witness_freq(r.witness, spec.cavity_freq);
  const LineLadder ladder = ladder_for(spec);
  PnrSpectrum s = synthesize_spectrum(PhotonDistribution(p), chi, w_tilde / kMhzPerGhz, ladder,
                                      readout_linewidth(r), spectrum_grid(p, chi, w_tilde, ladder, r), meta);
  if (r.noise > 0.0) {
    std::mt19937_64 rng(cfg.seed.value_or(0) + point_index);
    std::normal_distribution<double> normal(0.0, r.noise);
    std::vector<double> noisy(s.response());
    for (double& v : noisy) v += normal(rng);
    s = PnrSpectrum(s.freq(), std::move(noisy), s.meta());
  }
  AnalysisOptions opts;
  opts.min_prominence_fraction = r.min_prominence;
  opts.tolerance_chi = r.tolerance_chi;
  opts.n_max = std::max(24, static_cast<int>(p.size()) + 4);
  AnalysisReport report = analyze_spectrum(s, chi, w_tilde / kMhzPerGhz, ladder, opts);
  return SpectrumRoute{std::move(s), report.g2, report.distribution.probabilities()};
}

std::vector<std::string> driven_params() {
  return {"N",           "g_mhz",           "kappa_mhz",     "gamma_mhz", "detuning_mhz", "detuning_over_g",
          "drive_freq_mhz", "drive_detuning_mhz", "eta_mhz", "eta_over_kappa"};
}

std::vector<std::string> driven_values() {
  return {"mean_n",          "g2_operator", "g2_spectrum", "g2_rel_diff", "p1",
          "p_ge2",           "truncation_tail", "n_max",   "residual"};
}

std::vector<double> driven_param_row(const SystemSpec& spec, double detuning, double drive_freq, double eta) {
  const double g = spec.emitters.empty() ? 0.0 : mean_coupling(spec);
  return {static_cast<double>(spec.emitters.size()),
          g,
          spec.cavity_decay,
          mean_decay(spec),
          detuning,
          g > 0.0 ? detuning / g : kNaN,
          drive_freq,
          drive_freq - spec.cavity_freq,
          eta,
          spec.cavity_decay > 0.0 ? eta / spec.cavity_decay : kNaN};
}

// One driven steady state plus the synthesized spectrum and both g2 routes.
Evaluated driven_point(const ExperimentConfig& cfg, const SystemSpec& base, double detuning,
                       std::optional<double> drive_freq, double eta, std::size_t index) {
  SystemSpec spec = with_detuning(base, detuning);
  double wd = kNaN;
  std::vector<double> params = driven_param_row(spec, detuning, wd, eta);
  return guarded(std::move(params), driven_values().size(), [&](Evaluated& e) {
    wd = drive_freq ? *drive_freq : drive_frequency(spec, cfg.drive_rule);
    e.point.params = driven_param_row(spec, detuning, wd, eta);
    spec.drive = Drive{eta, wd};
    const DrivenSolve solved = solve_driven(spec, cfg.truncation);
    const PhotonDistribution p(solved.distribution);
    auto& v = e.point.values;
    v[0] = solved.mean_photon_number;
    v[1] = solved.g2.value_or(kNaN);
    v[4] = p.size() > 1 ? p[1] : 0.0;
    v[5] = p.tail_from(2);
    v[6] = solved.truncation_tail;
    v[7] = solved.spec.cavity_truncation;
    v[8] = solved.residual;
    e.point.distribution = solved.distribution;
    if (solved.truncation_tail > cfg.truncation.tail_tolerance) {
      e.point.message = "truncation tail " + detail::format_number(solved.truncation_tail) + " above tolerance";
    }

    SpectrumMeta meta;
    meta.drive_amplitude = eta;
    meta.detuning = detuning;
    meta.emitters = static_cast<int>(spec.emitters.size());
    meta.source = SpectrumSource::Simulated;
    try {
      SpectrumRoute route = spectrum_route(solved.distribution, spec, cfg, index, meta);
      v[2] = route.g2.value_or(kNaN);
      if (solved.g2 && route.g2 && *solved.g2 != 0.0) v[3] = std::abs(*route.g2 - *solved.g2) / *solved.g2;
      e.spectrum = std::move(route.spectrum);
    } catch (const Error& err) {
      // The steady state is still valid; only the spectrum route is missing.
      e.point.message += (e.point.message.empty() ? "" : "; ") + std::string("spectrum route: ") + err.what();
    }
  });
}

// Residuals of the avoided-crossing hyperbola sqrt((D - D0)^2 + 4 g^2); x = (g, D0).
struct Hyperbola : Eigen::DenseFunctor<double> {
  Hyperbola(Eigen::VectorXd d, Eigen::VectorXd s)
      : Eigen::DenseFunctor<double>(2, static_cast<int>(d.size())), d_(std::move(d)), s_(std::move(s)) {}

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    for (Eigen::Index i = 0; i < d_.size(); ++i) {
      const double u = d_(i) - x(1);
      r(i) = std::sqrt(u * u + 4.0 * x(0) * x(0)) - s_(i);
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
    for (Eigen::Index i = 0; i < d_.size(); ++i) {
      const double u = d_(i) - x(1);
      const double root = std::sqrt(u * u + 4.0 * x(0) * x(0));
      j(i, 0) = 4.0 * x(0) / root;
      j(i, 1) = -u / root;
    }
    return 0;
  }

  Eigen::VectorXd d_;
  Eigen::VectorXd s_;
};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

std::string sibling(const std::string& path, const std::string& suffix, const std::string& ext) {
  std::filesystem::path p(path);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + suffix + ext)).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::AvoidedCrossing: return "avoided_crossing";
    case ExperimentKind::PnrVsAmplitude: return "pnr_vs_amplitude";
    case ExperimentKind::PnrVsDriveFreq: return "pnr_vs_drive_freq";
    case ExperimentKind::G2Map: return "g2_map";
    case ExperimentKind::Calibration: return "calibration";
    case ExperimentKind::LadderTable: return "ladder_table";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::AvoidedCrossing, ExperimentKind::PnrVsAmplitude, ExperimentKind::PnrVsDriveFreq,
                 ExperimentKind::G2Map, ExperimentKind::Calibration, ExperimentKind::LadderTable}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown experiment kind '" + name + "'");
}

std::string to_string(DriveRule rule) {
  switch (rule) {
    case DriveRule::Cavity: return "cavity";
    case DriveRule::LowerPolariton: return "lower";
    case DriveRule::UpperPolariton: return "upper";
    case DriveRule::Auto: return "auto";
    case DriveRule::Fixed: return "fixed";
  }
  return "unknown";
}

DriveRule drive_rule_from_string(const std::string& name) {
  for (auto r : {DriveRule::Cavity, DriveRule::LowerPolariton, DriveRule::UpperPolariton, DriveRule::Auto,
                 DriveRule::Fixed}) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown drive rule '" + name + "' (cavity|lower|upper|auto|fixed)");
}

SweepAxis SweepAxis::range(double start, double stop, int steps, AxisSpacing spacing, AxisUnit unit) {
  if (steps < 1) config_error("axis needs at least one step");
  if (!std::isfinite(start) || !std::isfinite(stop)) config_error("axis bounds must be finite");
  SweepAxis axis;
  axis.unit = unit;
  if (steps == 1) {
    axis.values = {start};
    return axis;
  }
  if (spacing == AxisSpacing::Log) {
    if (!(start > 0.0 && stop > 0.0)) config_error("log axis needs positive bounds");
    for (double e : linspace(std::log(start), std::log(stop), steps)) axis.values.push_back(std::exp(e));
    axis.values.front() = start;
    axis.values.back() = stop;
  } else {
    axis.values = linspace(start, stop, steps);
  }
  return axis;
}

SweepAxis SweepAxis::list(std::vector<double> values, AxisUnit unit) {
  if (values.empty()) config_error("axis value list is empty");
  for (double v : values) {
    if (!std::isfinite(v)) config_error("axis values must be finite");
  }
  return SweepAxis{std::move(values), unit};
}

std::vector<double> SweepAxis::resolve(const SystemSpec& spec) const {
  double scale = 1.0;
  if (unit == AxisUnit::Kappa) scale = spec.cavity_decay;
  if (unit == AxisUnit::G) scale = mean_coupling(spec);
  std::vector<double> out(values);
  for (double& v : out) v *= scale;
  return out;
}

void ExperimentConfig::validate() const {
  system.validate();
  if (threads < 1) config_error("threads must be >= 1");
  if (readout.points_per_linewidth < 5.0) config_error("readout.points_per_linewidth must be >= 5");
  if (!(readout.min_prominence >= 0.0 && readout.min_prominence < 1.0)) {
    config_error("readout.min_prominence must lie in [0, 1)");
  }
  if (readout.noise < 0.0) config_error("readout.noise must be >= 0");
  if (truncation.max_truncation < system.cavity_truncation) config_error("truncation.max below cavity_truncation");

  std::vector<std::string> required, optional;
  switch (kind) {
    case ExperimentKind::AvoidedCrossing:
      required = {"detuning"};
      if (system.emitters.size() != 1) config_error("avoided_crossing needs exactly one emitter");
      break;
    case ExperimentKind::PnrVsAmplitude:
      required = {"amplitude"};
      optional = {"detuning"};
      break;
    case ExperimentKind::PnrVsDriveFreq:
      required = {"drive_detuning"};
      optional = {"amplitude"};
      if (!find_axis(*this, "amplitude") && !system.drive) {
        config_error("pnr_vs_drive_freq needs an amplitude axis or system.drive");
      }
      break;
    case ExperimentKind::G2Map:
      required = {"detuning", "amplitude"};
      break;
    case ExperimentKind::Calibration:
      required = {"drive_amp_v"};
      if (!(calibration.eta_per_volt > 0.0)) config_error("calibration.eta_per_volt must be positive");
      if (!(calibration.duration_us > 0.0) || calibration.samples < 24) {
        config_error("calibration needs duration_us > 0 and samples >= 24");
      }
      break;
    case ExperimentKind::LadderTable:
      if (ladder.emitters.empty() || ladder.n_max < 1) config_error("ladder needs emitters and n_max >= 1");
      for (int n : ladder.emitters) {
        if (n < 1) config_error("ladder emitter counts must be >= 1");
      }
      break;
  }
  if ((kind == ExperimentKind::Calibration || kind == ExperimentKind::G2Map) && system.emitters.empty()) {
    config_error(to_string(kind) + " needs at least one emitter");
  }
  for (const auto& name : required) {
    if (!find_axis(*this, name)) config_error(to_string(kind) + " requires sweep axis '" + name + "'");
  }
  for (const auto& [name, axis] : sweep) {
    const bool known = std::find(required.begin(), required.end(), name) != required.end() ||
                       std::find(optional.begin(), optional.end(), name) != optional.end();
    if (!known) config_error("sweep axis '" + name + "' is not used by " + to_string(kind));
    if (axis.values.empty()) config_error("sweep axis '" + name + "' is empty");
    if ((name == "amplitude" || name == "drive_amp_v") &&
        std::any_of(axis.values.begin(), axis.values.end(), [](double v) { return v < 0.0; })) {
      config_error("sweep axis '" + name + "' must be nonnegative");
    }
    if (axis.unit == AxisUnit::G && system.emitters.empty()) config_error("unit 'g' needs at least one emitter");
  }
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const SweepPoint& p) { return p.status != "ok"; }));
}

double SweepResult::param(std::size_t point, const std::string& name) const {
  return points.at(point).params.at(column_of(param_names, name));
}

double SweepResult::value(std::size_t point, const std::string& name) const {
  return points.at(point).values.at(column_of(value_names, name));
}

double SweepResult::summary_value(const std::string& name) const {
  for (const auto& [k, v] : summary) {
    if (k == name) return v;
  }
  return kNaN;
}

double mean_coupling(const SystemSpec& spec) {
  if (spec.emitters.empty()) throw Error(ErrorCode::NoPolariton, "no emitters");
  double sum = 0.0;
  for (const auto& e : spec.emitters) sum += e.coupling;
  return sum / static_cast<double>(spec.emitters.size());
}

SystemSpec with_detuning(SystemSpec spec, double detuning_mhz) {
  for (auto& e : spec.emitters) e.freq = spec.cavity_freq + detuning_mhz;
  return spec;
}

double drive_frequency(const SystemSpec& spec, DriveRule rule) {
  if (rule == DriveRule::Fixed) {
    if (!spec.drive) throw Error(ErrorCode::MissingDrive, "fixed drive rule needs system.drive");
    return spec.drive->freq;
  }
  if (rule == DriveRule::Cavity || spec.emitters.empty()) return spec.cavity_freq;
  if (rule == DriveRule::Auto) {
    if (std::abs(emitter_detuning(spec)) >= 10.0 * mean_coupling(spec)) return spec.cavity_freq;
    rule = DriveRule::LowerPolariton;
  }
  std::vector<SingleExcitationMode> bright;
  for (const auto& m : single_excitation_modes(spec)) {
    if (m.cavity_weight > kBrightWeight) bright.push_back(m);
  }
  if (bright.empty()) throw Error(ErrorCode::NoPolariton, "no single-excitation mode couples to the cavity");
  return rule == DriveRule::LowerPolariton ? bright.front().frequency : bright.back().frequency;
}

DrivenSolve solve_driven(SystemSpec spec, const TruncationPolicy& policy) {
  if (!spec.drive) throw Error(ErrorCode::MissingDrive, "steady-state sweep point has no drive");
  while (true) {
    const SteadyStateResult ss = steadystate(spec);
    const PhotonDistribution p = cavity_distribution(ss.state);
    const double tail = ss.diagnostics.truncation_tail;
    const bool grow = policy.adaptive && tail > policy.tail_tolerance && spec.cavity_truncation < policy.max_truncation;
    if (!grow) {
      DrivenSolve out;
      out.distribution = p.probabilities();
      out.mean_photon_number = p.mean();
      out.truncation_tail = tail;
      out.residual = ss.residual;
      try {
        out.g2 = g2_from_state(ss.state);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UndefinedCorrelation) throw;
      }
      out.spec = std::move(spec);
      return out;
    }
    spec.cavity_truncation = std::min(policy.max_truncation,
                                      static_cast<int>(std::ceil(1.5 * spec.cavity_truncation + 2.0)));
  }
}

SweepResult run_avoided_crossing(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> detunings = axis_values(cfg, "detuning", cfg.system);
  const std::vector<std::string> params{"N", "g_mhz", "cavity_freq_mhz", "detuning_mhz", "emitter_freq_mhz"};
  const std::vector<std::string> values{"lower_mhz", "upper_mhz", "splitting_mhz", "lower_cavity_weight"};
  auto evaluated = evaluate<Evaluated>(detunings.size(), cfg.threads, [&](std::size_t i) {
    const SystemSpec spec = with_detuning(cfg.system, detunings[i]);
    std::vector<double> row{static_cast<double>(spec.emitters.size()), mean_coupling(spec), spec.cavity_freq,
                            detunings[i], spec.emitters.front().freq};
    return guarded(std::move(row), values.size(), [&](Evaluated& e) {
      const auto modes = single_excitation_modes(spec);
      auto& v = e.point.values;
      v[0] = modes.front().frequency;
      v[1] = modes.back().frequency;
      v[2] = v[1] - v[0];
      v[3] = modes.front().cavity_weight;
    });
  });
  SweepResult result = collect(cfg.kind, params, values, std::move(evaluated));

  std::vector<double> d, s;
  for (const auto& p : result.points) {
    if (p.status != "ok") continue;
    d.push_back(p.params[3]);
    s.push_back(p.values[2]);
  }
  if (d.size() >= 3) {
    const auto it = std::min_element(s.begin(), s.end());
    const std::size_t k = static_cast<std::size_t>(it - s.begin());
    Eigen::VectorXd x(2);
    x << 0.5 * *it, d[k];
    Hyperbola f(Eigen::Map<Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())),
                Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size())));
    Eigen::LevenbergMarquardt<Hyperbola> lm(f);
    lm.setXtol(1e-14);
    lm.setFtol(1e-14);
    lm.minimize(x);
    Eigen::VectorXd r(static_cast<Eigen::Index>(d.size()));
    f(x, r);
    result.summary.emplace_back("fitted_g_mhz", std::abs(x(0)));
    result.summary.emplace_back("fitted_center_mhz", x(1));
    result.summary.emplace_back("fit_rms_mhz", std::sqrt(r.squaredNorm() / static_cast<double>(d.size())));
    result.summary.emplace_back("min_splitting_mhz", *it);
    result.summary.emplace_back("min_splitting_detuning_mhz", d[k]);
  } else {
    result.notes.push_back("fewer than 3 valid points; hyperbola fit skipped");
  }
  return result;
}

SweepResult run_pnr_vs_amplitude(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> detunings = axis_values(cfg, "detuning", cfg.system, {0.0});
  const std::vector<double> etas = axis_values(cfg, "amplitude", cfg.system);
  const std::size_t count = detunings.size() * etas.size();
  auto evaluated = evaluate<Evaluated>(count, cfg.threads, [&](std::size_t i) {
    return driven_point(cfg, cfg.system, detunings[i / etas.size()], std::nullopt, etas[i % etas.size()], i);
  });
  return collect(cfg.kind, driven_params(), driven_values(), std::move(evaluated));
}

SweepResult run_pnr_vs_drive_freq(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> drive_detunings = axis_values(cfg, "drive_detuning", cfg.system);
  const std::vector<double> etas =
      axis_values(cfg, "amplitude", cfg.system, {cfg.system.drive ? cfg.system.drive->amplitude : 0.0});
  const std::size_t count = drive_detunings.size() * etas.size();
  const double detuning = std::isnan(emitter_detuning(cfg.system)) ? 0.0 : emitter_detuning(cfg.system);
  auto evaluated = evaluate<Evaluated>(count, cfg.threads, [&](std::size_t i) {
    const double wd = cfg.system.cavity_freq + drive_detunings[i % drive_detunings.size()];
    return driven_point(cfg, cfg.system, detuning, wd, etas[i / drive_detunings.size()], i);
  });
  SweepResult result = collect(cfg.kind, driven_params(), driven_values(), std::move(evaluated));

  // Drive detunings that maximize the one-photon weight on each side of the cavity.
  double best_lo = kNaN, best_hi = kNaN, p_lo = -1.0, p_hi = -1.0;
  for (const auto& p : result.points) {
    if (p.status != "ok") continue;
    const double dd = p.params[7];
    const double p1 = p.values[4];
    if (dd < 0.0 && p1 > p_lo) {
      p_lo = p1;
      best_lo = dd;
    }
    if (dd > 0.0 && p1 > p_hi) {
      p_hi = p1;
      best_hi = dd;
    }
  }
  result.summary.emplace_back("peak_drive_detuning_lower_mhz", best_lo);
  result.summary.emplace_back("peak_drive_detuning_upper_mhz", best_hi);
  if (!cfg.system.emitters.empty()) {
    result.summary.emplace_back("expected_lower_mhz", drive_frequency(cfg.system, DriveRule::LowerPolariton) -
                                                          cfg.system.cavity_freq);
    result.summary.emplace_back("expected_upper_mhz", drive_frequency(cfg.system, DriveRule::UpperPolariton) -
                                                          cfg.system.cavity_freq);
  }
  return result;
}

SweepResult run_g2_map(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> detunings = axis_values(cfg, "detuning", cfg.system);
  const std::vector<double> etas = axis_values(cfg, "amplitude", cfg.system);
  const std::size_t count = detunings.size() * etas.size();
  auto evaluated = evaluate<Evaluated>(count, cfg.threads, [&](std::size_t i) {
    return driven_point(cfg, cfg.system, detunings[i / etas.size()], std::nullopt, etas[i % etas.size()], i);
  });
  SweepResult result = collect(cfg.kind, driven_params(), driven_values(), std::move(evaluated));
  double worst = 0.0;
  std::size_t compared = 0;
  for (const auto& p : result.points) {
    if (p.status == "ok" && !std::isnan(p.values[3])) {
      worst = std::max(worst, p.values[3]);
      ++compared;
    }
  }
  result.summary.emplace_back("route_points_compared", static_cast<double>(compared));
  result.summary.emplace_back("route_max_rel_diff", compared ? worst : kNaN);
  result.spectra.clear();  // maps are large; spectra are only kept by the pnr kinds
  return result;
}

SweepResult run_calibration(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> volts = axis_values(cfg, "drive_amp_v", cfg.system);
  const CalibrationSettings& c = cfg.calibration;
  const std::vector<std::string> params{"N",       "g_mhz",   "kappa_mhz",      "gamma_mhz",
                                        "polariton", "drive_amp_v", "eta_mhz", "drive_freq_mhz"};
  const std::vector<std::string> values{"rabi_rate_mhz", "decay_rate", "fit_residual", "cavity_amplitude",
                                        "eta_from_rate_mhz"};
  const std::vector<double> times = linspace(0.0, c.duration_us, c.samples);

  const auto modes = single_excitation_modes(cfg.system);
  std::vector<SingleExcitationMode> bright;
  for (const auto& m : modes) {
    if (m.cavity_weight > kBrightWeight) bright.push_back(m);
  }
  if (bright.size() < 2) config_error("calibration needs two bright polaritons");
  const SingleExcitationMode polaritons[2] = {bright.front(), bright.back()};

  auto evaluated = evaluate<Evaluated>(volts.size() * 2, cfg.threads, [&](std::size_t i) {
    const int which = static_cast<int>(i % 2);
    const SingleExcitationMode& mode = polaritons[which];
    const double v = volts[i / 2];
    const double eta = v * c.eta_per_volt;
    std::vector<double> row{static_cast<double>(cfg.system.emitters.size()),
                            mean_coupling(cfg.system),
                            cfg.system.cavity_decay,
                            mean_decay(cfg.system),
                            static_cast<double>(which),
                            v,
                            eta,
                            mode.frequency};
    return guarded(std::move(row), values.size(), [&](Evaluated& e) {
      SystemSpec spec = cfg.system;
      spec.drive = Drive{eta, mode.frequency};
      const CompositeSpace space = spec.space();
      const Liouvillian l = build_liouvillian(build_rotating_frame(spec), build_collapse_set(spec));
      OperatorMatrix excited = OperatorMatrix::zero(space);
      for (std::size_t k = 0; k < spec.emitters.size(); ++k) {
        excited += embed(number_operator(2), SystemSpec::emitter_index(k), space);
      }
      const std::vector<int> ground(space.subsystems(), 0);
      const std::vector<OperatorMatrix> obs{excited};
      const auto pops = evolve_expectations(DensityState::basis(space, ground), l, times, obs);
      RabiTrace trace;
      trace.drive_amp_v = v;
      trace.times_us = times;
      for (const auto& row_values : pops) trace.population.push_back(row_values[0]);
      const RabiFit fit = fit_rabi(trace.times_us, trace.population);
      auto& out = e.point.values;
      out[0] = fit.rabi_rate;
      out[1] = fit.decay_rate;
      out[2] = fit.residual;
      out[3] = mode.cavity_amplitude;
      out[4] = drive_from_rabi_rate(fit.rabi_rate, mode.cavity_amplitude);
      e.trace = std::move(trace);
    });
  });
  SweepResult result = collect(cfg.kind, params, values, std::move(evaluated));

  const char* names[2] = {"lower", "upper"};
  double slopes[2] = {kNaN, kNaN};
  for (int which = 0; which < 2; ++which) {
    std::vector<double> amps, rates;
    for (const auto& p : result.points) {
      if (p.status == "ok" && static_cast<int>(p.params[4]) == which) {
        amps.push_back(p.params[5]);
        rates.push_back(p.values[0]);
      }
    }
    try {
      const DriveCalibration cal = calibrate_drive(amps, rates, c.fit_points);
      slopes[which] = cal.slope;
      const std::string n = names[which];
      result.summary.emplace_back("slope_" + n + "_mhz_per_v", cal.slope);
      result.summary.emplace_back("intercept_" + n + "_mhz", cal.intercept);
      result.summary.emplace_back("eta_per_volt_" + n, cal.slope / (2.0 * polaritons[which].cavity_amplitude));
    } catch (const Error& e) {
      result.notes.push_back(std::string(names[which]) + " calibration failed: " + e.what());
    }
  }
  result.summary.emplace_back("eta_per_volt_configured", c.eta_per_volt);
  if (!std::isnan(slopes[0]) && !std::isnan(slopes[1])) {
    const double k = c.eta_per_volt;
    // |<0|eta(a+a^dag)|-+>| = f/2. Their squares sum to eta^2; their plain sum does not.
    result.summary.emplace_back("element_square_sum_over_eta2",
                                (slopes[0] * slopes[0] + slopes[1] * slopes[1]) / (4.0 * k * k));
    result.summary.emplace_back("element_sum_over_eta", (slopes[0] + slopes[1]) / (2.0 * k));
  }
  return result;
}

EigenLadder run_ladder_table(const ExperimentConfig& cfg) {
  cfg.validate();
  const SystemSpec& s = cfg.system;
  const double g = s.emitters.empty() ? 13.2 : mean_coupling(s);
  const double wa = s.emitters.empty() ? s.cavity_freq : s.emitters.front().freq;
  return EigenLadder::build(cfg.ladder.emitters, cfg.ladder.n_max, s.cavity_freq, wa, g);
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.kind = cfg.kind;
  switch (cfg.kind) {
    case ExperimentKind::AvoidedCrossing: out.sweep = run_avoided_crossing(cfg); break;
    case ExperimentKind::PnrVsAmplitude: out.sweep = run_pnr_vs_amplitude(cfg); break;
    case ExperimentKind::PnrVsDriveFreq: out.sweep = run_pnr_vs_drive_freq(cfg); break;
    case ExperimentKind::G2Map: out.sweep = run_g2_map(cfg); break;
    case ExperimentKind::Calibration: out.sweep = run_calibration(cfg); break;
    case ExperimentKind::LadderTable: out.ladder = run_ladder_table(cfg); break;
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  bool any_distribution = false;
  for (const auto& p : result.points) any_distribution = any_distribution || !p.distribution.empty();

  std::string header;
  for (const auto& n : result.param_names) header += n + ',';
  header += "status";
  for (const auto& n : result.value_names) header += ',' + n;
  if (any_distribution) header += ",n,P_n";
  out << header << '\n';

  for (const auto& p : result.points) {
    std::string prefix;
    for (double v : p.params) prefix += cell(v) + ',';
    prefix += p.status;
    for (double v : p.values) prefix += ',' + cell(v);
    if (!any_distribution) {
      out << prefix << '\n';
    } else if (p.distribution.empty()) {
      out << prefix << ",,\n";
    } else {
      for (std::size_t n = 0; n < p.distribution.size(); ++n) {
        out << prefix << ',' << n << ',' << cell(p.distribution[n]) << '\n';
      }
    }
  }
}

void write_sweep_spectra_csv(std::ostream& out, const SweepResult& result) {
  for (const auto& n : result.param_names) out << n << ',';
  out << "freq_ghz,response\n";
  for (std::size_t i = 0; i < result.spectra.size() && i < result.points.size(); ++i) {
    if (!result.spectra[i]) continue;
    std::string prefix;
    for (double v : result.points[i].params) prefix += cell(v) + ',';
    const PnrSpectrum& s = *result.spectra[i];
    for (std::size_t k = 0; k < s.size(); ++k) {
      out << prefix << detail::format_number(s.freq()[k]) << ',' << detail::format_number(s.response()[k]) << '\n';
    }
  }
}

std::string sweep_report_json(const ExperimentConfig& cfg, const SweepResult& result, int indent) {
  using nlohmann::ordered_json;
  auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
  ordered_json doc;
  doc["kind"] = to_string(result.kind);
  doc["config"] = ordered_json::parse(experiment_config_to_json(cfg));
  doc["config"].erase("threads");  // worker count does not change results
  doc["points"] = result.points.size();
  doc["failures"] = result.failures();
  ordered_json summary = ordered_json::object();
  for (const auto& [k, v] : result.summary) summary[k] = num(v);
  doc["summary"] = std::move(summary);
  ordered_json failed = ordered_json::array();
  ordered_json warnings = ordered_json::array();
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& p = result.points[i];
    if (p.status != "ok") {
      failed.push_back({{"index", i}, {"status", p.status}, {"message", p.message}});
    } else if (!p.message.empty()) {
      warnings.push_back({{"index", i}, {"message", p.message}});
    }
  }
  doc["failed_points"] = std::move(failed);
  doc["warnings"] = std::move(warnings);
  doc["notes"] = result.notes;
  return doc.dump(indent);
}

std::vector<std::string> write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentOutput& output,
                                                  const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::ConfigInvalid, "no output path given");
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::vector<std::string> written;
  if (output.ladder) {
    std::ostringstream csv;
    output.ladder->write_csv(csv);
    write_file(path, csv.str());
    written.push_back(path);
    return written;
  }
  if (!output.sweep) throw Error(ErrorCode::InvalidState, "experiment produced no result");
  const SweepResult& r = *output.sweep;
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  write_file(path, csv.str());
  written.push_back(path);

  const std::string json_path = sibling(path, "", ".json");
  write_file(json_path, sweep_report_json(cfg, r) + "\n");
  written.push_back(json_path);

  if (std::any_of(r.spectra.begin(), r.spectra.end(), [](const auto& s) { return s.has_value(); })) {
    std::ostringstream spectra;
    write_sweep_spectra_csv(spectra, r);
    const std::string spectra_path = sibling(path, "_spectra", ".csv");
    write_file(spectra_path, spectra.str());
    written.push_back(spectra_path);
  }
  if (!r.traces.empty()) {
    const char* names[2] = {"lower", "upper"};
    for (int which = 0; which < 2; ++which) {
      std::vector<RabiTrace> traces;
      for (std::size_t i = 0; i < r.points.size() && i < r.traces.size(); ++i) {
        if (r.traces[i] && static_cast<int>(r.points[i].params[4]) == which) traces.push_back(*r.traces[i]);
      }
      if (traces.empty()) continue;
      std::ostringstream t;
      write_traces_csv(t, traces);
      const std::string trace_path = sibling(path, std::string("_traces_") + names[which], ".csv");
      write_file(trace_path, t.str());
      written.push_back(trace_path);
    }
  }
  return written;
}

}  // namespace blockade
