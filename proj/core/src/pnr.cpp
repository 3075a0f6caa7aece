#include "blockade/pnr.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "blockade/dynamics.hpp"
#include "blockade/eigenstructure.hpp"
#include "blockade/errors.hpp"

namespace blockade {
namespace {

constexpr double kMhzPerGhz = 1000.0;
constexpr double kMinPointsPerLinewidth = 5.0;

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Vertex of the parabola through three samples, clamped to the outer two.
double parabolic_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double a = (x1 - x0) * (y1 - y2);
  const double b = (x1 - x2) * (y1 - y0);
  const double den = a - b;
  if (den == 0.0) return x1;
  const double x = x1 - 0.5 * ((x1 - x0) * a - (x1 - x2) * b) / den;
  return std::clamp(x, x0, x2);
}

}  // namespace

PnrSpectrum::PnrSpectrum(std::vector<double> freq_ghz, std::vector<double> response, SpectrumMeta meta)
    : freq_(std::move(freq_ghz)), response_(std::move(response)), meta_(meta) {
  if (freq_.size() != response_.size()) throw Error(ErrorCode::InvalidState, "grid and response sizes differ");
  if (freq_.size() < 3) throw Error(ErrorCode::InvalidState, "spectrum needs at least 3 points");
  for (std::size_t i = 0; i < freq_.size(); ++i) {
    if (!std::isfinite(freq_[i]) || !std::isfinite(response_[i])) {
      throw Error(ErrorCode::InvalidState, "non-finite value at row " + std::to_string(i));
    }
    if (i > 0 && !(freq_[i] > freq_[i - 1])) {
      throw Error(ErrorCode::InvalidState, "frequency grid not strictly ascending at row " + std::to_string(i));
    }
  }
}

double PnrSpectrum::max_step_mhz() const {
  double step = 0.0;
  for (std::size_t i = 1; i < freq_.size(); ++i) step = std::max(step, freq_[i] - freq_[i - 1]);
  return step * kMhzPerGhz;
}

LineLadder LineLadder::dispersive() { return LineLadder(0, 0.0); }

LineLadder LineLadder::resonant(int n_emitters, double detuning_over_g) {
  if (n_emitters < 1) throw Error(ErrorCode::NoPolariton, "resonant ladder needs N >= 1");
  if (!std::isfinite(detuning_over_g)) throw Error(ErrorCode::InvalidSpec, "detuning must be finite");
  return LineLadder(n_emitters, detuning_over_g);
}

double LineLadder::offset(int n) const {
  if (n < 0) throw Error(ErrorCode::IndexOutOfRange, "photon number must be >= 0");
  if (n == 0) return 0.0;
  if (is_dispersive()) return 2.0 * n;
  const auto entries = solve_manifold(manifold_hamiltonian(emitters_, n, 0.0, detuning_over_g_, 1.0));
  return 2.0 * entries.front().cavity_weight;
}

std::string LineLadder::describe() const {
  return is_dispersive() ? std::string("dispersive") : "resonant:" + std::to_string(emitters_);
}

LineLadder LineLadder::parse(const std::string& text) {
  if (text == "dispersive") return dispersive();
  const std::string prefix = "resonant:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string tail = text.substr(prefix.size());
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == tail.size() && used > 0 && n >= 1) return resonant(n);
  }
  throw Error(ErrorCode::ConfigInvalid, "ladder must be 'dispersive' or 'resonant:N', got '" + text + "'");
}

std::vector<double> uniform_grid(double start_ghz, double stop_ghz, std::size_t points) {
  if (points < 2 || !(stop_ghz > start_ghz)) {
    throw Error(ErrorCode::InvalidState, "grid needs >= 2 points and stop > start");
  }
  std::vector<double> grid(points);
  const double step = (stop_ghz - start_ghz) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = start_ghz + step * static_cast<double>(i);
  grid.back() = stop_ghz;
  return grid;
}

PnrSpectrum synthesize_spectrum(const PhotonDistribution& p, double chi_mhz, double omega_w_tilde_ghz,
                                const LineLadder& ladder, double linewidth_mhz, std::vector<double> grid_ghz,
                                SpectrumMeta meta) {
  if (!(linewidth_mhz > 0.0)) throw Error(ErrorCode::InvalidState, "linewidth must be positive");
  std::vector<double> response(grid_ghz.size(), 0.0);
  PnrSpectrum shape(grid_ghz, response, meta);
  if (shape.max_step_mhz() * kMinPointsPerLinewidth > linewidth_mhz) {
    throw Error(ErrorCode::ResolutionError, "grid step " + std::to_string(shape.max_step_mhz()) +
                                                " MHz is coarser than linewidth/5 (" +
                                                std::to_string(linewidth_mhz) + " MHz)");
  }
  const double hw2 = 0.25 * linewidth_mhz * linewidth_mhz;
  for (int n = 0; n <= p.n_max(); ++n) {
    const double weight = p[static_cast<std::size_t>(n)];
    if (weight == 0.0) continue;
    const double centre_mhz = omega_w_tilde_ghz * kMhzPerGhz + ladder.offset(n) * chi_mhz;
    for (std::size_t i = 0; i < grid_ghz.size(); ++i) {
      const double d = grid_ghz[i] * kMhzPerGhz - centre_mhz;
      response[i] += weight * hw2 / (d * d + hw2);
    }
  }
  return PnrSpectrum(std::move(grid_ghz), std::move(response), meta);
}

PeakSet find_peaks(const PnrSpectrum& spectrum, double min_prominence_fraction) {
  if (!(min_prominence_fraction >= 0.0)) throw Error(ErrorCode::InvalidState, "min_prominence must be >= 0");
  const auto& f = spectrum.freq();
  PeakSet out;
  out.baseline = median(spectrum.response());
  std::vector<double> y(spectrum.response());
  for (double& v : y) v -= out.baseline;
  const std::size_t n = y.size();
  const double top = *std::max_element(y.begin(), y.end());
  if (!(top > 0.0)) throw Error(ErrorCode::NoPeaks, "response never rises above its median");
  out.threshold = min_prominence_fraction * top;

  // Local maxima; flat tops report their middle sample.
  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < n;) {
    if (y[i - 1] < y[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && y[ahead] == y[i]) ++ahead;
      if (y[ahead] < y[i]) {
        maxima.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }

  for (const std::size_t i : maxima) {
    double left_min = y[i];
    for (std::size_t j = i; j-- > 0;) {
      if (y[j] > y[i]) break;
      left_min = std::min(left_min, y[j]);
    }
    double right_min = y[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (y[j] > y[i]) break;
      right_min = std::min(right_min, y[j]);
    }
    const double prominence = y[i] - std::max(left_min, right_min);
    if (prominence < out.threshold || prominence <= 0.0) continue;

    Peak peak;
    peak.index = i;
    peak.height = y[i];
    peak.prominence = prominence;
    peak.position = (y[i - 1] != y[i] && y[i + 1] != y[i])
                        ? parabolic_vertex(f[i - 1], y[i - 1], f[i], y[i], f[i + 1], y[i + 1])
                        : f[i];
    std::size_t lo = i;
    while (lo > 0 && y[lo - 1] <= y[lo]) --lo;
    std::size_t hi = i;
    while (hi + 1 < n && y[hi + 1] <= y[hi]) ++hi;
    for (std::size_t j = lo; j < hi; ++j) {
      peak.area += 0.5 * (std::max(y[j], 0.0) + std::max(y[j + 1], 0.0)) * (f[j + 1] - f[j]);
    }
    out.peaks.push_back(peak);
  }
  if (out.peaks.empty()) throw Error(ErrorCode::NoPeaks, "no peak passes the prominence threshold");
  return out;
}

PeakSet assign_photon_numbers(PeakSet peaks, double omega_w_tilde_ghz, double chi_mhz, const LineLadder& ladder,
                              double tolerance_chi, int n_max) {
  if (chi_mhz == 0.0) throw Error(ErrorCode::SingularParameter, "chi is zero; lines coincide");
  if (n_max < 0) throw Error(ErrorCode::IndexOutOfRange, "n_max must be >= 0");
  std::vector<double> predicted(static_cast<std::size_t>(n_max) + 1);
  for (int k = 0; k <= n_max; ++k) {
    predicted[static_cast<std::size_t>(k)] = omega_w_tilde_ghz * kMhzPerGhz + ladder.offset(k) * chi_mhz;
  }
  const double tolerance = tolerance_chi * std::abs(chi_mhz);
  std::vector<int> owner(predicted.size(), -1);
  for (std::size_t p = 0; p < peaks.peaks.size(); ++p) {
    Peak& peak = peaks.peaks[p];
    const double pos = peak.position * kMhzPerGhz;
    std::size_t best = 0;
    for (std::size_t k = 1; k < predicted.size(); ++k) {
      if (std::abs(pos - predicted[k]) < std::abs(pos - predicted[best])) best = k;
    }
    if (std::abs(pos - predicted[best]) > tolerance) {
      peak.assigned_n = -1;
      peak.spurious = true;
      continue;
    }
    if (owner[best] >= 0) {
      throw Error(ErrorCode::AmbiguousAssignment,
                  "two peaks map to n=" + std::to_string(best) + " (" +
                      std::to_string(peaks.peaks[static_cast<std::size_t>(owner[best])].position) + " and " +
                      std::to_string(peak.position) + " GHz)");
    }
    owner[best] = static_cast<int>(p);
    peak.assigned_n = static_cast<int>(best);
    peak.spurious = false;
  }
  return peaks;
}

PhotonDistribution distribution_from_peaks(const PeakSet& peaks, PeakWeight weight) {
  int top = -1;
  for (const Peak& p : peaks.peaks) {
    if (!p.spurious && p.assigned_n >= 0) top = std::max(top, p.assigned_n);
  }
  if (top < 0) throw Error(ErrorCode::AllSpurious, "no peak is assigned to a photon number");
  std::vector<double> w(static_cast<std::size_t>(top) + 1, 0.0);
  for (const Peak& p : peaks.peaks) {
    if (p.spurious || p.assigned_n < 0) continue;
    w[static_cast<std::size_t>(p.assigned_n)] = weight == PeakWeight::Prominence ? p.prominence : p.area;
  }
  return PhotonDistribution::from_weights(w);
}

namespace {

bool points_downward(const PnrSpectrum& spectrum) {
  const double base = median(spectrum.response());
  const auto [lo, hi] = std::minmax_element(spectrum.response().begin(), spectrum.response().end());
  return base - *lo > *hi - base;
}

}  // namespace

PnrSpectrum normalize_orientation(const PnrSpectrum& spectrum) {
  if (!points_downward(spectrum)) return spectrum;
  std::vector<double> flipped(spectrum.response());
  for (double& v : flipped) v = -v;
  return PnrSpectrum(spectrum.freq(), std::move(flipped), spectrum.meta());
}

AnalysisReport analyze_spectrum(const PnrSpectrum& spectrum, double chi_mhz, double omega_w_tilde_ghz,
                                const LineLadder& ladder, const AnalysisOptions& options) {
  AnalysisReport report;
  const PnrSpectrum* input = &spectrum;
  std::optional<PnrSpectrum> oriented;
  if (spectrum.meta().source == SpectrumSource::Measured) {
    report.orientation_flipped = points_downward(spectrum);
    oriented = normalize_orientation(spectrum);
    if (report.orientation_flipped) report.notes.push_back("response negated so that peaks point upward");
    input = &*oriented;
  }

  report.peaks = assign_photon_numbers(find_peaks(*input, options.min_prominence_fraction), omega_w_tilde_ghz,
                                       chi_mhz, ladder, options.tolerance_chi, options.n_max);
  for (const Peak& p : report.peaks.peaks) {
    if (p.spurious) {
      ++report.spurious_count;
      report.notes.push_back("spurious peak at " + std::to_string(p.position) + " GHz excluded");
      continue;
    }
    const double predicted = omega_w_tilde_ghz * kMhzPerGhz + ladder.offset(p.assigned_n) * chi_mhz;
    report.max_assignment_error_chi = std::max(report.max_assignment_error_chi,
                                               std::abs(p.position * kMhzPerGhz - predicted) / std::abs(chi_mhz));
  }
  report.distribution = distribution_from_peaks(report.peaks, options.weight);
  report.mean_photon_number = report.distribution.mean();
  for (int m = 2; m <= options.max_order; ++m) {
    try {
      report.gm.emplace_back(gm_from_distribution(report.distribution, m));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UndefinedCorrelation) throw;
      report.gm.emplace_back(std::nullopt);
    }
  }
  if (!report.gm.empty()) report.g2 = report.gm.front();
  if (!report.g2) report.notes.push_back("only the vacuum line is present; correlations undefined");
  return report;
}

double g2_from_spectrum(const PnrSpectrum& spectrum, double chi_mhz, double omega_w_tilde_ghz,
                        const LineLadder& ladder, const AnalysisOptions& options) {
  const PnrSpectrum oriented =
      spectrum.meta().source == SpectrumSource::Measured ? normalize_orientation(spectrum) : spectrum;
  const PeakSet peaks = assign_photon_numbers(find_peaks(oriented, options.min_prominence_fraction),
                                              omega_w_tilde_ghz, chi_mhz, ladder, options.tolerance_chi,
                                              options.n_max);
  return gm_from_distribution(distribution_from_peaks(peaks, options.weight), 2);
}

namespace {

// Residuals of A exp(-G t) cos(2 pi f t + phi) + c; x = (A, G, f, phi, c).
struct DampedCosine : Eigen::DenseFunctor<double> {
  DampedCosine(const Eigen::VectorXd& t, const Eigen::VectorXd& y)
      : Eigen::DenseFunctor<double>(5, static_cast<int>(t.size())), t_(t), y_(y) {}

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    for (Eigen::Index i = 0; i < t_.size(); ++i) {
      const double env = x(0) * std::exp(-x(1) * t_(i));
      r(i) = env * std::cos(2.0 * std::numbers::pi * x(2) * t_(i) + x(3)) + x(4) - y_(i);
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
    for (Eigen::Index i = 0; i < t_.size(); ++i) {
      const double t = t_(i);
      const double e = std::exp(-x(1) * t);
      const double arg = 2.0 * std::numbers::pi * x(2) * t + x(3);
      const double c = std::cos(arg);
      const double s = std::sin(arg);
      j(i, 0) = e * c;
      j(i, 1) = -t * x(0) * e * c;
      j(i, 2) = -2.0 * std::numbers::pi * t * x(0) * e * s;
      j(i, 3) = -x(0) * e * s;
      j(i, 4) = 1.0;
    }
    return 0;
  }

  Eigen::VectorXd t_;
  Eigen::VectorXd y_;
};

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

RabiFit fit_rabi(std::span<const double> times_us, std::span<const double> population) {
  const std::size_t n = times_us.size();
  if (n != population.size()) throw Error(ErrorCode::InsufficientData, "times and populations differ in length");
  if (n < 24) throw Error(ErrorCode::InsufficientData, "need at least 24 samples, got " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(times_us[i]) || !std::isfinite(population[i])) {
      throw Error(ErrorCode::InsufficientData, "non-finite sample");
    }
  }
  const double t0 = times_us.front();
  const double span = times_us.back() - t0;
  const double dt = span / static_cast<double>(n - 1);
  if (!(dt > 0.0)) throw Error(ErrorCode::InsufficientData, "time axis does not advance");
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(times_us[i] - times_us[i - 1] - dt) > 1e-6 * dt + 1e-12) {
      throw Error(ErrorCode::InsufficientData, "time axis must be uniformly sampled");
    }
  }

  const double mean = std::accumulate(population.begin(), population.end(), 0.0) / static_cast<double>(n);
  const std::size_t padded = next_pow2(16 * n);
  std::vector<double> signal(padded, 0.0);
  for (std::size_t i = 0; i < n; ++i) signal[i] = population[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, signal);
  std::size_t best = 1;
  for (std::size_t k = 2; k < padded / 2; ++k) {
    if (std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
  }
  const double f0 = static_cast<double>(best) / (static_cast<double>(padded) * dt);
  if (f0 * span < 3.0) {
    throw Error(ErrorCode::UnderSampled, "trace covers fewer than 3 periods at " + std::to_string(f0) + " MHz");
  }
  if (f0 * dt > 1.0 / 8.0) {
    throw Error(ErrorCode::UnderSampled, "fewer than 8 samples per period at " + std::to_string(f0) + " MHz");
  }

  Eigen::VectorXd t(static_cast<Eigen::Index>(n));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    t(static_cast<Eigen::Index>(i)) = times_us[i] - t0;
    y(static_cast<Eigen::Index>(i)) = population[i];
  }
  const auto [lo, hi] = std::minmax_element(population.begin(), population.end());
  Eigen::VectorXd x(5);
  x << 0.5 * (*hi - *lo), 0.1 / span, f0, std::arg(spectrum[best]), mean;

  DampedCosine functor(t, y);
  Eigen::LevenbergMarquardt<DampedCosine> lm(functor);
  lm.setMaxfev(4000);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  const auto status = lm.minimize(x);
  using S = Eigen::LevenbergMarquardtSpace::Status;
  if (status == S::ImproperInputParameters || status == S::TooManyFunctionEvaluation || status == S::UserAsked ||
      !x.allFinite()) {
    throw Error(ErrorCode::NonConvergence, "Rabi fit did not converge (status " +
                                               std::to_string(static_cast<int>(status)) + ")");
  }

  RabiFit fit;
  double amp = x(0);
  double freq = x(2);
  double phase = x(3);
  if (freq < 0.0) {
    freq = -freq;
    phase = -phase;
  }
  if (amp < 0.0) {
    amp = -amp;
    phase += std::numbers::pi;
  }
  // The fit ran on t - t0; report amplitude and phase for absolute time.
  phase -= 2.0 * std::numbers::pi * freq * t0;
  amp *= std::exp(x(1) * t0);
  fit.rabi_rate = freq;
  fit.decay_rate = x(1);
  fit.amplitude = amp;
  fit.phase = std::remainder(phase, 2.0 * std::numbers::pi);
  fit.offset = x(4);
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  functor(x, r);
  fit.residual = std::sqrt(r.squaredNorm() / static_cast<double>(n));
  fit.evaluations = static_cast<int>(lm.nfev());

  if (fit.rabi_rate * span < 3.0 || fit.rabi_rate * dt > 1.0 / 8.0) {
    throw Error(ErrorCode::UnderSampled,
                "fitted rate " + std::to_string(fit.rabi_rate) + " MHz violates the sampling requirement");
  }
  return fit;
}

DriveCalibration calibrate_drive(std::span<const double> amplitudes_v, std::span<const double> rates_mhz,
                                 std::size_t max_points) {
  if (amplitudes_v.size() != rates_mhz.size()) {
    throw Error(ErrorCode::InsufficientData, "amplitude and rate lists differ in length");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < amplitudes_v.size(); ++i) {
    if (std::isfinite(amplitudes_v[i]) && std::isfinite(rates_mhz[i])) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return amplitudes_v[a] < amplitudes_v[b]; });
  if (order.size() > max_points) order.resize(max_points);
  if (order.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two usable calibration points");

  double sx = 0.0, sy = 0.0;
  for (const std::size_t i : order) {
    sx += amplitudes_v[i];
    sy += rates_mhz[i];
  }
  const double m = static_cast<double>(order.size());
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (const std::size_t i : order) {
    sxx += (amplitudes_v[i] - mx) * (amplitudes_v[i] - mx);
    sxy += (amplitudes_v[i] - mx) * (rates_mhz[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::InsufficientData, "calibration amplitudes are all equal");

  DriveCalibration cal;
  cal.slope = sxy / sxx;
  cal.intercept = my - cal.slope * mx;
  cal.used_points = order.size();
  cal.used.assign(amplitudes_v.size(), false);
  for (const std::size_t i : order) cal.used[i] = true;
  cal.residuals.resize(amplitudes_v.size());
  for (std::size_t i = 0; i < amplitudes_v.size(); ++i) {
    cal.residuals[i] = rates_mhz[i] - (cal.slope * amplitudes_v[i] + cal.intercept);
  }
  return cal;
}

double drive_from_rabi_rate(double rabi_rate_mhz, double cavity_amplitude) {
  if (!(cavity_amplitude > 0.0)) throw Error(ErrorCode::SingularParameter, "mode has no cavity component");
  return rabi_rate_mhz / (2.0 * cavity_amplitude);
}

}  // namespace blockade
