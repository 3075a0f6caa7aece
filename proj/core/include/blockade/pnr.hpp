#pragma once

// Photon-number-resolving witness spectroscopy.
//
// Forward model: a photon distribution P(n) becomes a sum of unit-height
// Lorentzians weighted by P(n), one per photon number, centred on the witness
// line of manifold n. Inverse pipeline: find_peaks -> assign_photon_numbers ->
// distribution_from_peaks -> g^(m)(0).
//
// Frequencies on spectrum grids are in GHz; chi, linewidths and Rabi rates are
// in MHz; times are in microseconds.

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blockade/photon_distribution.hpp"

namespace blockade {

enum class SpectrumSource { Simulated, Measured };

struct SpectrumMeta {
  double drive_amplitude = std::numeric_limits<double>::quiet_NaN();  ///< eta (MHz) if known
  double drive_amp_v = std::numeric_limits<double>::quiet_NaN();      ///< instrument amplitude (V) if known
  double detuning = std::numeric_limits<double>::quiet_NaN();         ///< omega_a - omega_c (MHz)
  int emitters = 0;
  SpectrumSource source = SpectrumSource::Simulated;
};

class PnrSpectrum {
 public:
  /// Throws InvalidState unless the grid is strictly ascending, the sizes match
  /// and every response value is finite.
  PnrSpectrum(std::vector<double> freq_ghz, std::vector<double> response, SpectrumMeta meta = {});

  const std::vector<double>& freq() const noexcept { return freq_; }
  const std::vector<double>& response() const noexcept { return response_; }
  const SpectrumMeta& meta() const noexcept { return meta_; }
  SpectrumMeta& meta() noexcept { return meta_; }
  std::size_t size() const noexcept { return freq_.size(); }
  /// Largest spacing between neighbouring grid points (MHz).
  double max_step_mhz() const;

 private:
  std::vector<double> freq_;
  std::vector<double> response_;
  SpectrumMeta meta_;
};

/// Positions of the photon-number lines relative to the Lamb-shifted witness
/// frequency, in units of chi. Line n sits at 2 w(n) chi where w(n) is the
/// cavity weight <a^dag a> of the lowest-energy branch of excitation manifold n.
class LineLadder {
 public:
  /// Far-detuned emitters: w(n) = n, lines spaced 2 chi.
  static LineLadder dispersive();
  /// N identical emitters at detuning (omega_a - omega_c) = detuning_over_g * g.
  static LineLadder resonant(int n_emitters, double detuning_over_g = 0.0);

  double offset(int n) const;
  bool is_dispersive() const noexcept { return emitters_ == 0; }
  int emitters() const noexcept { return emitters_; }
  double detuning_over_g() const noexcept { return detuning_over_g_; }
  /// "dispersive" or "resonant:N".
  std::string describe() const;
  /// Parses "dispersive" or "resonant:N". Throws ConfigInvalid.
  static LineLadder parse(const std::string& text);

 private:
  LineLadder(int emitters, double detuning_over_g) : emitters_(emitters), detuning_over_g_(detuning_over_g) {}
  int emitters_ = 0;
  double detuning_over_g_ = 0.0;
};

/// `points` equally spaced frequencies from start to stop inclusive (GHz).
std::vector<double> uniform_grid(double start_ghz, double stop_ghz, std::size_t points);

/// S(f) = sum_n P(n) L(f; centre_n, linewidth), L of unit peak height.
/// Throws ResolutionError when the grid has fewer than 5 points per linewidth.
PnrSpectrum synthesize_spectrum(const PhotonDistribution& p, double chi_mhz, double omega_w_tilde_ghz,
                                const LineLadder& ladder, double linewidth_mhz, std::vector<double> grid_ghz,
                                SpectrumMeta meta = {});

struct Peak {
  double position = 0.0;    ///< GHz, refined by a parabola through the top three samples
  double prominence = 0.0;  ///< topographic prominence above the median baseline
  double height = 0.0;      ///< response minus baseline at the sample maximum
  double area = 0.0;        ///< integral of the response between the neighbouring valleys (x GHz)
  std::size_t index = 0;    ///< grid index of the sample maximum
  int assigned_n = -1;      ///< -1 until assigned
  bool spurious = false;    ///< no predicted line within tolerance
};

struct PeakSet {
  std::vector<Peak> peaks;
  double baseline = 0.0;   ///< median that was subtracted
  double threshold = 0.0;  ///< absolute prominence cut
};

/// Local maxima whose prominence is at least min_prominence_fraction times the
/// largest baseline-subtracted response. Throws NoPeaks.
PeakSet find_peaks(const PnrSpectrum& spectrum, double min_prominence_fraction = 0.05);

/// Nearest-line assignment. Peaks further than tolerance_chi * |chi| from every
/// predicted line are flagged spurious. Throws AmbiguousAssignment when two
/// peaks claim the same n.
PeakSet assign_photon_numbers(PeakSet peaks, double omega_w_tilde_ghz, double chi_mhz, const LineLadder& ladder,
                              double tolerance_chi = 0.25, int n_max = 24);

enum class PeakWeight { Prominence, Area };

/// P(n) proportional to the weight of the peak assigned to n; zero for unobserved
/// n. Area weighting overcounts overlapping lines and is offered only for
/// comparison. Throws AllSpurious.
PhotonDistribution distribution_from_peaks(const PeakSet& peaks, PeakWeight weight = PeakWeight::Prominence);

/// Flips the response so that peaks point upward: when the most extreme
/// deviation from the median is negative, the response is negated.
PnrSpectrum normalize_orientation(const PnrSpectrum& spectrum);

struct AnalysisOptions {
  double min_prominence_fraction = 0.05;
  double tolerance_chi = 0.25;
  PeakWeight weight = PeakWeight::Prominence;
  int max_order = 4;  ///< g^(m) reported for m = 2..max_order
  int n_max = 24;     ///< highest photon line considered during assignment
};

struct AnalysisReport {
  PeakSet peaks;
  PhotonDistribution distribution{std::vector<double>{1.0}};
  std::optional<double> g2;             ///< empty when the distribution is vacuum
  std::vector<std::optional<double>> gm;  ///< m = 2..max_order
  double mean_photon_number = 0.0;
  std::size_t spurious_count = 0;
  double max_assignment_error_chi = 0.0;
  bool orientation_flipped = false;
  std::vector<std::string> notes;
};

/// Full inverse pipeline. Measured spectra are orientation-normalized first.
/// Undefined correlations are reported as empty values rather than thrown.
AnalysisReport analyze_spectrum(const PnrSpectrum& spectrum, double chi_mhz, double omega_w_tilde_ghz,
                                const LineLadder& ladder, const AnalysisOptions& options = {});

/// find_peaks -> assign -> distribution -> g^(2). Throws UndefinedCorrelation
/// for a vacuum-only spectrum.
double g2_from_spectrum(const PnrSpectrum& spectrum, double chi_mhz, double omega_w_tilde_ghz,
                        const LineLadder& ladder, const AnalysisOptions& options = {});

struct RabiFit {
  double rabi_rate = 0.0;   ///< f (MHz), >= 0
  double decay_rate = 0.0;  ///< Gamma (1/us)
  double amplitude = 0.0;
  double phase = 0.0;
  double offset = 0.0;
  double residual = 0.0;  ///< rms of the fit residuals
  int evaluations = 0;
};

/// Least-squares fit of p(t) = A exp(-Gamma t) cos(2 pi f t + phi) + c to a
/// uniformly sampled trace. The starting frequency is the dominant FFT
/// component. Throws UnderSampled (< 3 periods or < 8 samples per period),
/// InsufficientData and NonConvergence.
RabiFit fit_rabi(std::span<const double> times_us, std::span<const double> population);

struct DriveCalibration {
  double slope = 0.0;      ///< MHz per volt
  double intercept = 0.0;  ///< MHz
  std::size_t used_points = 0;
  std::vector<double> residuals;  ///< rate - line(amplitude), for every input point
  std::vector<bool> used;         ///< whether each point entered the fit
};

/// Ordinary least-squares line through the max_points lowest-amplitude points.
/// Throws InsufficientData when fewer than two usable points remain.
DriveCalibration calibrate_drive(std::span<const double> amplitudes_v, std::span<const double> rates_mhz,
                                 std::size_t max_points = 4);

/// Drive amplitude eta implied by a Rabi rate between vacuum and a
/// single-excitation mode: f = 2 eta |<vac|a|mode>|.
double drive_from_rabi_rate(double rabi_rate_mhz, double cavity_amplitude);

// I/O ---------------------------------------------------------------------

/// Reads `freq_ghz,response` (one spectrum) or `freq_ghz,drive_amp_v,response`
/// (long format, one spectrum per amplitude in order of first appearance).
std::vector<PnrSpectrum> read_spectrum_csv(std::istream& in, SpectrumSource source = SpectrumSource::Measured);
std::vector<PnrSpectrum> read_spectrum_csv_file(const std::string& path,
                                                SpectrumSource source = SpectrumSource::Measured);
void write_spectrum_csv(std::ostream& out, const PnrSpectrum& spectrum);
/// Long format; each spectrum's meta.drive_amp_v fills the amplitude column.
void write_spectrum_csv(std::ostream& out, std::span<const PnrSpectrum> spectra);

struct RabiTrace {
  double drive_amp_v = 0.0;
  std::vector<double> times_us;
  std::vector<double> population;
};

/// Reads `drive_amp_v,time_us,population`, grouping rows by amplitude.
std::vector<RabiTrace> read_traces_csv(std::istream& in);
std::vector<RabiTrace> read_traces_csv_file(const std::string& path);
void write_traces_csv(std::ostream& out, std::span<const RabiTrace> traces);

/// JSON document {peaks[], P[], g2, gm[], diagnostics}.
std::string analysis_to_json(const AnalysisReport& report, int indent = 2);

}  // namespace blockade
