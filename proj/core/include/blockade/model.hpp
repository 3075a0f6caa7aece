#pragma once

// Physical Hamiltonians, collapse operators and the transmon dispersive shift.
//
// Units: every frequency and rate is an ordinary frequency in MHz. Hamiltonians
// built here are in MHz as well; the 2*pi conversion to angular units happens
// once, inside build_liouvillian (see dynamics.hpp).

#include <cstddef>
#include <optional>
#include <vector>

#include "blockade/hilbert.hpp"

namespace blockade {

struct Emitter {
  double freq = 0.0;      ///< omega_a (MHz)
  double coupling = 0.0;  ///< g (MHz)
  double decay = 0.0;     ///< gamma (MHz)
};

struct Drive {
  double amplitude = 0.0;  ///< eta (MHz)
  double freq = 0.0;       ///< omega_d (MHz)
};

struct Witness {
  double freq = 0.0;           ///< omega_w (MHz)
  double coupling = 0.0;       ///< g_w (MHz)
  double anharmonicity = 0.0;  ///< alpha (MHz); 0 means an ideal two-level witness
  double decay = 0.1;          ///< witness decay (MHz)
  int levels = 2;              ///< 2 or 3 when modeled as a coupled subsystem
};

struct SystemSpec {
  double cavity_freq = 0.0;
  std::vector<Emitter> emitters;
  double cavity_decay = 0.0;
  std::optional<Drive> drive;
  std::optional<Witness> witness;
  int cavity_truncation = 7;

  /// Throws InvalidSpec when a rate is negative, a frequency is not positive,
  /// the truncation is below 1, or a three-level witness has alpha <= 0.
  void validate() const;

  std::size_t emitter_count() const noexcept { return emitters.size(); }
  /// Cavity, then one two-level factor per emitter, then the witness if present.
  CompositeSpace space(Eigen::Index cap = kDefaultDimensionCap) const;

  static constexpr std::size_t cavity_index() noexcept { return 0; }
  static constexpr std::size_t emitter_index(std::size_t i) noexcept { return 1 + i; }
  std::size_t witness_index() const noexcept { return 1 + emitters.size(); }

  /// N identical emitters at `emitter_freq` with common coupling and decay.
  static SystemSpec identical(double cavity_freq, std::size_t n, double emitter_freq, double g,
                              double kappa, double gamma, int truncation = 7);
  /// Device parameters of the reference experiment: omega_c = 5230 MHz,
  /// kappa = gamma = 0.1 MHz, g = 13.7 MHz for a single emitter and the mean
  /// coupling 13.2 MHz otherwise, emitters resonant with the cavity. No drive,
  /// no witness subsystem.
  static SystemSpec reference_device(std::size_t n_emitters);
  /// Witness of the reference experiment: omega_w = 5313, g_w = 17, alpha = 227 MHz.
  static Witness reference_witness();
};

struct CollapseSet {
  std::vector<OperatorMatrix> operators;  ///< each pre-scaled by sqrt(rate)

  bool empty() const noexcept { return operators.empty(); }
  std::size_t size() const noexcept { return operators.size(); }
};

/// a^dag a + sum_i sigma_i^+ sigma_i^- (+ witness excitation number).
OperatorMatrix total_excitation_number(const SystemSpec& spec);

/// Lab-frame Tavis-Cummings Hamiltonian (plus witness exchange and ladder terms).
OperatorMatrix build_tc_hamiltonian(const SystemSpec& spec);

/// Time-independent Hamiltonian in the frame rotating at omega_d with the total
/// excitation number: H_TC - omega_d N_tot + eta (a + a^dag). Throws MissingDrive.
OperatorMatrix build_rotating_frame(const SystemSpec& spec);

struct DispersiveShift {
  double chi = 0.0;      ///< transmon: g^2 / (Delta (1 - Delta/alpha))
  double chi_tls = 0.0;  ///< two-level limit: g^2 / Delta
};

/// Throws SingularParameter for delta_w == 0 or delta_w == alpha.
DispersiveShift dispersive_shift(double g_w, double delta_w, double alpha);

/// Witness chi for a spec's witness (transmon formula when alpha > 0, TLS otherwise).
double witness_chi(const Witness& witness, double cavity_freq);
/// Lamb-shifted witness frequency omega_w + g_w^2 / Delta_w.
double lamb_shifted_witness_freq(const Witness& witness, double cavity_freq);

/// H_disp = omega_c a^dag a + (omega_w_tilde + 2 chi a^dag a) sigma^+ sigma^- on the
/// cavity (x) two-level-witness space. Throws WitnessAbsent.
OperatorMatrix build_dispersive(const SystemSpec& spec);

struct SingleExcitationMode {
  double frequency = 0.0;         ///< eigenvalue of H_TC in the one-excitation sector (MHz)
  double cavity_amplitude = 0.0;  ///< |<vac| a |mode>|; drive element is eta times this
  double cavity_weight = 0.0;     ///< cavity_amplitude^2
};

/// Eigenmodes of the cavity + emitters one-excitation sector (witness excluded),
/// ascending in frequency. Handles non-identical couplings and detunings.
std::vector<SingleExcitationMode> single_excitation_modes(const SystemSpec& spec);

/// {sqrt(kappa) a} + {sqrt(gamma_i) sigma_i^-} + witness decay when modeled.
/// Zero-rate channels are omitted.
CollapseSet build_collapse_set(const SystemSpec& spec);

}  // namespace blockade
