#pragma once

// Excitation-ladder calculator for N identical emitters coupled to one cavity.
//
// Manifold Hamiltonians use the collective (Dicke) basis
//   |n - k photons> (x) |k collective excitations>,  k = 0..min(n, N),
// whose coupling elements are g * sqrt((n - k)(k + 1)(N - k)). Closed forms for
// the witness line positions are cross-checked against numeric diagonalization
// of these matrices.
//
// Note on the generic n = 2 line: the closed form is (6N - 2)/(2N - 1) chi, which
// diagonalization confirms for every N. The variant (6N - 1)/(2N - 1) chi is
// inconsistent with the increment 2N/(2N - 1) chi over the n = 1 line and with
// the N = 3 value 3.2 chi; it is kept only so the discrepancy can be reported.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace blockade {

enum class Branch { Lowest, Highest };

struct PolaritonPair {
  double lower = 0.0;
  double upper = 0.0;
};

/// Resonant single-excitation polaritons omega_c -+ sqrt(N) g. Throws NoPolariton for N = 0.
PolaritonPair polariton_frequencies(int n_emitters, double g, double omega_c);

/// Detuning between a drive on the lower polariton and the nearest two-excitation
/// state: (2 sqrt(N) - sqrt(4N - 2)) g.
double blockade_detuning(int n_emitters, double g);

struct ManifoldHamiltonian {
  int emitters = 0;
  int excitations = 0;
  Eigen::MatrixXd matrix;  ///< real symmetric, dimension min(n, N) + 1
};

ManifoldHamiltonian manifold_hamiltonian(int n_emitters, int excitations, double omega_c,
                                         double omega_a, double g);

struct LadderEntry {
  int emitters = 0;
  int excitations = 0;
  int branch = 0;  ///< index into the ascending eigenvalues
  int branch_count = 0;
  double energy = 0.0;
  double cavity_weight = 0.0;  ///< <a^dag a>, in [0, n]
  double witness_shift = 0.0;  ///< 1 + 2 cavity_weight, units of chi

  bool is_lowest() const noexcept { return branch == 0; }
  bool is_highest() const noexcept { return branch == branch_count - 1; }
  bool is_extreme() const noexcept { return is_lowest() || is_highest(); }
  /// "lowest", "highest" or "middle<k>".
  std::string label() const;
};

/// Eigen-decomposition of one manifold, ascending in energy.
std::vector<LadderEntry> solve_manifold(const ManifoldHamiltonian& h);

/// Ladder of manifolds n = 1..n_max for each emitter count (detuning omega_a - omega_c).
class EigenLadder {
 public:
  EigenLadder() = default;
  explicit EigenLadder(std::vector<LadderEntry> entries);

  static EigenLadder build(const std::vector<int>& emitter_counts, int n_max, double omega_c,
                           double omega_a, double g);

  const std::vector<LadderEntry>& entries() const noexcept { return entries_; }
  const LadderEntry& at(int emitters, int excitations, Branch branch) const;

  /// CSV with header N,n,branch,energy,cavity_weight,shift_in_chi. Middle
  /// branches are listed with an empty shift column.
  void write_csv(std::ostream& out) const;

 private:
  std::vector<LadderEntry> entries_;
};

struct ShiftValue {
  double value = 0.0;
  bool closed_form = true;  ///< false when the numeric ladder was used as fallback
};

/// Closed-form witness line position (units of chi) of an extreme branch.
/// Covers N = 1 (all n), N >= 2 at n = 1, N = 2 (all n), N = 3 (all n) and the
/// generic n = 2 line. Uncovered (N, n) fall back to witness_shift_numeric.
ShiftValue witness_shift_closed_form(int n_emitters, int excitations, Branch branch);

/// 1 + 2 <a^dag a> of the requested resonant eigenvector, by diagonalization.
double witness_shift_numeric(int n_emitters, int excitations, Branch branch);

/// Corrected generic two-excitation line (6N - 2)/(2N - 1).
double n2_witness_shift(int n_emitters);
/// Uncorrected variant (6N - 1)/(2N - 1), kept for discrepancy reporting only.
double n2_witness_shift_uncorrected(int n_emitters);

/// Shift of the n = 2 line relative to the n = 1 line: 2N/(2N - 1) chi.
double n2_line_shift(int n_emitters, double chi);

struct TransitionOverlap {
  double aligned = 0.0;  ///< |<psi^e_{n+1, +-}| sigma^x_w |psi^g_{n, +-}>|
  double crossed = 0.0;  ///< |<psi^e_{n+1, -+}| sigma^x_w |psi^g_{n, +-}>|
};

/// Witness-flip matrix elements for a single resonant emitter with n excitations.
TransitionOverlap witness_transition_overlap(int excitations, double chi, double g);

/// Reduction of the n -> n+1 addition energy caused by the witness:
/// chi + g (sqrt(n+1) - sqrt(n)) + sqrt(4 g^2 n + chi^2)/2 - sqrt(4 g^2 (n+1) + chi^2)/2.
double witness_backaction(int excitations, double chi, double g);

}  // namespace blockade
