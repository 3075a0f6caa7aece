#pragma once

// Lindblad engine.
//
// Vectorization is column-stacking: vec(A rho B) = (B^T (x) A) vec(rho), and
// rho(i, j) lives at vec index j * d + i.
//
// Units: Hamiltonians and collapse rates are supplied in MHz (ordinary
// frequency). build_liouvillian multiplies the whole generator by 2*pi, so the
// Liouvillian is in rad/us and evolution times are in microseconds. An empty
// cavity prepared in |1> with decay kappa therefore follows
// P1(t) = exp(-2*pi*kappa*t).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "blockade/hilbert.hpp"
#include "blockade/model.hpp"
#include "blockade/photon_distribution.hpp"

namespace blockade {

class Liouvillian {
 public:
  Liouvillian(CompositeSpace space, SparseMatrix superoperator);

  const CompositeSpace& space() const noexcept { return space_; }
  const SparseMatrix& superoperator() const noexcept { return superop_; }
  Eigen::Index dim() const noexcept { return space_.total_dim(); }

  /// L[rho] via the vectorized superoperator.
  DenseMatrix apply(const DenseMatrix& rho) const;
  /// Largest absolute superoperator entry, used to scale residual tolerances.
  double scale() const noexcept { return scale_; }

 private:
  CompositeSpace space_;
  SparseMatrix superop_;
  double scale_ = 0.0;
};

/// L[rho] = 2 pi ( -i[H, rho] + sum_A (A rho A^dag - {A^dag A, rho}/2) ).
Liouvillian build_liouvillian(const OperatorMatrix& hamiltonian, const CollapseSet& collapse);

struct SteadyStateOptions {
  double residual_tolerance = 1e-8;              ///< relative to Liouvillian::scale()
  Eigen::Index iterative_threshold = 100000;     ///< use BiCGSTAB when d^2 exceeds this
  double iterative_tolerance = 1e-13;
  int iterative_max_iterations = 20000;
  double truncation_warning = 1e-6;
  bool check_uniqueness = true;  ///< cross-check with a second trace-row placement
};

struct SteadyStateDiagnostics {
  double truncation_tail = 0.0;  ///< P(n_max) of the cavity
  bool truncation_warning = false;
  int iterations = 0;            ///< 0 for the direct solver
  std::string method;            ///< "sparse-lu" or "bicgstab-ilut"
  double hermiticity_defect = 0.0;
};

struct SteadyStateResult {
  DensityState state;
  double residual = 0.0;  ///< ||L[rho]||_max
  SteadyStateDiagnostics diagnostics;
};

/// Solves L[rho] = 0 with Tr(rho) = 1 by replacing one diagonal-element row of
/// the vectorized system with the trace constraint.
/// Throws NonUniqueSteadyState when the null space is degenerate and
/// SolverFailure when the residual check fails.
SteadyStateResult steadystate(const Liouvillian& liouvillian, const SteadyStateOptions& options = {});

/// Steady state of a spec: rotating-frame Hamiltonian when driven, lab frame otherwise.
SteadyStateResult steadystate(const SystemSpec& spec, const SteadyStateOptions& options = {});

struct EvolveOptions {
  double abs_tolerance = 1e-10;
  double rel_tolerance = 1e-10;
  double initial_step = 1e-4;  ///< us
  double trace_tolerance = 1e-8;
  int max_steps_between_samples = 1000000;
};

/// Called once per requested time with the (unvalidated) density matrix.
using EvolutionObserver = std::function<void(double time, const DenseMatrix& rho)>;

/// Integrates d rho/dt = L[rho] from t = 0 and reports rho at each time
/// (ascending, >= 0). Throws IntegratorTolerance on step failure or trace drift.
void evolve(const DensityState& rho0, const Liouvillian& liouvillian, std::span<const double> times,
            const EvolutionObserver& observer, const EvolveOptions& options = {});

std::vector<DensityState> evolve(const DensityState& rho0, const Liouvillian& liouvillian,
                                 std::span<const double> times, const EvolveOptions& options = {});

/// Real parts of <A_k>(t) for each requested time; result[t][k].
std::vector<std::vector<double>> evolve_expectations(const DensityState& rho0, const Liouvillian& liouvillian,
                                                     std::span<const double> times,
                                                     std::span<const OperatorMatrix> observables,
                                                     const EvolveOptions& options = {});

/// <a^dag a^dag a a> / <a^dag a>^2 with a acting on subsystem 0.
/// Throws UndefinedCorrelation when <a^dag a> <= epsilon.
double g2_from_state(const DensityState& state, double epsilon = 1e-12);

/// sum_n n(n-1)...(n-m+1) P(n) / (sum_n n P(n))^m for m >= 2.
double gm_from_distribution(const PhotonDistribution& distribution, int m, double epsilon = 1e-12);

}  // namespace blockade
