#include "blockade/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include "blockade/errors.hpp"

namespace blockade {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SparseMatrix sparse_identity(Eigen::Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

double sparse_max_abs(const SparseMatrix& m) {
  double out = 0.0;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) out = std::max(out, std::abs(it.value()));
  }
  return out;
}

Eigen::VectorXcd vectorize(const DenseMatrix& rho) {
  return Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
}

DenseMatrix unvectorize(const Eigen::VectorXcd& v, Eigen::Index d) {
  return Eigen::Map<const DenseMatrix>(v.data(), d, d);
}

// Copy of `l` with row `replaced` swapped for the trace functional.
SparseMatrix with_trace_row(const SparseMatrix& l, Eigen::Index d, Eigen::Index replaced) {
  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(static_cast<std::size_t>(l.nonZeros() + d));
  for (Eigen::Index col = 0; col < l.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(l, col); it; ++it) {
      if (it.row() != replaced) entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index k = 0; k < d; ++k) entries.emplace_back(replaced, k * d + k, Complex(1.0, 0.0));
  SparseMatrix m(l.rows(), l.cols());
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

struct LinearSolve {
  Eigen::VectorXcd x;
  int iterations = 0;
};

LinearSolve solve_direct(const SparseMatrix& m, Eigen::Index replaced) {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::NonUniqueSteadyState, "trace-constrained Liouvillian is singular: " + lu.lastErrorMessage());
  }
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(m.rows());
  rhs(replaced) = 1.0;
  LinearSolve out{lu.solve(rhs), 0};
  if (lu.info() != Eigen::Success || !out.x.allFinite()) {
    throw Error(ErrorCode::NonUniqueSteadyState, "steady-state solve produced non-finite values");
  }
  return out;
}

LinearSolve solve_iterative(const SparseMatrix& m, Eigen::Index replaced, const SteadyStateOptions& options) {
  Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<Complex>> solver;
  solver.setTolerance(options.iterative_tolerance);
  solver.setMaxIterations(options.iterative_max_iterations);
  solver.compute(m);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::SolverFailure, "ILUT preconditioner failed");
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(m.rows());
  rhs(replaced) = 1.0;
  LinearSolve out{solver.solve(rhs), static_cast<int>(solver.iterations())};
  if (solver.info() != Eigen::Success || !out.x.allFinite()) {
    throw Error(ErrorCode::SolverFailure,
                "BiCGSTAB did not converge (error " + std::to_string(solver.error()) + ")");
  }
  return out;
}

bool has_dissipation(const SparseMatrix& l, Eigen::Index d) {
  // A purely Hamiltonian generator has an imaginary diagonal; dissipators add
  // real negative diagonal entries on off-diagonal coherences.
  for (Eigen::Index k = 0; k < d * d; ++k) {
    if (std::abs(l.coeff(k, k).real()) > 0.0) return true;
  }
  return false;
}

}  // namespace

Liouvillian::Liouvillian(CompositeSpace space, SparseMatrix superoperator)
    : space_(std::move(space)), superop_(std::move(superoperator)) {
  const Eigen::Index d2 = space_.total_dim() * space_.total_dim();
  if (superop_.rows() != d2 || superop_.cols() != d2) {
    throw Error(ErrorCode::DimensionMismatch, "superoperator size does not match space");
  }
  superop_.makeCompressed();
  scale_ = sparse_max_abs(superop_);
}

DenseMatrix Liouvillian::apply(const DenseMatrix& rho) const {
  if (rho.rows() != dim() || rho.cols() != dim()) {
    throw Error(ErrorCode::SpaceMismatch, "density matrix does not match Liouvillian");
  }
  const Eigen::VectorXcd out = superop_ * vectorize(rho);
  return unvectorize(out, dim());
}

Liouvillian build_liouvillian(const OperatorMatrix& hamiltonian, const CollapseSet& collapse) {
  const CompositeSpace& space = hamiltonian.space();
  const Eigen::Index d = space.total_dim();
  const SparseMatrix id = sparse_identity(d);
  const SparseMatrix& h = hamiltonian.matrix();
  const Complex i_unit(0.0, 1.0);

  SparseMatrix l = -i_unit * SparseMatrix(Eigen::kroneckerProduct(id, h)) +
                   i_unit * SparseMatrix(Eigen::kroneckerProduct(SparseMatrix(h.transpose()), id));
  for (const OperatorMatrix& op : collapse.operators) {
    if (!(op.space() == space)) throw Error(ErrorCode::SpaceMismatch, "collapse operator space differs from H");
    const SparseMatrix& a = op.matrix();
    const SparseMatrix ada = SparseMatrix(a.adjoint()) * a;
    l += SparseMatrix(Eigen::kroneckerProduct(SparseMatrix(a.conjugate()), a));
    l -= 0.5 * SparseMatrix(Eigen::kroneckerProduct(id, ada));
    l -= 0.5 * SparseMatrix(Eigen::kroneckerProduct(SparseMatrix(ada.transpose()), id));
  }
  l *= kTwoPi;
  l.prune(Complex(0.0, 0.0));
  return Liouvillian(space, std::move(l));
}

SteadyStateResult steadystate(const Liouvillian& liouvillian, const SteadyStateOptions& options) {
  const Eigen::Index d = liouvillian.dim();
  const SparseMatrix& l = liouvillian.superoperator();
  if (d > 1 && !has_dissipation(l, d)) {
    throw Error(ErrorCode::NonUniqueSteadyState, "generator has no dissipation; steady state is not unique");
  }

  const bool iterative = d * d > options.iterative_threshold;
  const Eigen::Index first_row = 0;
  const Eigen::Index last_row = (d - 1) * d + (d - 1);

  LinearSolve sol = iterative ? solve_iterative(with_trace_row(l, d, first_row), first_row, options)
                              : solve_direct(with_trace_row(l, d, first_row), first_row);
  if (!iterative && options.check_uniqueness && d > 1) {
    const LinearSolve other = solve_direct(with_trace_row(l, d, last_row), last_row);
    const double spread = (sol.x - other.x).cwiseAbs().maxCoeff();
    if (spread > 1e-6) {
      throw Error(ErrorCode::NonUniqueSteadyState,
                  "steady state depends on constraint placement (spread " + std::to_string(spread) + ")");
    }
  }

  DenseMatrix rho = unvectorize(sol.x, d);
  rho /= rho.trace();
  const double defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (defect > 1e-8) {
    throw Error(ErrorCode::SolverFailure, "steady state is not Hermitian (" + std::to_string(defect) + ")");
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();

  const double residual = liouvillian.apply(rho).cwiseAbs().maxCoeff();
  if (residual >= options.residual_tolerance * std::max(liouvillian.scale(), 1.0)) {
    throw Error(ErrorCode::SolverFailure, "steady-state residual " + std::to_string(residual) + " too large");
  }

  SteadyStateDiagnostics diag;
  diag.iterations = sol.iterations;
  diag.method = iterative ? "bicgstab-ilut" : "sparse-lu";
  diag.hermiticity_defect = defect;

  DensityState state = [&] {
    try {
      return DensityState(liouvillian.space(), std::move(rho));
    } catch (const Error& e) {
      throw Error(ErrorCode::SolverFailure, std::string("steady state failed validation: ") + e.what());
    }
  }();
  const PhotonDistribution p = cavity_distribution(state);
  diag.truncation_tail = p.probabilities().back();
  diag.truncation_warning = diag.truncation_tail > options.truncation_warning;
  return SteadyStateResult{std::move(state), residual, diag};
}

SteadyStateResult steadystate(const SystemSpec& spec, const SteadyStateOptions& options) {
  const OperatorMatrix h = spec.drive ? build_rotating_frame(spec) : build_tc_hamiltonian(spec);
  return steadystate(build_liouvillian(h, build_collapse_set(spec)), options);
}

void evolve(const DensityState& rho0, const Liouvillian& liouvillian, std::span<const double> times,
            const EvolutionObserver& observer, const EvolveOptions& options) {
  namespace odeint = boost::numeric::odeint;
  if (!(rho0.space() == liouvillian.space())) {
    throw Error(ErrorCode::SpaceMismatch, "initial state does not match Liouvillian");
  }
  if (times.empty()) return;
  if (times.front() < 0.0 || !std::is_sorted(times.begin(), times.end())) {
    throw Error(ErrorCode::IntegratorTolerance, "sample times must be ascending and nonnegative");
  }
  const Eigen::Index d = liouvillian.dim();
  const Eigen::Index d2 = d * d;

  // The integrator works on interleaved (re, im) doubles; std::complex<double>
  // is layout-compatible with double[2].
  using State = std::vector<double>;
  State x(static_cast<std::size_t>(2 * d2));
  Eigen::Map<Eigen::VectorXcd>(reinterpret_cast<Complex*>(x.data()), d2) = vectorize(rho0.matrix());

  const SparseMatrix& l = liouvillian.superoperator();
  auto rhs = [&l, d2](const State& in, State& out, double /*t*/) {
    out.resize(in.size());
    Eigen::Map<Eigen::VectorXcd>(reinterpret_cast<Complex*>(out.data()), d2).noalias() =
        l * Eigen::Map<const Eigen::VectorXcd>(reinterpret_cast<const Complex*>(in.data()), d2);
  };

  std::vector<double> grid(times.begin(), times.end());
  const bool prepend_zero = grid.front() > 0.0;
  if (prepend_zero) grid.insert(grid.begin(), 0.0);

  std::size_t sample = 0;
  auto observe = [&](const State& s, double t) {
    if (prepend_zero && sample++ == 0) return;
    const DenseMatrix rho =
        unvectorize(Eigen::Map<const Eigen::VectorXcd>(reinterpret_cast<const Complex*>(s.data()), d2), d);
    const double drift = std::abs(rho.trace() - Complex(1.0, 0.0));
    if (drift > options.trace_tolerance) {
      throw Error(ErrorCode::IntegratorTolerance, "trace drifted by " + std::to_string(drift));
    }
    observer(t, rho);
  };

  using Stepper = odeint::runge_kutta_dopri5<State>;
  try {
    if (grid.size() == 1) {
      observe(x, grid.front());
      return;
    }
    odeint::integrate_times(odeint::make_dense_output(options.abs_tolerance, options.rel_tolerance, Stepper()),
                            rhs, x, grid.begin(), grid.end(), options.initial_step, observe,
                            odeint::max_step_checker(options.max_steps_between_samples));
  } catch (const odeint::odeint_error& e) {
    throw Error(ErrorCode::IntegratorTolerance, e.what());
  }
}

std::vector<DensityState> evolve(const DensityState& rho0, const Liouvillian& liouvillian,
                                 std::span<const double> times, const EvolveOptions& options) {
  std::vector<DensityState> out;
  out.reserve(times.size());
  evolve(
      rho0, liouvillian, times,
      [&](double, const DenseMatrix& rho) {
        DenseMatrix herm = 0.5 * (rho + rho.adjoint());
        herm /= herm.trace();
        out.emplace_back(liouvillian.space(), std::move(herm));
      },
      options);
  return out;
}

std::vector<std::vector<double>> evolve_expectations(const DensityState& rho0, const Liouvillian& liouvillian,
                                                     std::span<const double> times,
                                                     std::span<const OperatorMatrix> observables,
                                                     const EvolveOptions& options) {
  for (const auto& op : observables) {
    if (!(op.space() == liouvillian.space())) throw Error(ErrorCode::SpaceMismatch, "observable space mismatch");
  }
  std::vector<std::vector<double>> out;
  out.reserve(times.size());
  evolve(
      rho0, liouvillian, times,
      [&](double, const DenseMatrix& rho) {
        std::vector<double> row;
        row.reserve(observables.size());
        for (const auto& op : observables) {
          // Tr(rho A) without validating rho as a DensityState at every sample.
          Complex sum = 0.0;
          const SparseMatrix& a = op.matrix();
          for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
            for (SparseMatrix::InnerIterator it(a, col); it; ++it) sum += rho(it.col(), it.row()) * it.value();
          }
          row.push_back(sum.real());
        }
        out.push_back(std::move(row));
      },
      options);
  return out;
}

double g2_from_state(const DensityState& state, double epsilon) {
  const CompositeSpace& space = state.space();
  const OperatorMatrix a = embed(annihilation(space.dim(0)), 0, space);
  const OperatorMatrix a_dag = a.adjoint();
  const double n = expectation(state, a_dag * a).real();
  if (n <= epsilon) throw Error(ErrorCode::UndefinedCorrelation, "cavity is in vacuum");
  const double pairs = expectation(state, a_dag * a_dag * a * a).real();
  return pairs / (n * n);
}

double gm_from_distribution(const PhotonDistribution& distribution, int m, double epsilon) {
  if (m < 2) throw Error(ErrorCode::InvalidDistribution, "correlation order must be >= 2");
  const double mean = distribution.mean();
  if (mean <= epsilon) throw Error(ErrorCode::UndefinedCorrelation, "distribution is vacuum");
  return distribution.factorial_moment(m) / std::pow(mean, m);
}

}  // namespace blockade
