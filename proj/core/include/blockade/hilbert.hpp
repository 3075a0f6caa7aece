#pragma once

// Operator algebra on truncated composite Hilbert spaces.
//
// Subsystem ordering is fixed across the library: the cavity is subsystem 0,
// emitters follow in order, and the witness (when modeled) is last. Operators
// are stored sparse; density matrices are dense.

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "blockade/photon_distribution.hpp"

namespace blockade {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
using DenseMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr Eigen::Index kDefaultDimensionCap = 4096;

class CompositeSpace {
 public:
  explicit CompositeSpace(std::vector<int> dims, Eigen::Index cap = kDefaultDimensionCap);

  const std::vector<int>& dims() const noexcept { return dims_; }
  int dim(std::size_t index) const;
  std::size_t subsystems() const noexcept { return dims_.size(); }
  Eigen::Index total_dim() const noexcept { return total_; }

  /// Flat basis index of the product state |i0, i1, ...>.
  Eigen::Index index_of(const std::vector<int>& levels) const;

  friend bool operator==(const CompositeSpace& a, const CompositeSpace& b) {
    return a.dims_ == b.dims_;
  }

 private:
  std::vector<int> dims_;
  Eigen::Index total_ = 1;
};

class OperatorMatrix {
 public:
  OperatorMatrix(CompositeSpace space, SparseMatrix matrix);

  static OperatorMatrix identity(const CompositeSpace& space);
  static OperatorMatrix zero(const CompositeSpace& space);

  const CompositeSpace& space() const noexcept { return space_; }
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  Eigen::Index dim() const noexcept { return space_.total_dim(); }

  OperatorMatrix adjoint() const;
  DenseMatrix dense() const { return DenseMatrix(matrix_); }

  /// Largest absolute entry.
  double max_abs() const;
  bool is_hermitian(double tol = 1e-12) const;
  /// Throws NotHermitian when ||A - A^dag||_max >= tol.
  const OperatorMatrix& require_hermitian(double tol = 1e-12) const;

  OperatorMatrix& operator+=(const OperatorMatrix& other);
  OperatorMatrix& operator-=(const OperatorMatrix& other);
  OperatorMatrix& operator*=(Complex scale);

  friend OperatorMatrix operator+(OperatorMatrix a, const OperatorMatrix& b) { return a += b; }
  friend OperatorMatrix operator-(OperatorMatrix a, const OperatorMatrix& b) { return a -= b; }
  friend OperatorMatrix operator*(OperatorMatrix a, Complex s) { return a *= s; }
  friend OperatorMatrix operator*(Complex s, OperatorMatrix a) { return a *= s; }
  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);

 private:
  CompositeSpace space_;
  SparseMatrix matrix_;
};

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b);

/// Bosonic lowering operator truncated to `dim` levels: <n-1|a|n> = sqrt(n).
OperatorMatrix annihilation(int dim);
OperatorMatrix creation(int dim);
OperatorMatrix number_operator(int dim);
/// Two-level lowering operator sigma^- with <g|sigma^-|e> = 1 (g = level 0).
OperatorMatrix lowering_emitter();

/// I (x) ... (x) op (x) ... (x) I with `op` acting on subsystem `index`.
OperatorMatrix embed(const OperatorMatrix& op, std::size_t index, const CompositeSpace& space);

/// Kronecker product; the result's space concatenates both factor spaces.
OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b);

/// Hermitian, unit-trace, numerically positive density matrix.
class DensityState {
 public:
  static constexpr double kTraceTolerance = 1e-9;
  static constexpr double kHermitianTolerance = 1e-10;
  static constexpr double kPositivityTolerance = 1e-8;

  /// Validates trace, Hermiticity and positivity; throws InvalidState.
  DensityState(CompositeSpace space, DenseMatrix matrix);

  static DensityState pure(const CompositeSpace& space, const StateVector& psi);
  static DensityState basis(const CompositeSpace& space, const std::vector<int>& levels);
  static DensityState maximally_mixed(const CompositeSpace& space);

  const CompositeSpace& space() const noexcept { return space_; }
  const DenseMatrix& matrix() const noexcept { return matrix_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  CompositeSpace space_;
  DenseMatrix matrix_;
  double min_eigenvalue_ = 0.0;
};

/// Tr(rho A).
Complex expectation(const DensityState& state, const OperatorMatrix& op);

/// Reduced density matrix of subsystem `index` (all others traced out).
DenseMatrix partial_trace(const DenseMatrix& rho, const CompositeSpace& space, std::size_t index);
DenseMatrix partial_trace(const DensityState& state, std::size_t index);

/// Diagonal of the cavity (subsystem 0) reduced density matrix.
PhotonDistribution cavity_distribution(const DensityState& state);

/// Trace distance 0.5 * ||a - b||_1 for Hermitian arguments.
double trace_distance(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace blockade
