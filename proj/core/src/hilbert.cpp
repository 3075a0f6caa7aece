#include "blockade/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

#include "blockade/errors.hpp"

namespace blockade {
namespace {

std::string dims_string(const std::vector<int>& dims) {
  std::string out = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(dims[i]);
  }
  return out + "]";
}

SparseMatrix sparse_identity(Eigen::Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

void require_same_space(const CompositeSpace& a, const CompositeSpace& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorCode::SpaceMismatch,
                std::string(what) + ": " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
  }
}

}  // namespace

CompositeSpace::CompositeSpace(std::vector<int> dims, Eigen::Index cap) : dims_(std::move(dims)) {
  if (dims_.empty()) {
    throw Error(ErrorCode::InvalidDimension, "composite space needs at least one subsystem");
  }
  for (int d : dims_) {
    if (d < 2) {
      throw Error(ErrorCode::InvalidDimension,
                  "subsystem dimension must be >= 2, got " + dims_string(dims_));
    }
    if (total_ > cap / d) {
      throw Error(ErrorCode::DimensionCapExceeded,
                  "total dimension of " + dims_string(dims_) + " exceeds cap " + std::to_string(cap));
    }
    total_ *= d;
  }
}

int CompositeSpace::dim(std::size_t index) const {
  if (index >= dims_.size()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "subsystem " + std::to_string(index) + " of " + dims_string(dims_));
  }
  return dims_[index];
}

Eigen::Index CompositeSpace::index_of(const std::vector<int>& levels) const {
  if (levels.size() != dims_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "level tuple length differs from subsystem count");
  }
  Eigen::Index idx = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (levels[i] < 0 || levels[i] >= dims_[i]) {
      throw Error(ErrorCode::IndexOutOfRange, "level out of range for subsystem " + std::to_string(i));
    }
    idx = idx * dims_[i] + levels[i];
  }
  return idx;
}

OperatorMatrix::OperatorMatrix(CompositeSpace space, SparseMatrix matrix)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != space_.total_dim() || matrix_.cols() != space_.total_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "operator of size " + std::to_string(matrix_.rows()) + "x" +
                    std::to_string(matrix_.cols()) + " on space " + dims_string(space_.dims()));
  }
  matrix_.makeCompressed();
}

OperatorMatrix OperatorMatrix::identity(const CompositeSpace& space) {
  return OperatorMatrix(space, sparse_identity(space.total_dim()));
}

OperatorMatrix OperatorMatrix::zero(const CompositeSpace& space) {
  return OperatorMatrix(space, SparseMatrix(space.total_dim(), space.total_dim()));
}

OperatorMatrix OperatorMatrix::adjoint() const {
  return OperatorMatrix(space_, SparseMatrix(matrix_.adjoint()));
}

double OperatorMatrix::max_abs() const {
  double m = 0.0;
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

bool OperatorMatrix::is_hermitian(double tol) const {
  SparseMatrix diff = matrix_ - SparseMatrix(matrix_.adjoint());
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) {
      if (std::abs(it.value()) >= tol) return false;
    }
  }
  return true;
}

const OperatorMatrix& OperatorMatrix::require_hermitian(double tol) const {
  if (!is_hermitian(tol)) throw Error(ErrorCode::NotHermitian, "operator is not Hermitian");
  return *this;
}

OperatorMatrix& OperatorMatrix::operator+=(const OperatorMatrix& other) {
  require_same_space(space_, other.space_, "operator sum");
  matrix_ += other.matrix_;
  return *this;
}

OperatorMatrix& OperatorMatrix::operator-=(const OperatorMatrix& other) {
  require_same_space(space_, other.space_, "operator difference");
  matrix_ -= other.matrix_;
  return *this;
}

OperatorMatrix& OperatorMatrix::operator*=(Complex scale) {
  matrix_ *= scale;
  return *this;
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a.space(), b.space(), "operator product");
  return OperatorMatrix(a.space(), SparseMatrix(a.matrix() * b.matrix()));
}

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
  return a * b - b * a;
}

OperatorMatrix annihilation(int dim) {
  if (dim < 2) throw Error(ErrorCode::InvalidDimension, "annihilation needs dim >= 2");
  SparseMatrix m(dim, dim);
  std::vector<Eigen::Triplet<Complex>> entries;
  for (int n = 1; n < dim; ++n) entries.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  m.setFromTriplets(entries.begin(), entries.end());
  return OperatorMatrix(CompositeSpace({dim}), std::move(m));
}

OperatorMatrix creation(int dim) { return annihilation(dim).adjoint(); }

OperatorMatrix number_operator(int dim) {
  const auto a = annihilation(dim);
  return a.adjoint() * a;
}

OperatorMatrix lowering_emitter() { return annihilation(2); }

OperatorMatrix embed(const OperatorMatrix& op, std::size_t index, const CompositeSpace& space) {
  const int target = space.dim(index);
  if (op.dim() != target) {
    throw Error(ErrorCode::DimensionMismatch,
                "operator dimension " + std::to_string(op.dim()) + " != subsystem dimension " +
                    std::to_string(target));
  }
  Eigen::Index before = 1;
  for (std::size_t i = 0; i < index; ++i) before *= space.dims()[i];
  const Eigen::Index after = space.total_dim() / (before * target);

  SparseMatrix result = op.matrix();
  if (before > 1) result = Eigen::kroneckerProduct(sparse_identity(before), result).eval();
  if (after > 1) result = Eigen::kroneckerProduct(result, sparse_identity(after)).eval();
  return OperatorMatrix(space, std::move(result));
}

OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b) {
  std::vector<int> dims = a.space().dims();
  dims.insert(dims.end(), b.space().dims().begin(), b.space().dims().end());
  SparseMatrix m = Eigen::kroneckerProduct(a.matrix(), b.matrix()).eval();
  return OperatorMatrix(CompositeSpace(std::move(dims)), std::move(m));
}

DensityState::DensityState(CompositeSpace space, DenseMatrix matrix)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
  const Eigen::Index d = space_.total_dim();
  if (matrix_.rows() != d || matrix_.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "density matrix size does not match its space");
  }
  const Complex tr = matrix_.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > kTraceTolerance) {
    throw Error(ErrorCode::InvalidState, "trace " + std::to_string(tr.real()) + " differs from 1");
  }
  const double asym = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (asym >= kHermitianTolerance) {
    throw Error(ErrorCode::InvalidState, "density matrix is not Hermitian (" + std::to_string(asym) + ")");
  }
  const DenseMatrix herm = 0.5 * (matrix_ + matrix_.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(herm, Eigen::EigenvaluesOnly);
  min_eigenvalue_ = solver.eigenvalues().minCoeff();
  if (min_eigenvalue_ < -kPositivityTolerance) {
    throw Error(ErrorCode::InvalidState,
                "density matrix has eigenvalue " + std::to_string(min_eigenvalue_));
  }
}

DensityState DensityState::pure(const CompositeSpace& space, const StateVector& psi) {
  if (psi.size() != space.total_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "state vector size does not match its space");
  }
  const double norm = psi.norm();
  if (norm == 0.0) throw Error(ErrorCode::InvalidState, "zero state vector");
  const StateVector v = psi / norm;
  return DensityState(space, v * v.adjoint());
}

DensityState DensityState::basis(const CompositeSpace& space, const std::vector<int>& levels) {
  StateVector psi = StateVector::Zero(space.total_dim());
  psi(space.index_of(levels)) = 1.0;
  return pure(space, psi);
}

DensityState DensityState::maximally_mixed(const CompositeSpace& space) {
  const Eigen::Index d = space.total_dim();
  return DensityState(space, DenseMatrix::Identity(d, d) / static_cast<double>(d));
}

Complex expectation(const DensityState& state, const OperatorMatrix& op) {
  require_same_space(state.space(), op.space(), "expectation");
  // Tr(rho A) = sum_ij rho_ji A_ij
  Complex sum = 0.0;
  const SparseMatrix& a = op.matrix();
  for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      sum += state.matrix()(it.col(), it.row()) * it.value();
    }
  }
  return sum;
}

DenseMatrix partial_trace(const DenseMatrix& rho, const CompositeSpace& space, std::size_t index) {
  const Eigen::Index keep = space.dim(index);
  if (rho.rows() != space.total_dim() || rho.cols() != space.total_dim()) {
    throw Error(ErrorCode::SpaceMismatch, "partial trace: matrix does not match space");
  }
  Eigen::Index before = 1;
  for (std::size_t i = 0; i < index; ++i) before *= space.dims()[i];
  const Eigen::Index after = space.total_dim() / (before * keep);

  DenseMatrix reduced = DenseMatrix::Zero(keep, keep);
  for (Eigen::Index a = 0; a < before; ++a) {
    for (Eigen::Index b = 0; b < after; ++b) {
      for (Eigen::Index i = 0; i < keep; ++i) {
        const Eigen::Index row = (a * keep + i) * after + b;
        for (Eigen::Index j = 0; j < keep; ++j) {
          reduced(i, j) += rho(row, (a * keep + j) * after + b);
        }
      }
    }
  }
  return reduced;
}

DenseMatrix partial_trace(const DensityState& state, std::size_t index) {
  return partial_trace(state.matrix(), state.space(), index);
}

PhotonDistribution cavity_distribution(const DensityState& state) {
  const DenseMatrix reduced = partial_trace(state, 0);
  std::vector<double> p(static_cast<std::size_t>(reduced.rows()));
  for (Eigen::Index n = 0; n < reduced.rows(); ++n) p[static_cast<std::size_t>(n)] = reduced(n, n).real();
  return PhotonDistribution(std::move(p));
}

double trace_distance(const DenseMatrix& a, const DenseMatrix& b) {
  const DenseMatrix diff = a - b;
  const DenseMatrix herm = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace blockade
