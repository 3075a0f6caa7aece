#include "blockade/eigenstructure.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "blockade/errors.hpp"
#include "csv_format.hpp"

namespace blockade {
namespace {

void require_emitters(int n_emitters) {
  if (n_emitters < 1) throw Error(ErrorCode::NoPolariton, "no emitters, no polaritons");
}

constexpr int kMaxNumericManifold = 64;

}  // namespace

PolaritonPair polariton_frequencies(int n_emitters, double g, double omega_c) {
  require_emitters(n_emitters);
  if (!(g > 0.0)) throw Error(ErrorCode::NoPolariton, "coupling must be positive");
  const double split = std::sqrt(static_cast<double>(n_emitters)) * g;
  return {omega_c - split, omega_c + split};
}

double blockade_detuning(int n_emitters, double g) {
  require_emitters(n_emitters);
  const double n = n_emitters;
  return (2.0 * std::sqrt(n) - std::sqrt(4.0 * n - 2.0)) * g;
}

ManifoldHamiltonian manifold_hamiltonian(int n_emitters, int excitations, double omega_c,
                                         double omega_a, double g) {
  if (n_emitters < 0 || excitations < 1) {
    throw Error(ErrorCode::InvalidManifold, "need N >= 0 and n >= 1, got N=" + std::to_string(n_emitters) +
                                                " n=" + std::to_string(excitations));
  }
  const int dim = std::min(excitations, n_emitters) + 1;
  if (dim > kMaxNumericManifold) throw Error(ErrorCode::InvalidManifold, "manifold dimension exceeds 64");

  ManifoldHamiltonian h{n_emitters, excitations, Eigen::MatrixXd::Zero(dim, dim)};
  for (int k = 0; k < dim; ++k) {
    h.matrix(k, k) = (excitations - k) * omega_c + k * omega_a;
    if (k + 1 < dim) {
      const double element =
          g * std::sqrt(static_cast<double>(excitations - k) * (k + 1) * (n_emitters - k));
      h.matrix(k, k + 1) = element;
      h.matrix(k + 1, k) = element;
    }
  }
  return h;
}

std::string LadderEntry::label() const {
  if (is_lowest()) return "lowest";
  if (is_highest()) return "highest";
  return "middle" + std::to_string(branch);
}

std::vector<LadderEntry> solve_manifold(const ManifoldHamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
  const Eigen::Index dim = h.matrix.rows();
  std::vector<LadderEntry> out;
  out.reserve(static_cast<std::size_t>(dim));
  for (Eigen::Index b = 0; b < dim; ++b) {
    double weight = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double c = solver.eigenvectors()(k, b);
      weight += c * c * static_cast<double>(h.excitations - k);
    }
    LadderEntry e;
    e.emitters = h.emitters;
    e.excitations = h.excitations;
    e.branch = static_cast<int>(b);
    e.branch_count = static_cast<int>(dim);
    e.energy = solver.eigenvalues()(b);
    e.cavity_weight = weight;
    e.witness_shift = 1.0 + 2.0 * weight;
    out.push_back(e);
  }
  return out;
}

EigenLadder::EigenLadder(std::vector<LadderEntry> entries) : entries_(std::move(entries)) {}

EigenLadder EigenLadder::build(const std::vector<int>& emitter_counts, int n_max, double omega_c,
                               double omega_a, double g) {
  std::vector<LadderEntry> entries;
  for (int n_emitters : emitter_counts) {
    for (int n = 1; n <= n_max; ++n) {
      auto manifold = solve_manifold(manifold_hamiltonian(n_emitters, n, omega_c, omega_a, g));
      entries.insert(entries.end(), manifold.begin(), manifold.end());
    }
  }
  return EigenLadder(std::move(entries));
}

const LadderEntry& EigenLadder::at(int emitters, int excitations, Branch branch) const {
  for (const auto& e : entries_) {
    if (e.emitters != emitters || e.excitations != excitations) continue;
    if ((branch == Branch::Lowest && e.is_lowest()) || (branch == Branch::Highest && e.is_highest())) {
      return e;
    }
  }
  throw Error(ErrorCode::InvalidManifold, "ladder has no entry for N=" + std::to_string(emitters) +
                                              " n=" + std::to_string(excitations));
}

void EigenLadder::write_csv(std::ostream& out) const {
  out << "N,n,branch,energy,cavity_weight,shift_in_chi\n";
  for (const auto& e : entries_) {
    out << e.emitters << ',' << e.excitations << ',' << e.label() << ',' << detail::format_number(e.energy)
        << ',' << detail::format_number(e.cavity_weight) << ',';
    if (e.is_extreme()) out << detail::format_number(e.witness_shift);
    out << '\n';
  }
}

double witness_shift_numeric(int n_emitters, int excitations, Branch branch) {
  require_emitters(n_emitters);
  const auto manifold = solve_manifold(manifold_hamiltonian(n_emitters, excitations, 0.0, 0.0, 1.0));
  return branch == Branch::Lowest ? manifold.front().witness_shift : manifold.back().witness_shift;
}

double n2_witness_shift(int n_emitters) {
  require_emitters(n_emitters);
  const double n = n_emitters;
  return (6.0 * n - 2.0) / (2.0 * n - 1.0);
}

double n2_witness_shift_uncorrected(int n_emitters) {
  require_emitters(n_emitters);
  const double n = n_emitters;
  return (6.0 * n - 1.0) / (2.0 * n - 1.0);
}

ShiftValue witness_shift_closed_form(int n_emitters, int excitations, Branch branch) {
  require_emitters(n_emitters);
  if (excitations < 1) throw Error(ErrorCode::InvalidManifold, "excitations must be >= 1");
  const double n = excitations;
  if (n_emitters == 1) return {2.0 * n, true};
  if (excitations == 1) return {2.0, true};
  if (excitations == 2) return {n2_witness_shift(n_emitters), true};
  if (n_emitters == 2) return {2.0 * n - 1.0 + 1.0 / (2.0 * n - 1.0), true};
  if (n_emitters == 3) return {2.0 * n - 2.0 + 6.0 / std::sqrt(16.0 * n * (n - 2.0) + 25.0), true};
  return {witness_shift_numeric(n_emitters, excitations, branch), false};
}

double n2_line_shift(int n_emitters, double chi) {
  require_emitters(n_emitters);
  const double n = n_emitters;
  return 2.0 * n / (2.0 * n - 1.0) * chi;
}

TransitionOverlap witness_transition_overlap(int excitations, double chi, double g) {
  if (excitations < 1) throw Error(ErrorCode::InvalidManifold, "excitations must be >= 1");
  const double n = excitations;
  const double root = std::sqrt(4.0 * n * g * g + chi * chi);
  if (root == 0.0) return {1.0, 0.0};
  return {2.0 * std::sqrt(n) * g / root, std::abs(chi) / root};
}

double witness_backaction(int excitations, double chi, double g) {
  if (excitations < 1) throw Error(ErrorCode::InvalidManifold, "excitations must be >= 1");
  const double n = excitations;
  return chi + g * (std::sqrt(n + 1.0) - std::sqrt(n)) + 0.5 * std::sqrt(4.0 * g * g * n + chi * chi) -
         0.5 * std::sqrt(4.0 * g * g * (n + 1.0) + chi * chi);
}

}  // namespace blockade
