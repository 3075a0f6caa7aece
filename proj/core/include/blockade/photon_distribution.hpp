#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace blockade {

/// Photon-number probabilities P(n) for n = 0..n_max.
///
/// Construction enforces normalization (1e-9) and positivity (entries >= -1e-8).
/// Small negative entries from numerical solves are clipped and the vector is
/// renormalized; anything more negative is rejected.
class PhotonDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;
  static constexpr double kNegativityTolerance = 1e-8;

  explicit PhotonDistribution(std::vector<double> probabilities);

  /// Normalizes nonnegative weights to unit sum.
  static PhotonDistribution from_weights(std::span<const double> weights);
  /// Poisson(mean) truncated at n_max and renormalized.
  static PhotonDistribution poisson(double mean, int n_max);
  static PhotonDistribution fock(int n, int n_max);

  const std::vector<double>& probabilities() const noexcept { return p_; }
  std::size_t size() const noexcept { return p_.size(); }
  int n_max() const noexcept { return static_cast<int>(p_.size()) - 1; }
  double operator[](std::size_t n) const { return p_.at(n); }

  double mean() const;
  /// sum_n n(n-1)...(n-m+1) P(n).
  double factorial_moment(int m) const;
  /// sum_{n >= n0} P(n).
  double tail_from(int n0) const;

 private:
  std::vector<double> p_;
};

}  // namespace blockade
