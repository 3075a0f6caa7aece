#include "blockade/photon_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "blockade/errors.hpp"

namespace blockade {

PhotonDistribution::PhotonDistribution(std::vector<double> probabilities) : p_(std::move(probabilities)) {
  if (p_.empty()) throw Error(ErrorCode::InvalidDistribution, "empty photon distribution");
  double sum = 0.0;
  for (double& v : p_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidDistribution, "non-finite probability");
    if (v < -kNegativityTolerance) {
      throw Error(ErrorCode::InvalidDistribution, "probability " + std::to_string(v) + " is negative");
    }
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance + static_cast<double>(p_.size()) * kNegativityTolerance) {
    throw Error(ErrorCode::InvalidDistribution, "probabilities sum to " + std::to_string(sum));
  }
  for (double& v : p_) v /= sum;
}

PhotonDistribution PhotonDistribution::from_weights(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidDistribution, "negative weight");
    sum += w;
  }
  if (sum <= 0.0) throw Error(ErrorCode::InvalidDistribution, "weights sum to zero");
  std::vector<double> p(weights.begin(), weights.end());
  for (double& v : p) v /= sum;
  return PhotonDistribution(std::move(p));
}

PhotonDistribution PhotonDistribution::poisson(double mean, int n_max) {
  if (mean < 0.0 || n_max < 0) throw Error(ErrorCode::InvalidDistribution, "invalid Poisson parameters");
  std::vector<double> p(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    p[static_cast<std::size_t>(n)] =
        mean == 0.0 ? (n == 0 ? 1.0 : 0.0) : std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
  }
  return from_weights(p);
}

PhotonDistribution PhotonDistribution::fock(int n, int n_max) {
  if (n < 0 || n > n_max) throw Error(ErrorCode::InvalidDistribution, "Fock index out of range");
  std::vector<double> p(static_cast<std::size_t>(n_max) + 1, 0.0);
  p[static_cast<std::size_t>(n)] = 1.0;
  return PhotonDistribution(std::move(p));
}

double PhotonDistribution::mean() const { return factorial_moment(1); }

double PhotonDistribution::factorial_moment(int m) const {
  double sum = 0.0;
  for (std::size_t n = 0; n < p_.size(); ++n) {
    double falling = 1.0;
    for (int i = 0; i < m; ++i) falling *= static_cast<double>(n) - i;
    sum += falling * p_[n];
  }
  return sum;
}

double PhotonDistribution::tail_from(int n0) const {
  double sum = 0.0;
  for (std::size_t n = static_cast<std::size_t>(std::max(n0, 0)); n < p_.size(); ++n) sum += p_[n];
  return sum;
}

}  // namespace blockade
