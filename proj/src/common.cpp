#include "esrlcm/common.hpp"

#include <cmath>

namespace esrlcm {

double sample_beta(Rng& rng, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta shape parameters must be positive");
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  double x = ga(rng);
  double y = gb(rng);
  // Both gammas can underflow to zero for tiny shapes; fall back to the mean.
  if (x + y <= 0.0) return a / (a + b);
  return x / (x + y);
}

std::vector<double> sample_dirichlet(Rng& rng, const std::vector<double>& alpha) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0)) throw DomainError("dirichlet parameters must be positive");
    std::gamma_distribution<double> g(alpha[k], 1.0);
    out[k] = g(rng);
    total += out[k];
  }
  if (total <= 0.0) {
    double s = 0.0;
    for (double a : alpha) s += a;
    for (std::size_t k = 0; k < alpha.size(); ++k) out[k] = alpha[k] / s;
    return out;
  }
  for (double& x : out) x /= total;
  return out;
}

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace esrlcm
