#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "ldx/family.hpp"
#include "ldx/models.hpp"

namespace ldx::testing {

/// 1x1 family from a closure.
class ScalarFamily final : public AnalyticFamily {
 public:
  explicit ScalarFamily(std::function<cplx(cplx)> f, bool real = true,
                        double delta = std::numeric_limits<double>::infinity())
      : f_(std::move(f)), real_(real), delta_(delta) {}
  OperatorTriple evaluate(cplx z) const override {
    OperatorTriple t;
    t.M = Eigen::MatrixXcd::Constant(1, 1, f_(z));
    t.ell = Eigen::RowVectorXcd::Ones(1);
    t.v = Eigen::VectorXcd::Ones(1);
    return t;
  }
  int dim() const override { return 1; }
  bool is_real() const override { return real_; }
  double domain_halfwidth() const override { return delta_; }

 private:
  std::function<cplx(cplx)> f_;
  bool real_;
  double delta_;
};

/// Cumulants kappa_1..kappa_J of the theta-tilted discrete law, from raw moments.
inline std::vector<double> tilted_cumulants(const std::vector<double>& atoms, const std::vector<double>& probs,
                                            double theta, int J) {
  std::vector<double> w(atoms.size());
  double z = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) z += (w[i] = probs[i] * std::exp(theta * atoms[i]));
  std::vector<double> mu(J + 1, 0.0);
  for (int n = 0; n <= J; ++n)
    for (size_t i = 0; i < atoms.size(); ++i) mu[n] += w[i] / z * std::pow(atoms[i], n);
  // kappa_n = mu_n - sum_{m=1}^{n-1} C(n-1, m-1) kappa_m mu_{n-m}
  std::vector<double> kappa(J + 1, 0.0);
  for (int n = 1; n <= J; ++n) {
    double acc = mu[n];
    for (int m = 1; m < n; ++m) acc -= std::tgamma(n) / (std::tgamma(m) * std::tgamma(n - m + 1)) * kappa[m] * mu[n - m];
    kappa[n] = acc;
  }
  kappa[0] = std::log(z);
  return kappa;
}

/// Random positive stochastic matrix with entries bounded away from zero.
inline Eigen::MatrixXd random_stochastic(std::mt19937& gen, int d) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::MatrixXd P(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) P(j, k) = u(gen);
    P.row(j) /= P.row(j).sum();
  }
  return P;
}

inline Eigen::MatrixXd random_matrix(std::mt19937& gen, int d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd h(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) h(j, k) = u(gen);
  return h;
}

inline double rel_err(double x, double y) { return std::abs(x - y) / std::abs(y); }

}  // namespace ldx::testing
