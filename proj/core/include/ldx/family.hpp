#pragma once

#include <complex>
#include <limits>

#include <Eigen/Dense>

namespace ldx {

using cplx = std::complex<double>;

/// E exp(z S_N) = ell * M(z)^N * v.
struct OperatorTriple {
  Eigen::MatrixXcd M;
  Eigen::RowVectorXcd ell;
  Eigen::VectorXcd v;

  int dim() const { return static_cast<int>(M.rows()); }
  /// Throws ModelError on inconsistent shapes.
  void validate() const;
};

/// Operator family analytic on the strip |Re z| < domain_halfwidth().
class AnalyticFamily {
 public:
  virtual ~AnalyticFamily() = default;
  virtual OperatorTriple evaluate(cplx z) const = 0;
  virtual double domain_halfwidth() const { return std::numeric_limits<double>::infinity(); }
  virtual int dim() const = 0;
  /// True when evaluate(conj z) = conj(evaluate(z)).
  virtual bool is_real() const { return true; }
};

}  // namespace ldx
