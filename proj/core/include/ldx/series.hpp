#pragma once

#include <complex>
#include <vector>

namespace ldx::series {

using cplx = std::complex<double>;

/// Complex polynomial, coeffs[j] multiplies s^j. The zero polynomial has no coefficients.
class PolynomialC {
 public:
  PolynomialC() = default;
  explicit PolynomialC(std::vector<cplx> coeffs);

  const std::vector<cplx>& coeffs() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  cplx operator[](int j) const;
  cplx operator()(cplx s) const;

  static PolynomialC monomial(int j, cplx c = 1.0);

 private:
  std::vector<cplx> coeffs_;
};

class PolynomialR {
 public:
  PolynomialR() = default;
  explicit PolynomialR(std::vector<double> coeffs);

  const std::vector<double>& coeffs() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  double operator[](int j) const;
  double operator()(double x) const;

 private:
  std::vector<double> coeffs_;
};

PolynomialC poly_add(const PolynomialC& p, const PolynomialC& q);
PolynomialC poly_mul(const PolynomialC& p, const PolynomialC& q);
PolynomialC poly_scale(const PolynomialC& p, cplx c);

/// Demotes to real. Throws NumericalError when some |Im c_j| exceeds
/// rel_tol * max_j |c_j|. The largest discarded imaginary part is written to max_imag.
PolynomialR to_real(const PolynomialC& p, double rel_tol, double* max_imag = nullptr);

/// Truncated bivariate series sum_{k<=order_eps, j<=order_s} c[k][j] eps^k s^j.
class GradedSeries {
 public:
  GradedSeries(int order_eps, int order_s);

  static GradedSeries constant(int order_eps, int order_s, cplx c);

  int order_eps() const { return order_eps_; }
  int order_s() const { return order_s_; }

  cplx& at(int k, int j);
  cplx at(int k, int j) const;

  /// Coefficient of eps^k as a polynomial in s (A_k for an A-expansion).
  PolynomialC eps_coefficient(int k) const;

  /// Largest |c[k][j]| over entries violating j <= 3k or j = k (mod 2).
  double max_structure_violation() const;

 private:
  int order_eps_;
  int order_s_;
  std::vector<cplx> c_;
};

GradedSeries graded_add(const GradedSeries& g, const GradedSeries& h);
GradedSeries graded_mul(const GradedSeries& g, const GradedSeries& h);
/// Formal exponential; the eps^0 s^0 coefficient must vanish.
GradedSeries graded_exp(const GradedSeries& g);

/// n!! computed in integer arithmetic; n in [-1, 39].
double double_factorial(int n);
/// Integral of s^m exp(-sigma2 s^2 / 2) over the real line.
double gaussian_moment(int m, double sigma2);
/// Integral of x^j exp(-theta x) over [0, inf).
double exp_moment(int j, double theta);
cplx integrate_against_gaussian(const PolynomialC& p, double sigma2);

}  // namespace ldx::series
