#include "ldx/series.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "ldx/errors.hpp"

namespace ldx::series {

namespace {

__extension__ typedef unsigned __int128 uint128;

template <class T>
void trim(std::vector<T>& c) {
  while (!c.empty() && c.back() == T(0)) c.pop_back();
}

}  // namespace

PolynomialC::PolynomialC(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) { trim(coeffs_); }

cplx PolynomialC::operator[](int j) const {
  return (j >= 0 && j < static_cast<int>(coeffs_.size())) ? coeffs_[j] : cplx(0.0);
}

cplx PolynomialC::operator()(cplx s) const {
  cplx acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

PolynomialC PolynomialC::monomial(int j, cplx c) {
  std::vector<cplx> v(static_cast<size_t>(j) + 1, 0.0);
  v[j] = c;
  return PolynomialC(std::move(v));
}

PolynomialR::PolynomialR(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(coeffs_); }

double PolynomialR::operator[](int j) const {
  return (j >= 0 && j < static_cast<int>(coeffs_.size())) ? coeffs_[j] : 0.0;
}

double PolynomialR::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

PolynomialC poly_add(const PolynomialC& p, const PolynomialC& q) {
  std::vector<cplx> out(std::max(p.coeffs().size(), q.coeffs().size()), 0.0);
  for (size_t j = 0; j < out.size(); ++j) out[j] = p[static_cast<int>(j)] + q[static_cast<int>(j)];
  return PolynomialC(std::move(out));
}

PolynomialC poly_mul(const PolynomialC& p, const PolynomialC& q) {
  if (p.is_zero() || q.is_zero()) return PolynomialC();
  const auto& a = p.coeffs();
  const auto& b = q.coeffs();
  std::vector<cplx> out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return PolynomialC(std::move(out));
}

PolynomialC poly_scale(const PolynomialC& p, cplx c) {
  std::vector<cplx> out = p.coeffs();
  for (auto& x : out) x *= c;
  return PolynomialC(std::move(out));
}

PolynomialR to_real(const PolynomialC& p, double rel_tol, double* max_imag) {
  double scale = 0.0, worst = 0.0;
  for (const auto& c : p.coeffs()) {
    scale = std::max(scale, std::abs(c));
    worst = std::max(worst, std::abs(c.imag()));
  }
  if (max_imag) *max_imag = worst;
  if (worst > rel_tol * scale)
  {
    std::ostringstream os;
    os << "imaginary residue " << worst << " exceeds tolerance relative to coefficient scale " << scale;
    throw NumericalError(os.str());
  }
  std::vector<double> out;
  out.reserve(p.coeffs().size());
  for (const auto& c : p.coeffs()) out.push_back(c.real());
  return PolynomialR(std::move(out));
}

GradedSeries::GradedSeries(int order_eps, int order_s)
    : order_eps_(order_eps),
      order_s_(order_s),
      c_(static_cast<size_t>(order_eps + 1) * static_cast<size_t>(order_s + 1), 0.0) {
  if (order_eps < 0 || order_s < 0) throw ConfigError("graded series orders must be nonnegative");
}

GradedSeries GradedSeries::constant(int order_eps, int order_s, cplx c) {
  GradedSeries g(order_eps, order_s);
  g.at(0, 0) = c;
  return g;
}

cplx& GradedSeries::at(int k, int j) { return c_[static_cast<size_t>(k) * (order_s_ + 1) + j]; }

cplx GradedSeries::at(int k, int j) const {
  if (k < 0 || j < 0 || k > order_eps_ || j > order_s_) return 0.0;
  return c_[static_cast<size_t>(k) * (order_s_ + 1) + j];
}

PolynomialC GradedSeries::eps_coefficient(int k) const {
  std::vector<cplx> v(order_s_ + 1);
  for (int j = 0; j <= order_s_; ++j) v[j] = at(k, j);
  return PolynomialC(std::move(v));
}

double GradedSeries::max_structure_violation() const {
  double worst = 0.0;
  for (int k = 0; k <= order_eps_; ++k)
    for (int j = 0; j <= order_s_; ++j)
      if (j > 3 * k || (j + k) % 2 != 0) worst = std::max(worst, std::abs(at(k, j)));
  return worst;
}

GradedSeries graded_add(const GradedSeries& g, const GradedSeries& h) {
  GradedSeries out(std::min(g.order_eps(), h.order_eps()), std::min(g.order_s(), h.order_s()));
  for (int k = 0; k <= out.order_eps(); ++k)
    for (int j = 0; j <= out.order_s(); ++j) out.at(k, j) = g.at(k, j) + h.at(k, j);
  return out;
}

GradedSeries graded_mul(const GradedSeries& g, const GradedSeries& h) {
  GradedSeries out(std::min(g.order_eps(), h.order_eps()), std::min(g.order_s(), h.order_s()));
  const int ke = out.order_eps(), js = out.order_s();
  for (int k1 = 0; k1 <= ke; ++k1)
    for (int j1 = 0; j1 <= js; ++j1) {
      const cplx a = g.at(k1, j1);
      if (a == 0.0) continue;
      for (int k2 = 0; k1 + k2 <= ke; ++k2)
        for (int j2 = 0; j1 + j2 <= js; ++j2) out.at(k1 + k2, j1 + j2) += a * h.at(k2, j2);
    }
  return out;
}

GradedSeries graded_exp(const GradedSeries& g) {
  if (g.at(0, 0) != 0.0) throw DomainError("graded_exp requires a zero constant term");
  const int oe = g.order_eps(), os = g.order_s();
  GradedSeries sum = GradedSeries::constant(oe, os, 1.0);
  GradedSeries term = sum;
  // Every monomial of g has k + j >= 1, so g^n vanishes once n > oe + os.
  for (int n = 1; n <= oe + os; ++n) {
    term = graded_mul(term, g);
    bool nonzero = false;
    for (int k = 0; k <= oe; ++k)
      for (int j = 0; j <= os; ++j) {
        cplx& t = term.at(k, j);
        t /= static_cast<double>(n);
        if (t != 0.0) nonzero = true;
        sum.at(k, j) += t;
      }
    if (!nonzero) break;
  }
  return sum;
}

double double_factorial(int n) {
  if (n < -1 || n > 39) throw RangeError("double factorial argument out of supported range [-1, 39]");
  uint128 acc = 1;
  for (int k = n; k > 1; k -= 2) acc *= static_cast<unsigned>(k);
  return static_cast<double>(acc);
}

double gaussian_moment(int m, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("gaussian_moment requires sigma2 > 0");
  if (m < 0) throw DomainError("gaussian_moment requires m >= 0");
  if (m % 2 == 1) return 0.0;
  if (m > 40) throw RangeError("gaussian_moment supports m <= 40");
  return std::sqrt(2.0 * std::numbers::pi / sigma2) * double_factorial(m - 1) * std::pow(sigma2, -m / 2);
}

double exp_moment(int j, double theta) {
  if (!(theta > 0.0)) throw DomainError("exp_moment requires theta > 0");
  if (j < 0) throw DomainError("exp_moment requires j >= 0");
  double acc = 1.0 / theta;
  for (int i = 1; i <= j; ++i) acc *= i / theta;
  return acc;
}

cplx integrate_against_gaussian(const PolynomialC& p, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("integrate_against_gaussian requires sigma2 > 0");
  cplx acc = 0.0;
  for (int j = 0; j <= p.degree(); ++j)
    if (j % 2 == 0) acc += p[j] * gaussian_moment(j, sigma2);
  return acc;
}

}  // namespace ldx::series
