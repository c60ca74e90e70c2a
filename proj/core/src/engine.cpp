#include "ldx/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ldx/errors.hpp"

namespace ldx::engine {

namespace {

using series::cplx;
using series::GradedSeries;
using series::PolynomialC;
using series::PolynomialR;

constexpr double kPi = std::numbers::pi;

double rel_gap(double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); }

spectral::TaylorData low_order(const AnalyticFamily& family, double theta, const spectral::TaylorOptions& o) {
  return spectral::taylor_via_cauchy(family, theta, 2, o);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

double asymptotic_mean(const AnalyticFamily& family, const spectral::TaylorOptions& opts) {
  return low_order(family, 0.0, opts).L[1].real();
}

namespace {

/// Saddle-point solve. `t0` is the Taylor data at 0 when the caller already has it; the
/// final Taylor data at theta_a is computed to order J and returned through `td_out`.
TiltData solve_tilt_impl(const AnalyticFamily& family, double a, const TiltOptions& opts,
                         const spectral::TaylorData* t0_in, int J, spectral::TaylorData* td_out) {
  if (!std::isfinite(a)) throw RangeError("a must be finite");
  if (a == 0.0) throw RangeError("a = 0 is the central-limit regime; expansions need a > 0");
  if (a < 0.0) throw RangeError("a must be positive (negate the observable for lower tails)");
  if (a >= opts.upper)
    throw RangeError("a = " + fmt(a) + " is outside the large-deviation range (upper end " + fmt(opts.upper) + ")");

  const spectral::TaylorData t0 = t0_in ? *t0_in : low_order(family, 0.0, opts.taylor);
  const double mean = t0.L[1].real();
  if (!(t0.L[2].real() > 1e-10))
    throw DegenerateVariance("asymptotic variance vanishes (observable is cohomologous to a constant)");
  const double target = mean + a;

  const double delta = family.domain_halfwidth();
  const double cap = std::min(opts.theta_max, delta - 2.0 * opts.taylor.boundary_margin);
  if (!(cap > 0.0)) throw DomainError("domain too narrow for a saddle-point solve");

  double lo = 0.0, hi = cap;
  bool have_hi = false;
  double theta = std::min(a / t0.L[2].real(), 0.5 * cap);
  spectral::TaylorData td;
  bool converged = false;
  // Newton steps use a coarse circle; the converged point is re-checked on the full one.
  spectral::TaylorOptions coarse = opts.taylor;
  if (coarse.nodes <= 0) {
    coarse.nodes = 16;
    coarse.alias_tol = std::max(coarse.alias_tol, 1e-6);
  }
  for (int it = 0; it < opts.max_iter && !converged; ++it) {
    td = low_order(family, theta, coarse);
    coarse.radius = td.radius;
    const double f = td.L[1].real() - target;
    const double fp = td.L[2].real();
    if (!(fp > 1e-10)) throw DegenerateVariance("(log lambda)'' is not positive at theta = " + fmt(theta));
    if (f < 0.0) {
      lo = theta;
    } else {
      hi = theta;
      have_hi = true;
    }
    double next = theta - f / fp;
    if (!(next > lo && next < hi)) {
      if (have_hi) {
        next = 0.5 * (lo + hi);
      } else {
        if (theta >= cap * (1.0 - 1e-12))
          throw RangeError("saddle point not bracketed inside the analyticity domain");
        next = std::min(2.0 * theta, 0.5 * (theta + cap));
        if (cap - theta < 1e-9 * cap) next = cap;
      }
    }
    if (std::abs(next - theta) <= opts.tol * theta || (have_hi && hi - lo <= opts.tol * hi)) converged = true;
    theta = next;
  }
  if (!converged) throw NumericalError("saddle-point iteration did not converge");

  td = spectral::taylor_via_cauchy(family, theta, J, opts.taylor);
  for (int it = 0; it < opts.max_iter && std::abs(td.L[1].real() - target) > opts.tol * std::max(1.0, std::abs(target));
       ++it) {
    theta -= (td.L[1].real() - target) / td.L[2].real();
    td = spectral::taylor_via_cauchy(family, theta, J, opts.taylor);
  }
  const double sigma2 = td.L[2].real();
  if (!(sigma2 > 1e-10)) throw DegenerateVariance("sigma^2 vanishes at the saddle point");
  const spectral::PerronData pd = spectral::perron(family.evaluate(theta));
  if (!(pd.Z.real() > 0.0)) throw NumericalError("amplitude ell(Pi v) is not positive at the saddle point");

  TiltData out;
  out.a = a;
  out.mean = mean;
  out.theta_a = theta;
  out.sigma2 = sigma2;
  out.log_lambda = td.L[0].real() - mean * theta;
  out.rate = a * theta - out.log_lambda;
  out.Z0 = pd.Z.real();
  out.gap = pd.gap;
  if (td_out) *td_out = std::move(td);
  return out;
}

/// Taylor data at 0 plus the admissible upper end for a model.
spectral::TaylorData model_origin(const models::AnyModel& model, const spectral::TaylorOptions& o, double& upper) {
  spectral::TaylorData t0 = low_order(models::as_family(model), 0.0, o);
  const models::LdpRange range = models::ldp_range(model);
  if (range.exact) upper = std::min(upper, range.upper - t0.L[1].real());
  return t0;
}

}  // namespace

TiltData solve_tilt(const AnalyticFamily& family, double a, const TiltOptions& opts) {
  return solve_tilt_impl(family, a, opts, nullptr, 2, nullptr);
}

TiltData solve_tilt(const models::AnyModel& model, double a, TiltOptions opts) {
  const spectral::TaylorData t0 = model_origin(model, opts.taylor, opts.upper);
  return solve_tilt_impl(models::as_family(model), a, opts, &t0, 2, nullptr);
}

spectral::TaylorData tilt_taylor(const AnalyticFamily& family, const TiltData& tilt, int r,
                                 const spectral::TaylorOptions& opts) {
  return spectral::taylor_via_cauchy(family, tilt.theta_a, 3 * r + 2, opts);
}

GradedSeries build_graded(const spectral::TaylorData& taylor, const TiltData& tilt, int r) {
  if (r < 0) throw ConfigError("expansion order must be nonnegative");
  if (taylor.J < std::max(2, r + 2)) throw ConfigError("Taylor data too short for the requested order");
  const cplx I(0.0, 1.0);

  // Linear and quadratic terms of n log(lambda-bar(s / sqrt n)) must reduce to -sigma^2 s^2 / 2.
  const double target = tilt.mean + tilt.a;
  if (rel_gap(taylor.L[1].real(), target) > 1e-8 || std::abs(taylor.L[1].imag()) > 1e-8 * std::max(1.0, target))
    throw NumericalError("linear term does not cancel: L[1] differs from the target mean");
  const cplx quad = I * I * taylor.L[2] / 2.0;
  if (std::abs(quad + tilt.sigma2 / 2.0) > 1e-8 * std::max(1.0, tilt.sigma2))
    throw NumericalError("quadratic term differs from -sigma^2/2");

  const int os = 4 * r + 1;
  GradedSeries psi(r, os), zs(r, os);
  cplx ipow = I * I;
  double fact = 2.0;
  for (int j = 3; j <= r + 2; ++j) {
    ipow *= I;
    fact *= j;
    psi.at(j - 2, j) = ipow * taylor.L[j] / fact;
  }
  ipow = 1.0;
  fact = 1.0;
  for (int j = 0; j <= r; ++j) {
    if (j > 0) {
      ipow *= I;
      fact *= j;
    }
    zs.at(j, j) = ipow * taylor.F[j] / fact;
  }
  return series::graded_mul(series::graded_exp(psi), zs);
}

std::vector<PolynomialR> assemble_P(const GradedSeries& g, double sigma2, int r, double* max_imag) {
  const double violation = g.max_structure_violation();
  if (violation > 0.0) throw NumericalError("A-series violates parity or degree structure");

  std::vector<PolynomialC> A;
  for (int k = 0; k <= r; ++k) A.push_back(g.eps_coefficient(k));

  // b[k][j] = int s^j A_k(s) exp(-sigma2 s^2 / 2) ds
  std::vector<std::vector<cplx>> b(r + 1, std::vector<cplx>(r + 1));
  double scale = 0.0;
  for (int k = 0; k <= r; ++k)
    for (int j = 0; j <= r; ++j) {
      const PolynomialC integrand = series::poly_mul(PolynomialC::monomial(j), A[k]);
      b[k][j] = series::integrate_against_gaussian(integrand, sigma2);
      for (int q = 0; q <= integrand.degree(); q += 2)
        scale = std::max(scale, std::abs(integrand[q]) * series::gaussian_moment(q, sigma2));
    }
  for (int k = 0; k <= r; ++k)
    for (int j = 0; j <= r; ++j)
      if ((k + j) % 2 == 1 && std::abs(b[k][j]) > 1e-10 * std::max(scale, 1.0))
        throw NumericalError("odd-parity Gaussian integral does not vanish");

  std::vector<PolynomialR> P;
  double worst = 0.0;
  const cplx minus_i(0.0, -1.0);
  for (int m = 0; 2 * m <= r; ++m) {
    std::vector<cplx> c(2 * m + 1, 0.0);
    cplx ipow = 1.0;
    double fact = 1.0;
    for (int j = 0; j <= 2 * m; ++j) {
      if (j > 0) {
        ipow *= minus_i;
        fact *= j;
      }
      const int k = 2 * m - j;
      if (k <= r) c[j] = b[k][j] / fact * ipow;
    }
    // Imaginary residue measured in the Gaussian-weighted norm sum_j |c_j| E|s|^j.
    double re_w = 0.0, im_w = 0.0;
    for (int j = 0; j <= 2 * m; ++j) {
      const double w = series::gaussian_moment(j + j % 2, sigma2);
      re_w += std::abs(c[j].real()) * w;
      im_w += std::abs(c[j].imag()) * w;
    }
    if (im_w > 1e-8 * re_w)
      throw NumericalError("P_" + std::to_string(m) + " has imaginary residue " + fmt(im_w) +
                           " against weighted scale " + fmt(re_w));
    double imag = 0.0;
    P.push_back(series::to_real(PolynomialC(c), std::numeric_limits<double>::infinity(), &imag));
    worst = std::max(worst, imag);
    if (P.back().degree() > 2 * m) throw NumericalError("P_m exceeds degree 2m");
  }
  if (max_imag) *max_imag = worst;
  return P;
}

std::vector<double> strong_coefficients(const std::vector<PolynomialR>& P, double theta_a) {
  if (!(theta_a > 0.0)) throw DomainError("strong coefficients need theta_a > 0");
  std::vector<double> D;
  for (const auto& p : P) {
    double acc = 0.0;
    for (int j = 0; j <= p.degree(); ++j) acc += p[j] * series::exp_moment(j, theta_a);
    D.push_back(acc / (2.0 * kPi));
  }
  return D;
}

double first_order(const TiltData& tilt) {
  return tilt.Z0 / (tilt.theta_a * std::sqrt(2.0 * kPi * tilt.sigma2));
}

std::vector<WeakCoefficient> weak_coefficients(const std::vector<PolynomialR>& P, double theta_a,
                                               const std::function<double(double)>& f, double lo,
                                               double hi, const std::vector<double>& breakpoints,
                                               int max_depth, double abs_tol) {
  if (!(hi > lo)) throw ConfigError("weak coefficient support must have hi > lo");
  std::vector<double> cuts{lo};
  for (double x : breakpoints)
    if (x > lo && x < hi) cuts.push_back(x);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());

  std::vector<WeakCoefficient> out;
  for (size_t m = 0; m < P.size(); ++m) {
    const PolynomialR& p = P[m];
    auto integrand = [&](double x) {
      const double fx = f(x);
      return fx == 0.0 ? 0.0 : p(x) * std::exp(-theta_a * x) * fx;
    };
    double value = 0.0, error = 0.0;
    for (size_t c = 0; c + 1 < cuts.size(); ++c) {
      double err = 0.0;
      value += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          integrand, cuts[c], cuts[c + 1], static_cast<unsigned>(max_depth), 1e-13, &err);
      error += err;
    }
    value /= 2.0 * kPi;
    error /= 2.0 * kPi;
    if (!std::isfinite(value) || error > abs_tol)
      throw NumericalError("weak-coefficient quadrature did not converge (error " + fmt(error) + ")");
    out.push_back({static_cast<int>(m), value, error});
  }
  return out;
}

namespace {

ExpansionResult expand_impl(const AnalyticFamily& family, double a, const ExpandOptions& opts,
                            const spectral::TaylorData* t0) {
  const int r = opts.order;
  if (r < 0 || r > kMaxOrder)
    throw ConfigError("expansion order must lie in [0, " + std::to_string(kMaxOrder) + "]");

  ExpansionResult res;
  res.order = r;
  if (r > 6)
    res.diagnostics.warnings.push_back("order " + std::to_string(r) +
                                       " is beyond 6: Cauchy differentiation loses about one digit per two orders");
  spectral::TaylorData td;
  res.tilt = solve_tilt_impl(family, a, opts.tilt, t0, 3 * r + 2, &td);
  const GradedSeries g = build_graded(td, res.tilt, r);
  for (int k = 0; k <= r; ++k) res.A.push_back(g.eps_coefficient(k));
  res.P = assemble_P(g, res.tilt.sigma2, r, &res.diagnostics.max_imag_discarded);
  res.D = strong_coefficients(res.P, res.tilt.theta_a);
  res.diagnostics.gap = res.tilt.gap;
  res.diagnostics.continuation_radius = td.radius;
  res.diagnostics.aliasing = td.aliasing;
  return res;
}

}  // namespace

ExpansionResult expand(const AnalyticFamily& family, double a, const ExpandOptions& opts) {
  return expand_impl(family, a, opts, nullptr);
}

ExpansionResult expand(const models::AnyModel& model, double a, ExpandOptions opts) {
  std::vector<std::string> warnings;
  if (const auto* iid = std::get_if<models::IIDFiniteModel>(&model)) {
    const models::NonlatticeResult nl = models::nonlattice_check(*iid);
    if (!nl.nonlattice)
      warnings.push_back("lattice law with step " + fmt(nl.step) +
                         ": non-lattice hypothesis violated, expansion computed anyway");
  }
  const spectral::TaylorData t0 = model_origin(model, opts.tilt.taylor, opts.tilt.upper);
  ExpansionResult res = expand_impl(models::as_family(model), a, opts, &t0);
  res.diagnostics.warnings.insert(res.diagnostics.warnings.begin(), warnings.begin(), warnings.end());
  return res;
}

double evaluate_expansion(const ExpansionResult& res, long long N, int orders) {
  if (N < 1) throw RangeError("N must be at least 1");
  if (orders < 0 || orders >= static_cast<int>(res.D.size()))
    throw RangeError("requested " + std::to_string(orders) + " orders but only " +
                     std::to_string(res.D.size()) + " coefficients are available");
  double acc = 0.0;
  const double n = static_cast<double>(N);
  for (int m = 0; m <= orders; ++m) acc += res.D[m] / std::pow(n, m + 0.5);
  return acc;
}

}  // namespace ldx::engine
