#include <gtest/gtest.h>

#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "ldx/engine.hpp"
#include "ldx/errors.hpp"
#include "test_support.hpp"

using namespace ldx;
using namespace ldx::engine;
using ldx::models::AnyModel;
using ldx::models::FiniteMarkovModel;
using ldx::models::IIDFiniteModel;
using ldx::models::IIDMgfModel;
using ldx::series::GradedSeries;

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2Pi = std::sqrt(2.0 * kPi);

double mills_coefficient(int m, double a) {
  double df = 1.0;
  for (int k = 2 * m - 1; k > 1; k -= 2) df *= k;
  return (m % 2 ? -1.0 : 1.0) * df / (kSqrt2Pi * std::pow(a, 2 * m + 1));
}

double bisect(const std::function<double(double)>& g, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Smooth step arctan(kx)/pi + 1/2, joined to zero by cubic Hermite pieces on [-2,-1] and [k,k+1].
struct SmoothStep {
  double k;
  double core(double x) const { return std::atan(k * x) / kPi + 0.5; }
  double dcore(double x) const { return k / (kPi * (1.0 + k * k * x * x)); }
  static double hermite(double t, double y0, double d0, double y1, double d1, double h) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1;
  }
  double operator()(double x) const {
    if (x <= -2.0 || x >= k + 1.0) return 0.0;
    if (x < -1.0) return hermite(x + 2.0, 0.0, 0.0, core(-1.0), dcore(-1.0), 1.0);
    if (x > k) return hermite(x - k, core(k), dcore(k), 0.0, 0.0, 1.0);
    return core(x);
  }
};

}  // namespace

TEST(SolveTilt, GaussianExamples) {
  const AnyModel g = IIDMgfModel::gaussian(0.0, 1.0);
  const TiltData t = solve_tilt(g, 0.5);
  EXPECT_NEAR(t.theta_a, 0.5, 1e-10);
  EXPECT_NEAR(t.rate, 0.125, 1e-10);
  EXPECT_NEAR(t.sigma2, 1.0, 1e-10);
  EXPECT_NEAR(t.Z0, 1.0, 1e-12);
  const TiltData t2 = solve_tilt(g, 2.0);
  EXPECT_NEAR(t2.theta_a, 2.0, 1e-10);
  EXPECT_NEAR(t2.rate, 2.0, 1e-10);
}

TEST(SolveTilt, SymmetricBernoulliMatchesBisection) {
  const AnyModel m = IIDFiniteModel({-1.0, 1.0}, {0.5, 0.5});
  const TiltData t = solve_tilt(m, 0.5);
  const double oracle = bisect([](double th) { return std::tanh(th) - 0.5; }, 0.0, 5.0);
  EXPECT_NEAR(t.theta_a, oracle, 1e-11);
  EXPECT_NEAR(t.theta_a, std::atanh(0.5), 1e-11);
  EXPECT_NEAR(t.rate, 0.5 * oracle - std::log(std::cosh(oracle)), 1e-11);
  EXPECT_NEAR(t.rate, 0.1308, 1e-4);
}

TEST(SolveTilt, Errors) {
  const AnyModel m = IIDFiniteModel({-1.0, 1.0}, {0.5, 0.5});
  EXPECT_THROW(solve_tilt(m, 0.0), RangeError);
  EXPECT_THROW(solve_tilt(m, -0.2), RangeError);
  EXPECT_THROW(solve_tilt(m, 1.0), RangeError);
  EXPECT_THROW(solve_tilt(m, 1.5), RangeError);
  const ldx::testing::ScalarFamily constant([](cplx z) { return std::exp(0.7 * z); });
  EXPECT_THROW(solve_tilt(constant, 0.1), DegenerateVariance);
}

TEST(SolveTilt, BoundedDomainNotBracketed) {
  // Gaussian MGF restricted to a strip of half-width 0.5: a = 2 needs theta = 2.
  const IIDMgfModel g = IIDMgfModel::gaussian(0.0, 1.0, 0.5);
  EXPECT_THROW(solve_tilt(g, 2.0), RangeError);
}

TEST(BuildGraded, GaussianIsConstant) {
  const ldx::models::IIDMgfModel g = IIDMgfModel::gaussian(0.3, 2.0);
  const TiltData t = solve_tilt(g, 1.0);
  const auto g4 = build_graded(tilt_taylor(g, t, 4), t, 4);
  EXPECT_NEAR(std::abs(g4.at(0, 0) - 1.0), 0.0, 1e-12);
  for (int k = 0; k <= 4; ++k)
    for (int j = 0; j <= 17; ++j)
      if (k || j) EXPECT_LT(std::abs(g4.at(k, j)), 1e-9) << k << "," << j;
  const auto g0 = build_graded(tilt_taylor(g, t, 0), t, 0);
  EXPECT_NEAR(std::abs(g0.at(0, 0) - 1.0), 0.0, 1e-12);
}

TEST(BuildGraded, IidFirstTermIsThirdCumulant) {
  const std::vector<double> atoms{0.0, 1.0, std::sqrt(2.0)}, probs{0.3, 0.3, 0.4};
  const IIDFiniteModel m(atoms, probs);
  const TiltData t = solve_tilt(AnyModel(m), 0.3);
  const auto g = build_graded(tilt_taylor(m, t, 2), t, 2);
  const auto kappa = ldx::testing::tilted_cumulants(atoms, probs, t.theta_a, 3);
  const auto A1 = g.eps_coefficient(1);
  ASSERT_EQ(A1.degree(), 3);
  EXPECT_NEAR(std::abs(A1[3] - cplx(0.0, -kappa[3] / 6.0)), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(A1[1]), 0.0, 1e-12);
}

TEST(BuildGraded, StructureHoldsForMarkov) {
  Eigen::MatrixXd P(2, 2), h(2, 2);
  P << 0.6, 0.4, 0.25, 0.75;
  h << 0.0, 1.0, -0.5, 2.0;
  const FiniteMarkovModel m(P, h, Eigen::Vector2d(1.0, 0.0));
  const TiltData t = solve_tilt(AnyModel(m), 0.3);
  const auto g = build_graded(tilt_taylor(m, t, 4), t, 4);
  EXPECT_LT(g.max_structure_violation(), 1e-8);
  EXPECT_NEAR(g.at(0, 0).real(), t.Z0, 1e-10);
}

TEST(AssembleP, GaussianClosedForm) {
  GradedSeries g = GradedSeries::constant(6, 25, 1.0);
  double im = -1.0;
  const auto P = assemble_P(g, 1.0, 6, &im);
  ASSERT_EQ(P.size(), 4u);
  EXPECT_EQ(im, 0.0);
  double df = 1.0, fact = 1.0;
  for (int m = 0; m <= 3; ++m) {
    if (m > 0) {
      df *= 2 * m - 1;
      fact *= (2.0 * m - 1) * (2.0 * m);
    }
    ASSERT_EQ(P[m].degree(), 2 * m);
    EXPECT_NEAR(P[m][2 * m], kSqrt2Pi * (m % 2 ? -1.0 : 1.0) * df / fact, 1e-13);
  }
}

TEST(AssembleP, ConstantSeriesNormalization) {
  const double z0 = 1.7, s2 = 0.6;
  const auto P = assemble_P(GradedSeries::constant(0, 1, z0), s2, 0);
  ASSERT_EQ(P.size(), 1u);
  EXPECT_EQ(P[0].degree(), 0);
  EXPECT_NEAR(P[0][0], z0 * std::sqrt(2.0 * kPi / s2), 1e-13);
}

TEST(AssembleP, RejectsBrokenStructure) {
  GradedSeries g = GradedSeries::constant(2, 9, 1.0);
  g.at(1, 2) = 0.1;
  EXPECT_THROW(assemble_P(g, 1.0, 2), NumericalError);
}

TEST(StrongCoefficients, Examples) {
  const AnyModel g = IIDMgfModel::gaussian(0.0, 1.0);
  const auto res = expand(g, 1.0, {.order = 4});
  ASSERT_EQ(res.D.size(), 3u);
  EXPECT_NEAR(res.D[0], 0.39894, 1e-5);
  EXPECT_NEAR(res.D[1], -0.39894, 1e-5);
  EXPECT_NEAR(res.D[2], 1.19683, 1e-5);
  const auto D = strong_coefficients({ldx::series::PolynomialR({3.0})}, 1.5);
  EXPECT_NEAR(D[0], 3.0 / (2.0 * kPi * 1.5), 1e-15);
  EXPECT_THROW(strong_coefficients({ldx::series::PolynomialR({1.0})}, 0.0), DomainError);
}

TEST(StrongCoefficients, GaussianMillsSeries) {
  for (double a : {0.5, 1.0, 2.0}) {
    const auto res = expand(AnyModel(IIDMgfModel::gaussian(0.0, 1.0)), a, {.order = 10});
    ASSERT_EQ(res.D.size(), 6u);
    for (int m = 0; m <= 5; ++m) EXPECT_LT(ldx::testing::rel_err(res.D[m], mills_coefficient(m, a)), 1e-9) << a << " " << m;
  }
}

TEST(FirstOrder, Examples) {
  const AnyModel g = IIDMgfModel::gaussian(0.0, 1.0);
  EXPECT_NEAR(first_order(solve_tilt(g, 1.0)), 1.0 / kSqrt2Pi, 1e-12);
  EXPECT_NEAR(first_order(solve_tilt(g, 2.0)), 0.19947, 1e-5);
  TiltData t;
  t.Z0 = t.sigma2 = t.theta_a = 1.0;
  EXPECT_NEAR(first_order(t), 1.0 / kSqrt2Pi, 1e-15);
}

TEST(FirstOrderProperty, EqualsLeadingStrongCoefficient) {
  Eigen::MatrixXd P(2, 2), h(2, 2);
  P << 0.6, 0.4, 0.25, 0.75;
  h << 0.0, 1.0, -0.5, 2.0;
  std::vector<std::pair<AnyModel, std::vector<double>>> cases;
  cases.push_back({IIDFiniteModel({0.0, 1.0, std::sqrt(2.0)}, {0.3, 0.3, 0.4}), {0.1, 0.3, 0.5}});
  cases.push_back({FiniteMarkovModel(P, h, Eigen::Vector2d(0.5, 0.5)), {0.1, 0.4, 0.8}});
  cases.push_back({IIDMgfModel::gaussian(1.0, 0.5), {0.2, 1.0, 3.0}});
  cases.push_back({IIDMgfModel::tabulated(0.0, 1.0, {1.0, 2.0, 1.0}), {0.1, 0.3}});
  for (const auto& [model, as] : cases)
    for (double a : as) {
      const auto res = expand(model, a, {.order = 2});
      EXPECT_LT(ldx::testing::rel_err(res.D[0], first_order(res.tilt)), 1e-12) << type_name(model) << " a=" << a;
    }
}

TEST(WeakCoefficients, TrivialCases) {
  const auto res = expand(AnyModel(IIDMgfModel::gaussian(0.0, 1.0)), 1.0, {.order = 4});
  const auto zero = weak_coefficients(res.P, 1.0, [](double) { return 0.0; }, -5.0, 5.0);
  for (const auto& w : zero) EXPECT_EQ(w.value, 0.0);
  // Tilt cancellation: f = e^{theta x} on [0, 1] leaves (1/2pi) P_0.
  const auto box = weak_coefficients(res.P, 1.0, [](double x) { return std::exp(x); }, 0.0, 1.0);
  EXPECT_NEAR(box[0].value, res.P[0][0] / (2.0 * kPi), 1e-12);
  EXPECT_THROW(weak_coefficients(res.P, 1.0, [](double) { return 1.0; }, 1.0, 0.0), ConfigError);
}

TEST(WeakCoefficients, SmoothStepApproachesStrong) {
  const auto res = expand(AnyModel(IIDMgfModel::gaussian(0.0, 1.0)), 1.0, {.order = 4});
  std::vector<std::vector<double>> err;
  for (double k : {10.0, 50.0, 250.0}) {
    const SmoothStep f{k};
    const auto w = weak_coefficients(res.P, res.tilt.theta_a, f, -2.0, k + 1.0, {-1.0, 0.0, k});
    std::vector<double> e;
    for (size_t m = 0; m < w.size(); ++m) e.push_back(ldx::testing::rel_err(w[m].value, res.D[m]));
    err.push_back(e);
  }
  for (size_t m = 0; m < res.D.size(); ++m) {
    EXPECT_LT(err[1][m], err[0][m]) << m;
    EXPECT_LT(err[2][m], err[1][m]) << m;
  }
}

TEST(WeakCoefficients, SmoothStepWithinTwoPercent) {
  // Leading smoothing error is about 2 theta^2 / (pi k), so theta = 0.5 here.
  const auto res = expand(AnyModel(IIDMgfModel::gaussian(0.0, 1.0)), 0.5, {.order = 4});
  const SmoothStep f{50.0};
  const auto w = weak_coefficients(res.P, res.tilt.theta_a, f, -2.0, 51.0, {-1.0, 0.0, 50.0});
  for (size_t m = 0; m < w.size(); ++m) EXPECT_LT(ldx::testing::rel_err(w[m].value, res.D[m]), 0.02) << "m=" << m;
}

TEST(EvaluateExpansion, Examples) {
  const auto res = expand(AnyModel(IIDMgfModel::gaussian(0.0, 1.0)), 1.0, {.order = 4});
  EXPECT_NEAR(evaluate_expansion(res, 100, 0), 0.039894, 1e-6);
  EXPECT_NEAR(evaluate_expansion(res, 100, 2), (1.0 - 0.01 + 3e-4) / std::sqrt(2.0 * kPi * 100.0), 1e-10);
  EXPECT_THROW(evaluate_expansion(res, 100, 3), RangeError);
  EXPECT_THROW(evaluate_expansion(res, 0, 0), RangeError);
  ExpansionResult one;
  one.D = {0.37};
  EXPECT_EQ(evaluate_expansion(one, 1, 0), 0.37);
}

TEST(Expand, OrderLimitsAndWarnings) {
  const AnyModel g = IIDMgfModel::gaussian(0.0, 1.0);
  EXPECT_THROW(expand(g, 1.0, {.order = 11}), ConfigError);
  EXPECT_THROW(expand(g, 1.0, {.order = -1}), ConfigError);
  EXPECT_FALSE(expand(g, 1.0, {.order = 8}).diagnostics.warnings.empty());
  EXPECT_TRUE(expand(g, 1.0, {.order = 4}).diagnostics.warnings.empty());
  const auto lat = expand(AnyModel(IIDFiniteModel({-1.0, 1.0}, {0.5, 0.5})), 0.5, {.order = 2});
  ASSERT_FALSE(lat.diagnostics.warnings.empty());
  EXPECT_NE(lat.diagnostics.warnings[0].find("lattice"), std::string::npos);
}

TEST(ExpansionInvariants, AStructure) {
  Eigen::MatrixXd P(3, 3), h(3, 3);
  P << 0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.3, 0.3, 0.4;
  h << 0.0, 1.0, 2.0, -1.0, 0.5, 1.5, 0.3, 0.0, 1.0;
  const auto res = expand(AnyModel(FiniteMarkovModel(P, h, Eigen::Vector3d(1, 0, 0))), 0.4, {.order = 6});
  EXPECT_NEAR(std::abs(res.A[0][0] - res.tilt.Z0), 0.0, 1e-10);
  for (int k = 0; k <= 6; ++k) {
    EXPECT_LE(res.A[k].degree(), 3 * k);
    for (int j = 0; j <= res.A[k].degree(); ++j)
      if ((j + k) % 2) EXPECT_LT(std::abs(res.A[k][j]), 1e-9);
  }
  for (size_t m = 0; m < res.P.size(); ++m) EXPECT_LE(res.P[m].degree(), 2 * static_cast<int>(m));
  EXPECT_EQ(res.P[0].degree(), 0);
  double scale = 0.0;
  for (const auto& p : res.P)
    for (int j = 0; j <= p.degree(); ++j) scale = std::max(scale, std::abs(p[j]));
  EXPECT_LT(res.diagnostics.max_imag_discarded, 1e-10 * scale);
  EXPECT_GT(res.diagnostics.continuation_radius, 0.0);
}

TEST(LegendreProperty, RateDerivativeIsTheta) {
  Eigen::MatrixXd P(2, 2), h(2, 2);
  P << 0.6, 0.4, 0.25, 0.75;
  h << 0.0, 1.0, -0.5, 2.0;
  std::vector<AnyModel> models{IIDFiniteModel({0.0, 1.0, std::sqrt(2.0)}, {0.3, 0.3, 0.4}),
                               FiniteMarkovModel(P, h, Eigen::Vector2d(0.5, 0.5))};
  for (const auto& model : models)
    for (double a : {0.1, 0.25, 0.4}) {
      const TiltData t = solve_tilt(model, a);
      EXPECT_NEAR(t.rate + t.log_lambda, a * t.theta_a, 1e-12);
      const double hstep = 1e-4;
      const double dI = (solve_tilt(model, a + hstep).rate - solve_tilt(model, a - hstep).rate) / (2 * hstep);
      EXPECT_NEAR(dI, t.theta_a, 1e-6) << type_name(model) << " a=" << a;
      const double h2 = 1e-4;
      const double d2I = (solve_tilt(model, a + h2).theta_a - solve_tilt(model, a - h2).theta_a) / (2 * h2);
      EXPECT_NEAR(d2I * t.sigma2, 1.0, 1e-5);
    }
}

TEST(CenteringProperty, ShiftedIidModelAgrees) {
  const std::vector<double> atoms{0.0, 1.0, std::sqrt(2.0)}, probs{0.3, 0.3, 0.4};
  for (double c : {-2.0, 3.5}) {
    std::vector<double> shifted;
    for (double x : atoms) shifted.push_back(x + c);
    for (double a : {0.15, 0.4}) {
      const auto r0 = expand(AnyModel(IIDFiniteModel(atoms, probs)), a, {.order = 4});
      const auto r1 = expand(AnyModel(IIDFiniteModel(shifted, probs)), a, {.order = 4});
      EXPECT_NEAR(r1.tilt.mean - r0.tilt.mean, c, 1e-11);
      EXPECT_NEAR(r1.tilt.theta_a, r0.tilt.theta_a, 1e-10);
      EXPECT_NEAR(r1.tilt.sigma2, r0.tilt.sigma2, 1e-10);
      EXPECT_NEAR(r1.tilt.rate, r0.tilt.rate, 1e-10);
      for (size_t m = 0; m < r0.D.size(); ++m)
        EXPECT_LT(std::abs(r1.D[m] - r0.D[m]), 1e-8 * std::max(1.0, std::abs(r0.D[m])));
    }
  }
}

TEST(StrongCoefficients, ExponentialLawMatchesGammaTail) {
  // Exp(1) sums are Gamma(N, 1); the scaled residual after m terms tends to D_{m+1}.
  const ldx::testing::ScalarFamily exp_law([](cplx z) { return 1.0 / (1.0 - z); }, true, 1.0);
  const double a = 0.5;
  ExpandOptions o;
  o.order = 6;
  const auto res = expand(exp_law, a, o);
  EXPECT_NEAR(res.tilt.theta_a, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(res.tilt.rate, a - std::log1p(a), 1e-12);
  const long long N = 3200;
  const double q = boost::math::gamma_q(static_cast<double>(N), N * (1.0 + a)) * std::exp(res.tilt.rate * N);
  for (int m = 0; m < 3; ++m) {
    const double scaled = (q - evaluate_expansion(res, N, m)) * std::pow(static_cast<double>(N), m + 1.5);
    EXPECT_LT(ldx::testing::rel_err(scaled, res.D[m + 1]), 0.02) << m;
  }
}
