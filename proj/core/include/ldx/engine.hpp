#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ldx/models.hpp"
#include "ldx/series.hpp"
#include "ldx/spectral.hpp"

namespace ldx::engine {

/// Saddle-point bundle. `a` is the excess over the asymptotic mean `mean`;
/// log_lambda is the centered value log lambda(theta_a) - mean * theta_a.
struct TiltData {
  double a = 0.0;
  double mean = 0.0;
  double theta_a = 0.0;
  double rate = 0.0;
  double sigma2 = 0.0;
  double log_lambda = 0.0;
  double Z0 = 0.0;
  double gap = 0.0;
};

struct TiltOptions {
  /// Upper end of the admissible excess range (B - mean).
  double upper = std::numeric_limits<double>::infinity();
  double tol = 1e-12;
  int max_iter = 200;
  double theta_max = 1e4;
  spectral::TaylorOptions taylor;
};

/// Asymptotic mean L[1] at theta = 0.
double asymptotic_mean(const AnalyticFamily& family, const spectral::TaylorOptions& opts = {});

TiltData solve_tilt(const AnalyticFamily& family, double a, const TiltOptions& opts = {});
/// Model-aware variant: fills opts.upper from ldp_range when it is exact.
TiltData solve_tilt(const models::AnyModel& model, double a, TiltOptions opts = {});

/// Taylor data at theta_a to order 3r + 2.
spectral::TaylorData tilt_taylor(const AnalyticFamily& family, const TiltData& tilt, int r,
                                 const spectral::TaylorOptions& opts = {});

/// exp(psi-series) * Z-series truncated at eps^r, s^{4r+1}.
series::GradedSeries build_graded(const spectral::TaylorData& taylor, const TiltData& tilt, int r);

/// P_0..P_{floor(r/2)}; writes the largest discarded imaginary part to max_imag.
std::vector<series::PolynomialR> assemble_P(const series::GradedSeries& g, double sigma2, int r,
                                            double* max_imag = nullptr);

std::vector<double> strong_coefficients(const std::vector<series::PolynomialR>& P, double theta_a);

double first_order(const TiltData& tilt);

struct WeakCoefficient {
  int m = 0;
  double value = 0.0;
  double error = 0.0;
};

/// (1/2pi) int P_m(x) exp(-theta_a x) f(x) dx over [lo, hi], split at breakpoints.
std::vector<WeakCoefficient> weak_coefficients(const std::vector<series::PolynomialR>& P, double theta_a,
                                               const std::function<double(double)>& f, double lo,
                                               double hi, const std::vector<double>& breakpoints = {},
                                               int max_depth = 20, double abs_tol = 1e-10);

struct Diagnostics {
  double max_imag_discarded = 0.0;
  double gap = 0.0;
  double continuation_radius = 0.0;
  double aliasing = 0.0;
  std::vector<std::string> warnings;
};

struct ExpansionResult {
  TiltData tilt;
  int order = 0;
  std::vector<series::PolynomialC> A;
  std::vector<series::PolynomialR> P;
  std::vector<double> D;
  Diagnostics diagnostics;
};

struct ExpandOptions {
  int order = 4;
  TiltOptions tilt;
};

constexpr int kMaxOrder = 10;

ExpansionResult expand(const AnalyticFamily& family, double a, const ExpandOptions& opts = {});
/// Model-aware variant: range check from ldp_range and lattice warning for finite iid laws.
ExpansionResult expand(const models::AnyModel& model, double a, ExpandOptions opts = {});

/// sum_{m <= orders} D_m / N^{m + 1/2}.
double evaluate_expansion(const ExpansionResult& res, long long N, int orders);

}  // namespace ldx::engine
