#pragma once

#include <vector>

#include "ldx/family.hpp"

namespace ldx::spectral {

struct PerronData {
  cplx lambda;
  Eigen::VectorXcd w;     // right eigenvector
  Eigen::RowVectorXcd u;  // left eigenvector
  cplx Z;                 // ell(Pi v)
  double gap = 0.0;       // |lambda_2| / |lambda|
};

/// Dominant eigendata. Throws GapViolation when the top modulus is not isolated
/// (relative separation below 1e-10) and NumericalError when it is near-defective.
PerronData perron(const OperatorTriple& t);

struct CurvePoint {
  cplx z;
  cplx lambda;
  cplx Z;
};

/// Tracks the dominant eigenvalue of `family` from `center` out to the circle
/// center + radius e^{i phi} and once around it. Returns the `points` circle nodes
/// (phi_k = 2 pi k / points). Throws ContinuationError on ambiguous tracking or
/// when the loop does not close.
std::vector<CurvePoint> eigencurve(const AnalyticFamily& family, double center, double radius,
                                   int points);

struct TaylorOptions {
  int min_nodes = 64;
  double max_radius = 1.0;
  double boundary_fraction = 0.25;
  double boundary_margin = 1e-3;
  int max_halvings = 6;
  double alias_tol = 1e-8;
  double imag_tol = 1e-8;
  /// Overrides the automatic radius when positive.
  double radius = 0.0;
  /// Overrides the node count when positive.
  int nodes = 0;
};

struct TaylorData {
  std::vector<cplx> L;  // L[j] = (log lambda)^{(j)}(theta)
  std::vector<cplx> F;  // F[j] = d^j/dz^j ell(Pi_z v) at theta
  double radius = 0.0;
  int J = 0;
  int nodes = 0;
  double aliasing = 0.0;  // full vs even-subsampled trapezoid discrepancy, relative
};

TaylorData taylor_via_cauchy(const AnalyticFamily& family, double theta, int J,
                             const TaylorOptions& opts = {});

struct GapScan {
  std::vector<double> s;
  std::vector<double> ratio;  // spectral radius of M(theta + i s) / lambda(theta)
  double max_ratio = 0.0;
  std::vector<double> flagged;  // s values with ratio >= 1 - flag_tol
};

/// Non-rigorous evidence for the aperiodicity condition on a user grid of s.
GapScan gap_scan(const AnalyticFamily& family, double theta, const std::vector<double>& s_grid,
                 double flag_tol = 1e-9);

}  // namespace ldx::spectral
