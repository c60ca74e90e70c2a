#include "ldx/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "ldx/errors.hpp"

namespace ldx {

void OperatorTriple::validate() const {
  const auto d = M.rows();
  if (d < 1 || M.cols() != d || ell.size() != d || v.size() != d)
    throw ModelError("operator triple has inconsistent dimensions");
}

}  // namespace ldx

namespace ldx::spectral {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Eig {
  Eigen::VectorXcd values;
};

Eig decompose(const Eigen::MatrixXcd& M) {
  if (M.rows() == 1) return {M.col(0)};
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(M, false);
  if (schur.info() == Eigen::Success) return {schur.matrixT().diagonal()};
  // QR sweeps can stall on matrices with repeated rows (piecewise kernels); a fixed
  // Householder similarity breaks the pattern without changing the spectrum.
  const Eigen::Index d = M.rows();
  Eigen::VectorXcd h(d);
  for (Eigen::Index k = 0; k < d; ++k) h(k) = std::sin(1.3 * k + 0.7);
  h.normalize();
  const Eigen::MatrixXcd H = Eigen::MatrixXcd::Identity(d, d) - 2.0 * h * h.adjoint();
  schur.compute(H * M * H, false);
  if (schur.info() == Eigen::Success) return {schur.matrixT().diagonal()};
  schur.compute(M.transpose(), false);
  if (schur.info() == Eigen::Success) return {schur.matrixT().diagonal()};
  throw NumericalError("complex Schur iteration did not converge (dim " + std::to_string(M.rows()) + ")");
}

/// Eigenvector of A for the eigenvalue lambda by inverse iteration with a slightly perturbed shift.
Eigen::VectorXcd inverse_iteration(const Eigen::MatrixXcd& A, cplx lambda, Eigen::VectorXcd x) {
  const Eigen::Index d = A.rows();
  const double scale = std::max(std::abs(lambda), A.cwiseAbs().maxCoeff());
  const cplx shift = lambda + cplx(1e-13, 1e-13) * scale;
  const auto lu = (A - shift * Eigen::MatrixXcd::Identity(d, d)).partialPivLu();
  for (int it = 0; it < 3; ++it) {
    x = lu.solve(x);
    const double n = x.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("eigenvector inverse iteration failed");
    x /= n;
  }
  return x;
}

PerronData eigendata(const OperatorTriple& t, const Eigen::VectorXcd& values, Eigen::Index idx) {
  const Eigen::Index d = values.size();
  PerronData p;
  p.lambda = values(idx);
  if (d == 1) {
    p.w = Eigen::VectorXcd::Ones(1);
    p.u = Eigen::RowVectorXcd::Ones(1);
  } else {
    Eigen::VectorXcd start(d);
    for (Eigen::Index k = 0; k < d; ++k) start(k) = cplx(1.0 + 0.25 * std::sin(1.7 * k + 0.3), 0.1 * std::cos(k));
    p.w = inverse_iteration(t.M, p.lambda, start);
    // conj(w) always overlaps the left eigenvector, since u w != 0 for a simple eigenvalue.
    p.u = inverse_iteration(t.M.transpose(), p.lambda, p.w.conjugate()).transpose();
  }
  const cplx uw = (p.u * p.w)(0);
  if (!(std::abs(uw) >= 1e-10 * p.u.norm() * p.w.norm()))
    throw NumericalError("dominant eigenvalue is defective or near-defective");
  p.Z = (p.u * t.v)(0) * (t.ell * p.w)(0) / uw;
  double second = 0.0;
  for (Eigen::Index k = 0; k < d; ++k)
    if (k != idx) second = std::max(second, std::abs(values(k)));
  p.gap = std::abs(p.lambda) > 0.0 ? second / std::abs(p.lambda) : 1.0;
  return p;
}

Eigen::Index dominant_index(const Eig& e) {
  Eigen::Index idx = 0;
  e.values.cwiseAbs().maxCoeff(&idx);
  const double top = std::abs(e.values(idx));
  for (Eigen::Index k = 0; k < e.values.size(); ++k)
    if (k != idx && std::abs(e.values(k)) >= top * (1.0 - 1e-10))
      throw GapViolation("two eigenvalues share the maximal modulus " + std::to_string(top));
  return idx;
}

/// Index of the eigenvalue closest to `pred`; ContinuationError when the runner-up
/// is within a factor two of the winner.
Eigen::Index nearest(const Eigen::VectorXcd& values, cplx pred) {
  Eigen::Index best = 0;
  double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    const double dk = std::abs(values(k) - pred);
    if (dk < d1) {
      d2 = d1;
      d1 = dk;
      best = k;
    } else if (dk < d2) {
      d2 = dk;
    }
  }
  if (values.size() > 1 && d2 <= 2.0 * d1)
    throw ContinuationError("ambiguous eigenvalue continuation; shrink the circle radius");
  return best;
}

struct Trace {
  std::vector<CurvePoint> nodes;
  cplx closing_lambda;
  /// Continued eigenvalue at interior points center + radius * w.
  std::vector<std::pair<cplx, cplx>> interior;
};

Trace trace_circle(const AnalyticFamily& family, double center, double radius, int points,
                   int radial_steps = 8) {
  const OperatorTriple t0 = family.evaluate(center);
  t0.validate();
  Eig e0 = decompose(t0.M);
  cplx prev = e0.values(dominant_index(e0));
  cplx prev2 = prev;
  bool extrapolate = false;

  auto step = [&](cplx z, bool keep) -> CurvePoint {
    const OperatorTriple t = family.evaluate(z);
    const Eig e = decompose(t.M);
    const cplx pred = extrapolate ? 2.0 * prev - prev2 : prev;
    const Eigen::Index idx = nearest(e.values, pred);
    prev2 = prev;
    prev = e.values(idx);
    extrapolate = true;
    if (!keep) return {z, prev, 0.0};
    const PerronData p = eigendata(t, e.values, idx);
    return {z, p.lambda, p.Z};
  };

  Trace out;
  out.interior.push_back({0.0, prev});
  for (int k = 1; k < radial_steps; ++k) {
    const double w = static_cast<double>(k) / radial_steps;
    const cplx lam = step(center + radius * w, false).lambda;
    if (4 * k == radial_steps) out.interior.push_back({w, lam});
  }

  out.nodes.reserve(points);
  out.nodes.push_back(step(center + radius, true));
  extrapolate = false;  // direction turns by a right angle here
  for (int k = 1; k < points; ++k) {
    const double phi = kTwoPi * k / points;
    out.nodes.push_back(step(center + std::polar(radius, phi), true));
  }
  out.closing_lambda = step(center + radius, false).lambda;
  return out;
}

void check_closure(const Trace& tr) {
  const cplx l0 = tr.nodes.front().lambda;
  if (std::abs(tr.closing_lambda - l0) > 1e-8 * std::abs(l0))
    throw ContinuationError("eigenvalue continuation did not close around the circle");
}

}  // namespace

PerronData perron(const OperatorTriple& t) {
  t.validate();
  const Eig e = decompose(t.M);
  return eigendata(t, e.values, dominant_index(e));
}

std::vector<CurvePoint> eigencurve(const AnalyticFamily& family, double center, double radius,
                                   int points) {
  if (!(radius > 0.0) || points < 2) throw ConfigError("eigencurve needs radius > 0 and points >= 2");
  if (std::abs(center) + radius >= family.domain_halfwidth())
    throw DomainError("circle leaves the analyticity domain");
  Trace tr = trace_circle(family, center, radius, points);
  check_closure(tr);
  return std::move(tr.nodes);
}

TaylorData taylor_via_cauchy(const AnalyticFamily& family, double theta, int J,
                             const TaylorOptions& opts) {
  if (J < 0) throw ConfigError("taylor order must be nonnegative");
  const double delta = family.domain_halfwidth();
  const double dist = delta - std::abs(theta);
  if (!(dist > opts.boundary_margin)) throw DomainError("theta is too close to the domain boundary");

  double radius = opts.radius > 0.0 ? opts.radius
                                    : std::min(opts.boundary_fraction * dist, opts.max_radius);
  radius = std::min(radius, dist - opts.boundary_margin);
  int P = opts.nodes > 0 ? opts.nodes : std::max(opts.min_nodes, 4 * J);
  P += P % 2;

  std::string reason;
  for (int attempt = 0; attempt <= opts.max_halvings; ++attempt, radius *= 0.5) {
    Trace tr;
    try {
      tr = trace_circle(family, theta, radius, P);
      check_closure(tr);
    } catch (const ContinuationError& e) {
      reason = e.what();
      continue;
    }

    // log lambda along the circle with the branch fixed by continuity from node 0.
    bool finite = true;
    for (const auto& n : tr.nodes)
      finite = finite && std::isfinite(std::abs(n.lambda)) && std::abs(n.lambda) > 0.0 && std::isfinite(std::abs(n.Z));
    if (!finite) {
      reason = "dominant eigenvalue vanishes or is not finite on the circle";
      continue;
    }

    std::vector<cplx> g(P), f(P);
    double arg = std::arg(tr.nodes[0].lambda);
    double total_turn = 0.0;
    for (int k = 0; k < P; ++k) {
      const cplx lam = tr.nodes[k].lambda;
      if (k > 0) {
        double d = std::arg(lam / tr.nodes[k - 1].lambda);
        arg += d;
        total_turn += d;
      }
      g[k] = cplx(std::log(std::abs(lam)), arg);
      f[k] = tr.nodes[k].Z;
    }
    total_turn += std::arg(tr.nodes[0].lambda / tr.nodes[P - 1].lambda);
    if (std::abs(total_turn) > std::numbers::pi) {
      reason = "dominant eigenvalue vanishes inside the circle";
      continue;
    }

    double gscale = 1.0, fscale = 1.0;
    for (int k = 0; k < P; ++k) {
      gscale = std::max(gscale, std::abs(g[k]));
      fscale = std::max(fscale, std::abs(f[k]));
    }

    // A circle around two branch points closes and aliases cleanly, but log lambda is not
    // analytic inside; the Cauchy integral then misses the eigenvalue at interior points.
    double interior = 0.0;
    for (const auto& [w, lam] : tr.interior) {
      cplx acc = 0.0;
      for (int k = 0; k < P; ++k) {
        const cplx e = std::polar(1.0, kTwoPi * k / P);
        acc += g[k] * e / (e - w);
      }
      interior = std::max(interior, std::abs(std::exp(acc / static_cast<double>(P)) / lam - 1.0));
    }
    if (interior > std::max(opts.alias_tol, 1e-12) * gscale) {
      reason = "eigenvalue not analytic inside the circle (interior mismatch " + std::to_string(interior) + ")";
      continue;
    }

    TaylorData out;
    out.J = J;
    out.nodes = P;
    out.radius = radius;
    out.L.resize(J + 1);
    out.F.resize(J + 1);
    double alias = 0.0, imag = 0.0;
    double jfact = 1.0, rpow = 1.0;
    for (int j = 0; j <= J; ++j) {
      if (j > 0) {
        jfact *= j;
        rpow *= radius;
      }
      cplx cg = 0.0, cf = 0.0, hg = 0.0, hf = 0.0;
      for (int k = 0; k < P; ++k) {
        const cplx e = std::polar(1.0, -kTwoPi * static_cast<double>(j) * k / P);
        cg += g[k] * e;
        cf += f[k] * e;
        if (k % 2 == 0) {
          hg += g[k] * e;
          hf += f[k] * e;
        }
      }
      cg /= static_cast<double>(P);
      cf /= static_cast<double>(P);
      hg /= static_cast<double>(P / 2);
      hf /= static_cast<double>(P / 2);
      alias = std::max({alias, std::abs(cg - hg) / gscale, std::abs(cf - hf) / fscale});
      imag = std::max({imag, std::abs(cg.imag()) / gscale, std::abs(cf.imag()) / fscale});
      out.L[j] = cg * (jfact / rpow);
      out.F[j] = cf * (jfact / rpow);
    }
    out.aliasing = alias;
    if (alias > opts.alias_tol) {
      reason = "Cauchy sums not converged (aliasing " + std::to_string(alias) + ")";
      continue;
    }
    if (family.is_real() && imag > opts.imag_tol)
      throw NumericalError("Taylor coefficients of a real family have imaginary parts " +
                           std::to_string(imag));
    return out;
  }
  throw ContinuationError("Cauchy differentiation failed after radius halvings: " + reason);
}

GapScan gap_scan(const AnalyticFamily& family, double theta, const std::vector<double>& s_grid,
                 double flag_tol) {
  const double lam = std::abs(perron(family.evaluate(theta)).lambda);
  GapScan out;
  for (double s : s_grid) {
    const Eig e = decompose(family.evaluate(cplx(theta, s)).M);
    const double r = e.values.cwiseAbs().maxCoeff() / lam;
    out.s.push_back(s);
    out.ratio.push_back(r);
    out.max_ratio = std::max(out.max_ratio, r);
    if (r >= 1.0 - flag_tol) out.flagged.push_back(s);
  }
  return out;
}

}  // namespace ldx::spectral
