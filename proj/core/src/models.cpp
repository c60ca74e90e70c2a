#include "ldx/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ldx/errors.hpp"
#include "quadrature.hpp"

namespace ldx::models {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

OperatorTriple scalar_triple(cplx value) {
  OperatorTriple t;
  t.M = Eigen::MatrixXcd::Constant(1, 1, value);
  t.ell = Eigen::RowVectorXcd::Ones(1);
  t.v = Eigen::VectorXcd::Ones(1);
  return t;
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw ModelError(std::string(what) + " must be finite");
}

}  // namespace

// ---------------------------------------------------------------- iid finite

IIDFiniteModel::IIDFiniteModel(std::vector<double> atoms, std::vector<double> probs)
    : atoms_(std::move(atoms)), probs_(std::move(probs)) {
  if (atoms_.size() < 2) throw ModelError("iid_finite needs at least two atoms");
  if (atoms_.size() != probs_.size()) throw ModelError("iid_finite atoms and probs differ in length");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p > 0.0)) throw ModelError("iid_finite probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ModelError("iid_finite probabilities must sum to 1");
  for (double a : atoms_) require_finite(a, "atom");
  std::vector<double> sorted = atoms_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ModelError("iid_finite atoms must be distinct");
}

OperatorTriple IIDFiniteModel::evaluate(cplx z) const {
  cplx acc = 0.0;
  for (size_t j = 0; j < atoms_.size(); ++j) acc += probs_[j] * std::exp(z * atoms_[j]);
  return scalar_triple(acc);
}

// ---------------------------------------------------------------- iid mgf

IIDMgfModel IIDMgfModel::gaussian(double mean, double var, double delta) {
  require_finite(mean, "gaussian mean");
  if (!(var > 0.0) || !std::isfinite(var)) throw ModelError("gaussian variance must be positive");
  if (!(delta > 0.0)) throw ModelError("domain half-width must be positive");
  IIDMgfModel m;
  m.family_ = "gaussian";
  m.mean_ = mean;
  m.var_ = var;
  m.delta_ = delta;
  return m;
}

IIDMgfModel IIDMgfModel::tabulated(double lo, double hi, std::vector<double> density, double delta) {
  require_finite(lo, "tabulated lo");
  require_finite(hi, "tabulated hi");
  if (!(hi > lo)) throw ModelError("tabulated density needs hi > lo");
  if (density.size() < 2) throw ModelError("tabulated density needs at least two values");
  if (!(delta > 0.0)) throw ModelError("domain half-width must be positive");
  for (double f : density)
    if (!(f >= 0.0) || !std::isfinite(f)) throw ModelError("tabulated density must be nonnegative");

  IIDMgfModel m;
  m.family_ = "tabulated";
  m.lo_ = lo;
  m.hi_ = hi;
  m.delta_ = delta;
  m.density_ = std::move(density);

  const int cells = static_cast<int>(m.density_.size()) - 1;
  const double h = (hi - lo) / cells;
  const detail::Rule r = detail::composite_gauss_legendre(cells, 8, lo, hi);
  double total = 0.0;
  for (size_t k = 0; k < r.x.size(); ++k) {
    const int c = std::min(static_cast<int>((r.x[k] - lo) / h), cells - 1);
    const double t = (r.x[k] - (lo + c * h)) / h;
    const double f = (1.0 - t) * m.density_[c] + t * m.density_[c + 1];
    if (f <= 0.0) continue;
    m.qx_.push_back(r.x[k]);
    m.qw_.push_back(r.w[k] * f);
    total += r.w[k] * f;
  }
  if (!(total > 0.0)) throw ModelError("tabulated density has zero mass");
  for (double& w : m.qw_) w /= total;
  return m;
}

cplx IIDMgfModel::mgf(cplx z) const {
  if (family_ == "gaussian") return std::exp(mean_ * z + 0.5 * var_ * z * z);
  cplx acc = 0.0;
  for (size_t k = 0; k < qx_.size(); ++k) acc += qw_[k] * std::exp(z * qx_[k]);
  return acc;
}

OperatorTriple IIDMgfModel::evaluate(cplx z) const {
  if (!(std::abs(z.real()) < delta_)) throw DomainError("z outside the MGF domain");
  return scalar_triple(mgf(z));
}

double IIDMgfModel::support_max() const {
  if (family_ == "gaussian") return std::numeric_limits<double>::infinity();
  const int cells = static_cast<int>(density_.size()) - 1;
  for (int i = cells; i >= 0; --i)
    if (density_[i] > 0.0) return lo_ + std::min(i + 1, cells) * (hi_ - lo_) / cells;
  return hi_;
}

double IIDMgfModel::support_min() const {
  if (family_ == "gaussian") return -std::numeric_limits<double>::infinity();
  const int cells = static_cast<int>(density_.size()) - 1;
  for (int i = 0; i <= cells; ++i)
    if (density_[i] > 0.0) return lo_ + std::max(i - 1, 0) * (hi_ - lo_) / cells;
  return lo_;
}

// ---------------------------------------------------------------- finite markov

FiniteMarkovModel::FiniteMarkovModel(Eigen::MatrixXd P, Eigen::MatrixXd h, Eigen::VectorXd mu0)
    : P_(std::move(P)), h_(std::move(h)), mu0_(std::move(mu0)) {
  const auto d = P_.rows();
  if (d < 1 || P_.cols() != d) throw ModelError("transition matrix must be square and nonempty");
  if (h_.rows() != d || h_.cols() != d) throw ModelError("observable matrix h must match P");
  if (mu0_.size() != d) throw ModelError("initial distribution must have length d");
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (!(P_(j, k) > 0.0)) throw ModelError("transition probabilities must be positive");
      require_finite(h_(j, k), "h entry");
    }
    if (std::abs(P_.row(j).sum() - 1.0) > 1e-12) throw ModelError("transition rows must sum to 1");
    if (!(mu0_(j) >= 0.0)) throw ModelError("initial distribution must be nonnegative");
  }
  if (std::abs(mu0_.sum() - 1.0) > 1e-12) throw ModelError("initial distribution must sum to 1");
}

OperatorTriple FiniteMarkovModel::evaluate(cplx z) const {
  OperatorTriple t;
  t.M = P_.cast<cplx>().cwiseProduct((z * h_.cast<cplx>()).array().exp().matrix());
  t.ell = mu0_.transpose().cast<cplx>();
  t.v = Eigen::VectorXcd::Ones(P_.rows());
  return t;
}

FiniteMarkovModel FiniteMarkovModel::from_iid(const IIDFiniteModel& m) {
  const auto d = static_cast<Eigen::Index>(m.atoms().size());
  Eigen::MatrixXd P(d, d), h(d, d);
  Eigen::VectorXd mu(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    P.col(k).setConstant(m.probs()[k]);
    h.col(k).setConstant(m.atoms()[k]);
    mu(k) = m.probs()[k];
  }
  // Renormalize rows so they sum to 1 to working precision.
  for (Eigen::Index j = 0; j < d; ++j) P.row(j) /= P.row(j).sum();
  mu /= mu.sum();
  return FiniteMarkovModel(P, h, mu);
}

// ---------------------------------------------------------------- nystrom

namespace {

int cell_of(double x, int cells) {
  return std::clamp(static_cast<int>(std::floor(x * cells)), 0, cells - 1);
}

const std::vector<std::vector<double>>& square_matrix(const NamedFunction& f) {
  const size_t n = f.matrix.size();
  if (n == 0) throw ModelError(f.name + " needs a nonempty square matrix");
  for (const auto& row : f.matrix)
    if (row.size() != n) throw ModelError(f.name + " needs a square matrix");
  return f.matrix;
}

void need_params(const NamedFunction& f, size_t n) {
  if (f.params.size() != n)
    throw ModelError("builtin '" + f.name + "' expects " + std::to_string(n) + " parameter(s)");
}

std::function<double(double, double)> make_kernel(const NamedFunction& f, int* cells) {
  *cells = 1;
  if (f.name == "uniform") return [](double, double) { return 1.0; };
  if (f.name == "piecewise") {
    const auto Q = square_matrix(f);
    const int n = static_cast<int>(Q.size());
    for (const auto& row : Q) {
      double total = 0.0;
      for (double q : row) total += q;
      if (std::abs(total - 1.0) > 1e-12) throw ModelError("piecewise kernel rows must sum to 1");
    }
    *cells = n;
    return [Q, n](double x, double y) { return n * Q[cell_of(x, n)][cell_of(y, n)]; };
  }
  if (f.name == "von_mises") {
    need_params(f, 1);
    const double kappa = f.params[0];
    const double norm = std::cyl_bessel_i(0.0, kappa);
    return [kappa, norm](double x, double y) { return std::exp(kappa * std::cos(kTwoPi * (y - x))) / norm; };
  }
  throw ModelError("unknown kernel '" + f.name + "'");
}

std::function<double(double, double)> make_observable(const NamedFunction& f) {
  if (f.name == "y") return [](double, double y) { return y; };
  if (f.name == "cos_y") return [](double, double y) { return std::cos(kTwoPi * y); };
  if (f.name == "linear") {
    need_params(f, 3);
    const double ax = f.params[0], ay = f.params[1], c = f.params[2];
    return [=](double x, double y) { return ax * x + ay * y + c; };
  }
  if (f.name == "cell_matrix") {
    const auto H = square_matrix(f);
    const int n = static_cast<int>(H.size());
    return [H, n](double x, double y) { return H[cell_of(x, n)][cell_of(y, n)]; };
  }
  throw ModelError("unknown observable '" + f.name + "'");
}

std::function<double(double)> make_density(const NamedFunction& f) {
  if (f.name == "uniform") return [](double) { return 1.0; };
  if (f.name == "cell_weights") {
    const std::vector<double> w = f.params;
    const int n = static_cast<int>(w.size());
    if (n == 0) throw ModelError("cell_weights needs weights");
    double total = 0.0;
    for (double x : w) {
      if (!(x >= 0.0)) throw ModelError("cell_weights must be nonnegative");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ModelError("cell_weights must sum to 1");
    return [w, n](double x) { return n * w[cell_of(x, n)]; };
  }
  throw ModelError("unknown density '" + f.name + "'");
}

}  // namespace

NystromKernelModel::NystromKernelModel(const NystromSpec& spec) : spec_(spec) {
  int cells = 1;
  p_ = make_kernel(spec.kernel, &cells);
  hf_ = make_observable(spec.h);
  rho_ = make_density(spec.rho);
  if (spec.nq < 1) throw ConfigError("nystrom nq must be positive");

  if (spec.quadrature == "gauss_legendre") {
    const int panels = spec.panels > 0 ? spec.panels : cells;
    if (spec.nq % panels != 0) throw ConfigError("nystrom nq must be divisible by the panel count");
    const detail::Rule r = detail::composite_gauss_legendre(panels, spec.nq / panels, 0.0, 1.0);
    x_ = r.x;
    w_ = r.w;
  } else if (spec.quadrature == "trapezoid") {
    for (int i = 0; i < spec.nq; ++i) {
      x_.push_back(static_cast<double>(i) / spec.nq);
      w_.push_back(1.0 / spec.nq);
    }
  } else {
    throw ConfigError("unknown nystrom quadrature '" + spec.quadrature + "'");
  }

  const auto n = static_cast<Eigen::Index>(x_.size());
  base_.resize(n, n);
  hmat_.resize(n, n);
  ell_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = p_(x_[i], x_[j]);
      if (!(p > 0.0)) throw ModelError("nystrom kernel must be positive on the quadrature grid");
      base_(i, j) = p * w_[j];
      hmat_(i, j) = hf_(x_[i], x_[j]);
      require_finite(hmat_(i, j), "nystrom observable");
    }
    ell_(i) = rho_(x_[i]) * w_[i];
  }
  if (std::abs(ell_.sum() - 1.0) > 1e-6) throw ModelError("initial density does not integrate to 1 on the grid");
}

OperatorTriple NystromKernelModel::evaluate(cplx z) const {
  OperatorTriple t;
  t.M = base_.cast<cplx>().cwiseProduct((z * hmat_.cast<cplx>()).array().exp().matrix());
  t.ell = ell_.cast<cplx>();
  t.v = Eigen::VectorXcd::Ones(base_.rows());
  return t;
}

// ---------------------------------------------------------------- fourier

double TrigPoly::operator()(double x) const {
  double acc = a0;
  for (size_t n = 0; n < c.size(); ++n) acc += c[n] * std::cos(kTwoPi * (n + 1) * x);
  for (size_t n = 0; n < s.size(); ++n) acc += s[n] * std::sin(kTwoPi * (n + 1) * x);
  return acc;
}

double TrigPoly::derivative(double x) const {
  double acc = 0.0;
  for (size_t n = 0; n < c.size(); ++n) acc -= kTwoPi * (n + 1) * c[n] * std::sin(kTwoPi * (n + 1) * x);
  for (size_t n = 0; n < s.size(); ++n) acc += kTwoPi * (n + 1) * s[n] * std::cos(kTwoPi * (n + 1) * x);
  return acc;
}

double TrigPoly::derivative_bound() const {
  double acc = 0.0;
  const size_t m = std::max(c.size(), s.size());
  for (size_t n = 0; n < m; ++n) {
    const double cn = n < c.size() ? c[n] : 0.0, sn = n < s.size() ? s[n] : 0.0;
    acc += kTwoPi * (n + 1) * std::hypot(cn, sn);
  }
  return acc;
}

double TrigPoly::abs_bound() const {
  double acc = std::abs(a0);
  const size_t m = std::max(c.size(), s.size());
  for (size_t n = 0; n < m; ++n) {
    const double cn = n < c.size() ? c[n] : 0.0, sn = n < s.size() ? s[n] : 0.0;
    acc += std::hypot(cn, sn);
  }
  return acc;
}

double TrigPoly::integral(double x) const {
  double acc = a0 * x;
  for (size_t n = 0; n < c.size(); ++n) {
    const double k = kTwoPi * (n + 1);
    acc += c[n] * std::sin(k * x) / k;
  }
  for (size_t n = 0; n < s.size(); ++n) {
    const double k = kTwoPi * (n + 1);
    acc += s[n] * (1.0 - std::cos(k * x)) / k;
  }
  return acc;
}

double CircleMap::lift(double x) const {
  if (name == "doubling") return 2.0 * x;
  return 2.0 * x + eps * std::sin(kTwoPi * x) / kTwoPi;
}

double CircleMap::derivative(double x) const {
  if (name == "doubling") return 2.0;
  return 2.0 + eps * std::cos(kTwoPi * x);
}

double CircleMap::forward(double x) const {
  const double y = lift(x);
  return y - std::floor(y);
}

double CircleMap::min_derivative() const { return name == "doubling" ? 2.0 : 2.0 - std::abs(eps); }

double CircleMap::inverse(int b, double x) const {
  const double target = x + b;
  if (name == "doubling") return 0.5 * target;
  double lo = 0.0, hi = 1.0, y = 0.5 * target;
  for (int it = 0; it < 100; ++it) {
    const double f = lift(y) - target;
    if (f > 0.0) hi = y; else lo = y;
    double next = y - f / derivative(y);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= 1e-16 * std::max(1.0, std::abs(y))) return next;
    y = next;
  }
  return y;
}

FourierTransferModel::FourierTransferModel(CircleMap map, TrigPoly g, TrigPoly rho, int m_max, int grid)
    : map_(std::move(map)), g_(std::move(g)), rho_(std::move(rho)), m_max_(m_max) {
  if (map_.name != "doubling" && map_.name != "perturbed_doubling")
    throw ModelError("unknown circle map '" + map_.name + "'");
  if (map_.name == "perturbed_doubling" && !(std::abs(map_.eps) < 1.0))
    throw ModelError("perturbed_doubling requires |eps| < 1");
  if (m_max_ < 1) throw ConfigError("fourier m_max must be at least 1");
  K_ = grid > 0 ? grid : 4 * m_max_;
  if (K_ < 4 * m_max_) throw ConfigError("fourier grid K must be at least 4 m_max");
  if (std::abs(rho_.a0 - 1.0) > 1e-12) throw ModelError("fourier rho must integrate to 1 (a0 = 1)");

  const int dim = 2 * m_max_ + 1;
  auto basis = [&](double x, Eigen::Ref<Eigen::RowVectorXd> row) {
    row(0) = 1.0;
    for (int n = 1; n <= m_max_; ++n) {
      row(2 * n - 1) = std::cos(kTwoPi * n * x);
      row(2 * n) = std::sin(kTwoPi * n * x);
    }
  };

  analysis_.resize(dim, K_);
  Eigen::RowVectorXd row(dim);
  for (int k = 0; k < K_; ++k) {
    const double x = static_cast<double>(k) / K_;
    if (rho_(x) < 0.0) throw ModelError("fourier rho must be nonnegative");
    basis(x, row);
    analysis_.col(k) = row.transpose() * (2.0 / K_);
    analysis_(0, k) = 1.0 / K_;
  }
  for (int b = 0; b < map_.branches(); ++b) {
    Eigen::MatrixXd syn(K_, dim);
    Eigen::VectorXd gv(K_);
    for (int k = 0; k < K_; ++k) {
      const double y = map_.inverse(b, static_cast<double>(k) / K_);
      basis(y, row);
      syn.row(k) = row / map_.derivative(y);
      gv(k) = g_(y);
    }
    synthesis_.push_back(std::move(syn));
    gvals_.push_back(std::move(gv));
  }
  vcoef_ = Eigen::VectorXd::Zero(dim);
  vcoef_(0) = rho_.a0;
  for (int n = 1; n <= m_max_; ++n) {
    if (static_cast<size_t>(n) <= rho_.c.size()) vcoef_(2 * n - 1) = rho_.c[n - 1];
    if (static_cast<size_t>(n) <= rho_.s.size()) vcoef_(2 * n) = rho_.s[n - 1];
  }
}

OperatorTriple FourierTransferModel::evaluate(cplx z) const {
  const int dim = 2 * m_max_ + 1;
  Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(K_, dim);
  for (size_t b = 0; b < synthesis_.size(); ++b) {
    const Eigen::VectorXcd weight = (z * gvals_[b].cast<cplx>()).array().exp().matrix();
    B += weight.asDiagonal() * synthesis_[b].cast<cplx>();
  }
  OperatorTriple t;
  t.M = analysis_.cast<cplx>() * B;
  t.ell = Eigen::RowVectorXcd::Zero(dim);
  t.ell(0) = 1.0;
  t.v = vcoef_.cast<cplx>();
  return t;
}

// ---------------------------------------------------------------- variant helpers

const AnalyticFamily& as_family(const AnyModel& m) {
  return std::visit([](const auto& x) -> const AnalyticFamily& { return x; }, m);
}

std::string type_name(const AnyModel& m) {
  static const char* names[] = {"iid_finite", "iid_mgf", "finite_markov", "nystrom", "fourier"};
  return names[m.index()];
}

}  // namespace ldx::models
