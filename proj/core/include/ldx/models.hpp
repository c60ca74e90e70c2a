#pragma once

#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "ldx/family.hpp"

namespace ldx::models {

class IIDFiniteModel final : public AnalyticFamily {
 public:
  IIDFiniteModel(std::vector<double> atoms, std::vector<double> probs);

  OperatorTriple evaluate(cplx z) const override;
  int dim() const override { return 1; }

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> atoms_;
  std::vector<double> probs_;
};

/// MGF-backed iid family: gaussian(mean, var) or a tabulated density on a uniform grid.
class IIDMgfModel final : public AnalyticFamily {
 public:
  static IIDMgfModel gaussian(double mean, double var,
                              double delta = std::numeric_limits<double>::infinity());
  /// density[i] is the value at lo + i (hi - lo) / (n - 1); linear in between.
  static IIDMgfModel tabulated(double lo, double hi, std::vector<double> density,
                               double delta = std::numeric_limits<double>::infinity());

  OperatorTriple evaluate(cplx z) const override;
  double domain_halfwidth() const override { return delta_; }
  int dim() const override { return 1; }

  cplx mgf(cplx z) const;
  const std::string& family_name() const { return family_; }
  /// Right end of the support (infinite for the gaussian).
  double support_max() const;
  double support_min() const;

 private:
  IIDMgfModel() = default;

  std::string family_;
  double delta_ = std::numeric_limits<double>::infinity();
  double mean_ = 0.0, var_ = 1.0;
  double lo_ = 0.0, hi_ = 0.0;
  std::vector<double> density_;
  std::vector<double> qx_, qw_;  // normalized quadrature of the tabulated density
};

class FiniteMarkovModel final : public AnalyticFamily {
 public:
  FiniteMarkovModel(Eigen::MatrixXd P, Eigen::MatrixXd h, Eigen::VectorXd mu0);

  OperatorTriple evaluate(cplx z) const override;
  int dim() const override { return static_cast<int>(P_.rows()); }

  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::MatrixXd& h() const { return h_; }
  const Eigen::VectorXd& mu0() const { return mu0_; }

  /// iid law as a chain: P_jk = p_k, h_jk = a_k, mu0 = p.
  static FiniteMarkovModel from_iid(const IIDFiniteModel& m);

 private:
  Eigen::MatrixXd P_, h_;
  Eigen::VectorXd mu0_;
};

/// Named builtin function with numeric parameters (registry entry).
struct NamedFunction {
  std::string name;
  std::vector<double> params;
  std::vector<std::vector<double>> matrix;
};

struct NystromSpec {
  NamedFunction kernel{"uniform", {}, {}};
  NamedFunction h{"y", {}, {}};
  NamedFunction rho{"uniform", {}, {}};
  int nq = 64;
  /// "gauss_legendre" or "trapezoid" (periodic kernels).
  std::string quadrature = "gauss_legendre";
  /// Gauss-Legendre panels; 0 picks the number of kernel cells (1 for smooth kernels).
  int panels = 0;
};

class NystromKernelModel final : public AnalyticFamily {
 public:
  explicit NystromKernelModel(const NystromSpec& spec);

  OperatorTriple evaluate(cplx z) const override;
  int dim() const override { return static_cast<int>(x_.size()); }

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& weights() const { return w_; }
  double kernel(double x, double y) const { return p_(x, y); }
  double observable(double x, double y) const { return hf_(x, y); }
  const NystromSpec& spec() const { return spec_; }

 private:
  NystromSpec spec_;
  std::function<double(double, double)> p_, hf_;
  std::function<double(double)> rho_;
  std::vector<double> x_, w_;
  Eigen::MatrixXd base_, hmat_;
  Eigen::RowVectorXd ell_;
};

/// a0 + sum_n c[n-1] cos(2 pi n x) + s[n-1] sin(2 pi n x).
struct TrigPoly {
  double a0 = 0.0;
  std::vector<double> c, s;

  double operator()(double x) const;
  double derivative(double x) const;
  /// Upper bound for max |g'| from the coefficients.
  double derivative_bound() const;
  double abs_bound() const;
  /// Antiderivative vanishing at 0.
  double integral(double x) const;
};

/// Full-branch analytic circle map: "doubling" or "perturbed_doubling" with x -> 2x + eps sin(2 pi x)/(2 pi).
struct CircleMap {
  std::string name = "doubling";
  double eps = 0.0;

  int branches() const { return 2; }
  /// Lift F on [0, 1): F(0) = 0, F(1) = 2.
  double lift(double x) const;
  double derivative(double x) const;
  double forward(double x) const;
  /// Inverse branch b in [0, branches()): y in [0,1) with F(y) = x + b.
  double inverse(int b, double x) const;
  double min_derivative() const;
};

class FourierTransferModel final : public AnalyticFamily {
 public:
  /// grid == 0 selects K = 4 m_max.
  FourierTransferModel(CircleMap map, TrigPoly g, TrigPoly rho, int m_max, int grid = 0);

  OperatorTriple evaluate(cplx z) const override;
  int dim() const override { return 2 * m_max_ + 1; }

  const CircleMap& map() const { return map_; }
  const TrigPoly& g() const { return g_; }
  const TrigPoly& rho() const { return rho_; }
  int m_max() const { return m_max_; }
  int grid() const { return K_; }

 private:
  CircleMap map_;
  TrigPoly g_, rho_;
  int m_max_, K_;
  Eigen::MatrixXd analysis_;                // dim x K
  std::vector<Eigen::MatrixXd> synthesis_;  // per branch, K x dim, basis at y_b(x_k) / f'(y_b)
  std::vector<Eigen::VectorXd> gvals_;      // per branch, g(y_b(x_k))
  Eigen::VectorXd vcoef_;
};

using AnyModel =
    std::variant<IIDFiniteModel, IIDMgfModel, FiniteMarkovModel, NystromKernelModel, FourierTransferModel>;

const AnalyticFamily& as_family(const AnyModel& m);
std::string type_name(const AnyModel& m);

/// Parses a model document (JSON). Throws ConfigError on syntax or schema errors
/// and ModelError on invalid model contents.
AnyModel parse_model(const std::string& text);
AnyModel load_model(const std::string& path);

// ---- structural diagnostics ----

struct LdpRange {
  double lower;
  double upper;
  bool exact;
};

LdpRange ldp_range(const AnyModel& m);
/// Maximum mean cycle weight of the complete digraph with edge weights w (Karp).
double max_mean_cycle(const Eigen::MatrixXd& w);

struct NonlatticeResult {
  bool nonlattice;
  double step;  // lattice step when !nonlattice
};

NonlatticeResult nonlattice_check(const IIDFiniteModel& m, double tol = 1e-9);

struct DiophantineReport {
  std::vector<double> s, d;
  std::vector<double> beta_grid, envelope;  // envelope[i] = min_s d(s) s^{beta_grid[i]}
  double beta_hat = 0.0;
  double min_d = 0.0;
  bool lattice_flag = false;
  /// Largest c with 1 - |E e^{isX}| >= c d(s)^2 on the grid; NaN without a law.
  double charfn_c = std::numeric_limits<double>::quiet_NaN();
};

/// d(s) = max_j dist(b_j s, 2 pi Z) on a log grid of s in (1, s_max], plus extra points.
DiophantineReport diophantine_scan(const std::vector<double>& b, double s_max, int grid,
                                   const std::vector<double>& extra_points = {},
                                   const IIDFiniteModel* law = nullptr);
DiophantineReport diophantine_scan(const IIDFiniteModel& m, double s_max, int grid);
DiophantineReport diophantine_scan(const FiniteMarkovModel& m, double s_max, int grid);

}  // namespace ldx::models
