// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldx/engine.hpp"
#include "ldx/errors.hpp"
#include "ldx/models.hpp"
#include "ldx/oracle.hpp"
#include "ldx/spectral.hpp"
#include "test_support.hpp"

using namespace ldx;
using ldx::testing::random_matrix;
using ldx::testing::random_stochastic;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail, failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      failures << (pass ? "" : "; ") << what;
      pass = false;
    }
  }
};

std::string model_path(const std::string& name) { return std::string(LDX_MODELS_DIR) + "/" + name; }

double rel(double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); }

/// Least-squares slope of log|y| against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double excess_upper(const models::AnyModel& m) {
  const double mean = engine::asymptotic_mean(models::as_family(m));
  return models::ldp_range(m).upper - mean;
}

models::FourierTransferModel doubling_cos(int m_max) {
  models::TrigPoly g;
  g.c = {1.0};
  models::TrigPoly rho;
  rho.a0 = 1.0;
  return models::FourierTransferModel({"doubling", 0.0}, g, rho, m_max);
}

models::NystromSpec von_mises(int nq) {
  models::NystromSpec s;
  s.kernel = {"von_mises", {1.5}, {}};
  s.h = {"cos_y", {}, {}};
  s.rho = {"uniform", {}, {}};
  s.nq = nq;
  s.quadrature = "trapezoid";
  return s;
}

// 1
void gaussian_closed_form(Outcome& o) {
  const models::AnyModel g = models::IIDMgfModel::gaussian(0.0, 1.0);
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0}) {
    engine::ExpandOptions opts;
    opts.order = 10;
    const engine::ExpansionResult res = engine::expand(g, a, opts);
    for (int m = 0; m <= 5; ++m) {
      const double want = (m % 2 ? -1.0 : 1.0) * series::double_factorial(2 * m - 1) /
                          (std::sqrt(2.0 * std::numbers::pi) * std::pow(a, 2 * m + 1));
      const double err = std::abs(res.D[m] - want) / std::abs(want);
      worst = std::max(worst, err);
      o.require(err <= 1e-9, "D_" + std::to_string(m) + " at a = " + std::to_string(a));
    }
  }
  o.detail << "max rel err " << worst << " (tol 1e-9)";
}

// 2
void first_order_identity(Outcome& o) {
  std::mt19937 gen(2);
  Eigen::MatrixXd P = random_stochastic(gen, 3), h = random_matrix(gen, 3, -1.0, 1.0);
  struct Entry {
    std::string name;
    models::AnyModel model;
    std::vector<double> a;
  };
  std::vector<Entry> fleet;
  fleet.push_back({"gaussian", models::IIDMgfModel::gaussian(0.3, 2.0), {0.5, 1.0, 2.0}});
  fleet.push_back({"tabulated", models::IIDMgfModel::tabulated(-1.0, 2.0, {0.2, 1.0, 0.6, 0.9}), {}});
  fleet.push_back({"diophantine", models::load_model(model_path("diophantine.json")), {}});
  fleet.push_back({"markov2", models::load_model(model_path("markov2.json")), {}});
  fleet.push_back({"markov3", models::FiniteMarkovModel(P, h, Eigen::Vector3d(0.2, 0.5, 0.3)), {}});
  fleet.push_back({"nystrom_piecewise", models::load_model(model_path("nystrom_piecewise.json")), {}});
  fleet.push_back({"nystrom_vonmises", models::NystromKernelModel(von_mises(24)), {}});
  fleet.push_back({"doubling_cos", doubling_cos(12), {}});
  double worst = 0.0;
  int runs = 0;
  for (auto& e : fleet) {
    if (e.a.empty()) {
      const double B = excess_upper(e.model);
      e.a = {0.2 * B, 0.4 * B, 0.6 * B};
    }
    for (double a : e.a) {
      engine::ExpandOptions opts;
      opts.order = 0;
      const engine::ExpansionResult res = engine::expand(e.model, a, opts);
      const double K = engine::first_order(res.tilt);
      const double err = std::abs(res.D[0] - K) / std::abs(K);
      worst = std::max(worst, err);
      ++runs;
      o.require(err <= 1e-12, e.name + " at a = " + std::to_string(a));
    }
  }
  o.detail << fleet.size() << " models, " << runs << " runs, max rel diff " << worst << " (tol 1e-12)";
}

// 3
void iid_oracle_convergence(Outcome& o) {
  const models::AnyModel any = models::load_model(model_path("diophantine.json"));
  const auto& m = std::get<models::IIDFiniteModel>(any);
  const double a = 0.55;
  engine::ExpandOptions opts;
  opts.order = 2;
  const engine::ExpansionResult res = engine::expand(any, a, opts);
  std::vector<double> Ns, resid;
  for (int N : {20, 30, 40, 50, 60}) {
    const double p = oracle::iid_exact_tail(m, N, (res.tilt.mean + a) * N).value;
    const double scaled = p * std::exp(res.tilt.rate * N);
    Ns.push_back(N);
    resid.push_back(scaled - engine::evaluate_expansion(res, N, 1));
  }
  const double slope = loglog_slope(Ns, resid);
  o.require(slope <= -1.6, "residual slope above -1.6");
  o.detail << "slope " << slope << " after D_0 + D_1 (bound -2.0 + 0.4), D_0 = " << res.D[0] << ", D_1 = " << res.D[1];
}

// 4
void markov_two_oracles(Outcome& o) {
  const models::AnyModel any = models::load_model(model_path("markov2.json"));
  const auto& m = std::get<models::FiniteMarkovModel>(any);
  const double a = 0.6;
  engine::ExpandOptions opts;
  opts.order = 0;
  const engine::ExpansionResult res = engine::expand(any, a, opts);
  const double D0 = res.D[0];
  auto ratio = [&](double p, long long N) { return p * std::exp(res.tilt.rate * N) * std::sqrt(double(N)) / D0; };

  double small_dev = 0.0;
  for (int N = 8; N <= 16; ++N)
    small_dev += std::abs(ratio(oracle::markov_dp_tail(m, N, (res.tilt.mean + a) * N).value, N) - 1.0);
  small_dev /= 9.0;

  double r[2], sr[2];
  const long long Ns[2] = {200, 1000};
  for (int i = 0; i < 2; ++i) {
    const long long N = Ns[i];
    const oracle::OracleEstimate est =
        oracle::tilted_mc_tail(m, N, (res.tilt.mean + a) * N, res.tilt.theta_a, 1'000'000, 17 + i);
    o.require(est.std_err < 0.01 * est.value, "MC relative error at N = " + std::to_string(N));
    r[i] = ratio(est.value, N);
    sr[i] = ratio(est.std_err, N);
  }
  o.require(r[1] >= 0.9 && r[1] <= 1.1, "ratio at N = 1000 outside [0.9, 1.1]");
  o.require(std::abs(r[1] - 1.0) <= std::abs(r[0] - 1.0) + 3.0 * sr[0], "ratio at 1000 farther from 1 than at 200");
  o.require(std::abs(r[1] - 1.0) < small_dev, "ratio at 1000 not closer to 1 than the DP range");
  o.detail << "mean |ratio - 1| over N = 8..16: " << small_dev << ", ratio(200) = " << r[0] << " +- " << sr[0]
           << ", ratio(1000) = " << r[1] << " +- " << sr[1];
}

// 5
void nystrom_reduction(Outcome& o) {
  const models::AnyModel ny = models::load_model(model_path("nystrom_piecewise.json"));
  const models::AnyModel fm = models::load_model(model_path("markov2.json"));
  const double B = excess_upper(fm);
  double worst = 0.0;
  for (double frac : {0.3, 0.6}) {
    engine::ExpandOptions opts;
    opts.order = 2;
    const engine::ExpansionResult x = engine::expand(ny, frac * B, opts);
    const engine::ExpansionResult y = engine::expand(fm, frac * B, opts);
    const double lx = std::abs(spectral::perron(models::as_family(ny).evaluate(y.tilt.theta_a)).lambda);
    const double ly = std::abs(spectral::perron(models::as_family(fm).evaluate(y.tilt.theta_a)).lambda);
    const double errs[] = {rel(lx, ly), rel(x.tilt.theta_a, y.tilt.theta_a), rel(x.tilt.rate, y.tilt.rate),
                           rel(x.D[0], y.D[0]), rel(x.D[1], y.D[1])};
    const char* names[] = {"lambda", "theta_a", "I", "D_0", "D_1"};
    for (int k = 0; k < 5; ++k) {
      worst = std::max(worst, errs[k]);
      o.require(errs[k] <= 1e-9, std::string(names[k]) + " at a = " + std::to_string(frac) + "B");
    }
  }
  o.detail << "B = " << B << ", max diff " << worst << " (tol 1e-9)";
}

// 6
void expanding_map(Outcome& o) {
  const double a = 0.4;
  const int N = 18;
  const models::AnyModel m32 = doubling_cos(32);
  engine::ExpandOptions opts;
  opts.order = 0;
  const engine::ExpansionResult res = engine::expand(m32, a, opts);
  const oracle::OracleEstimate est = oracle::cylinder_tail(std::get<models::FourierTransferModel>(m32), N,
                                                           (res.tilt.mean + a) * N);
  const double first = res.D[0] / std::sqrt(double(N)) * std::exp(-res.tilt.rate * N);
  const double lo = 0.85 * est.lower, hi = 1.15 * est.upper;
  o.require(first >= lo && first <= hi, "first-order term outside the widened bracket");

  const models::AnyModel m64 = doubling_cos(64);
  const double K32 = engine::first_order(res.tilt);
  const double K64 = engine::first_order(engine::solve_tilt(m64, a));
  const double drift = std::abs(K64 - K32) / std::abs(K32);
  o.require(drift <= 1e-8, "K(a) drift under m_max 32 -> 64");
  o.detail << "bracket [" << est.lower << ", " << est.upper << "], D_0/sqrt(N) e^{-IN} = " << first
           << ", K drift " << drift << " (tol 1e-8)";
}

// 7
void structural_suite(Outcome& o) {
  std::mt19937 gen(7);
  std::uniform_int_distribution<int> states(2, 4), atoms(3, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0), frac(0.2, 0.6);
  std::vector<models::AnyModel> fleet;
  for (int i = 0; i < 50; ++i) {
    const int d = states(gen);
    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < d; ++k) mu0(k) = 0.1 + u(gen);
    mu0 /= mu0.sum();
    const Eigen::MatrixXd P = random_stochastic(gen, d);
    const Eigen::MatrixXd h = random_matrix(gen, d, -1.0, 1.0);
    fleet.push_back(models::FiniteMarkovModel(P, h, mu0));
  }
  for (int i = 0; i < 30; ++i) {
    const int n = atoms(gen);
    std::vector<double> x(n), p(n);
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      x[k] = -1.0 + 2.0 * u(gen);
      total += (p[k] = 0.1 + u(gen));
    }
    for (double& q : p) q /= total;
    fleet.push_back(models::IIDFiniteModel(x, p));
  }

  const int r = 6;
  double shape = 0.0, bodd = 0.0, imag = 0.0, legendre = 0.0;
  int degree_bad = 0;
  for (size_t i = 0; i < fleet.size(); ++i) {
    const models::AnyModel& m = fleet[i];
    engine::ExpandOptions opts;
    opts.order = r;
    const double a = frac(gen) * excess_upper(m);
    engine::ExpansionResult res;
    try {
      res = engine::expand(m, a, opts);
    } catch (const std::exception& e) {
      throw std::runtime_error(models::type_name(m) + " #" + std::to_string(i) + " at a = " + std::to_string(a) +
                               ": " + e.what());
    }
    const double s2 = res.tilt.sigma2;
    for (int k = 0; k <= r; ++k) {
      const series::PolynomialC& A = res.A[k];
      double scale = 0.0, bad = 0.0, bscale = 0.0, bbad = 0.0;
      for (int j = 0; j <= A.degree(); ++j) {
        const double c = std::abs(A[j]);
        scale = std::max(scale, c);
        if ((j - k) % 2 != 0 || j > 3 * k) bad = std::max(bad, c);
        const double b = std::abs(A[j] * series::gaussian_moment(j, s2));
        bscale = std::max(bscale, b);
        if ((j + k) % 2 != 0) bbad = std::max(bbad, b);
      }
      if (scale > 0.0) shape = std::max(shape, bad / scale);
      if (bscale > 0.0) bodd = std::max(bodd, bbad / bscale);
    }
    double pscale = 1.0;
    for (size_t mm = 0; mm < res.P.size(); ++mm) {
      degree_bad += res.P[mm].degree() > 2 * static_cast<int>(mm);
      for (int j = 0; j <= res.P[mm].degree(); ++j) pscale = std::max(pscale, std::abs(res.P[mm][j]));
    }
    imag = std::max(imag, res.diagnostics.max_imag_discarded / pscale);
    const double th = res.tilt.theta_a;
    const double loglam = std::log(spectral::perron(models::as_family(m).evaluate(th)).lambda.real()) -
                          res.tilt.mean * th;
    legendre = std::max(legendre, rel(res.tilt.rate, res.tilt.a * th - loglam));
  }
  o.require(shape <= 1e-10, "A_k parity/degree");
  o.require(bodd <= 1e-10, "b_kj for odd j + k");
  o.require(imag < 1e-8, "P_m realness residue");
  o.require(degree_bad == 0, "P_m degree above 2m");
  o.require(legendre <= 1e-12, "Legendre identity");
  o.detail << fleet.size() << " models at r = " << r << ": A_k shape " << shape << ", odd b_kj " << bodd
           << ", P_m imag " << imag << ", degree violations " << degree_bad << ", Legendre " << legendre;
}

// 8
void tilted_mc_unbiased(Outcome& o) {
  std::mt19937 gen(8);
  std::uniform_int_distribution<int> states(2, 4);
  const long long N = 60, samples = 40000;
  int pairs = 0, bad = 0;
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const int d = states(gen);
    const Eigen::MatrixXd P = random_stochastic(gen, d);
    const Eigen::MatrixXd h = random_matrix(gen, d, -1.0, 1.0);
    const models::FiniteMarkovModel m(P, h, Eigen::VectorXd::Constant(d, 1.0 / d));
    const models::AnyModel any = m;
    const double a = 0.3 * excess_upper(any);
    const engine::TiltData t = engine::solve_tilt(any, a);
    const double thr = (t.mean + a) * N;
    std::vector<oracle::OracleEstimate> est;
    for (double f : {0.5, 1.0, 1.5})
      est.push_back(oracle::tilted_mc_tail(m, N, thr, f * t.theta_a, samples, 1000 + 3 * c + est.size()));
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        const double z = std::abs(est[i].value - est[j].value) /
                         std::hypot(est[i].std_err, est[j].std_err);
        worst = std::max(worst, z);
        ++pairs;
        bad += z > 3.0;
      }
  }
  o.require(bad == 0, std::to_string(bad) + " pairs beyond 3 combined std_err");
  o.detail << pairs << " pairs, max |diff|/combined std_err " << worst;
}

// 9
void lattice_negative_control(Outcome& o) {
  const models::AnyModel coin = models::load_model(model_path("coin.json"));
  engine::ExpandOptions opts;
  opts.order = 2;
  const engine::ExpansionResult res = engine::expand(coin, 0.25, opts);
  bool warned = false;
  for (const auto& w : res.diagnostics.warnings) warned = warned || w.find("lattice") != std::string::npos;
  o.require(warned, "no lattice warning");
  o.require(std::isfinite(res.D[0]) && std::isfinite(res.D[1]), "expansion did not complete");
  const double two_pi = 2.0 * std::numbers::pi;
  const spectral::GapScan scan =
      spectral::gap_scan(models::as_family(coin), res.tilt.theta_a, {0.5, 1.0, std::numbers::pi, 5.0, two_pi});
  bool at_two_pi = false;
  for (double s : scan.flagged) at_two_pi = at_two_pi || std::abs(s - two_pi) < 1e-12;
  o.require(at_two_pi, "gap_scan did not flag s = 2 pi");
  o.require(scan.flagged.size() == 1, "gap_scan flagged s other than 2 pi");
  o.detail << "warning present: " << (warned ? "yes" : "no") << ", flagged " << scan.flagged.size()
           << " point(s), max ratio " << scan.max_ratio;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"gaussian closed-form coefficients", 1.0, gaussian_closed_form},
      {"first-order internal identity", 10.0, first_order_identity},
      {"iid oracle convergence", 60.0, iid_oracle_convergence},
      {"finite Markov two oracles", 180.0, markov_two_oracles},
      {"Nystrom-finite reduction", 10.0, nystrom_reduction},
      {"expanding map first order", 300.0, expanding_map},
      {"structural invariant suite", 120.0, structural_suite},
      {"tilted MC unbiasedness", 120.0, tilted_mc_unbiased},
      {"lattice negative control", 5.0, lattice_negative_control},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > criteria[i].budget_s) o.require(false, "runtime over budget");
    failed += !o.pass;
    std::printf("%s %zu %s: %s [%.2f s, budget %.0f s]%s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.str().c_str(), secs, criteria[i].budget_s, o.pass ? "" : " failed: ",
                o.failures.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
