#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ldx/errors.hpp"
#include "ldx/models.hpp"

namespace ldx::models {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// Extreme orbit averages of g over periodic points of period <= max_period.
std::pair<double, double> periodic_orbit_range(const FourierTransferModel& m, int max_period) {
  const CircleMap& f = m.map();
  const int nb = f.branches();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<int> word;
  std::vector<double> orbit;
  for (int p = 1; p <= max_period; ++p) {
    long long count = 1;
    for (int i = 0; i < p; ++i) count *= nb;
    word.assign(p, 0);
    orbit.assign(p + 1, 0.0);
    for (long long code = 0; code < count; ++code) {
      long long c = code;
      for (int i = 0; i < p; ++i, c /= nb) word[i] = static_cast<int>(c % nb);
      // Fixed point of y_{w_0} o ... o y_{w_{p-1}} by contraction.
      double x = 0.5;
      for (int it = 0; it < 200; ++it) {
        double y = x;
        for (int i = p - 1; i >= 0; --i) y = f.inverse(word[i], y);
        const bool done = std::abs(y - x) < 1e-15;
        x = y;
        if (done) break;
      }
      orbit[p] = x;
      for (int i = p - 1; i >= 0; --i) orbit[i] = f.inverse(word[i], orbit[i + 1]);
      double avg = 0.0;
      for (int i = 0; i < p; ++i) avg += m.g()(orbit[i]);
      avg /= p;
      lo = std::min(lo, avg);
      hi = std::max(hi, avg);
    }
  }
  return {lo, hi};
}

double dist_2pi(double x) { return std::abs(x - kTwoPi * std::round(x / kTwoPi)); }

/// Continued-fraction rational approximation with denominator <= qmax.
bool rational_approx(double x, double tol, long long qmax, long long* p_out, long long* q_out) {
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(r);
    const long long ai = static_cast<long long>(a);
    const long long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > qmax) return false;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(x - static_cast<double>(h1) / k1) <= tol * std::max(1.0, std::abs(x))) {
      *p_out = h1;
      *q_out = k1;
      return true;
    }
    const double frac = r - a;
    if (frac <= 0.0) return false;
    r = 1.0 / frac;
  }
  return false;
}

}  // namespace

double max_mean_cycle(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  if (n < 1 || w.cols() != n) throw ModelError("max_mean_cycle needs a square nonempty matrix");
  const double ninf = -std::numeric_limits<double>::infinity();
  // D(k, v): heaviest walk with exactly k edges ending at v, from any start.
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(n + 1, n, ninf);
  D.row(0).setZero();
  for (Eigen::Index k = 1; k <= n; ++k)
    for (Eigen::Index v = 0; v < n; ++v)
      for (Eigen::Index u = 0; u < n; ++u) D(k, v) = std::max(D(k, v), D(k - 1, u) + w(u, v));
  double best = ninf;
  for (Eigen::Index v = 0; v < n; ++v) {
    double worst = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k)
      worst = std::min(worst, (D(n, v) - D(k, v)) / static_cast<double>(n - k));
    best = std::max(best, worst);
  }
  return best;
}

LdpRange ldp_range(const AnyModel& model) {
  return std::visit(
      overloaded{
          [](const IIDFiniteModel& m) {
            auto [lo, hi] = std::minmax_element(m.atoms().begin(), m.atoms().end());
            return LdpRange{*lo, *hi, true};
          },
          [](const IIDMgfModel& m) { return LdpRange{m.support_min(), m.support_max(), true}; },
          [](const FiniteMarkovModel& m) {
            return LdpRange{-max_mean_cycle(-m.h()), max_mean_cycle(m.h()), true};
          },
          [](const NystromKernelModel& m) {
            const auto n = static_cast<Eigen::Index>(m.nodes().size());
            Eigen::MatrixXd h(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
              for (Eigen::Index j = 0; j < n; ++j) h(i, j) = m.observable(m.nodes()[i], m.nodes()[j]);
            // Exact for the discretized operator that evaluate() realizes.
            return LdpRange{-max_mean_cycle(-h), max_mean_cycle(h), true};
          },
          [](const FourierTransferModel& m) {
            auto [lo, hi] = periodic_orbit_range(m, 12);
            return LdpRange{lo, hi, false};
          },
      },
      model);
}

NonlatticeResult nonlattice_check(const IIDFiniteModel& m, double tol) {
  std::vector<double> a = m.atoms();
  std::sort(a.begin(), a.end());
  std::vector<double> b;
  for (size_t j = 1; j < a.size(); ++j) b.push_back(a[j] - a[0]);
  const double r = b.front();  // smallest positive difference
  std::vector<long long> p(b.size()), q(b.size());
  for (size_t j = 0; j < b.size(); ++j)
    if (!rational_approx(b[j] / r, tol, 10000, &p[j], &q[j])) return {true, 0.0};

  long long L = 1;
  for (long long qj : q) {
    L = std::lcm(L, qj);
    if (L > 1000000000LL) return {true, 0.0};
  }
  long long g = 0;
  for (size_t j = 0; j < b.size(); ++j) g = std::gcd(g, p[j] * (L / q[j]));
  return {false, r * static_cast<double>(g) / static_cast<double>(L)};
}

DiophantineReport diophantine_scan(const std::vector<double>& b, double s_max, int grid,
                                   const std::vector<double>& extra_points, const IIDFiniteModel* law) {
  if (!(s_max > 1.0)) throw ConfigError("diophantine_scan needs s_max > 1");
  if (grid < 2) throw ConfigError("diophantine_scan needs at least two grid points");
  DiophantineReport rep;
  for (int i = 0; i < grid; ++i) rep.s.push_back(std::exp(std::log(s_max) * (i + 1) / grid));
  for (double s : extra_points)
    if (s > 1.0 && s <= s_max) rep.s.push_back(s);
  std::sort(rep.s.begin(), rep.s.end());

  rep.min_d = std::numeric_limits<double>::infinity();
  double c_min = std::numeric_limits<double>::infinity();
  for (double s : rep.s) {
    double d = 0.0;
    for (double bj : b) d = std::max(d, dist_2pi(bj * s));
    rep.d.push_back(d);
    rep.min_d = std::min(rep.min_d, d);
    if (law && d > 1e-12) {
      cplx phi = 0.0;
      for (size_t j = 0; j < law->atoms().size(); ++j)
        phi += law->probs()[j] * std::exp(cplx(0.0, s * law->atoms()[j]));
      c_min = std::min(c_min, (1.0 - std::abs(phi)) / (d * d));
    }
  }
  if (law) rep.charfn_c = c_min;
  rep.lattice_flag = rep.min_d < 1e-9;

  for (int i = 0; i <= 60; ++i) {
    const double beta = 0.1 * i;
    double env = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < rep.s.size(); ++k) env = std::min(env, rep.d[k] * std::pow(rep.s[k], beta));
    rep.beta_grid.push_back(beta);
    rep.envelope.push_back(env);
  }

  if (rep.lattice_flag) {
    rep.beta_hat = std::numeric_limits<double>::infinity();
  } else {
    // Least-squares slope of the running-minimum envelope in log-log coordinates.
    double run = std::numeric_limits<double>::infinity();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t k = 0; k < rep.s.size(); ++k) {
      run = std::min(run, rep.d[k]);
      const double x = std::log(rep.s[k]), y = std::log(run);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    const double den = n * sxx - sx * sx;
    rep.beta_hat = den > 0.0 ? std::max(0.0, -(n * sxy - sx * sy) / den) : 0.0;
  }
  return rep;
}

DiophantineReport diophantine_scan(const IIDFiniteModel& m, double s_max, int grid) {
  std::vector<double> b;
  for (size_t j = 1; j < m.atoms().size(); ++j) b.push_back(m.atoms()[j] - m.atoms()[0]);
  std::vector<double> extra;
  const NonlatticeResult nl = nonlattice_check(m);
  if (!nl.nonlattice) extra.push_back(kTwoPi / nl.step);
  return diophantine_scan(b, s_max, grid, extra, &m);
}

DiophantineReport diophantine_scan(const FiniteMarkovModel& m, double s_max, int grid) {
  const Eigen::MatrixXd& h = m.h();
  const Eigen::Index d = h.rows();
  std::vector<double> b;
  for (Eigen::Index l = 0; l < d; ++l)
    for (Eigen::Index j = 1; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k) {
        const double v = h(l, j) + h(j, k) - h(l, 0) - h(0, k);
        if (std::abs(v) > 0.0) b.push_back(v);
      }
  return diophantine_scan(b, s_max, grid);
}

}  // namespace ldx::models
