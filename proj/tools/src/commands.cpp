#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ldx/engine.hpp"
#include "ldx/errors.hpp"
#include "ldx/oracle.hpp"
#include "ldx/spectral.hpp"

namespace ldx::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("malformed " + what + " '" + s + "'");
}

long long to_integer(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("malformed " + what + " '" + s + "'");
}

struct Range {
  double mean;
  double B;  // excess
  bool exact;
};

Range excess_range(const models::AnyModel& model) {
  const models::LdpRange r = models::ldp_range(model);
  const double mean = engine::asymptotic_mean(models::as_family(model));
  if (r.exact && r.upper - mean <= 1e-10 * std::max(1.0, std::abs(mean)))
    throw DegenerateVariance("range of time averages collapses to the mean " + num(mean) +
                             " (observable is cohomologous to a constant)");
  return {mean, r.upper - mean, r.exact};
}

/// Keeps grid points strictly inside (0, B) and warns about the rest.
std::vector<double> clip(const std::vector<double>& as, const Range& range, std::vector<std::string>& warnings) {
  std::vector<double> keep;
  for (double a : as) {
    if (a > 0.0 && a < range.B) {
      keep.push_back(a);
    } else {
      warnings.push_back("a = " + num(a) + " lies outside (0, " + num(range.B) + ")" +
                         (range.exact ? "" : " (range estimated)") + "; dropped");
    }
  }
  return keep;
}

void merge_diagnostics(Report& rep, const engine::ExpansionResult& res) {
  rep.gap = std::max(rep.gap.value_or(0.0), res.diagnostics.gap);
  rep.max_imag_discarded = std::max(rep.max_imag_discarded.value_or(0.0), res.diagnostics.max_imag_discarded);
  rep.continuation_radius =
      std::min(rep.continuation_radius.value_or(std::numeric_limits<double>::infinity()),
               res.diagnostics.continuation_radius);
  for (const auto& w : res.diagnostics.warnings)
    if (std::find(rep.warnings.begin(), rep.warnings.end(), w) == rep.warnings.end()) rep.warnings.push_back(w);
}

std::string default_oracle(const models::AnyModel& model, long long N) {
  if (std::holds_alternative<models::IIDFiniteModel>(model)) return "exact";
  if (std::holds_alternative<models::FiniteMarkovModel>(model)) return N <= oracle::DpOptions{}.max_N ? "dp" : "mc";
  if (std::holds_alternative<models::FourierTransferModel>(model)) return "cylinder";
  throw ConfigError("no oracle is available for model type " + models::type_name(model));
}

oracle::OracleEstimate run_oracle(const std::string& method, const models::AnyModel& model, long long N,
                                  double threshold, double theta, const RunConfig& cfg) {
  const auto* iid = std::get_if<models::IIDFiniteModel>(&model);
  const auto* fm = std::get_if<models::FiniteMarkovModel>(&model);
  const auto* four = std::get_if<models::FourierTransferModel>(&model);
  if (method == "exact" && iid) return oracle::iid_exact_tail(*iid, N, threshold);
  if (method == "dp" && fm) return oracle::markov_dp_tail(*fm, static_cast<int>(N), threshold);
  if (method == "dp" && iid)
    return oracle::markov_dp_tail(models::FiniteMarkovModel::from_iid(*iid), static_cast<int>(N), threshold);
  if (method == "mc" && fm) return oracle::tilted_mc_tail(*fm, N, threshold, theta, cfg.samples, cfg.seed);
  if (method == "mc" && iid) return oracle::tilted_mc_tail(*iid, N, threshold, theta, cfg.samples, cfg.seed);
  if (method == "cylinder" && four) {
    if (N > oracle::CylinderOptions{}.depth_cap)
      throw ScaleError("cylinder oracle supports N <= " + std::to_string(oracle::CylinderOptions{}.depth_cap));
    return oracle::cylinder_tail(*four, static_cast<int>(N), threshold);
  }
  throw ConfigError("oracle '" + method + "' does not apply to model type " + models::type_name(model));
}

engine::ExpandOptions expand_options(int order) {
  engine::ExpandOptions o;
  o.order = order;
  return o;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string p;
  while (std::getline(ss, p, ':')) parts.push_back(p);
  if (parts.size() != 3) throw ConfigError("grid must look like start:stop:count, got '" + spec + "'");
  const double lo = to_double(parts[0], "grid start"), hi = to_double(parts[1], "grid stop");
  const long long n = to_integer(parts[2], "grid count");
  if (n < 0) throw ConfigError("grid count must be nonnegative");
  std::vector<double> out;
  for (long long i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  return out;
}

std::vector<long long> parse_N_grid(const std::string& spec) {
  std::vector<long long> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_integer(item, "N"));
    } else {
      const long long lo = to_integer(item.substr(0, dots), "N"), hi = to_integer(item.substr(dots + 2), "N");
      for (long long n = lo; n <= hi; ++n) out.push_back(n);
    }
  }
  for (long long n : out)
    if (n < 1) throw ConfigError("N-grid entries must be positive");
  return out;
}

Report cmd_rate(const RunConfig& cfg, const models::AnyModel& model) {
  Report rep;
  const Range range = excess_range(model);
  Table t{"rate", {"a", "theta_a", "I", "sigma2", "Z0", "B"}, {}};
  for (double a : clip(cfg.a_values, range, rep.warnings)) {
    const engine::TiltData tilt = engine::solve_tilt(model, a);
    t.rows.push_back({a, tilt.theta_a, tilt.rate, tilt.sigma2, tilt.Z0, range.B});
    rep.gap = std::max(rep.gap.value_or(0.0), tilt.gap);
  }
  rep.tables.push_back(std::move(t));
  return rep;
}

Report cmd_expand(const RunConfig& cfg, const models::AnyModel& model) {
  Report rep;
  const Range range = excess_range(model);
  Table coeffs{"coefficients", {"a", "m", "D"}, {}};
  Table polys{"polynomials", {"a", "m", "j", "coefficient"}, {}};
  for (double a : clip(cfg.a_values, range, rep.warnings)) {
    const engine::ExpansionResult res = engine::expand(model, a, expand_options(cfg.order));
    for (size_t m = 0; m < res.D.size(); ++m) {
      coeffs.rows.push_back({a, static_cast<double>(m), res.D[m]});
      for (int j = 0; j <= res.P[m].degree(); ++j)
        polys.rows.push_back({a, static_cast<double>(m), static_cast<double>(j), res.P[m][j]});
    }
    merge_diagnostics(rep, res);
  }
  rep.tables.push_back(std::move(coeffs));
  rep.tables.push_back(std::move(polys));
  return rep;
}

Report cmd_firstorder(const RunConfig& cfg, const models::AnyModel& model) {
  Report rep;
  const Range range = excess_range(model);
  Table t{"firstorder", {"a", "D0", "K", "rel_diff"}, {}};
  for (double a : clip(cfg.a_values, range, rep.warnings)) {
    const engine::ExpansionResult res = engine::expand(model, a, expand_options(0));
    const double K = engine::first_order(res.tilt);
    const double rel = std::abs(res.D[0] - K) / std::abs(K);
    if (!(rel <= 1e-10))
      throw NumericalError("internal consistency failure at a = " + num(a) + ": D0 = " + format_number(res.D[0]) +
                           ", K = " + format_number(K));
    t.rows.push_back({a, res.D[0], K, rel});
    merge_diagnostics(rep, res);
  }
  rep.tables.push_back(std::move(t));
  return rep;
}

Report cmd_validate(const RunConfig& cfg, const models::AnyModel& model) {
  Report rep;
  if (cfg.a_values.size() != 1) throw ConfigError("validate needs a single --a");
  if (cfg.N_grid.empty()) throw ConfigError("validate needs --N-grid");
  const double a = cfg.a_values[0];
  const engine::ExpansionResult res = engine::expand(model, a, expand_options(cfg.order));
  merge_diagnostics(rep, res);
  const double threshold_per_step = res.tilt.mean + a;

  Table conv{"convergence",
             {"N", "m", "oracle", "oracle_err", "scaled", "scaled_err", "expansion", "residual", "residual_scaled",
              "ratio0"},
             {}};
  const int orders = static_cast<int>(res.D.size());
  std::vector<std::vector<double>> logN(orders), logR(orders);
  for (long long N : cfg.N_grid) {
    const std::string method = cfg.oracle.empty() ? default_oracle(model, N) : cfg.oracle;
    oracle::OracleEstimate est;
    try {
      est = run_oracle(method, model, N, threshold_per_step * static_cast<double>(N), res.tilt.theta_a, cfg);
    } catch (const ScaleError& e) {
      rep.warnings.push_back("N = " + std::to_string(N) + " dropped: " + e.what());
      continue;
    }
    const double n = static_cast<double>(N);
    const double boost = std::exp(res.tilt.rate * n);
    const double scaled = est.value * boost;
    const double ratio0 = scaled * std::sqrt(n) / res.D[0];
    for (int m = 0; m < orders; ++m) {
      const double expansion = engine::evaluate_expansion(res, N, m);
      const double residual = scaled - expansion;
      conv.rows.push_back({n, static_cast<double>(m), est.value, est.std_err, scaled, est.std_err * boost, expansion,
                           residual, residual * std::pow(n, m + 1.5), ratio0});
      if (residual != 0.0 && std::isfinite(residual)) {
        logN[m].push_back(std::log(n));
        logR[m].push_back(std::log(std::abs(residual)));
      }
    }
  }
  if (conv.rows.empty()) throw ScaleError("no N-grid entry is within the oracle's limits");
  Table slope{"slope", {"m", "slope", "points"}, {}};
  for (int m = 0; m < orders; ++m)
    slope.rows.push_back({static_cast<double>(m), logN[m].size() >= 2 ? fit_slope(logN[m], logR[m]) : kNaN,
                          static_cast<double>(logN[m].size())});
  rep.tables.push_back(std::move(conv));
  rep.tables.push_back(std::move(slope));
  return rep;
}

Report cmd_diagnose(const RunConfig& cfg, const models::AnyModel& model) {
  Report rep;
  const AnalyticFamily& family = models::as_family(model);
  const spectral::TaylorData t0 = spectral::taylor_via_cauchy(family, 0.0, 2);
  const double mean = t0.L[1].real(), s2 = t0.L[2].real();
  const bool degenerate = !(s2 > 1e-10);
  if (degenerate)
    rep.warnings.push_back("DegenerateVariance: asymptotic variance " + num(s2) +
                           " vanishes (observable is cohomologous to a constant)");

  const models::LdpRange range = models::ldp_range(model);
  double theta = 0.0;
  if (cfg.a_values.size() == 1 && !degenerate) {
    try {
      theta = engine::solve_tilt(model, cfg.a_values[0]).theta_a;
    } catch (const Error& e) {
      rep.warnings.push_back(std::string("gap scan falls back to theta = 0: ") + e.what());
    }
  }

  std::vector<double> s_grid = cfg.s_grid;
  std::optional<models::NonlatticeResult> nl;
  if (const auto* iid = std::get_if<models::IIDFiniteModel>(&model)) nl = models::nonlattice_check(*iid);
  if (nl && !nl->nonlattice && !s_grid.empty()) {
    // Multiples of 2 pi / step, where a lattice law has |phi| = 1 exactly.
    const auto [lo, hi] = std::minmax_element(s_grid.begin(), s_grid.end());
    const double period = 2.0 * std::numbers::pi / nl->step;
    for (double s = period * std::ceil(*lo / period); s <= *hi; s += period)
      if (s > 0.0) s_grid.push_back(s);
    std::sort(s_grid.begin(), s_grid.end());
  }
  const spectral::GapScan gs = spectral::gap_scan(family, theta, s_grid);
  Table gap{"gap_scan", {"s", "ratio", "flagged"}, {}};
  for (size_t i = 0; i < gs.s.size(); ++i) {
    const bool flag = std::find(gs.flagged.begin(), gs.flagged.end(), gs.s[i]) != gs.flagged.end();
    gap.rows.push_back({gs.s[i], gs.ratio[i], flag ? 1.0 : 0.0});
  }
  if (!gs.flagged.empty())
    rep.warnings.push_back("gap_scan: |lambda(theta + i s)| reaches lambda(theta) at s = " + num(gs.flagged.front()) +
                           " (aperiodicity violated)");

  double nonlattice = kNaN, step = kNaN, min_d = kNaN, beta_hat = kNaN, charfn_c = kNaN, dio_flag = kNaN;
  Table dio{"diophantine", {"s", "d"}, {}};
  std::optional<models::DiophantineReport> report;
  const double s_max = cfg.s_grid.empty() ? 100.0 : *std::max_element(cfg.s_grid.begin(), cfg.s_grid.end());
  const int grid = std::max<int>(16, static_cast<int>(cfg.s_grid.size()));
  if (const auto* iid = std::get_if<models::IIDFiniteModel>(&model)) {
    nonlattice = nl->nonlattice ? 1.0 : 0.0;
    step = nl->step;
    if (!nl->nonlattice) rep.warnings.push_back("lattice law with step " + num(nl->step));
    report = models::diophantine_scan(*iid, s_max, grid);
  } else if (const auto* fm = std::get_if<models::FiniteMarkovModel>(&model)) {
    report = models::diophantine_scan(*fm, s_max, grid);
  }
  if (report) {
    for (size_t i = 0; i < report->s.size(); ++i) dio.rows.push_back({report->s[i], report->d[i]});
    min_d = report->min_d;
    beta_hat = report->beta_hat;
    charfn_c = report->charfn_c;
    dio_flag = report->lattice_flag ? 1.0 : 0.0;
  }

  Table summary{"summary",
                {"mean", "sigma2", "degenerate_variance", "ldp_lower", "ldp_upper", "ldp_exact", "theta",
                 "gap_max_ratio", "gap_flagged", "nonlattice", "lattice_step", "min_d", "beta_hat", "charfn_c",
                 "diophantine_lattice_flag"},
                {{mean, s2, degenerate ? 1.0 : 0.0, range.lower, range.upper, range.exact ? 1.0 : 0.0, theta,
                  gs.max_ratio, static_cast<double>(gs.flagged.size()), nonlattice, step, min_d, beta_hat, charfn_c,
                  dio_flag}}};
  try {
    rep.gap = spectral::perron(family.evaluate(theta)).gap;
  } catch (const Error& e) {
    rep.warnings.push_back(std::string("no spectral gap at theta: ") + e.what());
  }
  rep.tables.push_back(std::move(summary));
  rep.tables.push_back(std::move(gap));
  if (report) rep.tables.push_back(std::move(dio));
  return rep;
}

}  // namespace ldx::cli
