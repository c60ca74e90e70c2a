#include "ldx/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <unordered_map>
#include <vector>

#include "ldx/errors.hpp"
#include "ldx/spectral.hpp"

namespace ldx::oracle {

namespace {

/// Neumaier compensated sum.
struct KahanSum {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

double hit_tolerance(double threshold) { return 1e-9 * std::max(1.0, std::abs(threshold)); }

std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::iid_exact: return "iid_exact";
    case Method::markov_dp: return "markov_dp";
    case Method::tilted_mc: return "tilted_mc";
    case Method::cylinder: return "cylinder";
  }
  return "unknown";
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix(s);
  std::uint64_t t = index ^ a;
  state_ = splitmix(t) ^ splitmix(s);
}

std::uint64_t CounterRng::next() { return splitmix(state_); }

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------- exact iid

OracleEstimate iid_exact_tail(const models::IIDFiniteModel& m, long long N, double threshold) {
  if (N < 1) throw RangeError("N must be at least 1");
  const int d = static_cast<int>(m.atoms().size());
  const double log_count = std::lgamma(N + d) - std::lgamma(d) - std::lgamma(N + 1.0);
  if (log_count > std::log(1e7)) throw ScaleError("composition count exceeds 1e7; use the Monte Carlo oracle");

  std::vector<double> logp(d);
  for (int j = 0; j < d; ++j) logp[j] = std::log(m.probs()[j]);
  const double cut = threshold - hit_tolerance(threshold);
  const double lgN = std::lgamma(N + 1.0);
  KahanSum acc;

  // Depth-first over count vectors (n_0, ..., n_{d-1}) with sum N.
  auto rec = [&](auto&& self, int j, long long remaining, double sum, double lw) -> void {
    if (j == d - 1) {
      const double s = sum + remaining * m.atoms()[j];
      if (s >= cut) acc.add(std::exp(lw + remaining * logp[j] - std::lgamma(remaining + 1.0)));
      return;
    }
    for (long long n = 0; n <= remaining; ++n)
      self(self, j + 1, remaining - n, sum + n * m.atoms()[j], lw + n * logp[j] - std::lgamma(n + 1.0));
  };
  rec(rec, 0, N, 0.0, lgN);

  OracleEstimate out;
  out.value = std::clamp(acc.value(), 0.0, 1.0);
  out.N = N;
  out.method = Method::iid_exact;
  out.lower = out.upper = out.value;
  return out;
}

// ---------------------------------------------------------------- markov dp

OracleEstimate markov_dp_tail(const models::FiniteMarkovModel& m, int N, double threshold, const DpOptions& opts) {
  if (N < 1) throw RangeError("N must be at least 1");
  if (N > opts.max_N) throw ScaleError("N exceeds the dynamic-programming cap " + std::to_string(opts.max_N));
  struct Entry {
    double sum;
    double prob;
  };
  const int d = m.dim();
  using Layer = std::vector<std::unordered_map<long long, Entry>>;
  Layer cur(d);
  for (int j = 0; j < d; ++j)
    if (m.mu0()(j) > 0.0) cur[j][0] = {0.0, m.mu0()(j)};

  long long merges = 0;
  double max_merged = 0.0;
  for (int step = 0; step < N; ++step) {
    Layer next(d);
    std::size_t keys = 0;
    for (int j = 0; j < d; ++j)
      for (const auto& [key, e] : cur[j])
        for (int k = 0; k < d; ++k) {
          const double s = e.sum + m.h()(j, k);
          const double p = e.prob * m.P()(j, k);
          const long long nk = std::llround(s / opts.key);
          auto [it, inserted] = next[k].try_emplace(nk, Entry{s, p});
          if (!inserted) {
            if (std::abs(it->second.sum - s) > 1e-12 * std::max(1.0, std::abs(s))) {
              ++merges;
              max_merged = std::max(max_merged, std::min(p, it->second.prob));
            }
            it->second.prob += p;
          } else if (++keys > opts.max_keys) {
            throw ScaleError("dynamic program exceeds " + std::to_string(opts.max_keys) + " keys");
          }
        }
    cur = std::move(next);
  }

  const double cut = threshold - hit_tolerance(threshold);
  KahanSum acc;
  for (int j = 0; j < d; ++j)
    for (const auto& kv : cur[j])
      if (kv.second.sum >= cut) acc.add(kv.second.prob);

  OracleEstimate out;
  out.value = std::clamp(acc.value(), 0.0, 1.0);
  out.std_err = static_cast<double>(merges) * max_merged;
  out.N = N;
  out.method = Method::markov_dp;
  out.lower = out.upper = out.value;
  return out;
}

// ---------------------------------------------------------------- tilted mc

TiltedChain tilted_chain(const models::FiniteMarkovModel& m, double theta) {
  const spectral::PerronData pd = spectral::perron(m.evaluate(theta));
  const int d = m.dim();
  TiltedChain c;
  c.theta = theta;
  c.lambda = pd.lambda.real();
  const cplx phase = pd.w(0) / std::abs(pd.w(0));
  c.g.resize(d);
  for (int j = 0; j < d; ++j) {
    c.g(j) = (pd.w(j) / phase).real();
    if (!(c.g(j) > 0.0)) throw NumericalError("Perron vector is not positive");
  }
  c.Pbar.resize(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k)
      c.Pbar(j, k) = std::exp(theta * m.h()(j, k)) * m.P()(j, k) * c.g(k) / (c.lambda * c.g(j));
    c.Pbar.row(j) /= c.Pbar.row(j).sum();
  }
  return c;
}

OracleEstimate tilted_mc_tail(const models::FiniteMarkovModel& m, long long N, double threshold, double theta,
                              long long samples, std::uint64_t seed, const McOptions& opts) {
  if (N < 1) throw RangeError("N must be at least 1");
  if (samples < 2) throw ConfigError("Monte Carlo needs at least two samples");
  const TiltedChain chain = tilted_chain(m, theta);
  const int d = m.dim();

  std::vector<double> cum(static_cast<size_t>(d) * d), cum0(d), logg(d);
  for (int j = 0; j < d; ++j) {
    double c = 0.0;
    for (int k = 0; k < d; ++k) cum[j * d + k] = (c += chain.Pbar(j, k));
    cum[j * d + d - 1] = 1.0;
    logg[j] = std::log(chain.g(j));
  }
  {
    double c = 0.0;
    for (int j = 0; j < d; ++j) cum0[j] = (c += m.mu0()(j));
    cum0[d - 1] = 1.0;
  }
  auto draw = [d](const double* row, double u) {
    int k = 0;
    while (k < d - 1 && u >= row[k]) ++k;
    return k;
  };
  const double cut = threshold - hit_tolerance(threshold);
  // weight = exp(N log lambda - theta t) * exp(-theta (S - t) + log g(x0) - log g(xN))
  const double log_scale = static_cast<double>(N) * std::log(chain.lambda) - theta * threshold;

  const long long batch = std::max<long long>(1, opts.batch);
  const long long nbatches = (samples + batch - 1) / batch;
  std::vector<double> bsum(nbatches), bsq(nbatches);
  std::atomic<long long> next_batch{0};

  auto worker = [&]() {
    for (long long b; (b = next_batch.fetch_add(1)) < nbatches;) {
      KahanSum s1, s2;
      const long long end = std::min(samples, (b + 1) * batch);
      for (long long i = b * batch; i < end; ++i) {
        CounterRng rng(seed, static_cast<std::uint64_t>(i));
        int x = draw(cum0.data(), rng.uniform());
        const int x0 = x;
        double S = 0.0;
        for (long long n = 0; n < N; ++n) {
          const int k = draw(&cum[static_cast<size_t>(x) * d], rng.uniform());
          S += m.h()(x, k);
          x = k;
        }
        if (S >= cut) {
          const double w = std::exp(-theta * (S - threshold) + logg[x0] - logg[x]);
          s1.add(w);
          s2.add(w * w);
        }
      }
      bsum[b] = s1.value();
      bsq[b] = s2.value();
    }
  };
  int threads = opts.threads > 0 ? opts.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = static_cast<int>(std::clamp<long long>(threads, 1, nbatches));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  KahanSum s1, s2;
  for (long long b = 0; b < nbatches; ++b) {
    s1.add(bsum[b]);
    s2.add(bsq[b]);
  }
  const double n = static_cast<double>(samples);
  const double mean = s1.value() / n;
  const double var = std::max(0.0, (s2.value() - n * mean * mean) / (n - 1.0));
  const double scale = std::exp(log_scale);

  OracleEstimate out;
  out.value = mean * scale;
  out.std_err = std::sqrt(var / n) * scale;
  out.N = N;
  out.method = Method::tilted_mc;
  out.lower = out.upper = out.value;
  return out;
}

OracleEstimate tilted_mc_tail(const models::IIDFiniteModel& m, long long N, double threshold, double theta,
                              long long samples, std::uint64_t seed, const McOptions& opts) {
  return tilted_mc_tail(models::FiniteMarkovModel::from_iid(m), N, threshold, theta, samples, seed, opts);
}

// ---------------------------------------------------------------- cylinders

OracleEstimate cylinder_tail(const models::FourierTransferModel& m, int N, double threshold,
                             const CylinderOptions& opts) {
  if (N < 1) throw RangeError("N must be at least 1");
  if (N > opts.depth_cap)
    throw ScaleError("cylinder enumeration needs 2^N <= 2^" + std::to_string(opts.depth_cap) + " cylinders");

  OracleEstimate out;
  out.N = N;
  out.method = Method::cylinder;
  const models::TrigPoly& g = m.g();
  const double gmax = g.abs_bound();
  if (threshold <= -N * gmax || threshold > N * gmax) {
    out.value = out.lower = out.upper = threshold <= -N * gmax ? 1.0 : 0.0;
    return out;
  }

  const models::CircleMap& f = m.map();
  const double Lam = f.min_derivative();
  const double gp = g.derivative_bound();
  const int max_depth = N + opts.refine_levels;
  std::vector<double> var(max_depth + 1, 0.0);
  for (int D = N; D <= max_depth; ++D) var[D] = 0.5 * gp * std::pow(Lam, -(D - N)) / (Lam - 1.0);

  const models::TrigPoly& rho = m.rho();
  KahanSum in, ambiguous, mid_hits;
  std::vector<int> word;
  word.reserve(max_depth);
  std::vector<double> orbit(max_depth + 1);

  auto compose = [&](double x) {
    for (int i = static_cast<int>(word.size()) - 1; i >= 0; --i) x = f.inverse(word[i], x);
    return x;
  };

  auto visit = [&](auto&& self) -> void {
    const int D = static_cast<int>(word.size());
    if (D < N) {
      for (int b = 0; b < f.branches(); ++b) {
        word.push_back(b);
        self(self);
        word.pop_back();
      }
      return;
    }
    // orbit[k] = f^k(mid), mid = the point of the cylinder with f^D(mid) = 1/2.
    orbit[D] = 0.5;
    for (int i = D - 1; i >= 0; --i) orbit[i] = f.inverse(word[i], orbit[i + 1]);
    double S = 0.0;
    for (int k = 0; k < N; ++k) S += g(orbit[k]);
    const double mass = rho.integral(compose(1.0)) - rho.integral(compose(0.0));
    if (S - var[D] >= threshold) {
      in.add(mass);
    } else if (S + var[D] < threshold) {
      // outside
    } else if (D < max_depth) {
      for (int b = 0; b < f.branches(); ++b) {
        word.push_back(b);
        self(self);
        word.pop_back();
      }
    } else {
      ambiguous.add(mass);
      if (S >= threshold) mid_hits.add(mass);
    }
  };
  visit(visit);

  out.lower = in.value();
  out.upper = in.value() + ambiguous.value();
  out.value = in.value() + mid_hits.value();
  out.std_err = ambiguous.value();
  return out;
}

}  // namespace ldx::oracle
