#pragma once

#include <cstdint>
#include <string>

#include "ldx/models.hpp"

namespace ldx::oracle {

enum class Method { iid_exact, markov_dp, tilted_mc, cylinder };

std::string method_name(Method m);

struct OracleEstimate {
  double value = 0.0;
  double std_err = 0.0;
  long long N = 0;
  Method method = Method::iid_exact;
  /// Certified bracket (cylinder method); equal to value for the others.
  double lower = 0.0;
  double upper = 0.0;
};

/// Counter-based stream: SplitMix64 seeded from (seed, index).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t index);
  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

 private:
  std::uint64_t state_;
};

/// Sums of exactly `threshold` count as hits (tolerance 1e-9 relative).
OracleEstimate iid_exact_tail(const models::IIDFiniteModel& m, long long N, double threshold);

struct DpOptions {
  int max_N = 18;
  double key = 1e-9;
  std::size_t max_keys = 10'000'000;
};

OracleEstimate markov_dp_tail(const models::FiniteMarkovModel& m, int N, double threshold,
                              const DpOptions& opts = {});

/// Doob-transformed chain used for importance sampling.
struct TiltedChain {
  double theta = 0.0;
  double lambda = 1.0;
  Eigen::VectorXd g;     // positive right Perron vector of P o exp(theta h)
  Eigen::MatrixXd Pbar;  // tilted transition matrix
};

TiltedChain tilted_chain(const models::FiniteMarkovModel& m, double theta);

struct McOptions {
  int threads = 0;  // 0: hardware concurrency
  long long batch = 1024;
};

OracleEstimate tilted_mc_tail(const models::FiniteMarkovModel& m, long long N, double threshold, double theta,
                              long long samples, std::uint64_t seed, const McOptions& opts = {});
OracleEstimate tilted_mc_tail(const models::IIDFiniteModel& m, long long N, double threshold, double theta,
                              long long samples, std::uint64_t seed, const McOptions& opts = {});

struct CylinderOptions {
  int depth_cap = 22;      // N <= depth_cap
  int refine_levels = 14;  // extra depth allowed for ambiguous cylinders
};

OracleEstimate cylinder_tail(const models::FourierTransferModel& m, int N, double threshold,
                             const CylinderOptions& opts = {});

}  // namespace ldx::oracle
