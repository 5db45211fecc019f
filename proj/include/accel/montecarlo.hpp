#pragma once

// Crude and importance-sampling probability estimation with normal-theory
// confidence intervals and a relative-half-width stopping rule.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "accel/distributions.hpp"
#include "accel/tilting.hpp"

namespace accel {

struct StoppingRule {
  double alpha = 0.2;       // confidence level 1 - alpha
  double beta = 0.2;        // stop when relative half-width < beta
  long min_samples = 100;
  long max_samples = 1000000;
  long check_every = 100;   // convergence checked (and trace emitted) per block
  long min_hits = 5;        // no convergence verdict before this many events
};

struct TraceRow {
  long n = 0;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double rel_half_width = 0.0;  // +inf until the estimate is positive
};

struct EstimateReport {
  std::string method;  // "crude" | "IS-single" | "IS-piecewise"
  double estimate = 0.0;
  double variance = 0.0;  // sample variance of the weighted indicator
  double confidence = 0.8;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double rel_half_width = 0.0;
  long n = 0;
  long hits = 0;
  bool converged = false;
  bool no_events = false;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<TraceRow> trace;

  nlohmann::json to_json() const;
};

/// Fills out[i] with the weighted indicator value (I * likelihood ratio, or
/// plain I for crude sampling) of fresh samples from substream `stream` of the
/// master seed. Streams are deterministic and disjoint by construction.
using WeightedSampler = std::function<void(std::uint64_t stream, std::span<double> out)>;

/// Core batched estimation loop shared by every estimator. Deterministic for
/// a given seed regardless of worker count.
EstimateReport run_estimation(const WeightedSampler& sampler, const StoppingRule& rule,
                              std::uint64_t seed, const std::string& method, int workers = 1);

EstimateReport estimate_crude(const PiecewiseMixture& model,
                              const std::function<bool(double)>& indicator,
                              const StoppingRule& rule, std::uint64_t seed, int workers = 1);

EstimateReport estimate_is(const PiecewiseMixture& base, const TiltedPiecewise& proposal,
                           const std::function<bool(double)>& indicator, const StoppingRule& rule,
                           std::uint64_t seed, int workers = 1);

/// Crude-Monte-Carlo sample count needed to reach relative half-width beta at
/// confidence 1 - alpha for an event of probability p_hat.
long required_samples_crude(double p_hat, double alpha, double beta);

/// Trace CSV with header "n,estimate,ci_lo,ci_hi,rel_half_width".
void write_trace_csv(std::ostream& os, const EstimateReport& report);

}  // namespace accel
