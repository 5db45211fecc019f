#include "accel/montecarlo.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "accel/math.hpp"
#include "accel/parallel.hpp"
#include "accel/rng.hpp"

namespace accel {

namespace {

constexpr std::size_t kSubChunk = 1024;  // worker granularity inside a check block

}  // namespace

EstimateReport run_estimation(const WeightedSampler& sampler, const StoppingRule& rule,
                              std::uint64_t seed, const std::string& method, int workers) {
  if (!(rule.alpha > 0.0 && rule.alpha < 1.0) || !(rule.beta > 0.0 && rule.beta < 1.0))
    throw std::invalid_argument("stopping rule: alpha and beta must lie in (0, 1)");
  if (rule.check_every < 1 || rule.min_samples < 1 || rule.max_samples < rule.min_samples)
    throw std::invalid_argument("stopping rule: inconsistent sample counts");

  const double z = normal_quantile(1.0 - rule.alpha / 2.0);
  EstimateReport report;
  report.method = method;
  report.confidence = 1.0 - rule.alpha;
  report.seed = seed;
  report.workers = workers;

  double sum = 0.0, sum_sq = 0.0;
  long n = 0, hits = 0;
  std::uint64_t next_stream = 0;
  std::vector<double> weights;

  while (n < rule.max_samples) {
    const long block = std::min<long>(rule.check_every, rule.max_samples - n);
    const std::size_t chunks = (static_cast<std::size_t>(block) + kSubChunk - 1) / kSubChunk;
    weights.resize(static_cast<std::size_t>(block));
    const std::uint64_t stream_base = next_stream;
    next_stream += chunks;
    for_each_chunk(static_cast<std::size_t>(block), kSubChunk, workers,
                   [&](std::size_t chunk, std::size_t begin, std::size_t count) {
                     sampler(stream_base + chunk,
                             std::span<double>(weights.data() + begin, count));
                   });
    // chunk-ordered reduction: identical totals for every worker count
    for (long i = 0; i < block; ++i) {
      double w = weights[static_cast<std::size_t>(i)];
      if (!(w >= 0.0) || std::isinf(w))
        throw std::runtime_error("estimation: non-finite or negative weight at sample " +
                                 std::to_string(n + i + 1));
      sum += w;
      sum_sq += w * w;
      hits += w > 0.0;
    }
    n += block;

    double estimate = sum / static_cast<double>(n);
    double var = 0.0;
    if (n > 1) {
      var = (sum_sq / static_cast<double>(n) - estimate * estimate) *
            (static_cast<double>(n) / static_cast<double>(n - 1));
      var = std::max(var, 0.0);
    }
    double half = z * std::sqrt(var / static_cast<double>(n));
    double rhw = estimate > 0.0 ? half / estimate : kInf;
    report.trace.push_back({n, estimate, estimate - half, estimate + half, rhw});

    report.estimate = estimate;
    report.variance = var;
    report.ci_lo = estimate - half;
    report.ci_hi = estimate + half;
    report.rel_half_width = rhw;
    report.n = n;
    report.hits = hits;
    if (n >= rule.min_samples && hits >= rule.min_hits && rhw < rule.beta) {
      report.converged = true;
      break;
    }
  }
  report.no_events = hits == 0;
  return report;
}

EstimateReport estimate_crude(const PiecewiseMixture& model,
                              const std::function<bool(double)>& indicator,
                              const StoppingRule& rule, std::uint64_t seed, int workers) {
  auto sampler = [&](std::uint64_t stream, std::span<double> out) {
    Rng rng(derive_seed(seed, stream));
    for (double& w : out) {
      double x = model.inverse_cdf(rng.u01());
      w = indicator(x) ? 1.0 : 0.0;
    }
  };
  return run_estimation(sampler, rule, seed, "crude", workers);
}

EstimateReport estimate_is(const PiecewiseMixture& base, const TiltedPiecewise& proposal,
                           const std::function<bool(double)>& indicator, const StoppingRule& rule,
                           std::uint64_t seed, int workers) {
  auto sampler = [&](std::uint64_t stream, std::span<double> out) {
    Rng rng(derive_seed(seed, stream));
    for (double& w : out) {
      double x = proposal.proposal().inverse_cdf(rng.u01());
      w = indicator(x) ? std::exp(log_likelihood_ratio(base, proposal, x)) : 0.0;
    }
  };
  bool piecewise = base.piece_count() > 1;
  return run_estimation(sampler, rule, seed, piecewise ? "IS-piecewise" : "IS-single", workers);
}

long required_samples_crude(double p_hat, double alpha, double beta) {
  if (!(p_hat > 0.0 && p_hat < 1.0))
    throw std::invalid_argument("required_samples_crude: p_hat must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("required_samples_crude: alpha and beta must lie in (0, 1)");
  double z = normal_quantile(1.0 - alpha / 2.0);
  return static_cast<long>(std::ceil(z * z * (1.0 - p_hat) / (beta * beta * p_hat)));
}

void write_trace_csv(std::ostream& os, const EstimateReport& report) {
  os << "n,estimate,ci_lo,ci_hi,rel_half_width\n";
  char line[256];
  for (const TraceRow& row : report.trace) {
    std::snprintf(line, sizeof(line), "%ld,%.17g,%.17g,%.17g,%.17g\n", row.n, row.estimate,
                  row.ci_lo, row.ci_hi, row.rel_half_width);
    os << line;
  }
}

nlohmann::json EstimateReport::to_json() const {
  return nlohmann::json{{"method", method},
                        {"estimate", estimate},
                        {"variance", variance},
                        {"confidence", confidence},
                        {"ci", {ci_lo, ci_hi}},
                        {"rel_half_width", rel_half_width},
                        {"n", n},
                        {"hits", hits},
                        {"converged", converged},
                        {"no_events", no_events},
                        {"seed", seed},
                        {"workers", workers}};
}

}  // namespace accel
