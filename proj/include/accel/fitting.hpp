#pragma once

// Maximum-likelihood fitting of bounded components and full piecewise
// mixtures: closed-form piece weights, 1-D numeric MLEs for the bounded
// exponential/normal families, and EM for bounded-normal mixtures.

#include <span>
#include <string>
#include <vector>

#include "accel/distributions.hpp"
#include "accel/optimize.hpp"

namespace accel {

struct Dataset {
  std::vector<double> values;
  std::string label;  // optional segment tag (e.g. lead-speed band)
};

enum class PieceFamily { bounded_exponential, bounded_normal, normal_mixture };

struct PieceFitSpec {
  PieceFamily family = PieceFamily::bounded_exponential;
  int mixture_components = 2;  // for normal_mixture
};

struct EmSettings {
  int max_iterations = 500;
  double tolerance = 1e-6;  // absolute log-likelihood improvement
  std::vector<double> initial_sigmas;  // optional explicit initialization
};

struct FitConfig {
  double lower = 0.0;
  double upper = kInf;
  std::vector<double> interior_truncations;
  std::vector<PieceFitSpec> pieces;  // one per interval
  EmSettings em;
  OptimSettings optim;
};

struct EmReport {
  int iterations = 0;
  std::vector<double> log_likelihood_trace;  // value after each E-step
};

struct PieceFitReport {
  double weight = 0.0;
  std::size_t count = 0;
  bool skipped_empty = false;
  int em_iterations = 0;
};

struct FitResult {
  PiecewiseMixture distribution;
  std::vector<PieceFitReport> pieces;
  double log_likelihood = 0.0;
};

/// Piecewise log-likelihood (sum of piece-weight and conditional terms).
/// Throws when an observation falls outside the support or in a zero-weight
/// piece, naming the offending value.
double log_likelihood(const PiecewiseMixture& d, const Dataset& data);

/// Occupancy-fraction weight estimates over the full truncation grid.
std::vector<double> fit_piece_weights(const Dataset& data, std::span<const double> truncations);

BoundedExponential fit_bounded_exponential(std::span<const double> data, double lower, double upper,
                                           const OptimSettings& optim = {});

BoundedNormal fit_bounded_normal(std::span<const double> data, double lower, double upper,
                                 const OptimSettings& optim = {});

/// E-step responsibilities tau[n][j] for the current mixture; rows sum to 1.
std::vector<std::vector<double>> em_responsibilities(std::span<const double> data,
                                                     const BoundedNormalMixture& mixture);

BoundedNormalMixture fit_mixture_em(std::span<const double> data, double lower, double upper, int m,
                                    const EmSettings& em = {}, const OptimSettings& optim = {},
                                    EmReport* report = nullptr);

FitResult fit_piecewise(const Dataset& data, const FitConfig& config);

/// Heuristic default knots at the requested empirical quantiles. The paper's
/// knots are hand-picked; this is a labeled convenience, not a recommendation.
std::vector<double> default_truncations(std::span<const double> data,
                                        std::span<const double> quantiles);

}  // namespace accel
