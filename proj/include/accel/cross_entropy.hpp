#pragma once

// Cross-entropy optimization of piecewise tilted proposals against a rare
// event: weighted piece-mass and tilt updates, an adaptive relaxed-event
// schedule, proposal-weight flooring, no-hit fallbacks, sample-size growth,
// and the truncation-shift heuristic for misplaced tail knots.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "accel/optimize.hpp"
#include "accel/rng.hpp"
#include "accel/tilting.hpp"

namespace accel {

struct CEConfig {
  int samples_per_iteration = 1000;
  int max_iterations = 60;
  double pi_floor = 0.01;
  double convergence_tolerance = 1e-3;  // max |dtheta|, |dpi| between iterations
  int stable_iterations = 2;            // consecutive small-change checks at the true event
  double target_hit_fraction = 0.10;    // empirical-quantile threshold rule
  long min_hits_per_heavy_piece = 10;
  double materiality_threshold = 0.05;  // pieces above this proposal weight must see hits
  long max_samples_per_iteration = 16000;
  double truncation_shift_fraction = 0.25;  // of the interior-knot span, per shift
  int max_shift_retries = 5;
  OptimSettings optim;
};

/// One sampling variable: the fixed density f in the weight numerator and the
/// evolving proposal family (whose grid the truncation shifts may move).
struct CEVariable {
  std::string name;
  PiecewiseMixture true_model;
  TiltedPiecewise proposal;
};

/// Relaxed-event family, parameterized by a scalar level u >= 0: the event at
/// level u is {severity <= u}; the true rare event is {severity <= 0}.
/// severity fills out[i] for joint samples vals[variable][i]; auxiliary
/// randomness (the lead speed draw) comes from the supplied rng, consumed
/// after the variable draws.
struct CEEvent {
  std::function<void(const std::vector<std::vector<double>>&, Rng&, std::span<double>)> severity;
  std::function<nlohmann::json(double)> thresholds_at;  // named thresholds for the trace
};

struct CEPieceDiag {
  double sum_c = 0.0;
  long hits = 0;
  bool fallback = false;
};

struct CEIteration {
  int iteration = 0;
  double level = 0.0;
  nlohmann::json thresholds;
  long n_samples = 0;
  long hits = 0;
  double event_probability = 0.0;  // mean weight: unbiased for the relaxed event
  int truncation_shifts = 0;
  bool at_final_event = false;
  double max_param_delta = 0.0;
  std::vector<std::string> variable_names;
  std::vector<std::vector<double>> theta;
  std::vector<std::vector<double>> proposal_weights;
  std::vector<std::vector<CEPieceDiag>> pieces;

  nlohmann::json to_json() const;
};

struct CEResult {
  std::vector<CEIteration> trace;
  std::vector<TiltedPiecewise> proposals;
  bool converged = false;
};

/// Proposal-weight update: weighted piece masses, floored and renormalized
/// (the floor only binds pieces that would otherwise fall below it). Throws
/// when every weight is zero ("no rare events in batch").
std::vector<double> ce_update_weights(std::span<const double> c, std::span<const int> piece_index,
                                      std::size_t piece_count, double floor);

/// Tilt update for one piece: maximizes theta * hit_mean - kappa(theta) over
/// the admissible tilt range of the piece family.
double ce_update_theta(const BoundedComponent& base_piece, double hit_mean,
                       const OptimSettings& optim = {});

/// No-hit fallback: keep the previous tilt when one exists, else 0.
double ce_theta_fallback(const std::optional<double>& previous);

/// Moves every truncation point except the first by `step`; piece parameters
/// carry over and renormalize on the shifted intervals.
TiltedPiecewise shift_truncations(const TiltedPiecewise& proposal, double step);

/// Doubling growth rule (capped, never below `base`): grow while any piece
/// with proposal weight >= materiality saw fewer than the required hits.
long adjust_sample_size(const CEIteration& last, const CEConfig& config, long current, long base);

CEResult ce_iterate(std::vector<CEVariable> variables, const CEEvent& event, const CEConfig& config,
                    std::uint64_t seed);

}  // namespace accel
