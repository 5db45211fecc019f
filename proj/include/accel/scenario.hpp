#pragma once

// Cut-in lane-change scenario: the stochastic model over (v_lead, range,
// TTC), a deterministic delayed-braking longitudinal controller producing the
// crash indicator, and the synthetic ground truth used in place of field data.

#include <array>
#include <iosfwd>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "accel/distributions.hpp"
#include "accel/kernels.hpp"
#include "accel/montecarlo.hpp"
#include "accel/tilting.hpp"

namespace accel {

inline constexpr std::array<double, 4> kSegmentBounds{5.0, 15.0, 25.0, 35.0};
inline constexpr int kSegmentCount = 3;

/// Speed segment for a lead speed, or -1 outside [5, 35).
int segment_index(double v_lead);

/// Stochastic lane-change model: empirical lead speed, one shared inverse-range
/// model, and one inverse-TTC model per speed segment.
struct LaneChangeModel {
  EmpiricalDistribution v_lead;
  PiecewiseMixture r_inverse;
  std::vector<PiecewiseMixture> ttc_inverse;  // kSegmentCount entries

  void validate() const;
  nlohmann::json to_json() const;
  static LaneChangeModel from_json(const nlohmann::json& j);
};

struct CutInInitialState {
  double v_lead = 0.0;      // m/s
  double range = 0.0;       // m
  double range_rate = 0.0;  // m/s, negative when closing

  double ttc() const { return -range / range_rate; }
  double v_follow() const { return v_lead - range_rate; }
};

/// Delayed-braking controller: brake at max_decel once TTC has stayed below
/// ttc_trigger for reaction_delay seconds; follower speed floors at zero.
struct AVControllerConfig {
  double reaction_delay = 0.5;  // s
  double ttc_trigger = 3.0;     // s
  double max_decel = 4.0;       // m/s^2
  double timestep = 0.01;       // s
  double horizon = 10.0;        // s

  void validate() const;
  kernels::CutInControl kernel_control() const;
  nlohmann::json to_json() const;
  static AVControllerConfig from_json(const nlohmann::json& j);
};

struct SimOutcome {
  double min_range = 0.0;
  double min_ttc = 0.0;
  double crash_time = 0.0;  // NaN when no crash occurred
  bool crashed() const { return min_range <= 0.0; }
};

/// Draw one initial state from the model: empirical lead speed, segment
/// selection by speed band, inverse-range and inverse-TTC draws.
CutInInitialState sample_scenario(const LaneChangeModel& model, Rng& rng);

/// Stepped simulation over the horizon (see kernels::cut_in_batch for the
/// grid semantics).
SimOutcome simulate_cut_in(const CutInInitialState& s, const AVControllerConfig& ctrl);

/// Reference variant that also records the range at every grid point, stepping
/// the whole trajectory literally.
SimOutcome simulate_cut_in_trajectory(const CutInInitialState& s, const AVControllerConfig& ctrl,
                                      std::vector<double>& range_trajectory);

int crash_indicator(const CutInInitialState& s, const AVControllerConfig& ctrl);

/// 1 iff min range <= t_range or min TTC <= t_ttc; (0, 0) is the crash event.
int relaxed_indicator(const CutInInitialState& s, const AVControllerConfig& ctrl, double t_range,
                      double t_ttc);

/// Batched outcomes for sampled variables (inverse range / inverse TTC / lead
/// speed), through the runtime-dispatched simulation kernel.
void scenario_outcomes(const AVControllerConfig& ctrl, std::span<const double> r_inverse,
                       std::span<const double> ttc_inverse, std::span<const double> v_lead,
                       std::span<double> min_range, std::span<double> min_ttc);

/// Fixed synthetic "true" model with the field-data shapes: piecewise
/// exponential inverse range, two-normal body plus exponential tail inverse
/// TTC per segment.
LaneChangeModel make_synthetic_ground_truth();

/// Event CSV: header "v_lead_mps,range_m,ttc_s", one lane change per row.
void write_events_csv(std::ostream& os, const LaneChangeModel& model, std::size_t count,
                      std::uint64_t seed);

struct EventTable {
  std::vector<double> v_lead, range, ttc;
  std::size_t size() const { return v_lead.size(); }
};

/// Parses an event CSV; malformed rows raise with their line number.
EventTable read_events_csv(std::istream& is);

/// Importance-sampling proposals for the scenario: one tilted pair per speed
/// segment (inverse range, inverse TTC).
struct ScenarioProposals {
  std::vector<TiltedPiecewise> r_inverse;    // kSegmentCount entries
  std::vector<TiltedPiecewise> ttc_inverse;  // kSegmentCount entries

  bool piecewise() const;
  nlohmann::json to_json() const;
  static ScenarioProposals from_json(const nlohmann::json& j);
};

/// Identity proposals over the model (crude sampling expressed as IS).
ScenarioProposals identity_proposals(const LaneChangeModel& model);

/// Weighted crash-indicator sampler for run_estimation: samples scenarios
/// from `proposals` (or from the model when proposals is null), simulates the
/// controller, and weights crashes by the likelihood ratio of `truth` density
/// to proposal density. Streams derive from `seed`.
WeightedSampler make_crash_sampler(const LaneChangeModel& truth,
                                   const ScenarioProposals* proposals,
                                   const AVControllerConfig& ctrl, std::uint64_t seed);

}  // namespace accel
