#include "accel/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "accel/math.hpp"

namespace accel {

using nlohmann::json;

int segment_index(double v_lead) {
  for (int s = 0; s < kSegmentCount; ++s) {
    if (v_lead >= kSegmentBounds[s] && v_lead < kSegmentBounds[s + 1]) return s;
  }
  return -1;
}

void LaneChangeModel::validate() const {
  if (ttc_inverse.size() != static_cast<std::size_t>(kSegmentCount))
    throw std::invalid_argument("lane change model: need one TTC model per speed segment");
  for (double v : v_lead.values()) {
    if (segment_index(v) < 0)
      throw std::invalid_argument("lane change model: lead speed " + std::to_string(v) +
                                  " outside [5, 35)");
  }
}

json LaneChangeModel::to_json() const {
  json segs = json::array();
  for (int s = 0; s < kSegmentCount; ++s) segs.push_back({kSegmentBounds[s], kSegmentBounds[s + 1]});
  json ttc = json::array();
  for (const auto& d : ttc_inverse) ttc.push_back(d.to_json());
  return json{{"v_lead", v_lead.to_json()},
              {"segments", std::move(segs)},
              {"r_inverse", r_inverse.to_json()},
              {"ttc_inverse", std::move(ttc)}};
}

LaneChangeModel LaneChangeModel::from_json(const json& j) {
  LaneChangeModel m{EmpiricalDistribution::from_json(j.at("v_lead")),
                    PiecewiseMixture::from_json(j.at("r_inverse")),
                    {}};
  for (const auto& jt : j.at("ttc_inverse")) m.ttc_inverse.push_back(PiecewiseMixture::from_json(jt));
  m.validate();
  return m;
}

void AVControllerConfig::validate() const {
  if (!(reaction_delay >= 0.0) || !(ttc_trigger >= 0.0) || !(max_decel > 0.0))
    throw std::invalid_argument("controller: delay/trigger must be >= 0 and decel > 0");
  if (!(timestep > 0.0) || timestep > 0.1)
    throw std::invalid_argument("controller: timestep must lie in (0, 0.1]");
  if (!(horizon >= timestep)) throw std::invalid_argument("controller: horizon shorter than a step");
}

kernels::CutInControl AVControllerConfig::kernel_control() const {
  validate();
  return kernels::CutInControl{timestep, horizon, ttc_trigger, reaction_delay, max_decel};
}

json AVControllerConfig::to_json() const {
  return json{{"reaction_delay", reaction_delay},
              {"ttc_trigger", ttc_trigger},
              {"max_decel", max_decel},
              {"timestep", timestep},
              {"horizon", horizon}};
}

AVControllerConfig AVControllerConfig::from_json(const json& j) {
  AVControllerConfig c;
  c.reaction_delay = j.value("reaction_delay", c.reaction_delay);
  c.ttc_trigger = j.value("ttc_trigger", c.ttc_trigger);
  c.max_decel = j.value("max_decel", c.max_decel);
  c.timestep = j.value("timestep", c.timestep);
  c.horizon = j.value("horizon", c.horizon);
  c.validate();
  return c;
}

CutInInitialState sample_scenario(const LaneChangeModel& model, Rng& rng) {
  double v = model.v_lead.sample(rng);
  int seg = segment_index(v);
  if (seg < 0)
    throw std::runtime_error("sample_scenario: lead speed " + std::to_string(v) +
                             " outside all segments");
  double r_inv = std::max(model.r_inverse.inverse_cdf(rng.u01()), 1e-12);
  double ttc_inv = model.ttc_inverse[static_cast<std::size_t>(seg)].inverse_cdf(rng.u01());
  double range = 1.0 / r_inv;
  return CutInInitialState{v, range, -ttc_inv * range};
}

SimOutcome simulate_cut_in(const CutInInitialState& s, const AVControllerConfig& ctrl) {
  if (!std::isfinite(s.range) || !std::isfinite(s.range_rate) || !std::isfinite(s.v_lead))
    throw std::invalid_argument("simulate_cut_in: non-finite initial state");
  double minr, mint, crash;
  kernels::cut_in_batch(ctrl.kernel_control(), {&s.range, 1}, {&s.range_rate, 1}, {&s.v_lead, 1},
                        {&minr, 1}, {&mint, 1}, {&crash, 1});
  return SimOutcome{minr, mint, crash};
}

SimOutcome simulate_cut_in_trajectory(const CutInInitialState& s, const AVControllerConfig& ctrl,
                                      std::vector<double>& range_trajectory) {
  const kernels::CutInControl kc = ctrl.kernel_control();
  const long nh = kc.horizon_steps();
  const double dt = kc.dt;
  range_trajectory.clear();
  range_trajectory.reserve(static_cast<std::size_t>(nh) + 1);

  double r = s.range, rd = s.range_rate, vf = s.v_follow();
  bool braking = false;
  long held = 0;
  SimOutcome out{r, kInf, kNaN};
  for (long n = 0;; ++n) {
    range_trajectory.push_back(r);
    if (r < out.min_range) out.min_range = r;
    double ttc = rd < 0.0 ? (-r) / rd : kInf;
    if (ttc < out.min_ttc) out.min_ttc = ttc;
    if (r <= 0.0) {
      out.crash_time = static_cast<double>(n) * dt;
      break;
    }
    if (rd >= 0.0 || n == nh) break;
    if (!braking && kc.trigger_ttc > 0.0) {
      if (ttc < kc.trigger_ttc) {
        if (static_cast<double>(held) * dt >= kc.reaction_delay) {
          braking = true;
        } else {
          ++held;
        }
      } else {
        held = 0;
      }
    }
    r = r + dt * rd;
    if (braking) {
      vf = vf - dt * kc.max_decel;
      if (vf < 0.0) vf = 0.0;
      rd = s.v_lead - vf;
    }
  }
  return out;
}

int crash_indicator(const CutInInitialState& s, const AVControllerConfig& ctrl) {
  return simulate_cut_in(s, ctrl).crashed() ? 1 : 0;
}

int relaxed_indicator(const CutInInitialState& s, const AVControllerConfig& ctrl, double t_range,
                      double t_ttc) {
  if (!(t_range >= 0.0) || !(t_ttc >= 0.0))
    throw std::invalid_argument("relaxed_indicator: thresholds must be >= 0");
  SimOutcome out = simulate_cut_in(s, ctrl);
  return out.min_range <= t_range || out.min_ttc <= t_ttc ? 1 : 0;
}

void scenario_outcomes(const AVControllerConfig& ctrl, std::span<const double> r_inverse,
                       std::span<const double> ttc_inverse, std::span<const double> v_lead,
                       std::span<double> min_range, std::span<double> min_ttc) {
  const std::size_t n = r_inverse.size();
  std::vector<double> r0(n), rd0(n), crash(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ri = std::max(r_inverse[i], 1e-12);
    r0[i] = 1.0 / ri;
    rd0[i] = -ttc_inverse[i] * r0[i];
  }
  kernels::cut_in_batch(ctrl.kernel_control(), r0, rd0, v_lead, min_range, min_ttc, crash);
}

// ---------------------------------------------------------------------------
// Synthetic ground truth

LaneChangeModel make_synthetic_ground_truth() {
  // Lead-speed empirical distribution across the three bands.
  std::vector<double> speeds{6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34};
  std::vector<double> counts{2, 3, 4, 4, 3, 5, 7, 8, 7, 6, 4, 4, 3, 2, 1};

  // Inverse range (1/m): three bounded exponential pieces, heavier tail above
  // 0.06 (ranges below ~17 m).
  PiecewiseMixture r_inv({0.0, 0.02, 0.06, kInf}, {0.40, 0.42, 0.18},
                         {BoundedExponential{30.0, 0.0, 0.02}, BoundedExponential{25.0, 0.02, 0.06},
                          BoundedExponential{35.0, 0.06, kInf}});

  // Inverse TTC (1/s) per segment: two-normal body below 0.5, exponential tail.
  auto ttc_model = [](double sigma_narrow, double sigma_wide, double tail_rate, double tail_mass) {
    BoundedNormalMixture body;
    body.lower = 0.0;
    body.upper = 0.5;
    body.components = {{0.60, sigma_narrow, 0.0}, {0.40, sigma_wide, 0.0}};
    return PiecewiseMixture({0.0, 0.5, kInf}, {1.0 - tail_mass, tail_mass},
                            {body, BoundedExponential{tail_rate, 0.5, kInf}});
  };

  LaneChangeModel model{EmpiricalDistribution(std::move(speeds), std::move(counts)),
                        std::move(r_inv),
                        {ttc_model(0.07, 0.22, 6.0, 0.035), ttc_model(0.065, 0.20, 6.5, 0.030),
                         ttc_model(0.06, 0.18, 7.0, 0.025)}};
  model.validate();
  return model;
}

void write_events_csv(std::ostream& os, const LaneChangeModel& model, std::size_t count,
                      std::uint64_t seed) {
  os << "v_lead_mps,range_m,ttc_s\n";
  Rng rng(seed);
  char line[128];
  for (std::size_t i = 0; i < count; ++i) {
    CutInInitialState s = sample_scenario(model, rng);
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", s.v_lead, s.range, s.ttc());
    os << line;
  }
}

EventTable read_events_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "v_lead_mps,range_m,ttc_s")
    throw std::runtime_error("events csv line 1: expected header \"v_lead_mps,range_m,ttc_s\"");
  EventTable table;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    double v[3];
    const char* p = line.c_str();
    char* end = nullptr;
    for (int f = 0; f < 3; ++f) {
      v[f] = std::strtod(p, &end);
      if (end == p || (f < 2 && *end != ',') || (f == 2 && *end != '\0'))
        throw std::runtime_error("events csv line " + std::to_string(lineno) + ": malformed row \"" +
                                 line + "\"");
      p = end + 1;
    }
    if (!(v[1] > 0.0) || !(v[2] > 0.0))
      throw std::runtime_error("events csv line " + std::to_string(lineno) +
                               ": range and ttc must be positive");
    table.v_lead.push_back(v[0]);
    table.range.push_back(v[1]);
    table.ttc.push_back(v[2]);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Proposals and the estimation sampler

bool ScenarioProposals::piecewise() const {
  for (const auto& t : r_inverse) {
    if (t.base().piece_count() > 1) return true;
  }
  for (const auto& t : ttc_inverse) {
    if (t.base().piece_count() > 1) return true;
  }
  return false;
}

json ScenarioProposals::to_json() const {
  json segs = json::array();
  for (int s = 0; s < kSegmentCount; ++s) {
    segs.push_back({{"r_inverse", r_inverse[static_cast<std::size_t>(s)].to_json()},
                    {"ttc_inverse", ttc_inverse[static_cast<std::size_t>(s)].to_json()}});
  }
  return json{{"segments", std::move(segs)}};
}

ScenarioProposals ScenarioProposals::from_json(const json& j) {
  ScenarioProposals p;
  for (const auto& js : j.at("segments")) {
    p.r_inverse.push_back(TiltedPiecewise::from_json(js.at("r_inverse")));
    p.ttc_inverse.push_back(TiltedPiecewise::from_json(js.at("ttc_inverse")));
  }
  if (p.r_inverse.size() != static_cast<std::size_t>(kSegmentCount))
    throw std::invalid_argument("proposals: need one segment entry per speed band");
  return p;
}

ScenarioProposals identity_proposals(const LaneChangeModel& model) {
  ScenarioProposals p;
  for (int s = 0; s < kSegmentCount; ++s) {
    p.r_inverse.push_back(TiltedPiecewise::identity(model.r_inverse));
    p.ttc_inverse.push_back(TiltedPiecewise::identity(model.ttc_inverse[static_cast<std::size_t>(s)]));
  }
  return p;
}

namespace {

struct CrashSamplerState {
  LaneChangeModel truth;
  ScenarioProposals proposals;
  AVControllerConfig ctrl;
  std::uint64_t seed;
  bool is_identity;
  // flattened density tables: truth (numerator) and proposal (denominator)
  kernels::PieceTable truth_r;
  std::vector<kernels::PieceTable> truth_ttc;
  std::vector<kernels::PieceTable> prop_r;
  std::vector<kernels::PieceTable> prop_ttc;

  CrashSamplerState(LaneChangeModel t, ScenarioProposals p, const AVControllerConfig& c,
                    std::uint64_t sd, bool ident)
      : truth(std::move(t)), proposals(std::move(p)), ctrl(c), seed(sd), is_identity(ident) {
    truth_r = kernels::make_piece_table(truth.r_inverse);
    for (int s = 0; s < kSegmentCount; ++s) {
      auto idx = static_cast<std::size_t>(s);
      truth_ttc.push_back(kernels::make_piece_table(truth.ttc_inverse[idx]));
      prop_r.push_back(make_piece_table(proposals.r_inverse[idx]));
      prop_ttc.push_back(make_piece_table(proposals.ttc_inverse[idx]));
    }
  }
};

}  // namespace

WeightedSampler make_crash_sampler(const LaneChangeModel& truth,
                                   const ScenarioProposals* proposals,
                                   const AVControllerConfig& ctrl, std::uint64_t seed) {
  truth.validate();
  ctrl.validate();
  auto state = std::make_shared<CrashSamplerState>(
      truth, proposals ? *proposals : identity_proposals(truth), ctrl, seed, proposals == nullptr);

  return [state](std::uint64_t stream, std::span<double> out) {
    const std::size_t n = out.size();
    Rng rng(derive_seed(state->seed, stream));
    std::vector<double> r_inv(n), t_inv(n), v(n);
    std::vector<int> seg(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = state->truth.v_lead.sample(rng);
      seg[i] = segment_index(v[i]);
      if (seg[i] < 0)
        throw std::runtime_error("crash sampler: lead speed outside all segments");
      auto s = static_cast<std::size_t>(seg[i]);
      r_inv[i] = std::max(state->proposals.r_inverse[s].proposal().inverse_cdf(rng.u01()), 1e-12);
      t_inv[i] = state->proposals.ttc_inverse[s].proposal().inverse_cdf(rng.u01());
    }
    std::vector<double> min_range(n), min_ttc(n);
    scenario_outcomes(state->ctrl, r_inv, t_inv, v, min_range, min_ttc);

    // weights: likelihood ratio on crashes only, batched per segment
    std::fill(out.begin(), out.end(), 0.0);
    if (state->is_identity) {
      for (std::size_t i = 0; i < n; ++i) out[i] = min_range[i] <= 0.0 ? 1.0 : 0.0;
      return;
    }
    std::vector<std::size_t> hit_idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_range[i] <= 0.0) hit_idx.push_back(i);
    }
    if (hit_idx.empty()) return;
    for (int s = 0; s < kSegmentCount; ++s) {
      std::vector<double> xr, xt;
      std::vector<std::size_t> idx;
      for (std::size_t i : hit_idx) {
        if (seg[i] == s) {
          idx.push_back(i);
          xr.push_back(r_inv[i]);
          xt.push_back(t_inv[i]);
        }
      }
      if (idx.empty()) continue;
      auto su = static_cast<std::size_t>(s);
      std::vector<double> lf_r(idx.size()), lq_r(idx.size()), lf_t(idx.size()), lq_t(idx.size());
      kernels::log_pdf_batch(state->truth_r, xr, lf_r);
      kernels::log_pdf_batch(state->prop_r[su], xr, lq_r);
      kernels::log_pdf_batch(state->truth_ttc[su], xt, lf_t);
      kernels::log_pdf_batch(state->prop_ttc[su], xt, lq_t);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        double lf = lf_r[k] + lf_t[k];
        if (lf == -kInf) continue;  // outside the truth support: weight 0
        double lq = lq_r[k] + lq_t[k];
        if (lq == -kInf)
          throw std::runtime_error("crash sampler: proposal lacks support at a crash sample");
        out[idx[k]] = std::exp(lf - lq);
      }
    }
  };
}

}  // namespace accel
