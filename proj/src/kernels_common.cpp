#include "accel/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "accel/math.hpp"

namespace accel::kernels {

// ---------------------------------------------------------------------------
// ISA selection

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("ACCEL_KERNELS")) {
    std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && avx2_supported() && detail::avx2_ops().brake_loop) return Isa::avx2;
    if (v == "avx2") return Isa::scalar;  // requested but unavailable
  }
  if (avx2_supported() && detail::avx2_ops().brake_loop) return Isa::avx2;
  return Isa::scalar;
}

Isa& isa_slot() {
  static Isa isa = initial_isa();
  return isa;
}

}  // namespace

Isa active_isa() { return isa_slot(); }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && (!avx2_supported() || !detail::avx2_ops().brake_loop))
    throw std::runtime_error("force_isa: avx2 kernels unavailable on this host");
  isa_slot() = isa;
}

std::string isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

namespace detail {
const Ops& active_ops() {
  return active_isa() == Isa::avx2 ? avx2_ops() : scalar_ops();
}
#if !(defined(__x86_64__) || defined(__i386__))
const Ops& avx2_ops() {
  static Ops ops{};  // all null: never selected
  return ops;
}
#endif
}  // namespace detail

// ---------------------------------------------------------------------------
// Piece table construction (host side, shared by all variants)

PieceTable make_piece_table(std::span<const double> truncations, std::span<const double> weights,
                            std::span<const BoundedComponent> pieces) {
  if (truncations.size() != weights.size() + 1 || weights.size() != pieces.size())
    throw std::invalid_argument("make_piece_table: inconsistent sizes");
  PieceTable table;
  table.lower = truncations.front();
  table.upper = truncations.back();
  table.pieces.resize(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    PieceEntry& e = table.pieces[i];
    e.lower = truncations[i];
    e.upper = truncations[i + 1];
    double w = weights[i];
    if (w == 0.0) {
      e.kind = kPieceExp;
      e.m = 0;
      continue;
    }
    double logw = std::log(w);
    if (const auto* ex = std::get_if<BoundedExponential>(&pieces[i])) {
      e.kind = kPieceExp;
      e.m = 1;
      e.c1 = ex->rate;
      e.c0 = logw + std::log(ex->rate) + ex->rate * ex->lower - log1mexp(ex->rate * (ex->upper - ex->lower));
    } else if (const auto* no = std::get_if<BoundedNormal>(&pieces[i])) {
      e.kind = kPieceNormal;
      e.m = 1;
      double logz = log_normal_prob_between((no->lower - no->mu) / no->sigma, (no->upper - no->mu) / no->sigma);
      e.c0 = logw - std::log(no->sigma) - kLogSqrt2Pi - logz;
      e.c1 = 0.5 / (no->sigma * no->sigma);
      e.c2 = no->mu;
    } else {
      const auto& mix = std::get<BoundedNormalMixture>(pieces[i]);
      if (mix.components.size() > static_cast<std::size_t>(kMaxMixtureComponents))
        throw std::invalid_argument("make_piece_table: mixture exceeds kMaxMixtureComponents");
      e.kind = kPieceMixture;
      e.m = static_cast<int32_t>(mix.components.size());
      for (std::size_t j = 0; j < mix.components.size(); ++j) {
        const auto& c = mix.components[j];
        double logz = log_normal_prob_between((mix.lower - c.mu) / c.sigma, (mix.upper - c.mu) / c.sigma);
        e.a[j] = logw + std::log(c.weight) - std::log(c.sigma) - kLogSqrt2Pi - logz;
        e.b[j] = c.mu;
        e.s[j] = 0.5 / (c.sigma * c.sigma);
      }
    }
  }
  return table;
}

PieceTable make_piece_table(const PiecewiseMixture& d) {
  return make_piece_table(d.truncations(), d.weights(), d.pieces());
}

// ---------------------------------------------------------------------------
// Dispatch wrappers

void log_pdf_batch(const PieceTable& table, std::span<const double> x, std::span<double> out) {
  if (x.size() != out.size()) throw std::invalid_argument("log_pdf_batch: size mismatch");
  detail::active_ops().log_pdf_batch(table, x.data(), out.data(), x.size());
}

void exp_batch(std::span<const double> x, std::span<double> out) {
  if (x.size() != out.size()) throw std::invalid_argument("exp_batch: size mismatch");
  detail::active_ops().exp_batch(x.data(), out.data(), x.size());
}

void log_batch(std::span<const double> x, std::span<double> out) {
  if (x.size() != out.size()) throw std::invalid_argument("log_batch: size mismatch");
  detail::active_ops().log_batch(x.data(), out.data(), x.size());
}

// ---------------------------------------------------------------------------
// Cut-in prelude: resolve the constant-speed approach phase in closed form on
// the step grid, handing only braking-phase work to the stepped kernel.

namespace {

struct GridWalk {
  double r0, rd, dt;
  double range_at(long n) const { return r0 + (static_cast<double>(n) * dt) * rd; }
  double ttc_at(long n) const { return -range_at(n) / rd; }
};

}  // namespace

void cut_in_batch(const CutInControl& ctrl, std::span<const double> range0,
                  std::span<const double> range_rate0, std::span<const double> v_lead,
                  std::span<double> min_range, std::span<double> min_ttc,
                  std::span<double> crash_time) {
  const std::size_t n = range0.size();
  if (range_rate0.size() != n || v_lead.size() != n || min_range.size() != n ||
      min_ttc.size() != n || crash_time.size() != n)
    throw std::invalid_argument("cut_in_batch: size mismatch");
  if (!(ctrl.dt > 0.0) || !(ctrl.horizon >= ctrl.dt))
    throw std::invalid_argument("cut_in_batch: dt must be positive and horizon >= dt");

  const long nh = ctrl.horizon_steps();
  const long sentinel = nh + 8;  // "beyond the horizon"; exact value immaterial

  // Steps the trigger condition must persist before braking latches.
  long k_delay = 0;
  if (ctrl.reaction_delay > 0.0) {
    k_delay = static_cast<long>(std::ceil(ctrl.reaction_delay / ctrl.dt));
    while (k_delay > 0 && (static_cast<double>(k_delay - 1) * ctrl.dt) >= ctrl.reaction_delay) --k_delay;
    while ((static_cast<double>(k_delay) * ctrl.dt) < ctrl.reaction_delay) ++k_delay;
  }

  detail::BrakeJobs jobs;
  for (std::size_t i = 0; i < n; ++i) {
    const double r0 = range0[i], rd = range_rate0[i], vl = v_lead[i];
    if (!std::isfinite(r0) || !std::isfinite(rd) || !std::isfinite(vl) || !(r0 > 0.0))
      throw std::invalid_argument("cut_in_batch: non-finite or non-positive initial state at sample " +
                                  std::to_string(i));
    crash_time[i] = kNaN;
    if (rd >= 0.0) {
      min_range[i] = r0;
      min_ttc[i] = kInf;
      continue;
    }
    const GridWalk walk{r0, rd, ctrl.dt};

    // First observation with range <= 0 under pure coasting.
    long n_crash;
    {
      double g = r0 / (-rd * ctrl.dt);
      if (!(g < static_cast<double>(sentinel))) {
        n_crash = sentinel;
      } else {
        n_crash = std::max(1L, static_cast<long>(std::ceil(g)) - 2);
        while (walk.range_at(n_crash) > 0.0) ++n_crash;
        while (n_crash > 1 && walk.range_at(n_crash - 1) <= 0.0) --n_crash;
      }
    }

    // First observation with TTC below the braking trigger.
    long n_cond;
    if (!(ctrl.trigger_ttc > 0.0)) {
      n_cond = sentinel;
    } else if (walk.ttc_at(0) < ctrl.trigger_ttc) {
      n_cond = 0;
    } else {
      double g = (walk.ttc_at(0) - ctrl.trigger_ttc) / ctrl.dt;
      if (!(g < static_cast<double>(sentinel))) {
        n_cond = sentinel;
      } else {
        n_cond = std::max(1L, static_cast<long>(g) - 2);
        while (n_cond < sentinel && !(walk.ttc_at(n_cond) < ctrl.trigger_ttc)) ++n_cond;
        while (n_cond > 0 && walk.ttc_at(n_cond - 1) < ctrl.trigger_ttc) --n_cond;
      }
    }

    const long n_brake = n_cond >= sentinel ? sentinel : std::min(n_cond + k_delay, sentinel);

    if (n_crash <= n_brake || n_brake > nh) {
      // Never brakes (within the horizon): the whole trajectory is the coast.
      const long n_end = std::min(n_crash, nh);
      min_range[i] = walk.range_at(n_end);
      min_ttc[i] = walk.ttc_at(n_end);
      if (n_crash <= nh) crash_time[i] = static_cast<double>(n_crash) * ctrl.dt;
      continue;
    }

    jobs.range.push_back(walk.range_at(n_brake));
    jobs.range_rate.push_back(rd);
    jobs.v_follow.push_back(vl - rd);
    jobs.v_lead.push_back(vl);
    jobs.step.push_back(static_cast<double>(n_brake));
    jobs.min_range.push_back(walk.range_at(n_brake));
    jobs.min_ttc.push_back(walk.ttc_at(n_brake));
    jobs.crash_time.push_back(kNaN);
    jobs.sample.push_back(i);
  }

  if (!jobs.sample.empty()) {
    detail::active_ops().brake_loop(ctrl, jobs);
    for (std::size_t j = 0; j < jobs.sample.size(); ++j) {
      std::size_t i = jobs.sample[j];
      min_range[i] = jobs.min_range[j];
      min_ttc[i] = jobs.min_ttc[j];
      crash_time[i] = jobs.crash_time[j];
    }
  }
}

}  // namespace accel::kernels
