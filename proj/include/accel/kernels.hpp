#pragma once

// Batch kernels behind the Monte Carlo hot paths: piecewise log-density
// evaluation, elementwise exp/log, and the cut-in braking simulation.
//
// Each kernel has a scalar reference implementation and an AVX2 variant
// selected at runtime (override with ACCEL_KERNELS=scalar|avx2 or
// force_isa()). The cut-in kernel is bit-identical across variants; the
// transcendental kernels agree to a few ulp and are equivalence-tested.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "accel/distributions.hpp"

namespace accel::kernels {

enum class Isa { scalar, avx2 };

bool avx2_supported();
Isa active_isa();
void force_isa(Isa isa);
std::string isa_name(Isa isa);

// ---------------------------------------------------------------------------
// Flattened piecewise-mixture table
//
// Per piece the log-density is one of
//   exponential:  c0 - c1 * x
//   normal:       c0 - (x - c2)^2 * c1
//   mixture:      logsumexp_j( a[j] - (x - b[j])^2 * s[j] )
// with the piece's log-weight and log-normalizer folded into the constants.

inline constexpr int kMaxMixtureComponents = 4;

enum PieceKindTag : int32_t { kPieceExp = 0, kPieceNormal = 1, kPieceMixture = 2 };

struct PieceEntry {
  double lower = 0.0;
  double upper = 0.0;
  int32_t kind = kPieceExp;
  int32_t m = 0;  // mixture component count; 0 marks a zero-weight piece
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double a[kMaxMixtureComponents] = {};
  double b[kMaxMixtureComponents] = {};
  double s[kMaxMixtureComponents] = {};
};

struct PieceTable {
  std::vector<PieceEntry> pieces;
  double lower = 0.0;
  double upper = 0.0;
};

/// Flatten (truncations, weights, components) into evaluation form. Mixture
/// pieces must have at most kMaxMixtureComponents components.
PieceTable make_piece_table(std::span<const double> truncations, std::span<const double> weights,
                            std::span<const BoundedComponent> pieces);
PieceTable make_piece_table(const PiecewiseMixture& d);

/// out[i] = log pdf(x[i]); -inf outside the support or on zero-weight pieces.
void log_pdf_batch(const PieceTable& table, std::span<const double> x, std::span<double> out);

void exp_batch(std::span<const double> x, std::span<double> out);
void log_batch(std::span<const double> x, std::span<double> out);

// ---------------------------------------------------------------------------
// Cut-in longitudinal simulation
//
// Lead vehicle holds speed; the follower brakes at max_decel once TTC has
// stayed below trigger_ttc for reaction_delay seconds, with speed floored at
// zero. Forward-Euler on the fixed dt grid. The constant-speed approach phase
// is evaluated in closed form on the same grid; the braking phase is stepped.

struct CutInControl {
  double dt = 0.01;
  double horizon = 10.0;
  double trigger_ttc = 3.0;
  double reaction_delay = 0.5;
  double max_decel = 4.0;

  long horizon_steps() const { return std::lround(horizon / dt); }
};

/// min_range/min_ttc over the stepped trajectory; crash_time is the first
/// grid time with range <= 0, or NaN when no crash occurs.
void cut_in_batch(const CutInControl& ctrl, std::span<const double> range0,
                  std::span<const double> range_rate0, std::span<const double> v_lead,
                  std::span<double> min_range, std::span<double> min_ttc,
                  std::span<double> crash_time);

// Internal kernel-variant table; exposed for the dispatcher and tests.
namespace detail {

struct BrakeJobs {
  // SoA state for samples that reached the braking phase.
  std::vector<double> range, range_rate, v_follow, v_lead, step;  // step: observation index
  std::vector<double> min_range, min_ttc, crash_time;             // outputs, indexed like inputs
  std::vector<std::size_t> sample;                                // original sample index
};

struct Ops {
  void (*brake_loop)(const CutInControl&, BrakeJobs&) = nullptr;
  void (*log_pdf_batch)(const PieceTable&, const double*, double*, std::size_t) = nullptr;
  void (*exp_batch)(const double*, double*, std::size_t) = nullptr;
  void (*log_batch)(const double*, double*, std::size_t) = nullptr;
};

const Ops& scalar_ops();
const Ops& avx2_ops();  // null pointers when not compiled in
const Ops& active_ops();

}  // namespace detail

}  // namespace accel::kernels
