// Scalar reference kernels. These define the semantics the SIMD variants are
// equivalence-tested against. Compiled with fp-contraction off so the braking
// loop performs the same rounding sequence as the vector variant.

#include <cmath>

#include "accel/kernels.hpp"
#include "accel/math.hpp"

namespace accel::kernels::detail {

namespace {

void brake_loop_scalar(const CutInControl& ctrl, BrakeJobs& jobs) {
  const double dt = ctrl.dt;
  const double decel = ctrl.max_decel;
  const double nh = static_cast<double>(ctrl.horizon_steps());
  for (std::size_t j = 0; j < jobs.sample.size(); ++j) {
    double r = jobs.range[j];
    double rd = jobs.range_rate[j];
    double vf = jobs.v_follow[j];
    const double vl = jobs.v_lead[j];
    double n = jobs.step[j];
    double min_r = jobs.min_range[j];
    double min_t = jobs.min_ttc[j];
    double crash = kNaN;
    while (n < nh) {
      r = r + dt * rd;
      vf = vf - dt * decel;
      if (vf < 0.0) vf = 0.0;
      rd = vl - vf;
      n = n + 1.0;
      if (r < min_r) min_r = r;
      double ttc = rd < 0.0 ? (-r) / rd : kInf;
      if (ttc < min_t) min_t = ttc;
      if (r <= 0.0) {
        crash = n * dt;
        break;
      }
      if (rd >= 0.0) break;
    }
    jobs.min_range[j] = min_r;
    jobs.min_ttc[j] = min_t;
    jobs.crash_time[j] = crash;
  }
}

double eval_piece(const PieceEntry& e, double x) {
  if (e.m == 0) return -kInf;
  switch (e.kind) {
    case kPieceExp:
      return e.c0 - e.c1 * x;
    case kPieceNormal: {
      double d = x - e.c2;
      return e.c0 - d * d * e.c1;
    }
    default: {
      double t[kMaxMixtureComponents];
      double hi = -kInf;
      for (int j = 0; j < e.m; ++j) {
        double d = x - e.b[j];
        t[j] = e.a[j] - d * d * e.s[j];
        if (t[j] > hi) hi = t[j];
      }
      double sum = 0.0;
      for (int j = 0; j < e.m; ++j) sum += std::exp(t[j] - hi);
      return hi + std::log(sum);
    }
  }
}

void log_pdf_scalar(const PieceTable& table, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = -kInf;
    for (const PieceEntry& e : table.pieces) {
      if (x[i] >= e.lower && x[i] < e.upper) {
        v = eval_piece(e, x[i]);
        break;
      }
    }
    out[i] = v;
  }
}

void exp_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void log_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(x[i]);
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{&brake_loop_scalar, &log_pdf_scalar, &exp_scalar, &log_scalar};
  return ops;
}

}  // namespace accel::kernels::detail
