// AVX2 kernel variants. The braking loop mirrors the scalar kernel operation
// for operation (mul+add, no FMA) so results are bit-identical per lane; the
// transcendental kernels use in-house polynomial exp/log and are tested to a
// few ulp against the scalar reference.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "accel/kernels.hpp"
#include "accel/math.hpp"

namespace accel::kernels::detail {

namespace {

inline __m256d vset(double v) { return _mm256_set1_pd(v); }

// 2^k for integer-valued k in [-1022, 1023], by exponent injection.
inline __m256d pow2_int(__m256d k) {
  __m128i ki = _mm256_cvtpd_epi32(k);
  __m256i k64 = _mm256_cvtepi32_epi64(ki);
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_castsi256_pd(bits);
}

// exp(x) for 4 doubles; correct overflow/underflow/NaN behavior.
inline __m256d vexp(__m256d x) {
  const __m256d in = x;
  x = _mm256_max_pd(_mm256_min_pd(x, vset(710.0)), vset(-746.0));
  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, vset(1.4426950408889634074)),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, vset(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, vset(1.90821492927058770002e-10), r);
  // Taylor polynomial for e^r on |r| <= ln2/2.
  __m256d p = vset(1.0 / 6227020800.0);  // 1/13!
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, vset(0.5));
  p = _mm256_fmadd_pd(p, r, vset(1.0));
  p = _mm256_fmadd_pd(p, r, vset(1.0));
  // Scale by 2^n in two halves so the exponent stays in range.
  __m256d n1 = _mm256_round_pd(_mm256_mul_pd(n, vset(0.5)), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d n2 = _mm256_sub_pd(n, n1);
  p = _mm256_mul_pd(_mm256_mul_pd(p, pow2_int(n1)), pow2_int(n2));
  p = _mm256_blendv_pd(p, _mm256_setzero_pd(), _mm256_cmp_pd(in, vset(-745.14), _CMP_LT_OQ));
  p = _mm256_blendv_pd(p, vset(kInf), _mm256_cmp_pd(in, vset(709.782712893384), _CMP_GT_OQ));
  p = _mm256_blendv_pd(p, in, _mm256_cmp_pd(in, in, _CMP_UNORD_Q));
  return p;
}

// log(x) for 4 doubles; -inf at 0, NaN below 0, inf at inf.
inline __m256d vlog(__m256d x) {
  const __m256d in = x;
  // Bring denormals into the normal range.
  __m256d denorm = _mm256_and_pd(_mm256_cmp_pd(x, vset(2.2250738585072014e-308), _CMP_LT_OQ),
                                 _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GT_OQ));
  x = _mm256_blendv_pd(x, _mm256_mul_pd(x, vset(0x1.0p54)), denorm);
  __m256i bits = _mm256_castpd_si256(x);
  __m256i ebits = _mm256_srli_epi64(bits, 52);
  __m128i e32 = _mm256_castsi256_si128(
      _mm256_permutevar8x32_epi32(ebits, _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0)));
  __m256d e = _mm256_cvtepi32_pd(e32);
  e = _mm256_sub_pd(e, vset(1023.0));
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
      _mm256_set1_epi64x(0x3FF0000000000000LL)));
  __m256d big = _mm256_cmp_pd(m, vset(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, vset(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, vset(1.0)));
  e = _mm256_sub_pd(e, _mm256_and_pd(denorm, vset(54.0)));
  __m256d t = _mm256_div_pd(_mm256_sub_pd(m, vset(1.0)), _mm256_add_pd(m, vset(1.0)));
  __m256d t2 = _mm256_mul_pd(t, t);
  // 2*atanh(t) odd series through t^19.
  __m256d p = vset(2.0 / 19.0);
  p = _mm256_fmadd_pd(p, t2, vset(2.0 / 17.0));
  p = _mm256_fmadd_pd(p, t2, vset(2.0 / 15.0));
  p = _mm256_fmadd_pd(p, t2, vset(2.0 / 13.0));
  p = _mm256_fmadd_pd(p, t2, vset(2.0 / 11.0));
  p = _mm256_fmadd_pd(p, t2, vset(2.0 / 9.0));
  p = _mm256_fmadd_pd(p, t2, vset(2.0 / 7.0));
  p = _mm256_fmadd_pd(p, t2, vset(2.0 / 5.0));
  p = _mm256_fmadd_pd(p, t2, vset(2.0 / 3.0));
  p = _mm256_fmadd_pd(p, t2, vset(2.0));
  __m256d logm = _mm256_mul_pd(t, p);
  __m256d res = _mm256_fmadd_pd(e, vset(1.90821492927058770002e-10), logm);
  res = _mm256_fmadd_pd(e, vset(6.93147180369123816490e-01), res);
  res = _mm256_blendv_pd(res, vset(-kInf), _mm256_cmp_pd(in, _mm256_setzero_pd(), _CMP_EQ_OQ));
  res = _mm256_blendv_pd(res, vset(kNaN), _mm256_cmp_pd(in, _mm256_setzero_pd(), _CMP_LT_OQ));
  res = _mm256_blendv_pd(res, vset(kInf), _mm256_cmp_pd(in, vset(kInf), _CMP_EQ_OQ));
  res = _mm256_blendv_pd(res, in, _mm256_cmp_pd(in, in, _CMP_UNORD_Q));
  return res;
}

// ---------------------------------------------------------------------------
// Braking-phase loop: four jobs per lane group, masked updates, identical
// operation sequence to the scalar kernel.

void run_brake_group(const CutInControl& ctrl, double* r_p, double* rd_p, double* vf_p,
                     const double* vl_p, double* n_p, double* minr_p, double* mint_p,
                     double* crash_p) {
  const __m256d dt = vset(ctrl.dt);
  const __m256d dt_decel = vset(ctrl.dt * ctrl.max_decel);
  const __m256d nh = vset(static_cast<double>(ctrl.horizon_steps()));
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = vset(1.0);
  const __m256d inf = vset(kInf);
  const __m256d signmask = vset(-0.0);

  __m256d r = _mm256_loadu_pd(r_p);
  __m256d rd = _mm256_loadu_pd(rd_p);
  __m256d vf = _mm256_loadu_pd(vf_p);
  __m256d vl = _mm256_loadu_pd(vl_p);
  __m256d n = _mm256_loadu_pd(n_p);
  __m256d minr = _mm256_loadu_pd(minr_p);
  __m256d mint = _mm256_loadu_pd(mint_p);
  __m256d crash = _mm256_loadu_pd(crash_p);
  __m256d done = zero;  // all-false

  for (;;) {
    __m256d active = _mm256_andnot_pd(done, _mm256_cmp_pd(n, nh, _CMP_LT_OQ));
    if (_mm256_movemask_pd(active) == 0) break;

    // integrate one step (scalar: r += dt*rd; vf = max0(vf - dt*decel); rd = vl - vf; n += 1)
    __m256d rn = _mm256_add_pd(r, _mm256_mul_pd(dt, rd));
    __m256d vfn = _mm256_sub_pd(vf, dt_decel);
    vfn = _mm256_blendv_pd(vfn, zero, _mm256_cmp_pd(vfn, zero, _CMP_LT_OQ));
    __m256d rdn = _mm256_sub_pd(vl, vfn);
    __m256d nn = _mm256_add_pd(n, one);
    r = _mm256_blendv_pd(r, rn, active);
    vf = _mm256_blendv_pd(vf, vfn, active);
    rd = _mm256_blendv_pd(rd, rdn, active);
    n = _mm256_blendv_pd(n, nn, active);

    // observe
    __m256d lower = _mm256_and_pd(active, _mm256_cmp_pd(r, minr, _CMP_LT_OQ));
    minr = _mm256_blendv_pd(minr, r, lower);
    __m256d closing = _mm256_cmp_pd(rd, zero, _CMP_LT_OQ);
    __m256d ttc = _mm256_div_pd(_mm256_xor_pd(r, signmask), rd);
    ttc = _mm256_blendv_pd(inf, ttc, closing);
    __m256d tlower = _mm256_and_pd(active, _mm256_cmp_pd(ttc, mint, _CMP_LT_OQ));
    mint = _mm256_blendv_pd(mint, ttc, tlower);
    __m256d crashed = _mm256_and_pd(active, _mm256_cmp_pd(r, zero, _CMP_LE_OQ));
    crash = _mm256_blendv_pd(crash, _mm256_mul_pd(n, dt), crashed);
    done = _mm256_or_pd(done, crashed);
    done = _mm256_or_pd(done, _mm256_and_pd(active, _mm256_cmp_pd(rd, zero, _CMP_GE_OQ)));
  }

  _mm256_storeu_pd(minr_p, minr);
  _mm256_storeu_pd(mint_p, mint);
  _mm256_storeu_pd(crash_p, crash);
}

void brake_loop_avx2(const CutInControl& ctrl, BrakeJobs& jobs) {
  const std::size_t n = jobs.sample.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    run_brake_group(ctrl, &jobs.range[i], &jobs.range_rate[i], &jobs.v_follow[i], &jobs.v_lead[i],
                    &jobs.step[i], &jobs.min_range[i], &jobs.min_ttc[i], &jobs.crash_time[i]);
  }
  if (i < n) {
    // Pad the tail with inert lanes (already past the horizon).
    const double nh = static_cast<double>(ctrl.horizon_steps());
    double r[4], rd[4], vf[4], vl[4], st[4], minr[4], mint[4], crash[4];
    for (std::size_t k = 0; k < 4; ++k) {
      std::size_t j = i + k < n ? i + k : n - 1;
      bool real = i + k < n;
      r[k] = jobs.range[j];
      rd[k] = jobs.range_rate[j];
      vf[k] = jobs.v_follow[j];
      vl[k] = jobs.v_lead[j];
      st[k] = real ? jobs.step[j] : nh;
      minr[k] = jobs.min_range[j];
      mint[k] = jobs.min_ttc[j];
      crash[k] = jobs.crash_time[j];
    }
    run_brake_group(ctrl, r, rd, vf, vl, st, minr, mint, crash);
    for (std::size_t k = 0; i + k < n; ++k) {
      jobs.min_range[i + k] = minr[k];
      jobs.min_ttc[i + k] = mint[k];
      jobs.crash_time[i + k] = crash[k];
    }
  }
}

// ---------------------------------------------------------------------------
// Piecewise log-density

void log_pdf_avx2(const PieceTable& table, const double* x, double* out, std::size_t count) {
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d acc = vset(-kInf);
    for (const PieceEntry& e : table.pieces) {
      if (e.m == 0) continue;
      __m256d inside = _mm256_and_pd(_mm256_cmp_pd(xv, vset(e.lower), _CMP_GE_OQ),
                                     _mm256_cmp_pd(xv, vset(e.upper), _CMP_LT_OQ));
      if (_mm256_movemask_pd(inside) == 0) continue;
      __m256d val;
      if (e.kind == kPieceExp) {
        val = _mm256_sub_pd(vset(e.c0), _mm256_mul_pd(vset(e.c1), xv));
      } else if (e.kind == kPieceNormal) {
        __m256d d = _mm256_sub_pd(xv, vset(e.c2));
        val = _mm256_sub_pd(vset(e.c0), _mm256_mul_pd(_mm256_mul_pd(d, d), vset(e.c1)));
      } else {
        __m256d t[kMaxMixtureComponents];
        __m256d hi = vset(-kInf);
        for (int j = 0; j < e.m; ++j) {
          __m256d d = _mm256_sub_pd(xv, vset(e.b[j]));
          t[j] = _mm256_sub_pd(vset(e.a[j]), _mm256_mul_pd(_mm256_mul_pd(d, d), vset(e.s[j])));
          hi = _mm256_max_pd(hi, t[j]);
        }
        __m256d sum = _mm256_setzero_pd();
        for (int j = 0; j < e.m; ++j) sum = _mm256_add_pd(sum, vexp(_mm256_sub_pd(t[j], hi)));
        val = _mm256_add_pd(hi, vlog(sum));
      }
      acc = _mm256_blendv_pd(acc, val, inside);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  if (i < count) scalar_ops().log_pdf_batch(table, x + i, out + i, count - i);
}

void exp_batch_avx2(const double* x, double* out, std::size_t count) {
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) _mm256_storeu_pd(out + i, vexp(_mm256_loadu_pd(x + i)));
  if (i < count) scalar_ops().exp_batch(x + i, out + i, count - i);
}

void log_batch_avx2(const double* x, double* out, std::size_t count) {
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) _mm256_storeu_pd(out + i, vlog(_mm256_loadu_pd(x + i)));
  if (i < count) scalar_ops().log_batch(x + i, out + i, count - i);
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops{&brake_loop_avx2, &log_pdf_avx2, &exp_batch_avx2, &log_batch_avx2};
  return ops;
}

}  // namespace accel::kernels::detail

#endif  // x86
