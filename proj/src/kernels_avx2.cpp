// AVX2/FMA kernels.  This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPU check (see active_impl).
//
// vexp: Cody-Waite argument reduction x = k*ln2 + r, degree-13 Taylor on
// |r| <= ln2/2, two-step exponent-bit scaling (safe into the subnormal
// range).  Valid for |x| <= 708; callers fall back to scalar otherwise.
//
// vsincos: reduction by multiples of pi/2 with a three-part representation of
// pi/2, degree-15/16 Taylor polynomials, quadrant fixup via integer masks.
// Valid for |y| <= 1e5; callers fall back to scalar otherwise.
#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>

#include "crinis/kernels.hpp"

namespace crinis::kern {
namespace {

inline __m256d vexp(__m256d x) {
  const __m256d inv_ln2 = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);

  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, inv_ln2),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
  r = _mm256_fnmadd_pd(k, ln2_lo, r);

  // Horner evaluation of sum_{i=0..13} r^i / i!.
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);          // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^k in two halves so each factor's exponent stays in range even when the
  // final result is subnormal.
  const __m128i ki = _mm256_cvtpd_epi32(k);
  const __m128i k1 = _mm_srai_epi32(ki, 1);          // k/2 rounded toward -inf
  const __m128i k2 = _mm_sub_epi32(ki, k1);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256i e1 = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(k1), bias), 52);
  const __m256i e2 = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(k2), bias), 52);
  p = _mm256_mul_pd(p, _mm256_castsi256_pd(e1));
  p = _mm256_mul_pd(p, _mm256_castsi256_pd(e2));
  return p;
}

inline void vsincos(__m256d y, __m256d* out_sin, __m256d* out_cos) {
  const __m256d two_over_pi = _mm256_set1_pd(0.63661977236758134308);
  // fdlibm-style split of pi/2.
  const __m256d pio2_1 = _mm256_set1_pd(1.57079632673412561417e+00);
  const __m256d pio2_1t = _mm256_set1_pd(6.07710050650619224932e-11);
  const __m256d pio2_2t = _mm256_set1_pd(2.02226624879595063154e-21);

  const __m256d j = _mm256_round_pd(_mm256_mul_pd(y, two_over_pi),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(j, pio2_1, y);
  r = _mm256_fnmadd_pd(j, pio2_1t, r);
  r = _mm256_fnmadd_pd(j, pio2_2t, r);

  const __m256d r2 = _mm256_mul_pd(r, r);

  // sin(r) = r * (1 + r^2 * S(r^2)), Taylor through r^15.
  __m256d s = _mm256_set1_pd(-1.0 / 1307674368000.0);      // -1/15!
  s = _mm256_fmadd_pd(s, r2, _mm256_set1_pd(1.0 / 6227020800.0));
  s = _mm256_fmadd_pd(s, r2, _mm256_set1_pd(-1.0 / 39916800.0));
  s = _mm256_fmadd_pd(s, r2, _mm256_set1_pd(1.0 / 362880.0));
  s = _mm256_fmadd_pd(s, r2, _mm256_set1_pd(-1.0 / 5040.0));
  s = _mm256_fmadd_pd(s, r2, _mm256_set1_pd(1.0 / 120.0));
  s = _mm256_fmadd_pd(s, r2, _mm256_set1_pd(-1.0 / 6.0));
  const __m256d sin_r = _mm256_fmadd_pd(_mm256_mul_pd(s, r2), r, r);

  // cos(r), Taylor through r^16.
  __m256d c = _mm256_set1_pd(1.0 / 20922789888000.0);      // 1/16!
  c = _mm256_fmadd_pd(c, r2, _mm256_set1_pd(-1.0 / 87178291200.0));
  c = _mm256_fmadd_pd(c, r2, _mm256_set1_pd(1.0 / 479001600.0));
  c = _mm256_fmadd_pd(c, r2, _mm256_set1_pd(-1.0 / 3628800.0));
  c = _mm256_fmadd_pd(c, r2, _mm256_set1_pd(1.0 / 40320.0));
  c = _mm256_fmadd_pd(c, r2, _mm256_set1_pd(-1.0 / 720.0));
  c = _mm256_fmadd_pd(c, r2, _mm256_set1_pd(1.0 / 24.0));
  c = _mm256_fmadd_pd(c, r2, _mm256_set1_pd(-0.5));
  const __m256d cos_r = _mm256_fmadd_pd(c, r2, _mm256_set1_pd(1.0));

  // Quadrant fixup.  q = j mod 4 decides swap and signs:
  //   sin(y) = swap(q&1) applied to sin_r/cos_r, negated when q&2;
  //   cos(y) likewise, negated when (q+1)&2.
  const __m128i ji = _mm256_cvtpd_epi32(j);
  const __m256i jq = _mm256_cvtepi32_epi64(ji);
  const __m256i zero = _mm256_setzero_si256();
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d swap_mask =
      _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(jq, one), one));
  const __m256d sin_neg =
      _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(jq, two), two));
  const __m256d cos_neg = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(_mm256_add_epi64(jq, one), two), two));
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  (void)zero;

  __m256d sv = _mm256_blendv_pd(sin_r, cos_r, swap_mask);
  __m256d cv = _mm256_blendv_pd(cos_r, sin_r, swap_mask);
  sv = _mm256_xor_pd(sv, _mm256_and_pd(sin_neg, sign_bit));
  cv = _mm256_xor_pd(cv, _mm256_and_pd(cos_neg, sign_bit));
  *out_sin = sv;
  *out_cos = cv;
}

constexpr double kMaxExpArg = 708.0;
constexpr double kMaxTrigArg = 1e5;

bool batch_in_range(const double* re, const double* im, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(std::fabs(re[i]) <= kMaxExpArg)) return false;
    if (!(std::fabs(im[i]) <= kMaxTrigArg)) return false;
  }
  return true;
}

void eval_batch_vec(Family family, cplx param, const double* re, const double* im,
                    double* out_re, double* out_im, std::size_t n) {
  if (!batch_in_range(re, im, n)) {
    scalar_impl().eval_batch(family, param, re, im, out_re, out_im, n);
    return;
  }
  const double pr = param.real(), pi = param.imag();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(re + i);
    const __m256d y = _mm256_loadu_pd(im + i);
    __m256d u, v;  // result before the param multiply
    if (family == Family::Exp) {
      const __m256d ex = vexp(x);
      __m256d sy, cy;
      vsincos(y, &sy, &cy);
      u = _mm256_mul_pd(ex, cy);
      v = _mm256_mul_pd(ex, sy);
    } else {
      const __m256d ex = vexp(x);
      const __m256d emx = vexp(_mm256_xor_pd(x, _mm256_set1_pd(-0.0)));
      const __m256d half = _mm256_set1_pd(0.5);
      const __m256d ch = _mm256_mul_pd(half, _mm256_add_pd(ex, emx));
      const __m256d sh = _mm256_mul_pd(half, _mm256_sub_pd(ex, emx));
      __m256d sy, cy;
      vsincos(y, &sy, &cy);
      u = _mm256_mul_pd(ch, cy);  // Re cosh(z)
      v = _mm256_mul_pd(sh, sy);  // Im cosh(z)
      if (family == Family::CoshSq) {
        const __m256d u2 = _mm256_mul_pd(u, u);
        const __m256d v2 = _mm256_mul_pd(v, v);
        const __m256d uv = _mm256_mul_pd(u, v);
        u = _mm256_sub_pd(u2, v2);
        v = _mm256_add_pd(uv, uv);
      }
    }
    if (family == Family::Exp || family == Family::CoshFam) {
      const __m256d a = _mm256_set1_pd(pr);
      const __m256d b = _mm256_set1_pd(pi);
      const __m256d wr = _mm256_fnmadd_pd(b, v, _mm256_mul_pd(a, u));
      const __m256d wi = _mm256_fmadd_pd(b, u, _mm256_mul_pd(a, v));
      u = wr;
      v = wi;
    }
    _mm256_storeu_pd(out_re + i, u);
    _mm256_storeu_pd(out_im + i, v);
  }
  if (i < n)
    scalar_impl().eval_batch(family, param, re + i, im + i, out_re + i, out_im + i, n - i);
}

NearestHit nearest_vec(double px, double py, const PolylineSoA& poly) {
  const std::size_t n = poly.size();
  NearestHit best;
  best.dist2 = std::numeric_limits<double>::infinity();
  const __m256d vpx = _mm256_set1_pd(px);
  const __m256d vpy = _mm256_set1_pd(py);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d onef = _mm256_set1_pd(1.0);

  __m256d best_d2 = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d best_idx = zero;
  __m256d best_t = zero;
  const __m256d idx_step = _mm256_set1_pd(4.0);
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ax = _mm256_loadu_pd(poly.ax.data() + i);
    const __m256d ay = _mm256_loadu_pd(poly.ay.data() + i);
    const __m256d wx = _mm256_loadu_pd(poly.wx.data() + i);
    const __m256d wy = _mm256_loadu_pd(poly.wy.data() + i);
    const __m256d il = _mm256_loadu_pd(poly.inv_len2.data() + i);
    const __m256d dx = _mm256_sub_pd(vpx, ax);
    const __m256d dy = _mm256_sub_pd(vpy, ay);
    __m256d t = _mm256_mul_pd(_mm256_fmadd_pd(dy, wy, _mm256_mul_pd(dx, wx)), il);
    t = _mm256_min_pd(_mm256_max_pd(t, zero), onef);
    const __m256d ex = _mm256_fnmadd_pd(t, wx, dx);
    const __m256d ey = _mm256_fnmadd_pd(t, wy, dy);
    const __m256d d2 = _mm256_fmadd_pd(ey, ey, _mm256_mul_pd(ex, ex));
    const __m256d lt = _mm256_cmp_pd(d2, best_d2, _CMP_LT_OQ);
    best_d2 = _mm256_blendv_pd(best_d2, d2, lt);
    best_idx = _mm256_blendv_pd(best_idx, idx, lt);
    best_t = _mm256_blendv_pd(best_t, t, lt);
    idx = _mm256_add_pd(idx, idx_step);
  }

  alignas(32) double d2s[4], idxs[4], ts[4];
  _mm256_store_pd(d2s, best_d2);
  _mm256_store_pd(idxs, best_idx);
  _mm256_store_pd(ts, best_t);
  for (int lane = 0; lane < 4; ++lane) {
    // Prefer the lowest segment index on exact distance ties so the result
    // matches the scalar first-win scan.
    if (d2s[lane] < best.dist2 ||
        (d2s[lane] == best.dist2 && static_cast<std::size_t>(idxs[lane]) < best.seg)) {
      best.dist2 = d2s[lane];
      best.seg = static_cast<std::size_t>(idxs[lane]);
      best.frac = ts[lane];
    }
  }

  for (; i < n; ++i) {
    const double dx = px - poly.ax[i];
    const double dy = py - poly.ay[i];
    double t = (dx * poly.wx[i] + dy * poly.wy[i]) * poly.inv_len2[i];
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    const double ex = dx - t * poly.wx[i];
    const double ey = dy - t * poly.wy[i];
    const double d2 = ex * ex + ey * ey;
    if (d2 < best.dist2) {
      best.dist2 = d2;
      best.seg = i;
      best.frac = t;
    }
  }
  return best;
}

}  // namespace

const Impl* avx2_impl_or_null() {
  static const Impl impl{"avx2", eval_batch_vec, nearest_vec};
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &impl;
  return nullptr;
}

}  // namespace crinis::kern
