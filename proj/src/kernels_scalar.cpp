// Reference kernels: plain std:: math, one element at a time.  The SIMD
// variants are validated against these.
#include <cmath>
#include <complex>
#include <limits>

#include "crinis/kernels.hpp"

namespace crinis::kern {
namespace {

void eval_batch_ref(Family family, cplx param, const double* re, const double* im,
                    double* out_re, double* out_im, std::size_t n) {
  switch (family) {
    case Family::Cosh:
      for (std::size_t i = 0; i < n; ++i) {
        const cplx w = std::cosh(cplx{re[i], im[i]});
        out_re[i] = w.real();
        out_im[i] = w.imag();
      }
      break;
    case Family::CoshSq:
      for (std::size_t i = 0; i < n; ++i) {
        const cplx c = std::cosh(cplx{re[i], im[i]});
        const cplx w = c * c;
        out_re[i] = w.real();
        out_im[i] = w.imag();
      }
      break;
    case Family::Exp:
      for (std::size_t i = 0; i < n; ++i) {
        const cplx w = param * std::exp(cplx{re[i], im[i]});
        out_re[i] = w.real();
        out_im[i] = w.imag();
      }
      break;
    case Family::CoshFam:
      for (std::size_t i = 0; i < n; ++i) {
        const cplx w = param * std::cosh(cplx{re[i], im[i]});
        out_re[i] = w.real();
        out_im[i] = w.imag();
      }
      break;
  }
}

NearestHit nearest_ref(double px, double py, const PolylineSoA& poly) {
  NearestHit best;
  best.dist2 = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
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

const Impl& scalar_impl() {
  static const Impl impl{"scalar", eval_batch_ref, nearest_ref};
  return impl;
}

}  // namespace crinis::kern
