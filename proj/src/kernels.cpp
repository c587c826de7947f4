// Kernel dispatch and structure-of-arrays helpers.
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "crinis/kernels.hpp"

namespace crinis::kern {

PolylineSoA build_polyline(const std::vector<cplx>& pts) {
  PolylineSoA poly;
  if (pts.size() < 2) {
    // Degenerate: represent a single point (or nothing) as one zero-length
    // segment so queries still return something sensible.
    if (!pts.empty()) {
      poly.ax = {pts[0].real()};
      poly.ay = {pts[0].imag()};
      poly.wx = {0.0};
      poly.wy = {0.0};
      poly.inv_len2 = {0.0};
    }
    return poly;
  }
  const std::size_t n = pts.size() - 1;
  poly.ax.resize(n);
  poly.ay.resize(n);
  poly.wx.resize(n);
  poly.wy.resize(n);
  poly.inv_len2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = pts[i].real(), ay = pts[i].imag();
    const double wx = pts[i + 1].real() - ax, wy = pts[i + 1].imag() - ay;
    const double len2 = wx * wx + wy * wy;
    poly.ax[i] = ax;
    poly.ay[i] = ay;
    poly.wx[i] = wx;
    poly.wy[i] = wy;
    poly.inv_len2[i] = len2 > 0.0 ? 1.0 / len2 : 0.0;
  }
  return poly;
}

const Impl& active_impl() {
  static const Impl* chosen = [] {
    const char* env = std::getenv("CRINIS_KERNEL");
    const Impl* vec = avx2_impl_or_null();
    if (env != nullptr) {
      if (std::strcmp(env, "scalar") == 0) return &scalar_impl();
      if (std::strcmp(env, "avx2") == 0 && vec != nullptr) return vec;
      // Unknown or unavailable request: fall through to autodetect.
    }
    return vec != nullptr ? vec : &scalar_impl();
  }();
  return *chosen;
}

const char* active_kernel_name() { return active_impl().name; }

#if !defined(CRINIS_HAVE_AVX2_TU)
const Impl* avx2_impl_or_null() { return nullptr; }
#endif

void eval_batch(const MapModel& model, const std::vector<cplx>& z, std::vector<cplx>& out) {
  const std::size_t n = z.size();
  out.resize(n);
  if (n == 0) return;
  std::vector<double> re(n), im(n), ore(n), oim(n);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = z[i].real();
    im[i] = z[i].imag();
  }
  active_impl().eval_batch(model.family, model.param, re.data(), im.data(), ore.data(),
                           oim.data(), n);
  for (std::size_t i = 0; i < n; ++i) out[i] = cplx{ore[i], oim[i]};
}

NearestHit nearest_point(const PolylineSoA& poly, cplx p) {
  return active_impl().nearest(p.real(), p.imag(), poly);
}

double nearest_dist(const PolylineSoA& poly, cplx p) {
  return std::sqrt(nearest_point(poly, p).dist2);
}

}  // namespace crinis::kern
