// Numeric kernels in scalar and SIMD variants, selected at runtime.  The
// scalar implementation is the reference (plain std:: math); vectorized
// variants must agree with it to tight relative tolerance and are chosen by
// CPU detection, overridable with the CRINIS_KERNEL environment variable
// ("scalar" or "avx2").
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "crinis/map_model.hpp"

namespace crinis::kern {

// Structure-of-arrays segment table for nearest-distance queries against a
// polyline.  Built once, queried many times.
struct PolylineSoA {
  std::vector<double> ax, ay;          // segment start
  std::vector<double> wx, wy;          // segment delta (end - start)
  std::vector<double> inv_len2;        // 1 / |delta|^2 (0 for degenerate)
  std::size_t size() const { return ax.size(); }
};

PolylineSoA build_polyline(const std::vector<cplx>& pts);

struct NearestHit {
  double dist2 = 0.0;   // squared distance to the closest segment point
  std::size_t seg = 0;  // index of that segment
  double frac = 0.0;    // clamped parameter along it in [0, 1]
};

struct Impl {
  const char* name;
  // out[i] = f(z[i]) for the family/param, writing re/im planes.
  void (*eval_batch)(Family family, cplx param, const double* re, const double* im,
                     double* out_re, double* out_im, std::size_t n);
  // Closest point of the polyline to (px, py).

  NearestHit (*nearest)(double px, double py, const PolylineSoA& poly);
};

const Impl& scalar_impl();
// The vectorized implementation, or nullptr when this build/CPU lacks it.
const Impl* avx2_impl_or_null();
// Returns the implementation chosen for this process (stable after first call).
const Impl& active_impl();
const char* active_kernel_name();

// Convenience wrappers over the active implementation.
void eval_batch(const MapModel& model, const std::vector<cplx>& z, std::vector<cplx>& out);
NearestHit nearest_point(const PolylineSoA& poly, cplx p);
double nearest_dist(const PolylineSoA& poly, cplx p);

}  // namespace crinis::kern
