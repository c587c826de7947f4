// Deterministic SVG 1.1 rendering of traced curves: rays colored per signed
// address, optional grey underlay of iterated preimages of the real axis
// (marching squares on |Im f^k| sign changes), critical points as dots.
#pragma once

#include <string>
#include <vector>

#include "crinis/map_model.hpp"
#include "crinis/trace.hpp"

namespace crinis {

struct RenderOptions {
  double re_lo = -4.0, re_hi = 4.0, im_lo = -4.0, im_hi = 4.0;  // view box
  int width_px = 800;
  int grey_depth = 0;   // 0 disables the preimage underlay; k draws f^-j(R), j<=k
  int grid = 400;       // marching-squares grid resolution per axis
  bool show_critical_points = true;
};

// Curves are drawn in input order with a deterministic palette.
std::string render_svg(const MapModel& model, const std::vector<TailCurve>& curves,
                       const RenderOptions& opt);

}  // namespace crinis
