#include "crinis/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

namespace crinis {
namespace {

const char* kPalette[] = {"#1b6ca8", "#c0392b", "#1e8449", "#8e44ad",
                          "#d68910", "#117a8b", "#a04000", "#5d6d7e"};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

struct Mapper {
  double re_lo, re_hi, im_lo, im_hi;
  double w, h;
  double px(double re) const { return (re - re_lo) / (re_hi - re_lo) * w; }
  double py(double im) const { return (im_hi - im) / (im_hi - im_lo) * h; }
};

// Iterate f k times, bailing out when the orbit leaves the numerical range.
double im_after(const MapModel& model, cplx z, int k) {
  for (int j = 0; j < k; ++j) {
    if (std::abs(z) > 1e100 || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
      return std::numeric_limits<double>::quiet_NaN();
    z = evaluate(model, z);
  }
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    return std::numeric_limits<double>::quiet_NaN();
  return z.imag();
}

// Marching squares on the zero set of Im f^k over the view box.  Emits short
// line segments; orientation within a cell follows the standard 16-case table
// with linear interpolation along edges.
void underlay_segments(const MapModel& model, const RenderOptions& opt, const Mapper& mp, int k,
                       std::ostringstream& out) {
  const int n = std::max(8, opt.grid);
  std::vector<double> vals(static_cast<std::size_t>(n + 1) * (n + 1));
  std::vector<cplx> pts;
  pts.reserve(vals.size());
  for (int iy = 0; iy <= n; ++iy)
    for (int ix = 0; ix <= n; ++ix) {
      const double re = opt.re_lo + (opt.re_hi - opt.re_lo) * ix / n;
      const double im = opt.im_lo + (opt.im_hi - opt.im_lo) * iy / n;
      pts.emplace_back(re, im);
    }
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = im_after(model, pts[i], k);

  auto v_at = [&](int ix, int iy) { return vals[static_cast<std::size_t>(iy) * (n + 1) + ix]; };
  auto p_at = [&](int ix, int iy) { return pts[static_cast<std::size_t>(iy) * (n + 1) + ix]; };

  auto edge_point = [&](cplx a, cplx b, double va, double vb) -> cplx {
    const double t = va / (va - vb);
    return a + (b - a) * std::min(1.0, std::max(0.0, t));
  };

  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double v00 = v_at(ix, iy), v10 = v_at(ix + 1, iy);
      const double v01 = v_at(ix, iy + 1), v11 = v_at(ix + 1, iy + 1);
      if (!std::isfinite(v00) || !std::isfinite(v10) || !std::isfinite(v01) ||
          !std::isfinite(v11))
        continue;
      const cplx p00 = p_at(ix, iy), p10 = p_at(ix + 1, iy);
      const cplx p01 = p_at(ix, iy + 1), p11 = p_at(ix + 1, iy + 1);
      // Collect zero crossings on the four cell edges.
      cplx xs[4];
      int m = 0;
      if ((v00 < 0) != (v10 < 0)) xs[m++] = edge_point(p00, p10, v00, v10);
      if ((v10 < 0) != (v11 < 0)) xs[m++] = edge_point(p10, p11, v10, v11);
      if ((v11 < 0) != (v01 < 0)) xs[m++] = edge_point(p11, p01, v11, v01);
      if ((v01 < 0) != (v00 < 0)) xs[m++] = edge_point(p01, p00, v01, v00);
      for (int j = 0; j + 1 < m; j += 2) {
        out << "<line x1=\"" << fmt(mp.px(xs[j].real())) << "\" y1=\""
            << fmt(mp.py(xs[j].imag())) << "\" x2=\"" << fmt(mp.px(xs[j + 1].real()))
            << "\" y2=\"" << fmt(mp.py(xs[j + 1].imag())) << "\"/>\n";
      }
    }
}

}  // namespace

std::string render_svg(const MapModel& model, const std::vector<TailCurve>& curves,
                       const RenderOptions& opt) {
  if (!(opt.re_hi > opt.re_lo) || !(opt.im_hi > opt.im_lo) || opt.width_px < 16)
    throw Error(ErrorCode::BadConfig, "degenerate view box");
  Mapper mp;
  mp.re_lo = opt.re_lo;
  mp.re_hi = opt.re_hi;
  mp.im_lo = opt.im_lo;
  mp.im_hi = opt.im_hi;
  mp.w = opt.width_px;
  mp.h = opt.width_px * (opt.im_hi - opt.im_lo) / (opt.re_hi - opt.re_lo);

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << opt.width_px
      << "\" height=\"" << fmt(mp.h) << "\" viewBox=\"0 0 " << opt.width_px << ' ' << fmt(mp.h)
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  if (opt.grey_depth > 0) {
    out << "<g stroke=\"#cccccc\" stroke-width=\"0.6\">\n";
    for (int k = 1; k <= opt.grey_depth; ++k) underlay_segments(model, opt, mp, k, out);
    out << "</g>\n";
  }

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const TailCurve& c = curves[ci];
    const char* color = kPalette[ci % (sizeof kPalette / sizeof kPalette[0])];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.4\" points=\"";
    bool first = true;
    for (const TimedPoint& q : c.points) {
      if (!std::isfinite(q.z.real()) || !std::isfinite(q.z.imag())) continue;
      // Clamp far-out vertices into a slightly padded box so the path stays
      // well-formed without distorting the visible window.
      const double pad = 0.2 * (opt.re_hi - opt.re_lo);
      const double re = std::min(opt.re_hi + pad, std::max(opt.re_lo - pad, q.z.real()));
      const double im = std::min(opt.im_hi + pad, std::max(opt.im_lo - pad, q.z.imag()));
      if (!first) out << ' ';
      out << fmt(mp.px(re)) << ',' << fmt(mp.py(im));
      first = false;
    }
    out << "\"/>\n";
    for (const CriticalMarker& m : c.markers) {
      out << "<circle cx=\"" << fmt(mp.px(m.point.real())) << "\" cy=\""
          << fmt(mp.py(m.point.imag())) << "\" r=\"3\" fill=\"" << color
          << "\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n";
    }
  }

  if (opt.show_critical_points) {
    const Box box{opt.re_lo, opt.re_hi, opt.im_lo, opt.im_hi};
    for (const cplx& c : critical_points_in(model, box)) {
      out << "<circle cx=\"" << fmt(mp.px(c.real())) << "\" cy=\"" << fmt(mp.py(c.imag()))
          << "\" r=\"2.2\" fill=\"#000000\"/>\n";
    }
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace crinis
