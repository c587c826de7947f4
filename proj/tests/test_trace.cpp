#include <cmath>
#include <complex>
#include <vector>

#include "crinis/kernels.hpp"
#include "crinis/trace.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crinis;

namespace {

std::vector<cplx> vertices(const TailCurve& c) {
  std::vector<cplx> out;
  out.reserve(c.points.size());
  for (const TimedPoint& p : c.points) out.push_back(p.z);
  return out;
}

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("parameter validation") {
  TraceParams ok;
  CHECK_NOTHROW(validate(ok));
  TraceParams bad = ok;
  bad.step = -0.05;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = ok;
  bad.depth = -1;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = ok;
  bad.crit_tol = 5.0 * bad.newton_tol;  // certificate needs >= 10x separation
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("the real ray is traced exactly on the real axis") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const TailCurve c = trace_level0(m, cfg, parse_address("| 0R"), p);
  REQUIRE(c.points.size() > 100);
  CHECK(c.level == 0);
  CHECK(c.signed_addr.sign == SignBit::Plus);
  CHECK(same_address(c.signed_addr.addr, parse_address("| 0R")));
  for (const TimedPoint& tp : c.points) {
    CHECK(tp.z.imag() == 0.0);  // conjugation symmetry forces exact reality
    CHECK(tp.z.real() > 0.0);
  }
  // The potential parameter decreases strictly from the far end inward.
  for (std::size_t i = 1; i < c.points.size(); ++i)
    CHECK(c.points[i].t < c.points[i - 1].t);
  CHECK(c.points.front().z.real() > p.window_far * 0.99);
  const double e = c.points.back().z.real();
  CHECK(e > 1.0);
  CHECK(e < cfg.disk_radius);
}

TEST_CASE("traced rays land on their periodic points") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const TailCurve c = trace_level0(m, cfg, parse_address("| 1R"), p);
  // Far end: the strip asymptote of the 1R 1R ... itinerary sits at height
  // 2*pi (plus an exponentially small offset at Re = 25).
  CHECK(c.points.front().z.imag() == doctest::Approx(2 * M_PI).epsilon(1e-9));
  // Finite end: the ray of a period-one address lands on a repelling fixed
  // point.  Independently computed root of cosh(z) = z in strip 1R:
  const cplx fix(2.775438474165445, 7.502164620486806);
  CHECK(std::abs(evaluate(m, fix) - fix) < 1e-12);  // really is a fixed point
  CHECK(std::abs(c.points.back().z - fix) < 1e-6);
}

TEST_CASE("tracing respects the conjugation symmetry of the family") {
  // conj(f(z)) = f(conj(z)) for cosh, so the trace of the reflected address
  // must be the exact reflection of the trace.  The strip labels reflect as
  // kR -> -kR and kL -> -(k+1)L.
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  for (const char* text : {"| 1R", "| 1L", "0R 1R | 0R"}) {
    const ExternalAddress a = parse_address(text);
    const ExternalAddress ac = oracles::conj_address(a);
    const TailCurve c = trace_level0(m, cfg, a, p);
    const TailCurve cc = trace_level0(m, cfg, ac, p);
    REQUIRE(c.points.size() == cc.points.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < c.points.size(); ++i)
      worst = std::max(worst,
                       std::abs(std::conj(c.points[i].z) - cc.points[i].z));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("shallow refinement fails the certificate honestly") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  TraceParams p;
  p.depth = 2;
  CHECK_THROWS_WITH_AS(
      (void)trace_level0(m, cfg, parse_address("| 1R"), p),
      doctest::Contains("certificate"), Error);
}

TEST_CASE("pullback inverts the map vertex-for-vertex") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const TailCurve parent = trace_level0(m, cfg, parse_address("| 1R"), p);
  const SignedAddress target{parse_address("0R | 1R"), SignBit::Plus};
  const TailCurve child = pull_back_tail(m, cfg, parent, target, p);
  CHECK(child.level == 1);
  CHECK(same_signed_address(child.signed_addr, target));
  // The pulled portion maps vertex-for-vertex onto a prefix of the parent
  // (the child stops at its own finite end, which may precede the parent's).
  REQUIRE(child.points.size() > child.first_pulled);
  const std::size_t pulled = child.points.size() - child.first_pulled;
  REQUIRE(pulled <= parent.points.size());
  REQUIRE(pulled > parent.points.size() / 2);
  for (std::size_t j = 0; j < pulled; ++j) {
    const cplx fz = evaluate(m, child.points[child.first_pulled + j].z);
    const cplx want = parent.points[j].z;
    CHECK(std::abs(fz - want) <= 1e-8 * std::max(1.0, std::abs(want)));
  }
  // The re-extended far part lies in the target's strip, above the parent's
  // far window.
  for (std::size_t j = 0; j < child.first_pulled; ++j)
    CHECK(std::abs(evaluate(m, child.points[j].z)) >=
          std::abs(parent.points.front().z) * 0.99);
}

TEST_CASE("canonical tail towers nest") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const SignedAddress tgt = parse_signed_address("| 0R +");
  const TailCurve g3 = gamma_curve(m, cfg, tgt, 3, p);
  const TailCurve g4 = gamma_curve(m, cfg, tgt, 4, p);
  REQUIRE(g4.points.size() > g3.points.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < g3.points.size(); ++i)
    worst = std::max(worst, std::abs(g3.points[i].z - g4.points[i].z));
  CHECK(worst <= 1e-8);
}

TEST_CASE("critical markers appear at the expected depths") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const SignedAddress tgt = parse_signed_address("| 0R +");

  // Levels 1-2 pull the tail down but never cross a critical point...
  CHECK(gamma_curve(m, cfg, tgt, 2, p).markers.empty());
  // ...the third pullback passes the critical value 1, splitting at 0.
  const TailCurve g3 = gamma_curve(m, cfg, tgt, 3, p);
  REQUIRE(g3.markers.size() == 1);
  CHECK(std::abs(g3.markers[0].point) < 1e-9);
  CHECK(g3.markers[0].local_deg == 2);
  // Level 6: the fork at 0 plus three inherited corners on its backward
  // orbit.  Golden values from an independent run of the refinement scheme.
  const TailCurve g6 = gamma_curve(m, cfg, tgt, 6, p);
  REQUIRE(g6.markers.size() == 4);
  const cplx want[] = {{0.0, 0.0},
                       {0.0, 1.5707963267948966},
                       {1.2334031175711297, 1.5707963267948966},
                       {1.4044174078625672, 0.9628321157374905}};
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(g6.markers[i].point - want[i]) < 1e-3);
    CHECK(g6.markers[i].local_deg == (i == 0 ? 2 : 1));
    CHECK(g6.markers[i].vertex_index ==
          doctest::Approx(g6.markers[0].vertex_index +
                          i * (g6.markers[1].vertex_index -
                               g6.markers[0].vertex_index)));
    // Markers sit on the curve at their recorded vertex.
    CHECK(std::abs(g6.points[g6.markers[i].vertex_index].z -
                   g6.markers[i].point) < 1e-9);
  }
  // The mirror-image curve carries the mirrored markers.
  const TailCurve g6m =
      gamma_curve(m, cfg, parse_signed_address("| 0R -"), 6, p);
  REQUIRE(g6m.markers.size() == 4);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(g6m.markers[i].point - std::conj(want[i])) < 1e-3);
}

TEST_CASE("decomposition splits the curve exactly at its markers") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const TailCurve g =
      gamma_curve(m, cfg, parse_signed_address("| 0R +"), 4, p);
  REQUIRE(g.markers.size() == 2);
  const GammaDecomposition d = decompose_gamma(g);
  REQUIRE(d.critical_points.size() == 2);
  REQUIRE(d.segments.size() == 2);
  // Reassembling tail + c0 + seg0 + c1 + seg1 reproduces the vertex list.
  std::vector<cplx> rebuilt = d.unbounded_tail;
  for (std::size_t i = 0; i < d.segments.size(); ++i) {
    rebuilt.push_back(d.critical_points[i]);
    rebuilt.insert(rebuilt.end(), d.segments[i].begin(), d.segments[i].end());
  }
  const std::vector<cplx> all = vertices(g);
  REQUIRE(rebuilt.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    CHECK(rebuilt[i] == all[i]);

  // A markerless curve decomposes into just its unbounded tail.
  const TailCurve flat = trace_level0(m, cfg, parse_address("| 1R"), p);
  const GammaDecomposition df = decompose_gamma(flat);
  CHECK(df.critical_points.empty());
  CHECK(df.segments.empty());
  CHECK(df.unbounded_tail.size() == flat.points.size());
}

TEST_CASE("bristle selection rotates by pi/deg") {
  const MapModel m = make_cosh();
  const cplx inc(1.0, 0.0);
  for (int deg : {2, 3, 4}) {
    const cplx plus = bristle_select(m, cplx(0, 0), inc, SignBit::Plus, deg);
    const cplx minus = bristle_select(m, cplx(0, 0), inc, SignBit::Minus, deg);
    CHECK(std::abs(plus - std::polar(1.0, M_PI / deg)) < 1e-12);
    CHECK(std::abs(minus - std::polar(1.0, -M_PI / deg)) < 1e-12);
  }
  // Rotation covariance: rotating the incoming direction rotates the choice.
  const cplx rot = std::polar(1.0, 0.77);
  CHECK(std::abs(bristle_select(m, cplx(0, 0), rot, SignBit::Plus, 2) -
                 rot * std::polar(1.0, M_PI / 2)) < 1e-12);
  // No bristles exist at regular points.
  CHECK_THROWS_AS(
      (void)bristle_select(m, cplx(0, 0), inc, SignBit::Plus, 1), Error);
}

TEST_CASE("opposite signs share the curve up to the first fork") {
  // The two signed curves for | 0R coincide along the unbounded tail and
  // split exactly at the critical point 0; right after it they head into
  // opposite half-planes.
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const TailCurve gp = gamma_curve(m, cfg, parse_signed_address("| 0R +"), 4, p);
  const TailCurve gm = gamma_curve(m, cfg, parse_signed_address("| 0R -"), 4, p);
  REQUIRE(gp.markers.size() == 2);
  REQUIRE(gm.markers.size() == 2);
  const std::size_t fork = gp.markers[0].vertex_index;
  REQUIRE(gm.markers[0].vertex_index == fork);
  for (std::size_t i = 0; i <= fork; ++i)
    CHECK(std::abs(gp.points[i].z - gm.points[i].z) < 1e-9);
  bool diverged = false;
  for (std::size_t i = fork + 1;
       i < std::min(gp.points.size(), gm.points.size()); ++i) {
    if (std::abs(gp.points[i].z - gm.points[i].z) > 1e-6) { diverged = true; break; }
  }
  CHECK(diverged);
  // The continuations mirror each other across the real axis.
  const std::size_t upto = std::min(gp.points.size(), gm.points.size());
  for (std::size_t i = fork; i < upto; ++i)
    CHECK(std::abs(std::conj(gp.points[i].z) - gm.points[i].z) < 1e-9);
}

TEST_CASE("curves of opposite sign overlap along shared segments") {
  // The piece of the plus curve of | 0R between its first two forks coincides
  // with a piece of the minus curve of 0L | 0R, but not with the plus one:
  // the overlap structure depends on the sign in a testable way.
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const TailCurve base = gamma_curve(m, cfg, parse_signed_address("| 0R +"), 6, p);
  const GammaDecomposition d = decompose_gamma(base);
  REQUIRE(!d.segments.empty());
  const std::vector<cplx>& seg0 = d.segments[0];
  REQUIRE(seg0.size() > 10);

  const TailCurve other_minus =
      gamma_curve(m, cfg, parse_signed_address("0L | 0R -"), 6, p);
  const TailCurve other_plus =
      gamma_curve(m, cfg, parse_signed_address("0L | 0R +"), 6, p);
  const kern::PolylineSoA pm = kern::build_polyline(vertices(other_minus));
  const kern::PolylineSoA pp = kern::build_polyline(vertices(other_plus));
  // Every vertex of the segment lies on the minus curve...
  double worst_minus = 0.0;
  for (const cplx z : seg0)
    worst_minus = std::max(worst_minus, kern::nearest_dist(pm, z));
  CHECK(worst_minus <= 1e-8);
  // ...while its middle is far from the plus curve.  (Near the segment's
  // endpoints every curve through the shared critical points comes close, so
  // the discriminating distance is measured away from them.)
  double best_plus = 1e9;
  for (std::size_t i = seg0.size() / 3; i < 2 * seg0.size() / 3; ++i)
    best_plus = std::min(best_plus, kern::nearest_dist(pp, seg0[i]));
  CHECK(best_plus > 0.5);
}

TEST_CASE("signed address counting") {
  const MapModel m = make_cosh();
  const TraceParams p;
  // Generic escaping point: two signed addresses (the two signs).
  CHECK(count_signed_addresses(m, cplx(2, 0), 8, p) == 2);
  // Through one simple critical point: doubled once.
  CHECK(count_signed_addresses(m, cplx(0, 0), 8, p) == 4);
  // cosh^2 sends i*pi/2 through two simple critical points in a row.
  CHECK(count_signed_addresses(make_coshsq(), cplx(0, M_PI / 2), 8, p) == 8);
  // Non-escaping points are rejected, not miscounted.
  const cplx fix(2.775438474165445, 7.502164620486806);
  try {
    (void)count_signed_addresses(m, fix, 8, p);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotEscaping);
  }
}

}  // TEST_SUITE
