// Ray tracing: level-0 escaping tails, inductive pullback with bristle
// selection at critical points, Gamma-curve assembly and decomposition, and
// the signed-address counting formula.
#pragma once

#include <cstddef>
#include <vector>

#include "crinis/address.hpp"
#include "crinis/map_model.hpp"

namespace crinis {

struct TraceParams {
  int depth = 20;            // pullback refinements for level-0 tracing
  int level = 0;             // canonical-tail level N
  double bailout = 1e8;      // escape threshold for orbit checks
  double step = 0.05;        // max arclength between consecutive vertices
  double crit_tol = 1e-6;    // critical-point collision radius
  double newton_tol = 1e-11; // per-vertex Newton solve tolerance
  double window_far = 25.0;  // far-end modulus of the traced potential window
};

// Throws BadConfig unless all fields are positive and crit_tol >= 10*newton_tol.
void validate(const TraceParams& p);

enum class BristleSide : std::uint8_t { Left, Right };

// A vertex of interest on a traced curve: either a genuine critical point of
// the map (local_deg >= 2, where the curve forks and a bristle was chosen) or
// an inherited corner (local_deg == 1) whose forward orbit reaches a critical
// point, mirroring the parent curve's marker.
struct CriticalMarker {
  std::size_t vertex_index = 0;
  cplx point{0.0, 0.0};
  int local_deg = 1;
  BristleSide chosen_bristle = BristleSide::Right;
};

struct TimedPoint {
  double t = 0.0;  // potential parameter, strictly decreasing along the curve
  cplx z{0.0, 0.0};
};

struct TailCurve {
  SignedAddress signed_addr;
  int level = 0;
  // Ordered far end first: points.front() has the largest potential and
  // points.back() is the finite end.
  std::vector<TimedPoint> points;
  // Markers in decreasing potential order (increasing vertex_index).
  std::vector<CriticalMarker> markers;
  // Vertices [first_pulled, size()) were obtained by pulling the parent curve
  // vertex-for-vertex; vertices [0, first_pulled) are the far re-extension
  // along the strip asymptote (their images lie beyond the parent polyline's
  // far endpoint, on its asymptote ray).
  std::size_t first_pulled = 0;
};

struct GammaDecomposition {
  // Split points in decreasing potential order (c_0 farthest out).
  std::vector<cplx> critical_points;
  // segments[i] is the piece strictly between critical_points[i] and
  // critical_points[i+1] (the last one runs to the finite end).
  std::vector<std::vector<cplx>> segments;
  // The piece of the curve above the first split point (all of it if none).
  std::vector<cplx> unbounded_tail;
};

// Trace the level-0 tail of the Julia constituent of address `a`: anchor the
// strip asymptote of (a_0, a_1) at large modulus and refine with `p.depth`
// successive in-tract pullbacks along a's symbols.  Consecutive-depth
// agreement within 10*newton_tol certifies convergence.  The result's sign is
// Plus by convention; level-0 curves are shared by both signs.
TailCurve trace_level0(const MapModel& model, const PartitionConfig& cfg, const ExternalAddress& a,
                       const TraceParams& p);

// Pull the parent curve (level n-1, address shift(target.addr)) back through
// the branch of f^{-1} with symbol target.addr[0], extending from large
// potential downward.  Critical encounters insert markers and continue along
// the bristle selected by the curve's sign; parent markers are inherited at
// their preimages.  The child is re-extended to the far window along the
// parent's asymptote ray.
TailCurve pull_back_tail(const MapModel& model, const PartitionConfig& cfg,
                         const TailCurve& parent, const SignedAddress& target,
                         const TraceParams& p);

// Among the 2*deg local preimage directions at a critical point c of the
// curve's before/after tangents in the image plane, return the immediate
// anticlockwise successor (sign +) or predecessor (sign -) of incoming_dir.
// before_dir/after_dir are unit directions away from f(c) in the image plane.
cplx bristle_select(const MapModel& model, cplx c, cplx incoming_dir, SignBit sign, int deg,
                    cplx before_dir, cplx after_dir);

// Convenience overload for a straight passage (after = -before):
// the choice reduces to incoming_dir * exp(+-i*pi/deg).
cplx bristle_select(const MapModel& model, cplx c, cplx incoming_dir, SignBit sign, int deg);

// Canonical tail at level N: trace_level0 on shift^N(target.addr), then N
// pull_back_tail steps.  Vertices of the level-(N-1) tower agree with a far
// prefix of the level-N tower to certificate accuracy.
TailCurve gamma_curve(const MapModel& model, const PartitionConfig& cfg,
                      const SignedAddress& target, int N, const TraceParams& p);

// Split a curve at its markers into unbounded tail + segments.
GammaDecomposition decompose_gamma(const TailCurve& g);

// 2 * product of local degrees along the escaping orbit of z, truncated once
// the orbit has left the critical lattice's reach and keeps growing.
// Throws NotEscaping / HorizonTooSmall.
long long count_signed_addresses(const MapModel& model, cplx z, int horizon,
                                 const TraceParams& p);

}  // namespace crinis
