#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "crinis/error.hpp"

namespace crinis {

using cplx = std::complex<double>;

// ============================================================================
// Map families
// ============================================================================
//
// All shipped maps have finitely many critical values inside a disk of radius
// `singular_radius`, no finite asymptotic values that matter for the shipped
// configurations, and horizontal half-strip tracts once |f| exceeds the disk
// radius of the partition.

enum class Family : std::uint8_t {
  Cosh,      // f(z) = cosh(z)
  CoshSq,    // f(z) = cosh(z)^2
  Exp,       // f(z) = lambda * exp(z)
  CoshFam,   // f(z) = a * cosh(z)
};

struct MapModel {
  Family family = Family::Cosh;
  cplx param{1.0, 0.0};  // lambda for Exp, a for CoshFam, unused otherwise
  std::vector<cplx> critical_values;
  std::vector<cplx> asymptotic_values;  // empty for every shipped family
  double singular_radius = 1.0;         // radius of a disk containing all singular values
};

MapModel make_cosh();
MapModel make_coshsq();
MapModel make_exp(cplx lambda);
MapModel make_cosh_family(cplx a);

const char* family_code(Family f);        // "cosh", "coshsq", "exp", "coshfam"
Family family_from_code(const std::string& code);

// ============================================================================
// Symbols and the static partition
// ============================================================================

enum class Side : std::uint8_t { L, R };

struct Symbol {
  int row = 0;
  Side side = Side::R;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

std::string symbol_text(const Symbol& s);          // e.g. "0R", "-1L"
Symbol symbol_from_text(const std::string& text);  // throws ParseError

// Geometry of the static partition: a closed round disk D of radius
// `disk_radius` about the origin together with a straight ray `delta` from the
// circle to infinity in direction `delta_angle`.  Fundamental domains are the
// components of the preimage of the complement of (D union delta).
struct PartitionConfig {
  double disk_radius = 3.0;
  double delta_angle = 1.5707963267948966;  // pi/2: positive imaginary axis
  // Radius of the smaller disk used as the base domain of the hyperbolic
  // metric when measuring expansion.  It must stay strictly between the
  // singular radius of the map and disk_radius; orbits we certify live outside
  // disk_radius, whose hyperbolic distance to the singular values is then
  // uniformly positive, which is what makes the measured expansion factors
  // exceed one.
  double metric_radius = 1.5;
  double probe_radius = 300.0;  // where strips are sampled to derive the symbol order
  int horizon = 12;             // validation depth for partition checks
};

PartitionConfig make_partition(const MapModel& model);
PartitionConfig make_partition(const MapModel& model, double disk_radius);
PartitionConfig make_partition(const MapModel& model, double disk_radius, double delta_angle);

// Angle of the half-strip containing `s`, sampled at `cfg.probe_radius` and
// measured counterclockwise starting just after the delta ray.  This realizes
// the total symbol order: s < t iff probe_angle(s) < probe_angle(t).
double symbol_probe_angle(const MapModel& model, const PartitionConfig& cfg, const Symbol& s);
bool symbol_less(const MapModel& model, const PartitionConfig& cfg, const Symbol& a, const Symbol& b);
Symbol symbol_successor(const MapModel& model, const Symbol& s);    // next symbol upward in the order
Symbol symbol_predecessor(const MapModel& model, const Symbol& s);  // next symbol downward

// ============================================================================
// Evaluation
// ============================================================================

cplx evaluate(const MapModel& model, cplx z);
// k-th derivative, 1 <= order <= 8.
cplx derivative(const MapModel& model, cplx z, int order);

// Smallest k >= 1 with nonzero k-th derivative at z0 (normalized threshold
// 1e-9); throws DegeneratePoint if all of the first 8 vanish.
int local_degree(const MapModel& model, cplx z0);

struct Box {
  double re_lo = 0, re_hi = 0, im_lo = 0, im_hi = 0;
};

// All zeros of f' in the box, each accurate to 1e-10, deduplicated at 1e-8.
std::vector<cplx> critical_points_in(const MapModel& model, const Box& box);

// Nearest critical point of the map (lattice closed form); returns false if
// the family has none.
bool nearest_critical_point(const MapModel& model, cplx z, cplx* out);

// ============================================================================
// Itinerary machinery
// ============================================================================

// Symbol of the fundamental domain containing z.  Preconditions: z outside the
// closed disk and off delta, and |f(z)| > disk_radius.  Errors: InsideD,
// OnDelta, NotInTract.
Symbol symbol_of(const MapModel& model, const PartitionConfig& cfg, cplx z);

// Strip classification without the disk/tract preconditions.  Used internally
// for itineraries of points that sit inside the disk but still on a strip.
Symbol symbol_of_unchecked(const MapModel& model, const PartitionConfig& cfg, cplx z);

// The inverse branch of f landing in the fundamental domain of `s`.
// Postconditions: |f(z) - w| <= 1e-10 * max(1, |w|) and symbol_of(z) == s.
cplx inverse_branch(const MapModel& model, const PartitionConfig& cfg, cplx w, const Symbol& s);

// Plain Newton solve of f(z) = w from `seed`; no strip bookkeeping.
cplx newton_solve(const MapModel& model, cplx w, cplx seed, double tol, int max_iter = 64);

struct Orbit {
  std::vector<cplx> points;  // z, f(z), ..., up to n entries or first bailout exit
  bool escaped = false;
};

Orbit forward_orbit(const MapModel& model, cplx z, int n, double bailout);

// ============================================================================
// Hyperbolic geometry of the disk complement
// ============================================================================

// Density 1/(|z| log(|z|/R)) of the hyperbolic metric of {|z| > R} at z.
// Requires |z| > R.
double hyperbolic_density(double R, cplx z);

// |f'(z)| * rho(f(z)) / rho(z); requires |z| > R and |f(z)| > R.
double expansion_norm(const MapModel& model, double R, cplx z);

// Same quantity for an arbitrary (value, derivative) pair, so synthetic maps
// can be measured by the conformance checks.
double expansion_norm_values(double R, cplx z, cplx fz, cplx dfz);

// True iff the closure of f(D) lies inside the open disk D of radius R,
// decided by sampling the boundary circle.
bool is_disjoint_type(const MapModel& model, double R, int samples = 4096);

// Asymptote height of the strip of s0 given the following symbol s1: the
// exact height (Im on the right, reflected on the left) that the constituent
// curve with itinerary s0 s1 ... approaches as Re -> +/-inf.
double anchor_height(const MapModel& model, const Symbol& s0, const Symbol& s1);

}  // namespace crinis
