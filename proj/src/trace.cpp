#include "crinis/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crinis/kernels.hpp"

namespace crinis {
namespace {

constexpr double kPi = 3.14159265358979323846;

double norm1(cplx z) { return std::abs(z); }

cplx unit(cplx z) {
  const double m = std::abs(z);
  if (!(m > 0)) throw Error(ErrorCode::DegeneratePoint, "cannot normalize a zero direction");
  return z / m;
}

// ---------------------------------------------------------------------------
// Strip asymptote rays
// ---------------------------------------------------------------------------

struct Ray {
  double dir = 1.0;    // +1: extends toward +Re, -1: toward -Re
  double height = 0.0; // asymptotic imaginary part (of +-Re z for left rays)
  cplx at(double x) const { return {dir * x, height}; }
};

Ray strip_ray(const MapModel& model, const ExternalAddress& a) {
  const Symbol s0 = symbol_at(a, 0);
  const Symbol s1 = symbol_at(a, 1);
  Ray ray;
  ray.dir = (model.family == Family::Exp || s0.side == Side::R) ? 1.0 : -1.0;
  ray.height = anchor_height(model, s0, s1);
  return ray;
}

// Absolute geometric lattice of far-extension target abscissas, shared by
// every curve of the same strip so that towers of different heights produce
// vertex-aligned far blocks: x_j = R_D * exp(j * dx).
struct FarLattice {
  double base;
  double dx;
  double at(int j) const { return base * std::exp(j * dx); }
  int first_above(double x) const {
    return static_cast<int>(std::floor(std::log(x / base) / dx)) + 1;
  }
};

FarLattice far_lattice(const PartitionConfig& cfg, const TraceParams& p) {
  return FarLattice{cfg.disk_radius, 0.9 * p.step};
}

// ---------------------------------------------------------------------------
// Continuation walk
// ---------------------------------------------------------------------------

struct Walker {
  const MapModel& model;
  const PartitionConfig& cfg;
  const TraceParams& p;
  SignBit sign = SignBit::Plus;

  std::vector<cplx> verts;
  std::vector<CriticalMarker> markers;
  cplx z{0, 0};
  double since_last = 0.0;  // arclength since the last retained vertex

  Walker(const MapModel& m, const PartitionConfig& c, const TraceParams& params)
      : model(m), cfg(c), p(params) {}

  double dist_to_crit(cplx at) const {
    cplx c;
    if (!nearest_critical_point(model, at, &c)) return std::numeric_limits<double>::infinity();
    return std::abs(at - c);
  }

  // Maximum child-plane displacement per continuation micro-step.
  double step_cap(cplx at) const {
    const double d = dist_to_crit(at);
    return std::min(p.step, std::max(p.step / 16.0, d / 8.0));
  }

  // Retention spacing: denser near critical points.
  double retain_gap(cplx at) const {
    const double d = dist_to_crit(at);
    return std::min(p.step / 4.0, std::max(p.step / 64.0, d / 8.0));
  }

  void start(cplx first_vertex) {
    z = first_vertex;
    verts.push_back(z);
    since_last = 0.0;
  }

  void move_to(cplx nz, bool force_retain) {
    since_last += std::abs(nz - z);
    z = nz;
    if (force_retain || since_last >= retain_gap(z)) retain();
  }

  void retain() {
    if (!verts.empty() && std::abs(z - verts.back()) < 1e-14 * std::max(1.0, std::abs(z)))
      return;  // exact duplicate: keep the potential strictly monotone
    verts.push_back(z);
    since_last = 0.0;
  }

  // Continue the current preimage branch so that f(z) walks the straight
  // segment from w_from (== f(z)) to w_to.  No critical value may lie within
  // pass_tol of the open segment; callers split at passages first.
  void walk_segment(cplx w_from, cplx w_to, int depth, bool retain_end) {
    if (depth > 64)
      throw Error(ErrorCode::DepthExceeded, "continuation bisection exceeded 64 levels");
    const cplx dw = w_to - w_from;
    const double dwn = std::abs(dw);
    if (dwn == 0.0) {
      if (retain_end) retain();
      return;
    }
    const cplx df = derivative(model, z, 1);
    const double dfn = std::abs(df);
    const double est = dfn > 0 ? dwn / dfn : std::numeric_limits<double>::infinity();
    if (est > step_cap(z)) {
      const cplx mid = w_from + 0.5 * dw;
      walk_segment(w_from, mid, depth + 1, false);
      walk_segment(mid, w_to, depth + 1, retain_end);
      return;
    }
    const cplx seed = z + dw / df;
    const cplx nz = newton_solve(model, w_to, seed, p.newton_tol);
    move_to(nz, retain_end);
  }

  // Approach the critical value v along before_dir (unit vector from v toward
  // the already-walked part), stop at image distance eps, and report the
  // nearest critical point candidate.
  cplx approach_special(cplx v, cplx before_dir, double eps) {
    walk_segment(f_here(), v + before_dir * eps, 0, false);
    return z;
  }

  cplx f_here() const { return evaluate(model, z); }

  void add_marker(cplx point, int deg) {
    CriticalMarker m;
    m.vertex_index = verts.size();  // the marker vertex is appended right after
    m.point = point;
    m.local_deg = deg;
    m.chosen_bristle = sign == SignBit::Plus ? BristleSide::Right : BristleSide::Left;
    z = point;
    since_last = p.step;  // force retention
    retain();
    m.vertex_index = verts.size() - 1;
    markers.push_back(m);
  }

  // Handle a genuine critical encounter: the branch has been walked to image
  // distance eps from v and sits near the critical point c (|f(c) - v| ~ 0).
  // before_dir/after_dir are unit image directions away from v.  The first
  // post-split image target is v + after_dir*eps_out; afterward the caller
  // resumes normal walking.
  void split_at(cplx c, cplx before_dir, cplx after_dir, double eps_out) {
    const int deg = local_degree(model, c);
    const cplx incoming = unit(z - c);
    const cplx chosen = bristle_select(model, c, incoming, sign, deg, before_dir, after_dir);
    const cplx v = evaluate(model, c);
    add_marker(c, deg);

    // Reseed on the chosen bristle at the radius matching the first target.
    double fact = 1;
    for (int j = 2; j <= deg; ++j) fact *= j;
    const cplx lead = derivative(model, c, deg) / fact;
    double eps = eps_out;
    for (int attempt = 0; attempt < 48; ++attempt) {
      const cplx w1 = v + after_dir * eps;
      const double h = std::pow(eps / std::abs(lead), 1.0 / deg);
      try {
        const cplx nz = newton_solve(model, w1, c + h * chosen, p.newton_tol);
        const cplx got = nz - c;
        if (std::abs(got) > 0 && (got / chosen).real() > std::cos(kPi / (2.0 * deg)) * std::abs(got)) {
          z = nz;
          move_to(nz, true);
          return;
        }
      } catch (const Error&) {
        // fall through to a smaller first target
      }
      eps *= 0.5;
      if (eps < 64.0 * p.newton_tol)
        throw Error(ErrorCode::NoConvergence, "could not restart on the selected bristle");
    }
    throw Error(ErrorCode::NoConvergence, "bristle restart did not stabilize");
  }
};

// A critical value lying on a walked image segment.
struct Passage {
  double param;  // position along the segment, in (0, 1]
  cplx value;    // the critical value
};

std::vector<Passage> find_passages(const MapModel& model, cplx w_a, cplx w_b, double pass_tol) {
  std::vector<Passage> out;
  const cplx dw = w_b - w_a;
  const double len2 = std::norm(dw);
  if (len2 == 0.0) return out;
  for (const cplx& v : model.critical_values) {
    const double t = ((v - w_a) * std::conj(dw)).real() / len2;
    if (t <= 1e-9 || t > 1.0 + 1e-9) continue;
    const double tc = std::min(t, 1.0);
    if (std::abs(w_a + tc * dw - v) <= pass_tol) out.push_back(Passage{tc, v});
  }
  std::sort(out.begin(), out.end(), [](const Passage& l, const Passage& r) {
    return l.param < r.param;
  });
  return out;
}

constexpr double kPassTol = 1e-7;  // image distance identifying an exact passage
constexpr double kEpsImage = 1e-9; // image-plane hand-off radius at special points

// ---------------------------------------------------------------------------
// Pull engine
// ---------------------------------------------------------------------------

struct TargetList {
  std::vector<cplx> w;
  // index into the parent marker list when this target is a marker vertex,
  // npos otherwise
  std::vector<std::size_t> marker_of;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

TargetList targets_from_parent(const TailCurve& parent, bool trim_to_slit,
                               const PartitionConfig& cfg) {
  TargetList t;
  t.w.reserve(parent.points.size());
  t.marker_of.reserve(parent.points.size());
  std::size_t mi = 0;
  for (std::size_t i = 0; i < parent.points.size(); ++i) {
    while (mi < parent.markers.size() && parent.markers[mi].vertex_index < i) ++mi;
    const bool is_marker = mi < parent.markers.size() && parent.markers[mi].vertex_index == i;
    const cplx w = parent.points[i].z;
    if (trim_to_slit && !(std::abs(w) > cfg.disk_radius * (1.0 + 1e-12))) break;
    t.w.push_back(w);
    t.marker_of.push_back(is_marker ? mi : TargetList::npos);
  }
  return t;
}

// Pull a target polyline through the inverse branch with symbol s0, walking
// far-to-near with passage detection, marker inheritance and bristle
// restarts.  The walker must already be positioned at the preimage of w[0].
void pull_targets(Walker& wk, const TargetList& tg,
                  const std::vector<CriticalMarker>& parent_markers) {
  for (std::size_t i = 1; i < tg.w.size(); ++i) {
    const cplx w_a = tg.w[i - 1];
    const cplx w_b = tg.w[i];
    const bool marker_target = tg.marker_of[i] != TargetList::npos;

    std::vector<Passage> passages =
        find_passages(wk.model, w_a, w_b, kPassTol);
    if (marker_target) {
      // The corner is handled by the dedicated path below; drop a duplicate
      // passage record at the segment end.
      while (!passages.empty() && std::abs(passages.back().value - w_b) < 1e-9)
        passages.pop_back();
    }

    cplx w_cur = w_a;
    for (const Passage& pa : passages) {
      const cplx v = pa.value;
      if (std::abs(v - w_cur) < 1e-12) continue;
      const cplx before_dir = unit(w_cur - v);
      wk.walk_segment(w_cur, v + before_dir * kEpsImage, 0, false);
      cplx c_hat;
      const bool has_crit = nearest_critical_point(wk.model, wk.z, &c_hat);
      const bool genuine = has_crit && std::abs(wk.z - c_hat) <= 1e-2 &&
                           std::abs(evaluate(wk.model, c_hat) - v) <= 1e-8 * std::max(1.0, norm1(v));
      if (genuine) {
        const cplx after_dir = unit(w_b - v);
        wk.split_at(c_hat, before_dir, after_dir, kEpsImage);
        w_cur = evaluate(wk.model, wk.z);
      } else {
        // Regular preimage of a critical value: pass straight through.
        wk.walk_segment(v + before_dir * kEpsImage, v, 0, true);
        w_cur = v;
      }
    }

    if (!marker_target) {
      wk.walk_segment(w_cur, w_b, 0, true);
      continue;
    }

    // Marker vertex of the parent: approach the corner, then classify.
    const std::size_t pm = tg.marker_of[i];
    const cplx before_dir = unit(w_cur - w_b);
    wk.walk_segment(w_cur, w_b + before_dir * kEpsImage, 0, false);
    cplx c_hat;
    const bool has_crit = nearest_critical_point(wk.model, wk.z, &c_hat);
    const bool genuine = has_crit && std::abs(wk.z - c_hat) <= 1e-2 &&
                         local_degree(wk.model, c_hat) >= 2 &&
                         std::abs(evaluate(wk.model, c_hat) - w_b) <=
                             1e-8 * std::max(1.0, norm1(w_b));
    const bool has_after = i + 1 < tg.w.size();
    if (genuine) {
      if (!has_after) {
        wk.add_marker(c_hat, local_degree(wk.model, c_hat));
        return;
      }
      const cplx after_dir = unit(tg.w[i + 1] - w_b);
      wk.split_at(c_hat, before_dir, after_dir, kEpsImage);
    } else {
      // Inherited corner: the continuation through it is the unique branch.
      wk.walk_segment(w_b + before_dir * kEpsImage, w_b, 0, true);
      CriticalMarker m = parent_markers[pm];
      m.vertex_index = wk.verts.size() - 1;
      m.point = wk.z;
      m.local_deg = 1;
      m.chosen_bristle = wk.sign == SignBit::Plus ? BristleSide::Right : BristleSide::Left;
      wk.markers.push_back(m);
    }
  }
}

// Far re-extension: pull ray targets outward from the current branch end
// (which must be the preimage of ray.at(x_start)) until the preimage's |Re|
// reaches p.window_far.  Returns vertices in increasing modulus order,
// excluding the junction vertex itself.
std::vector<cplx> extend_far(const MapModel& model, const PartitionConfig& cfg,
                             const TraceParams& p, const Ray& ray, double x_start, cplx z_start) {
  Walker wk(model, cfg, p);
  wk.start(z_start);
  const FarLattice lat = far_lattice(cfg, p);
  int j = lat.first_above(x_start);
  cplx w_cur = ray.at(x_start);
  std::vector<cplx> out;
  for (int guard = 0; guard < 1000000; ++guard) {
    const double x = lat.at(j);
    const cplx w_next = ray.at(x);
    wk.walk_segment(w_cur, w_next, 0, true);
    w_cur = w_next;
    ++j;
    if (std::fabs(wk.z.real()) >= p.window_far || std::abs(wk.z) >= p.window_far * 1.5) break;
  }
  out.assign(wk.verts.begin() + 1, wk.verts.end());
  return out;
}

std::vector<TimedPoint> assign_potentials(const std::vector<cplx>& verts) {
  std::vector<TimedPoint> pts;
  pts.reserve(verts.size());
  double t = verts.empty() ? 1.0 : std::abs(verts.front()) + 1.0;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    if (i > 0) t /= 1.0 + std::abs(verts[i] - verts[i - 1]);
    pts.push_back(TimedPoint{t, verts[i]});
  }
  return pts;
}

// Assemble a TailCurve from a far-extension block (increasing modulus order)
// plus the pulled block's walker output.
TailCurve assemble(const SignedAddress& sa, int level, std::vector<cplx> ext_increasing,
                   Walker& wk) {
  TailCurve out;
  out.signed_addr = sa;
  out.level = level;
  std::vector<cplx> verts;
  verts.reserve(ext_increasing.size() + wk.verts.size());
  for (auto it = ext_increasing.rbegin(); it != ext_increasing.rend(); ++it) verts.push_back(*it);
  const std::size_t ext_len = verts.size();
  for (const cplx& v : wk.verts) verts.push_back(v);
  out.points = assign_potentials(verts);
  out.markers = wk.markers;
  for (CriticalMarker& m : out.markers) m.vertex_index += ext_len;
  out.first_pulled = ext_len;
  return out;
}

// ---------------------------------------------------------------------------
// Level-0 cascade
// ---------------------------------------------------------------------------

// Straight anchor polyline on the strip ray of `a`, far end at window_far,
// trimmed to image moduli above the disk radius.
std::vector<cplx> anchor_polyline(const MapModel& model, const PartitionConfig& cfg,
                                  const ExternalAddress& a, const TraceParams& p) {
  const Ray ray = strip_ray(model, a);
  std::vector<cplx> verts;
  for (double x = p.window_far; x > 0.0; x -= p.step) {
    const cplx z = ray.at(x);
    if (!(std::abs(evaluate(model, z)) > cfg.disk_radius * (1.0 + 1e-12))) break;
    verts.push_back(z);
  }
  if (verts.size() < 8)
    throw Error(ErrorCode::BadConfig, "anchor window too small for this strip");
  return verts;
}

TailCurve level0_cascade(const MapModel& model, const PartitionConfig& cfg,
                         const ExternalAddress& a, const TraceParams& p, int depth) {
  // Addresses along the shift chain: chain[k] = shift^k(a).
  std::vector<ExternalAddress> chain;
  chain.reserve(depth + 1);
  chain.push_back(canonical(a));
  for (int k = 1; k <= depth; ++k) chain.push_back(shift(chain.back()));

  TailCurve cur;
  cur.signed_addr = SignedAddress{chain[depth], SignBit::Plus};
  cur.level = 0;
  {
    std::vector<cplx> verts = anchor_polyline(model, cfg, chain[depth], p);
    cur.points = assign_potentials(verts);
    cur.first_pulled = 0;
  }

  for (int k = depth - 1; k >= 0; --k) {
    const ExternalAddress& addr = chain[k];
    const Symbol s0 = symbol_at(addr, 0);
    const TargetList tg = targets_from_parent(cur, /*trim_to_slit=*/true, cfg);
    if (tg.w.size() < 2)
      throw Error(ErrorCode::NoConvergence, "trimmed parent too short to pull");

    Walker wk(model, cfg, p);
    wk.sign = SignBit::Plus;
    wk.start(inverse_branch(model, cfg, tg.w[0], s0));
    const cplx z_far = wk.z;
    pull_targets(wk, tg, cur.markers);

    const Ray parent_ray = strip_ray(model, chain[k + 1]);
    const double x_start = parent_ray.dir * tg.w[0].real();
    std::vector<cplx> ext = extend_far(model, cfg, p, parent_ray, x_start, z_far);

    cur = assemble(SignedAddress{addr, SignBit::Plus}, 0, std::move(ext), wk);
  }
  return cur;
}

// One-sided polyline distance: max over sampled vertices of a of the nearest
// distance to polyline b.
double one_sided_dist(const std::vector<TimedPoint>& a, std::size_t from, std::size_t to,
                      const std::vector<TimedPoint>& b) {
  std::vector<cplx> bv;
  bv.reserve(b.size());
  for (const TimedPoint& q : b) bv.push_back(q.z);
  const kern::PolylineSoA poly = kern::build_polyline(bv);
  double worst = 0.0;
  for (std::size_t i = from; i < to; ++i)
    worst = std::max(worst, kern::nearest_dist(poly, a[i].z));
  return worst;
}

// Itinerary audit of the traced vertices.  A vertex carries an absolute error
// of roughly the certificate tolerance; each application of f multiplies that
// error by |f'|, which is enormous far out in a strip.  Symbols can therefore
// only be certified while the propagated error stays well below the distance
// to the partition boundaries -- beyond that horizon the floating-point orbit
// no longer tracks the curve and its symbols carry no information.  Finite-end
// vertices (moderate |f'|) get many certified steps; far-end vertices get few.
void check_level0_symbols(const MapModel& model, const PartitionConfig& cfg,
                          const ExternalAddress& a, const TraceParams& p,
                          const TailCurve& curve) {
  const std::size_t n = curve.points.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 16);
  constexpr double kErrCap = 1e-5;  // stop auditing once error could reach this
  for (std::size_t i = 0; i < n; i += stride) {
    cplx z = curve.points[i].z;
    if (!(std::abs(z) > cfg.disk_radius * 1.05)) continue;
    double err = 100.0 * p.newton_tol;  // certified vertex accuracy (with slack)
    for (int k = 0; k <= p.depth && err < kErrCap; ++k) {
      const cplx fz = evaluate(model, z);
      if (!std::isfinite(fz.real()) || !std::isfinite(fz.imag())) break;
      if (!(std::abs(fz) > cfg.disk_radius)) break;  // left the traced window
      const Symbol want = symbol_at(a, static_cast<std::size_t>(k));
      const Symbol got = symbol_of_unchecked(model, cfg, z);
      if (!(got == want)) {
        // Borderline classification: if a perturbation of the size of the
        // accumulated error flips the symbol back, the vertex merely sits
        // within error of a cell boundary.  Stop auditing instead of failing.
        const double r = 3.0 * (err + 1e-12);
        bool borderline = false;
        for (const cplx dir : {cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1)}) {
          if (symbol_of_unchecked(model, cfg, z + r * dir) == want) {
            borderline = true;
            break;
          }
        }
        if (borderline) break;
        throw Error(ErrorCode::NoConvergence,
                    "traced vertex has itinerary symbol " + symbol_text(got) +
                        " instead of " + symbol_text(want) + " at step " +
                        std::to_string(k));
      }
      err *= std::max(1.0, std::abs(derivative(model, z, 1)));
      z = fz;
      if (std::abs(z) > 1e12) break;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

void validate(const TraceParams& p) {
  if (!(p.depth > 0 && p.bailout > 0 && p.step > 0 && p.crit_tol > 0 && p.newton_tol > 0 &&
        p.window_far > 0))
    throw Error(ErrorCode::BadConfig, "trace parameters must be positive");
  if (p.level < 0 || p.level > 64)
    throw Error(ErrorCode::BadConfig, "canonical-tail level must be in [0, 64]");
  if (!(p.crit_tol >= 10.0 * p.newton_tol))
    throw Error(ErrorCode::BadConfig, "crit_tol must be at least 10x newton_tol");
}

TailCurve trace_level0(const MapModel& model, const PartitionConfig& cfg, const ExternalAddress& a,
                       const TraceParams& p) {
  validate(p);
  const ExternalAddress ca = canonical(a);
  TailCurve coarse = level0_cascade(model, cfg, ca, p, p.depth);
  TailCurve fine = level0_cascade(model, cfg, ca, p, p.depth + 1);

  // Convergence certificate: the deepest decile of the refined curve must sit
  // on the coarse curve to within 10 * newton_tol.
  const std::size_t n = fine.points.size();
  const std::size_t from = n - std::max<std::size_t>(1, n / 10);
  const double drift = one_sided_dist(fine.points, from, n, coarse.points);
  if (!(drift <= 10.0 * p.newton_tol))
    throw Error(ErrorCode::NoConvergence,
                "refinement drift " + std::to_string(drift) +
                    " exceeds certificate bound; raise depth or the disk radius");

  check_level0_symbols(model, cfg, ca, p, fine);
  return fine;
}

TailCurve pull_back_tail(const MapModel& model, const PartitionConfig& cfg,
                         const TailCurve& parent, const SignedAddress& target,
                         const TraceParams& p) {
  validate(p);
  const SignedAddress ct{canonical(target.addr), target.sign};
  if (!same_address(shift(ct.addr), parent.signed_addr.addr))
    throw Error(ErrorCode::WrongDomain, "parent address is not the shift of the target");
  if (parent.level > 0 && parent.signed_addr.sign != ct.sign)
    throw Error(ErrorCode::WrongDomain, "parent sign does not match the target");
  if (parent.points.size() < 2)
    throw Error(ErrorCode::WrongDomain, "parent curve is empty");

  const Symbol s0 = symbol_at(ct.addr, 0);
  const TargetList tg = targets_from_parent(parent, /*trim_to_slit=*/false, cfg);

  Walker wk(model, cfg, p);
  wk.sign = ct.sign;
  wk.start(inverse_branch(model, cfg, tg.w[0], s0));
  const cplx z_far = wk.z;
  pull_targets(wk, tg, parent.markers);

  const Ray parent_ray = strip_ray(model, parent.signed_addr.addr);
  const double x_start = parent_ray.dir * tg.w[0].real();
  std::vector<cplx> ext = extend_far(model, cfg, p, parent_ray, x_start, z_far);

  return assemble(ct, parent.level + 1, std::move(ext), wk);
}

cplx bristle_select(const MapModel& model, cplx c, cplx incoming_dir, SignBit sign, int deg,
                    cplx before_dir, cplx after_dir) {
  if (deg < 2)
    throw Error(ErrorCode::DegenerateDirections, "bristles exist only at local degree >= 2");
  double fact = 1;
  for (int j = 2; j <= deg; ++j) fact *= j;
  const cplx lead = derivative(model, c, deg) / fact;
  if (!(std::abs(lead) > 0))
    throw Error(ErrorCode::DegenerateDirections, "vanishing leading coefficient");
  if (std::abs(unit(after_dir) - unit(before_dir)) < 1e-9)
    throw Error(ErrorCode::DegenerateDirections,
                "parent curve returns along itself at the critical value");

  const double base_in = std::arg(before_dir) - std::arg(lead);
  const double base_out = std::arg(after_dir) - std::arg(lead);
  const double in_angle = std::arg(incoming_dir);

  // Sanity: the incoming tangent must be one of the preimage directions of
  // before_dir.
  double best_in = std::numeric_limits<double>::infinity();
  for (int j = 0; j < deg; ++j) {
    const double th = (base_in + 2 * kPi * j) / deg;
    double d = std::remainder(th - in_angle, 2 * kPi / deg);
    best_in = std::min(best_in, std::fabs(d));
  }
  {
    // Compare against the nearest representative of the deg-fold family.
    double d = std::remainder((base_in / deg) - in_angle, 2 * kPi / deg);
    best_in = std::min(best_in, std::fabs(d));
  }
  if (best_in > 0.2)
    throw Error(ErrorCode::DegenerateDirections,
                "incoming direction is not a preimage of the parent tangent");

  // Outgoing candidates: the deg preimage directions of after_dir.  Pick the
  // immediate anticlockwise successor (+) or predecessor (-) of incoming_dir;
  // interleaving with the incoming family makes this the global neighbor.
  double best_off = std::numeric_limits<double>::infinity();
  for (int j = 0; j < deg; ++j) {
    const double th = (base_out + 2 * kPi * j) / deg;
    double off = sign == SignBit::Plus ? th - in_angle : in_angle - th;
    off = std::fmod(off, 2 * kPi);
    if (off <= 1e-12) off += 2 * kPi;
    best_off = std::min(best_off, off);
  }
  if (!(best_off < 2 * kPi))
    throw Error(ErrorCode::DegenerateDirections, "no outgoing bristle candidate");
  return std::polar(1.0, sign == SignBit::Plus ? in_angle + best_off : in_angle - best_off);
}

cplx bristle_select(const MapModel& model, cplx c, cplx incoming_dir, SignBit sign, int deg) {
  // Straight passage: the outgoing image direction opposes the incoming one,
  // so the neighbor sits at exactly pi/deg from the incoming tangent.
  (void)model;
  (void)c;
  if (deg < 2)
    throw Error(ErrorCode::DegenerateDirections, "bristles exist only at local degree >= 2");
  const double turn = kPi / deg;
  return incoming_dir * std::polar(1.0, sign == SignBit::Plus ? turn : -turn);
}

TailCurve gamma_curve(const MapModel& model, const PartitionConfig& cfg,
                      const SignedAddress& target, int N, const TraceParams& p) {
  validate(p);
  if (N < 0 || N > 64) throw Error(ErrorCode::BadConfig, "canonical-tail level must be in [0, 64]");
  const SignedAddress ct{canonical(target.addr), target.sign};
  std::vector<ExternalAddress> chain;
  chain.reserve(N + 1);
  chain.push_back(ct.addr);
  for (int k = 1; k <= N; ++k) chain.push_back(shift(chain.back()));

  TailCurve cur = trace_level0(model, cfg, chain[N], p);
  cur.signed_addr.sign = ct.sign;  // level-0 curves are shared by both signs
  for (int k = N - 1; k >= 0; --k)
    cur = pull_back_tail(model, cfg, cur, SignedAddress{chain[k], ct.sign}, p);
  return cur;
}

GammaDecomposition decompose_gamma(const TailCurve& g) {
  GammaDecomposition out;
  const std::size_t first =
      g.markers.empty() ? g.points.size() : g.markers.front().vertex_index;
  out.unbounded_tail.reserve(first);
  for (std::size_t i = 0; i < first; ++i) out.unbounded_tail.push_back(g.points[i].z);
  for (std::size_t m = 0; m < g.markers.size(); ++m) {
    out.critical_points.push_back(g.markers[m].point);
    const std::size_t lo = g.markers[m].vertex_index + 1;
    const std::size_t hi =
        m + 1 < g.markers.size() ? g.markers[m + 1].vertex_index : g.points.size();
    std::vector<cplx> seg;
    seg.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) seg.push_back(g.points[i].z);
    out.segments.push_back(std::move(seg));
  }
  return out;
}

long long count_signed_addresses(const MapModel& model, cplx z, int horizon,
                                 const TraceParams& p) {
  validate(p);
  if (horizon < 0 || horizon > 10000)
    throw Error(ErrorCode::BadConfig, "horizon must be in [0, 1e4]");
  const Orbit orbit = forward_orbit(model, z, horizon, p.bailout);
  if (!orbit.escaped)
    throw Error(ErrorCode::NotEscaping, "orbit did not pass the bailout within the horizon");

  long long product = 1;
  bool settled = false;
  for (std::size_t j = 0; j < orbit.points.size(); ++j) {
    const cplx w = orbit.points[j];
    cplx c;
    const bool has = nearest_critical_point(model, w, &c);
    const double d = has ? std::abs(w - c) : std::numeric_limits<double>::infinity();
    if (d <= p.crit_tol) {
      product *= local_degree(model, c);
    }
    // Once safely away from the critical lattice and growing, every further
    // factor is 1.
    if (d > 1.0 && j + 1 < orbit.points.size() &&
        std::abs(orbit.points[j + 1]) > std::max(10.0, 2.0 * std::abs(w))) {
      settled = true;
      break;
    }
  }
  if (!settled) {
    // Accept if the final iterate is clearly beyond any critical influence.
    const cplx last = orbit.points.back();
    cplx c;
    const bool has = nearest_critical_point(model, last, &c);
    if (has && std::abs(last - c) <= 1.0)
      throw Error(ErrorCode::HorizonTooSmall, "orbit still near the critical lattice at horizon");
  }
  return 2 * product;
}

}  // namespace crinis
