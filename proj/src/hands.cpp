#include "crinis/hands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "crinis/kernels.hpp"

namespace crinis {
namespace {

constexpr double kTailTol = 1e-8;  // distance at which a point counts as on a tail

double cross2(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

cplx unit_or_throw(cplx z) {
  const double m = std::abs(z);
  if (!(m > 0)) throw Error(ErrorCode::DegeneratePoint, "zero direction");
  return z / m;
}

// Distance from w to the delta ray (from disk_radius*e^{i*angle} to infinity).
double delta_distance(const PartitionConfig& cfg, cplx w) {
  const cplx dir = std::polar(1.0, cfg.delta_angle);
  const cplx base = cfg.disk_radius * dir;
  const cplx rel = w - base;
  const double along = rel.real() * dir.real() + rel.imag() * dir.imag();
  if (along <= 0) return std::abs(rel);
  return std::abs(rel - along * dir);
}

bool in_slit_plane(const PartitionConfig& cfg, cplx w) {
  return std::abs(w) > cfg.disk_radius && delta_distance(cfg, w) > 1e-12;
}

// ---------------------------------------------------------------------------
// Point-on-tail tests
// ---------------------------------------------------------------------------

kern::PolylineSoA tail_polyline(const TailCurve& tail) {
  std::vector<cplx> v;
  v.reserve(tail.points.size());
  for (const TimedPoint& q : tail.points) v.push_back(q.z);
  return kern::build_polyline(v);
}

double dist_to_tail(const TailCurve& tail, cplx w) {
  const kern::PolylineSoA poly = tail_polyline(tail);
  double d = kern::nearest_dist(poly, w);
  // Beyond the traced window the tail continues along its far asymptote.
  if (tail.points.size() >= 2) {
    const cplx far = tail.points[0].z;
    const cplx dir = unit_or_throw(far - tail.points[1].z);
    const cplx rel = w - far;
    const double along = rel.real() * dir.real() + rel.imag() * dir.imag();
    if (along > 0) d = std::min(d, std::abs(rel - along * dir));
  }
  return d;
}

bool on_tail(const TailCurve& tail, cplx w) { return dist_to_tail(tail, w) <= kTailTol; }

// ---------------------------------------------------------------------------
// Singular-tail tracing (backward walk along the orbit)
// ---------------------------------------------------------------------------

// Newton-continue the branch of f^{-1} through `seed` (f(seed) = targets[0])
// along the target polyline, near end first.  Plain continuation: singular
// tails of the shipped families never cross a critical value mid-curve.
std::vector<cplx> continue_branch(const MapModel& model, cplx seed,
                                  const std::vector<cplx>& targets, const TraceParams& p) {
  std::vector<cplx> out;
  out.push_back(seed);
  cplx z = seed;
  for (std::size_t i = 1; i < targets.size(); ++i) {
    cplx w_cur = targets[i - 1];
    const cplx w_next = targets[i];
    // Adaptive micro-stepping identical in spirit to the tracer's walk.
    int guard = 0;
    while (std::abs(w_next - w_cur) > 0) {
      if (++guard > 100000)
        throw Error(ErrorCode::NoConvergence, "tail continuation stalled");
      const cplx df = derivative(model, z, 1);
      const double dfn = std::abs(df);
      cplx w_to = w_next;
      double est = dfn > 0 ? std::abs(w_to - w_cur) / dfn
                           : std::numeric_limits<double>::infinity();
      cplx c;
      double cap = p.step;
      if (nearest_critical_point(model, z, &c))
        cap = std::min(p.step, std::max(p.step / 64.0, std::abs(z - c) / 8.0));
      int halvings = 0;
      while (est > cap && halvings < 60) {
        w_to = w_cur + 0.5 * (w_to - w_cur);
        est *= 0.5;
        ++halvings;
      }
      if (halvings >= 60)
        throw Error(ErrorCode::DepthExceeded, "tail continuation could not step");
      z = newton_solve(model, w_to, z + (w_to - w_cur) / df, p.newton_tol);
      w_cur = w_to;
    }
    out.push_back(z);
  }
  return out;
}

// First continuation step away from a critical seed c: pick the local m-th
// root branch with the largest real part (then largest imaginary part).
cplx critical_seed_step(const MapModel& model, cplx c, cplx w_target, const TraceParams& p) {
  const int m = local_degree(model, c);
  double fact = 1;
  for (int j = 2; j <= m; ++j) fact *= j;
  const cplx lead = derivative(model, c, m) / fact;
  const cplx v = evaluate(model, c);
  const cplx pow_arg = (w_target - v) / lead;
  const double r = std::pow(std::abs(pow_arg), 1.0 / m);
  const double base_th = std::arg(pow_arg) / m;
  cplx best{0, 0};
  bool have = false;
  for (int j = 0; j < m; ++j) {
    const cplx cand = c + std::polar(r, base_th + 2.0 * 3.14159265358979323846 * j / m);
    const cplx refined = newton_solve(model, w_target, cand, p.newton_tol);
    if (!have || refined.real() > best.real() + 1e-12 ||
        (std::abs(refined.real() - best.real()) <= 1e-12 && refined.imag() > best.imag())) {
      best = refined;
      have = true;
    }
  }
  if (!have) throw Error(ErrorCode::NoConvergence, "no root branch at the critical seed");
  return best;
}

// Far targets marching outward along the horizontal asymptote through w_far,
// on the absolute geometric lattice shared with the tracer's re-extension.
std::vector<cplx> far_ray_targets(const PartitionConfig& cfg, const TraceParams& p, cplx w_far,
                                  double reach_factor) {
  const double dirx = w_far.real() >= 0 ? 1.0 : -1.0;
  const double h = w_far.imag();
  const double x0 = std::fabs(w_far.real());
  const double dx = 0.9 * p.step;
  std::vector<cplx> out;
  out.push_back(w_far);
  int j = static_cast<int>(std::floor(std::log(std::max(x0, cfg.disk_radius * 1.0001) /
                                               cfg.disk_radius) /
                                      dx)) +
          1;
  for (;; ++j) {
    const double x = cfg.disk_radius * std::exp(j * dx);
    if (x <= x0 * (1 + 1e-12)) continue;
    out.push_back(cplx{dirx * x, h});
    if (x >= x0 * reach_factor) break;
    if (out.size() > 2000000) throw Error(ErrorCode::DepthExceeded, "tail anchor ray too long");
  }
  return out;
}

// Trace the canonical tail of an escaping singular value z: anchor a straight
// horizontal tail at a far orbit point and pull it back along the orbit.
TailCurve trace_singular_tail(const MapModel& model, const PartitionConfig& cfg, cplx z,
                              const TraceParams& p) {
  // March the orbit out to a safely-asymptotic anchor point.
  std::vector<cplx> orbit{z};
  while (std::abs(orbit.back()) < 1e5) {
    if (orbit.size() > 64)
      throw Error(ErrorCode::ConfigNotFound, "singular orbit escapes too slowly to anchor");
    orbit.push_back(evaluate(model, orbit.back()));
  }

  // Anchor tail: straight horizontal ray through the far orbit point, long
  // enough that the first pullback spans the requested window.
  const std::size_t M = orbit.size() - 1;
  std::vector<cplx> tail = far_ray_targets(cfg, p, orbit[M], std::exp(2.0));
  // The first pullback shrinks moduli logarithmically; give the anchor enough
  // reach by re-extending the child instead (below).

  for (std::size_t k = M; k-- > 0;) {
    const cplx seed = orbit[k];
    std::vector<cplx> child;
    cplx c;
    const bool critical_seed =
        nearest_critical_point(model, seed, &c) && std::abs(seed - c) <= 1e-12;
    if (critical_seed) {
      // Leave the critical point along the admissible root branch, then
      // continue plainly.
      if (tail.size() < 2) throw Error(ErrorCode::ConfigNotFound, "tail too short to pull");
      const cplx z1 = critical_seed_step(model, c, tail[1], p);
      std::vector<cplx> rest(tail.begin() + 1, tail.end());
      child = continue_branch(model, z1, rest, p);
      child.insert(child.begin(), c);
    } else {
      child = continue_branch(model, seed, tail, p);
    }
    // Re-extend the child outward along its own far asymptote so the next
    // pullback has a full-length parent.
    if (std::fabs(child.back().real()) < p.window_far) {
      const cplx far = child.back();
      const cplx w_far_img = evaluate(model, far);
      // Continue pulling the straight ray through f(child far end).
      std::vector<cplx> ray = far_ray_targets(cfg, p, w_far_img, std::exp(p.window_far));
      cplx zc = far;
      cplx w_cur = ray[0];
      for (std::size_t i = 1; i < ray.size(); ++i) {
        const cplx df = derivative(model, zc, 1);
        zc = newton_solve(model, ray[i], zc + (ray[i] - w_cur) / df, p.newton_tol);
        w_cur = ray[i];
        child.push_back(zc);
        if (std::fabs(zc.real()) >= p.window_far) break;
      }
    }
    tail = std::move(child);
  }

  // Assemble far-first.
  std::reverse(tail.begin(), tail.end());
  TailCurve out;
  out.level = 0;
  out.first_pulled = 0;
  std::vector<TimedPoint> pts;
  pts.reserve(tail.size());
  double t = std::abs(tail.front()) + 1.0;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    if (i > 0) t /= 1.0 + std::abs(tail[i] - tail[i - 1]);
    pts.push_back(TimedPoint{t, tail[i]});
  }
  out.points = std::move(pts);

  // Name the tail by its itinerary read off the far block.
  ExternalAddress addr;
  {
    cplx probe = out.points.front().z;
    const Symbol s0 = symbol_of_unchecked(model, cfg, probe);
    addr.preperiod.clear();
    addr.period = {s0};
    // One more symbol of accuracy where representable.
    const cplx fp = evaluate(model, probe);
    if (std::isfinite(fp.real()) && std::isfinite(fp.imag()) && std::abs(fp) < 1e300) {
      addr.preperiod = {s0};
      addr.period = {symbol_of_unchecked(model, cfg, fp)};
    }
  }
  out.signed_addr = SignedAddress{canonical(addr), SignBit::Plus};
  return out;
}

// ---------------------------------------------------------------------------
// W_n membership
// ---------------------------------------------------------------------------

struct RemovedSets {
  const MapModel& model;
  const PartitionConfig& cfg;
  const EscapingSingularData& esd;
  // x_members[n][i] == true iff esd tail i belongs to X_n.
  std::vector<std::vector<bool>> x_members;

  RemovedSets(const MapModel& m, const PartitionConfig& c, const EscapingSingularData& e, int max_n)
      : model(m), cfg(c), esd(e) {
    x_members.assign(static_cast<std::size_t>(max_n) + 1,
                     std::vector<bool>(esd.points.size(), false));
    for (int n = 1; n <= max_n; ++n)
      for (std::size_t i = 0; i < esd.points.size(); ++i)
        x_members[n][i] = in_W(esd.points[i], n - 1);
  }

  bool point_in_X(cplx w, int n) const {
    if (n <= 0 || n >= static_cast<int>(x_members.size())) return false;
    for (std::size_t i = 0; i < esd.points.size(); ++i)
      if (x_members[n][i] && on_tail(esd.tails[i], w)) return true;
    return false;
  }

  // z in W_m: f^{m+1}(z) in the slit plane and f^k(z) off X_{m+1-k}, k=1..m.
  bool in_W(cplx z, int m) const {
    cplx w = z;
    for (int k = 1; k <= m + 1; ++k) {
      const cplx next = evaluate(model, w);
      if (!std::isfinite(next.real()) || !std::isfinite(next.imag()) ||
          std::abs(next) > 1e150) {
        // The orbit left the representable range: from here it rides its own
        // escaping tail, so any nonempty later removed set captures it.
        for (int j = k; j <= m; ++j) {
          const int xi = m + 1 - j;
          if (xi >= 1 && xi < static_cast<int>(x_members.size()))
            for (const bool b : x_members[xi])
              if (b) return false;
        }
        return true;
      }
      w = next;
      if (k <= m && point_in_X(w, m + 1 - k)) return false;
    }
    return in_slit_plane(cfg, w);
  }
};

Symbol tail_strip_symbol(const MapModel& model, const PartitionConfig& cfg,
                         const TailCurve& tail) {
  return symbol_of_unchecked(model, cfg, tail.points.front().z);
}

SideFlag side_of_tail(const MapModel& model, const PartitionConfig& cfg, const TailCurve& tail,
                      cplx w) {
  if (!(symbol_of_unchecked(model, cfg, w) == tail_strip_symbol(model, cfg, tail)))
    return SideFlag::NotAdjacent;
  // Orient the tail from its finite base to the far end and read the side
  // from the cross product at the nearest segment.
  const kern::PolylineSoA poly = tail_polyline(tail);
  const kern::NearestHit hit = kern::nearest_point(poly, w);
  const std::size_t i = hit.seg;
  const cplx a = tail.points[i].z;
  const cplx b = tail.points[std::min(i + 1, tail.points.size() - 1)].z;
  const cplx t_far = unit_or_throw(a - b);  // decreasing index = toward the far end
  const cplx foot = a + (b - a) * hit.frac;
  const double cr = cross2(t_far, w - foot);
  if (cr == 0.0) return SideFlag::NotAdjacent;  // exactly on the tail line
  return cr > 0 ? SideFlag::Above : SideFlag::Below;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

std::pair<PartitionConfig, EscapingSingularData> build_partition(const MapModel& model,
                                                                 const TraceParams& p) {
  validate(p);
  PartitionConfig cfg = make_partition(model);
  for (int attempt = 0;; ++attempt) {
    if (attempt > 8)
      throw Error(ErrorCode::ConfigNotFound,
                  "no disk radius made the singular tails avoid the cut ray");
    // Collect escaping singular values.
    std::vector<cplx> sv = model.critical_values;
    sv.insert(sv.end(), model.asymptotic_values.begin(), model.asymptotic_values.end());
    std::sort(sv.begin(), sv.end(), [](cplx a, cplx b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    sv.erase(std::unique(sv.begin(), sv.end(),
                         [](cplx a, cplx b) { return std::abs(a - b) < 1e-12; }),
             sv.end());

    EscapingSingularData esd;
    for (const cplx& s : sv) {
      const Orbit orbit = forward_orbit(model, s, cfg.horizon, p.bailout);
      if (!orbit.escaped) continue;
      esd.points.push_back(s);
    }
    if (esd.points.empty())
      throw Error(ErrorCode::BadConfig,
                  "no singular value escapes: the removed sets are empty and every "
                  "hand is a plain fundamental domain");

    // Escape horizons: first index from which the orbit stays outside the disk.
    bool horizons_ok = true;
    for (const cplx& s : esd.points) {
      const Orbit orbit = forward_orbit(model, s, cfg.horizon, p.bailout);
      int last_inside = -1;
      for (std::size_t k = 0; k < orbit.points.size(); ++k)
        if (std::abs(orbit.points[k]) <= cfg.disk_radius) last_inside = static_cast<int>(k);
      if (last_inside + 1 >= static_cast<int>(orbit.points.size())) {
        horizons_ok = false;
        break;
      }
      esd.escape_horizons.push_back(last_inside + 1);
    }
    if (!horizons_ok) {
      cfg = make_partition(model, cfg.disk_radius * 2.0);
      continue;
    }

    // Trace the tails and verify they avoid the delta ray.
    bool tails_ok = true;
    for (const cplx& s : esd.points) {
      TailCurve tail = trace_singular_tail(model, cfg, s, p);
      for (const TimedPoint& q : tail.points)
        if (delta_distance(cfg, q.z) <= 1e-6) {
          tails_ok = false;
          break;
        }
      if (!tails_ok) break;
      esd.tails.push_back(std::move(tail));
    }
    if (!tails_ok) {
      cfg = make_partition(model, cfg.disk_radius * 2.0);
      continue;
    }
    return {cfg, std::move(esd)};
  }
}

std::vector<TailCurve> removed_set(const MapModel& model, const PartitionConfig& cfg,
                                   const EscapingSingularData& esd, int n) {
  if (n < 0 || n > 64) throw Error(ErrorCode::BadConfig, "removed-set index must be in [0, 64]");
  std::vector<TailCurve> out;
  if (n == 0) return out;
  RemovedSets rs(model, cfg, esd, n);
  for (std::size_t i = 0; i < esd.points.size(); ++i)
    if (rs.x_members[n][i]) out.push_back(esd.tails[i]);
  return out;
}

Hand hand_of_point(const MapModel& model, const PartitionConfig& cfg,
                   const EscapingSingularData& esd, cplx z, int n) {
  if (n < 0 || n > 64) throw Error(ErrorCode::BadConfig, "hand level must be in [0, 64]");
  RemovedSets rs(model, cfg, esd, n + 1);

  std::vector<cplx> w(static_cast<std::size_t>(n) + 1);
  w[0] = z;
  for (int k = 1; k <= n; ++k) w[k] = evaluate(model, w[k - 1]);

  for (int k = 0; k <= n; ++k) {
    if (!in_slit_plane(cfg, w[k]))
      throw Error(ErrorCode::NotInW,
                  "iterate " + std::to_string(k) + " is inside the disk or on the cut ray");
    if (rs.point_in_X(w[k], n - k + 1))
      throw Error(ErrorCode::NotInW,
                  "iterate " + std::to_string(k) + " lies on a removed tail");
  }

  Hand h;
  h.level = n;
  h.itinerary.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    try {
      h.itinerary.push_back(symbol_of(model, cfg, w[k]));
    } catch (const Error& e) {
      throw Error(ErrorCode::NotInW, "iterate " + std::to_string(k) +
                                         " has no fundamental-domain symbol (" + e.what() + ")");
    }
  }

  h.side_flags.reserve(static_cast<std::size_t>(n) * esd.points.size());
  for (int k = 1; k <= n; ++k) {
    const int xi = n - k + 1;
    for (std::size_t i = 0; i < esd.points.size(); ++i) {
      if (xi >= 1 && xi < static_cast<int>(rs.x_members.size()) && rs.x_members[xi][i])
        h.side_flags.push_back(side_of_tail(model, cfg, esd.tails[i], w[k]));
      else
        h.side_flags.push_back(SideFlag::NotAdjacent);
    }
  }
  return h;
}

HandAssignment assign_hand(const MapModel& model, const PartitionConfig& cfg,
                           const EscapingSingularData& esd, const TailCurve& g,
                           const TraceParams& p) {
  validate(p);
  const int n = g.level;

  // Probe stations: pulled-block vertices strictly outside the disk (the only
  // region where hands are defined), close to it, and away from markers.
  std::vector<std::size_t> stations;
  std::vector<std::size_t> outside;  // fallback pool: any usable vertex
  for (std::size_t i = std::max<std::size_t>(g.first_pulled, 1); i + 1 < g.points.size(); ++i) {
    const cplx z = g.points[i].z;
    if (std::abs(z) <= 1.02 * cfg.disk_radius) continue;
    bool near_marker = false;
    for (const CriticalMarker& m : g.markers)
      if (std::abs(z - m.point) <= 64.0 * p.crit_tol) near_marker = true;
    if (near_marker) continue;
    outside.push_back(i);
    if (std::abs(z) <= 2.0 * cfg.disk_radius) stations.push_back(i);
  }
  if (stations.empty() && !outside.empty()) {
    // No vertex in the preferred annulus: take the ones nearest the disk.
    std::sort(outside.begin(), outside.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(g.points[a].z) < std::abs(g.points[b].z);
    });
    outside.resize(std::min<std::size_t>(outside.size(), 3));
    stations = outside;
  }
  if (stations.empty()) throw Error(ErrorCode::ProbeInconsistent, "curve has no usable stations");
  // Keep at most 3 spread-out stations.
  std::vector<std::size_t> picks;
  picks.push_back(stations.front());
  if (stations.size() > 2) picks.push_back(stations[stations.size() / 2]);
  if (stations.size() > 1) picks.push_back(stations.back());

  // Witness addresses certify the local cyclic order around the target.
  {
    const ExternalAddress& s = g.signed_addr.addr;
    bool ok = false;
    for (std::size_t d = 2; d <= 6 && !ok; ++d) {
      ExternalAddress up = s, dn = s;
      std::vector<Symbol> su, sd;
      for (std::size_t k = 0; k < d + 1; ++k) {
        su.push_back(symbol_at(s, k));
        sd.push_back(symbol_at(s, k));
      }
      su[d] = symbol_successor(model, su[d]);
      sd[d] = symbol_predecessor(model, sd[d]);
      up = make_address(su, s.period);
      dn = make_address(sd, s.period);
      try {
        ok = cyclic_triple(model, cfg, dn, s, up);
      } catch (const Error&) {
        ok = false;
      }
    }
    if (!ok)
      throw Error(ErrorCode::ProbeInconsistent,
                  "no witness pair brackets the target address in cyclic order");
  }

  // Shifted addresses of the curve: iterate k of a curve point rides (or
  // neighbors) the constituent of shift^k of the curve's address.
  std::vector<ExternalAddress> shifted(static_cast<std::size_t>(n) + 1);
  shifted[0] = canonical(g.signed_addr.addr);
  for (int k = 1; k <= n; ++k) shifted[k] = shift(shifted[k - 1]);

  // Classify one station.  Iterates squeezed onto a removed tail cannot be
  // resolved geometrically (the offset shrinks doubly exponentially), so the
  // side is read combinatorially: the vertical order of two constituents at a
  // shared prefix equals the lexicographic order of their addresses, measured
  // against the tail's own address; an exact address tie is the genuine
  // boundary case and is resolved by the curve's sign (Plus = successor side).
  RemovedSets rs(model, cfg, esd, n + 1);
  bool boundary = false;
  auto classify = [&](cplx z) {
    Hand h;
    h.level = n;
    std::vector<cplx> w(static_cast<std::size_t>(n) + 1);
    w[0] = z;
    for (int k = 1; k <= n; ++k) w[k] = evaluate(model, w[k - 1]);
    for (int k = 0; k <= n; ++k) {
      if (!in_slit_plane(cfg, w[k]))
        throw Error(ErrorCode::ProbeInconsistent,
                    "station iterate " + std::to_string(k) + " left the slit plane");
      h.itinerary.push_back(symbol_of(model, cfg, w[k]));
      // Riding a removed tail whose address ties with ours marks the curve as
      // a hand boundary even when the slot itself carries no side flag.
      const int xi = n - k + 1;
      if (xi >= 1 && xi < static_cast<int>(rs.x_members.size()))
        for (std::size_t i = 0; i < esd.points.size(); ++i)
          if (rs.x_members[xi][i] && on_tail(esd.tails[i], w[k]) &&
              same_address(shifted[k], esd.tails[i].signed_addr.addr))
            boundary = true;
    }
    h.side_flags.reserve(static_cast<std::size_t>(n) * esd.points.size());
    for (int k = 1; k <= n; ++k) {
      const int xi = n - k + 1;
      for (std::size_t i = 0; i < esd.points.size(); ++i) {
        if (!(xi >= 1 && xi < static_cast<int>(rs.x_members.size()) && rs.x_members[xi][i])) {
          h.side_flags.push_back(SideFlag::NotAdjacent);
          continue;
        }
        if (on_tail(esd.tails[i], w[k])) {
          const Ordering o =
              lex_compare(model, cfg, shifted[k], esd.tails[i].signed_addr.addr);
          if (o == Ordering::EQ)
            h.side_flags.push_back(g.signed_addr.sign == SignBit::Plus ? SideFlag::Above
                                                                       : SideFlag::Below);
          else
            h.side_flags.push_back(o == Ordering::GT ? SideFlag::Above : SideFlag::Below);
        } else {
          h.side_flags.push_back(side_of_tail(model, cfg, esd.tails[i], w[k]));
        }
      }
    }
    return h;
  };

  bool have = false;
  Hand hand;
  for (std::size_t si = 0; si < picks.size(); ++si) {
    const Hand local = classify(g.points[picks[si]].z);
    if (!have) {
      hand = local;
      have = true;
    } else if (!(hand == local)) {
      throw Error(ErrorCode::ProbeInconsistent, "probe stations disagree on the hand");
    }
  }

  HandAssignment out;
  out.target = g.signed_addr;
  out.level = n;
  out.hand = hand;
  out.kind = boundary ? AssignmentKind::Boundary : AssignmentKind::Interior;
  return out;
}

AddressInterval address_interval(const MapModel& model, const PartitionConfig& cfg,
                                 const EscapingSingularData& esd, const SignedAddress& target,
                                 int n, const TraceParams& p) {
  validate(p);
  const SignedAddress ct{canonical(target.addr), target.sign};
  const HandAssignment base = assign_hand(model, cfg, esd, gamma_curve(model, cfg, ct, n, p), p);

  auto bump = [&](const ExternalAddress& a, int dir, std::size_t d) {
    std::vector<Symbol> pre;
    for (std::size_t k = 0; k <= d; ++k) pre.push_back(symbol_at(a, k));
    pre[d] = dir > 0 ? symbol_successor(model, pre[d]) : symbol_predecessor(model, pre[d]);
    return make_address(pre, a.period.empty() ? std::vector<Symbol>{pre.back()} : a.period);
  };

  for (std::size_t d = static_cast<std::size_t>(n) + 2; d <= static_cast<std::size_t>(n) + 6;
       ++d) {
    AddressInterval iv;
    if (base.kind == AssignmentKind::Interior) {
      iv.lo = SignedAddress{bump(ct.addr, -1, d), SignBit::Plus};
      iv.hi = SignedAddress{bump(ct.addr, +1, d), SignBit::Minus};
    } else if (ct.sign == SignBit::Plus) {
      iv.lo = SignedAddress{ct.addr, SignBit::Minus};
      iv.hi = SignedAddress{bump(ct.addr, +1, d), SignBit::Plus};
    } else {
      iv.lo = SignedAddress{bump(ct.addr, -1, d), SignBit::Minus};
      iv.hi = SignedAddress{ct.addr, SignBit::Plus};
    }
    if (!interval_contains(model, cfg, iv, ct)) continue;

    // Certify on sample addresses strictly inside the interval.
    std::vector<SignedAddress> samples;
    if (base.kind == AssignmentKind::Interior || ct.sign == SignBit::Plus)
      samples.push_back(SignedAddress{bump(ct.addr, +1, d + 2), SignBit::Minus});
    if (base.kind == AssignmentKind::Interior || ct.sign == SignBit::Minus)
      samples.push_back(SignedAddress{bump(ct.addr, -1, d + 2), SignBit::Plus});
    samples.push_back(SignedAddress{ct.addr, ct.sign});

    bool ok = true;
    for (const SignedAddress& sa : samples) {
      if (!interval_contains(model, cfg, iv, sa)) {
        ok = false;
        break;
      }
      try {
        const HandAssignment ha =
            assign_hand(model, cfg, esd, gamma_curve(model, cfg, sa, n, p), p);
        if (!(ha.hand == base.hand)) {
          ok = false;
          break;
        }
      } catch (const Error&) {
        ok = false;
        break;
      }
    }
    if (ok) return iv;
  }
  throw Error(ErrorCode::IntervalCollapsed,
              "no certified interval around the target at this level");
}

cplx inverse_chain(const MapModel& model, const PartitionConfig& cfg, const SignedAddress& target,
                   int n, cplx w, const TraceParams& p) {
  validate(p);
  if (n < 0 || n > 64) throw Error(ErrorCode::BadConfig, "chain length must be in [0, 64]");
  const ExternalAddress addr = canonical(target.addr);

  // If checkable, the landing symbol of w must match the address.
  if (std::abs(w) > cfg.disk_radius && delta_distance(cfg, w) > 1e-12 &&
      std::abs(evaluate(model, w)) > cfg.disk_radius) {
    const Symbol got = symbol_of_unchecked(model, cfg, w);
    if (!(got == symbol_at(addr, static_cast<std::size_t>(n))))
      throw Error(ErrorCode::WrongDomain, "w lies in strip " + symbol_text(got) +
                                              " but the address requires " +
                                              symbol_text(symbol_at(addr, n)));
  }

  cplx z = w;
  for (int k = n - 1; k >= 0; --k) {
    const Symbol s = symbol_at(addr, static_cast<std::size_t>(k));
    if (in_slit_plane(cfg, z)) {
      z = inverse_branch(model, cfg, z, s);
      continue;
    }
    // The value left the slit plane: continue the strip branch radially from a
    // far point on the same ray through the origin, detouring around critical
    // values.
    const double far_mod = 1.5 * cfg.disk_radius;
    if (!(std::abs(z) > 0))
      throw Error(ErrorCode::BranchObstructed, "intermediate value hit the origin");
    const cplx w_far = z * (far_mod / std::abs(z));
    cplx cur;
    try {
      cur = inverse_branch(model, cfg, w_far, s);
    } catch (const Error& e) {
      throw Error(ErrorCode::BranchObstructed,
                  std::string("no strip branch at the radial anchor (") + e.what() + ")");
    }

    // Build the radial target path with circular detours.
    std::vector<cplx> path{w_far};
    const cplx dir = z - w_far;
    const double len = std::abs(dir);
    const cplx u = dir / len;
    struct Detour {
      double along;
      cplx v;
    };
    std::vector<Detour> detours;
    const double r_detour = 1e-2;
    for (const cplx& v : model.critical_values) {
      const double along = ((v - w_far) * std::conj(u)).real();
      if (along <= 0 || along >= len) continue;
      const cplx foot = w_far + along * u;
      if (std::abs(foot - v) < r_detour) {
        if (std::abs(z - v) < 1e-9)
          throw Error(ErrorCode::BranchObstructed, "target value is a critical value");
        detours.push_back(Detour{along, v});
      }
    }
    std::sort(detours.begin(), detours.end(),
              [](const Detour& a, const Detour& b) { return a.along < b.along; });
    for (const Detour& dt : detours) {
      const cplx v = dt.v;
      const cplx rel_in = w_far + dt.along * u - v;
      const double phi_in = std::arg(rel_in.real() == 0 && rel_in.imag() == 0
                                         ? -u
                                         : rel_in);
      // Half-turn arc around v, anticlockwise for Plus, clockwise for Minus.
      const double turn = target.sign == SignBit::Plus ? 3.14159265358979323846
                                                       : -3.14159265358979323846;
      const cplx entry = v + std::polar(r_detour, phi_in);
      path.push_back(entry);
      const int arc_steps = 8;
      for (int j = 1; j <= arc_steps; ++j)
        path.push_back(v + std::polar(r_detour, phi_in + turn * j / arc_steps));
    }
    path.push_back(z);

    // Newton-continue along the path.
    for (std::size_t i = 1; i < path.size(); ++i) {
      cplx w_cur = path[i - 1];
      const cplx w_to = path[i];
      int guard = 0;
      cplx step_target = w_to;
      while (std::abs(w_cur - w_to) > 0) {
        if (++guard > 100000)
          throw Error(ErrorCode::BranchObstructed, "radial continuation stalled");
        const cplx df = derivative(model, cur, 1);
        const double dfn = std::abs(df);
        step_target = w_to;
        double est = dfn > 0 ? std::abs(step_target - w_cur) / dfn
                             : std::numeric_limits<double>::infinity();
        int halvings = 0;
        while (est > p.step && halvings < 60) {
          step_target = w_cur + 0.5 * (step_target - w_cur);
          est *= 0.5;
          ++halvings;
        }
        if (halvings >= 60)
          throw Error(ErrorCode::BranchObstructed, "radial continuation could not step");
        cur = newton_solve(model, step_target, cur + (step_target - w_cur) / df, p.newton_tol);
        w_cur = step_target;
      }
    }
    z = cur;
  }

  // Postcondition.
  cplx fz = z;
  for (int k = 0; k < n; ++k) fz = evaluate(model, fz);
  if (!(std::abs(fz - w) <= 1e-9 * std::max(1.0, std::abs(w))))
    throw Error(ErrorCode::NoConvergence, "chained branches missed the target value");
  return z;
}

std::string hand_text(const Hand& h) {
  std::ostringstream os;
  os << "{\"level\":" << h.level << ",\"itinerary\":[";
  for (std::size_t i = 0; i < h.itinerary.size(); ++i) {
    if (i) os << ',';
    os << '"' << symbol_text(h.itinerary[i]) << '"';
  }
  os << "],\"sides\":[";
  for (std::size_t i = 0; i < h.side_flags.size(); ++i) {
    if (i) os << ',';
    os << '"'
       << (h.side_flags[i] == SideFlag::Above ? 'A'
                                              : h.side_flags[i] == SideFlag::Below ? 'B' : 'N')
       << '"';
  }
  os << "]}";
  return os.str();
}

}  // namespace crinis
