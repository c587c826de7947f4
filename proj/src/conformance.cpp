#include "crinis/conformance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "crinis/kernels.hpp"
#include "crinis/parallel.hpp"
#include "json.hpp"

namespace crinis {
namespace {

using json = nlohmann::json;
constexpr double kPi = 3.14159265358979323846;

long long elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               t0)
      .count();
}

std::string cplx_text(cplx z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
  return os.str();
}

kern::PolylineSoA curve_polyline(const TailCurve& c) {
  std::vector<cplx> v;
  v.reserve(c.points.size());
  for (const TimedPoint& q : c.points) v.push_back(q.z);
  return kern::build_polyline(v);
}

// ---------------------------------------------------------------------------
// Circle-crossing angles for the cyclic-order check
// ---------------------------------------------------------------------------

// Angle (measured from just past the delta ray, in (0, 2*pi]) of the last
// crossing of |z| = R along the curve (far end first).
double crossing_angle(const PartitionConfig& cfg, const TailCurve& curve, double R) {
  const auto& pts = curve.points;
  for (std::size_t i = pts.size(); i-- > 1;) {
    const double m0 = std::abs(pts[i - 1].z);
    const double m1 = std::abs(pts[i].z);
    const bool straddles = (m0 - R) * (m1 - R) <= 0 && m0 != m1;
    if (!straddles) continue;
    // Bisect the segment for |z| = R.
    cplx a = pts[i - 1].z, b = pts[i].z;
    double fa = std::abs(a) - R;
    for (int it = 0; it < 80; ++it) {
      const cplx mid = 0.5 * (a + b);
      const double fm = std::abs(mid) - R;
      if ((fa <= 0) == (fm <= 0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    const cplx zc = 0.5 * (a + b);
    double phi = std::fmod(std::arg(zc) - cfg.delta_angle, 2.0 * kPi);
    if (phi <= 0) phi += 2.0 * kPi;
    return phi;
  }
  throw Error(ErrorCode::CurveMissesCircle,
              "traced curve never crosses the comparison circle");
}

}  // namespace

// ---------------------------------------------------------------------------
// Expansion
// ---------------------------------------------------------------------------

CheckReport check_expansion(const MapModel& model, const PartitionConfig& cfg, int samples,
                            std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  if (samples <= 0) throw Error(ErrorCode::BadConfig, "sample count must be positive");
  // Samples live in tracts (outside the partition disk, image outside too);
  // expansion is measured in the hyperbolic metric based at the smaller
  // metric radius, which is what makes the factors uniformly exceed one.
  const double R = cfg.disk_radius;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_mod(std::log(1.1 * R), std::log(100.0 * R));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);

  CheckReport rep;
  rep.name = std::string("expansion:") + family_code(model.family);
  rep.threshold = 1.0;
  rep.samples = samples;
  rep.seed = seed;

  double worst = std::numeric_limits<double>::infinity();
  cplx worst_z{0, 0};
  int accepted = 0;
  long long tries = 0;
  const long long max_tries = 200LL * samples;
  while (accepted < samples) {
    if (++tries > max_tries)
      throw Error(ErrorCode::BadConfig, "could not draw enough in-tract samples");
    const cplx z = std::polar(std::exp(log_mod(rng)), angle(rng));
    const cplx fz = evaluate(model, z);
    if (!(std::abs(fz) > R)) continue;
    ++accepted;
    const double e = expansion_norm(model, cfg.metric_radius, z);
    if (e < worst) {
      worst = e;
      worst_z = z;
    }
  }
  rep.observed = worst;
  rep.passed = worst > 1.0;
  rep.detail = "minimum at z = " + cplx_text(worst_z);
  rep.runtime_ms = elapsed_ms(t0);
  return rep;
}

CheckReport check_expansion_values(const std::string& name, double R,
                                   const std::vector<std::array<cplx, 3>>& z_fz_dfz) {
  const auto t0 = std::chrono::steady_clock::now();
  if (z_fz_dfz.empty()) throw Error(ErrorCode::BadConfig, "no samples supplied");
  CheckReport rep;
  rep.name = name;
  rep.threshold = 1.0;
  rep.samples = static_cast<int>(z_fz_dfz.size());
  double worst = std::numeric_limits<double>::infinity();
  cplx worst_z{0, 0};
  for (const auto& s : z_fz_dfz) {
    const double e = expansion_norm_values(R, s[0], s[1], s[2]);
    if (e < worst) {
      worst = e;
      worst_z = s[0];
    }
  }
  rep.observed = worst;
  rep.passed = worst > 1.0;
  rep.detail = "minimum at z = " + cplx_text(worst_z);
  rep.runtime_ms = elapsed_ms(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// Cyclic order
// ---------------------------------------------------------------------------

CheckReport check_cyclic_order(const MapModel& model, const PartitionConfig& cfg,
                               const std::vector<ExternalAddress>& addrs, double R,
                               const TraceParams& p) {
  const auto t0 = std::chrono::steady_clock::now();
  TraceParams pr = p;
  pr.window_far = std::max(p.window_far, R * 1.1);

  // Canonicalize and deduplicate.
  std::vector<ExternalAddress> as;
  for (const ExternalAddress& a : addrs) {
    const ExternalAddress c = canonical(a);
    bool dup = false;
    for (const ExternalAddress& b : as) dup = dup || same_address(b, c);
    if (!dup) as.push_back(c);
  }
  if (as.size() < 3)
    throw Error(ErrorCode::BadConfig, "need at least three distinct addresses");

  // Shift closure: near-ties recurse through shifted addresses.
  std::vector<ExternalAddress> closure = as;
  for (std::size_t i = 0; i < closure.size(); ++i) {
    if (closure.size() > 4096)
      throw Error(ErrorCode::BadConfig, "shift closure exploded");
    const ExternalAddress sh = shift(closure[i]);
    bool dup = false;
    for (const ExternalAddress& b : closure) dup = dup || same_address(b, sh);
    if (!dup) closure.push_back(sh);
  }

  // Trace every curve in the closure and record its crossing angle.
  std::vector<double> angles(closure.size());
  std::vector<std::string> errors(closure.size());
  parallel_for(closure.size(), [&](std::size_t i) {
    const TailCurve curve = trace_level0(model, cfg, closure[i], pr);
    angles[i] = crossing_angle(cfg, curve, R);
  });

  auto index_of = [&](const ExternalAddress& a) -> std::size_t {
    for (std::size_t i = 0; i < closure.size(); ++i)
      if (same_address(closure[i], a)) return i;
    throw Error(ErrorCode::BadConfig, "address missing from the shift closure");
  };

  // Observed order: angle comparison, recursing through shifts on near-ties.
  std::function<bool(const ExternalAddress&, const ExternalAddress&, int)> less_rec =
      [&](const ExternalAddress& a, const ExternalAddress& b, int depth) -> bool {
    if (depth > 128)
      throw Error(ErrorCode::NoConvergence, "tied crossing angles did not resolve");
    const double pa = angles[index_of(a)];
    const double pb = angles[index_of(b)];
    if (std::fabs(pa - pb) > 1e-3) return pa < pb;
    if (!(symbol_at(a, 0) == symbol_at(b, 0)))
      throw Error(ErrorCode::NoConvergence,
                  "curves nearly coincide at the circle but start in different strips");
    return less_rec(shift(a), shift(b), depth + 1);
  };

  std::vector<std::size_t> order(as.size());
  for (std::size_t i = 0; i < as.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return less_rec(as[i], as[j], 0);
  });

  CheckReport rep;
  rep.name = std::string("cyclic-order:") + family_code(model.family);
  rep.threshold = 1.0;

  long long total = 0, good = 0;
  std::string first_fail;
  const std::size_t m = as.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t k = j + 1; k < m; ++k) {
        ++total;
        const bool ok = cyclic_triple(model, cfg, as[order[i]], as[order[j]], as[order[k]]);
        if (ok) {
          ++good;
        } else if (first_fail.empty()) {
          first_fail = "(" + format_address(as[order[i]]) + ", " + format_address(as[order[j]]) +
                       ", " + format_address(as[order[k]]) + ")";
        }
      }
  rep.samples = static_cast<int>(total);
  rep.observed = total ? static_cast<double>(good) / static_cast<double>(total) : 1.0;
  rep.passed = good == total;
  rep.detail = rep.passed ? "all triples agree" : "first mismatch " + first_fail;
  rep.runtime_ms = elapsed_ms(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence of neighboring tails
// ---------------------------------------------------------------------------

namespace {

// Restrict a curve to the potential window, interpolating both endpoints, and
// densify to the given spacing.
std::vector<cplx> window_polyline(const TailCurve& c, double t_lo, double t_hi, double spacing) {
  const auto& pts = c.points;
  if (pts.size() < 2 || !(t_lo < t_hi))
    throw Error(ErrorCode::BadConfig, "empty potential window");
  auto at_t = [&](double t) -> cplx {
    // t decreases along the curve.
    std::size_t lo = 0, hi = pts.size() - 1;
    if (t >= pts.front().t) return pts.front().z;
    if (t <= pts.back().t) return pts.back().z;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (pts[mid].t >= t)
        lo = mid;
      else
        hi = mid;
    }
    const double u = (pts[lo].t - t) / (pts[lo].t - pts[hi].t);
    return pts[lo].z + u * (pts[hi].z - pts[lo].z);
  };
  std::vector<cplx> raw;
  raw.push_back(at_t(t_hi));
  for (const TimedPoint& q : pts)
    if (q.t < t_hi && q.t > t_lo) raw.push_back(q.z);
  raw.push_back(at_t(t_lo));

  std::vector<cplx> dense;
  dense.push_back(raw.front());
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const cplx a = raw[i - 1], b = raw[i];
    const double len = std::abs(b - a);
    const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int j = 1; j <= n; ++j) dense.push_back(a + (b - a) * (static_cast<double>(j) / n));
  }
  return dense;
}

double hausdorff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  const kern::PolylineSoA pa = kern::build_polyline(a);
  const kern::PolylineSoA pb = kern::build_polyline(b);
  double d = 0;
  for (const cplx& z : a) d = std::max(d, kern::nearest_dist(pb, z));
  for (const cplx& z : b) d = std::max(d, kern::nearest_dist(pa, z));
  return d;
}

}  // namespace

CheckReport check_convergence(const MapModel& model, const PartitionConfig& cfg,
                              const SignedAddress& limit,
                              const std::vector<ExternalAddress>& approach, double t_lo,
                              double t_hi, const TraceParams& p) {
  const auto t0 = std::chrono::steady_clock::now();
  if (approach.empty()) throw Error(ErrorCode::BadConfig, "no approach addresses");

  const TailCurve lim = gamma_curve(model, cfg, limit, p.level, p);
  const std::vector<cplx> lim_window = window_polyline(lim, t_lo, t_hi, p.step / 2.0);

  std::vector<double> dists(approach.size());
  parallel_for(approach.size(), [&](std::size_t i) {
    const ExternalAddress a = canonical(approach[i]);
    const int level = std::min<int>(64, static_cast<int>(a.preperiod.size()) + 2);
    const TailCurve cur =
        gamma_curve(model, cfg, SignedAddress{a, limit.sign}, level, p);
    dists[i] = hausdorff(window_polyline(cur, t_lo, t_hi, p.step / 2.0), lim_window);
  });

  CheckReport rep;
  rep.name = std::string("convergence:") + family_code(model.family);
  rep.threshold = 1e-3;
  rep.samples = static_cast<int>(approach.size());
  rep.observed_series = dists;
  rep.observed = dists.back();
  bool monotone = true;
  for (std::size_t i = 2; i < dists.size(); ++i)
    monotone = monotone && dists[i] <= dists[i - 1] * (1.0 + 1e-9) + 1e-12;
  rep.passed = monotone && dists.back() < 1e-3;
  {
    std::ostringstream os;
    os << "window distances:";
    for (double d : dists) os << ' ' << d;
    rep.detail = os.str();
  }
  rep.runtime_ms = elapsed_ms(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// Counting
// ---------------------------------------------------------------------------

namespace {

// Eventual itinerary of w as an external address: symbols along the forward
// orbit until it is far out, then the strip of the last classified point
// repeats.  Adequate for counting test points, whose orbits settle into a
// single asymptotic strip.
ExternalAddress itinerary_address(const MapModel& model, const PartitionConfig& cfg, cplx w) {
  std::vector<Symbol> pre;
  cplx cur = w;
  Symbol far_sym{};
  bool settled = false;
  for (int k = 0; k < 48; ++k) {
    if (!std::isfinite(cur.real()) || !std::isfinite(cur.imag())) {
      if (pre.empty()) break;
      far_sym = pre.back();
      settled = true;
      break;
    }
    if (std::abs(cur) > 1e5) {
      far_sym = symbol_of_unchecked(model, cfg, cur);
      settled = true;
      break;
    }
    pre.push_back(symbol_of_unchecked(model, cfg, cur));
    cur = evaluate(model, cur);
  }
  if (!settled)
    throw Error(ErrorCode::HorizonTooSmall, "orbit did not reach the asymptotic regime");
  if (pre.empty()) pre.push_back(far_sym);
  return canonical(ExternalAddress{pre, std::vector<Symbol>{far_sym}});
}

}  // namespace

CheckReport check_counting(const MapModel& model,
                           const std::vector<std::pair<cplx, long long>>& points,
                           const TraceParams& p) {
  const auto t0 = std::chrono::steady_clock::now();
  if (points.empty()) throw Error(ErrorCode::BadConfig, "no counting points");
  const PartitionConfig cfg = make_partition(model);

  CheckReport rep;
  rep.name = std::string("counting:") + family_code(model.family);
  rep.threshold = 0.0;  // mismatches allowed: none
  rep.samples = static_cast<int>(points.size());

  long long mismatches = 0;
  std::string detail;
  const int kChildLevel = 6;
  const double kHitTol = 1e-6;

  for (const auto& [z, expected] : points) {
    const long long got = count_signed_addresses(model, z, 32, p);
    if (got != expected) {
      ++mismatches;
      if (detail.empty())
        detail = "formula count " + std::to_string(got) + " != expected " +
                 std::to_string(expected) + " at z = " + cplx_text(z);
      continue;
    }
    if (expected > 8) continue;

    // Sibling enumeration: candidate addresses A.B.T over first-symbol rows
    // -2..2, both sides and both signs, where T is the eventual itinerary of
    // f^2(z).  Parents B.T are traced once; children reuse them via pullback.
    const cplx fz = evaluate(model, z);
    const ExternalAddress T = itinerary_address(model, cfg, evaluate(model, fz));
    std::vector<Symbol> syms;
    for (int row = -2; row <= 2; ++row) {
      syms.push_back(Symbol{row, Side::R});
      syms.push_back(Symbol{row, Side::L});
    }

    struct ParentJob {
      SignBit sign;
      Symbol B;
    };
    std::vector<ParentJob> jobs;
    for (const SignBit sign : {SignBit::Minus, SignBit::Plus})
      for (const Symbol& B : syms) jobs.push_back(ParentJob{sign, B});

    // Candidate curves sharing (sign, B) reuse one traced parent; hits are
    // joined in job order so the report stays deterministic.
    std::vector<std::vector<std::string>> job_hits(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t ji) {
      const ParentJob& jb = jobs[ji];
      // Parent address = B followed by T.
      ExternalAddress bt;
      bt.preperiod = {jb.B};
      for (const Symbol& s : T.preperiod) bt.preperiod.push_back(s);
      bt.period = T.period;
      const ExternalAddress parent_ca = canonical(bt);

      TailCurve parent;
      try {
        parent = gamma_curve(model, cfg, SignedAddress{parent_ca, jb.sign}, kChildLevel - 1, p);
      } catch (const Error&) {
        return;  // strip/branch not realizable: no curve there
      }
      const kern::PolylineSoA ppoly = curve_polyline(parent);
      if (kern::nearest_dist(ppoly, fz) > kHitTol) return;

      for (const Symbol& A : syms) {
        ExternalAddress abt;
        abt.preperiod = {A, jb.B};
        for (const Symbol& s : T.preperiod) abt.preperiod.push_back(s);
        abt.period = T.period;
        const ExternalAddress child_ca = canonical(abt);
        TailCurve child;
        try {
          child = pull_back_tail(model, cfg, parent, SignedAddress{child_ca, jb.sign}, p);
        } catch (const Error&) {
          continue;
        }
        const kern::PolylineSoA cpoly = curve_polyline(child);
        if (kern::nearest_dist(cpoly, z) <= kHitTol)
          job_hits[ji].push_back(format_signed_address(SignedAddress{child_ca, jb.sign}));
      }
    });

    long long found = 0;
    std::vector<std::string> hits;
    for (const auto& hv : job_hits) {
      found += static_cast<long long>(hv.size());
      for (const std::string& h : hv) hits.push_back(h);
    }
    if (found != expected) {
      ++mismatches;
      if (detail.empty()) {
        detail = "enumeration found " + std::to_string(found) + " curves, expected " +
                 std::to_string(expected) + " at z = " + cplx_text(z) + " [";
        for (std::size_t i = 0; i < hits.size(); ++i)
          detail += (i ? ", " : "") + hits[i];
        detail += "]";
      }
    }
  }

  rep.observed = static_cast<double>(mismatches);
  rep.passed = mismatches == 0;
  rep.detail = rep.passed ? "formula and enumeration agree at every point" : detail;
  rep.runtime_ms = elapsed_ms(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

std::string reports_to_json(const std::vector<CheckReport>& reports, bool include_runtimes) {
  json arr = json::array();
  for (const CheckReport& r : reports) {
    json o;
    o["name"] = r.name;
    o["passed"] = r.passed;
    o["observed"] = r.observed;
    o["threshold"] = r.threshold;
    o["samples"] = r.samples;
    o["seed"] = r.seed;
    o["detail"] = r.detail;
    if (!r.observed_series.empty()) o["observed_series"] = r.observed_series;
    if (include_runtimes) o["runtime_ms"] = r.runtime_ms;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

}  // namespace crinis
