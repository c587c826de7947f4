#include "crinis/map_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crinis {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.283185307179586476925;

// Unwound argument of cosh(z) on the right half-plane: cosh z =
// e^z (1 + e^{-2z}) / 2, so the phase is Im z plus a correction that decays
// like e^{-2 Re z}.  Valid for Re z > 0.
double right_phase(cplx z) {
  cplx corr = std::log(1.0 + std::exp(-2.0 * z));
  return z.imag() + corr.imag();
}

// Mirror image for the left half-plane (Re z < 0): cosh z = e^{-z}(1 + e^{2z})/2.
double left_phase(cplx z) {
  cplx corr = std::log(1.0 + std::exp(2.0 * z));
  return -z.imag() + corr.imag();
}

// Phase period of one row of fundamental domains.
double row_period(Family f) { return f == Family::CoshSq ? kPi : kTwoPi; }

// Phase of the lowest cut bounding right-side rows: cuts sit where
// arg f == delta_angle (mod 2pi).
double cut_offset(const MapModel& model, const PartitionConfig& cfg) {
  switch (model.family) {
    case Family::Cosh: return cfg.delta_angle;
    case Family::CoshFam: return cfg.delta_angle - std::arg(model.param);
    case Family::CoshSq: return cfg.delta_angle / 2.0;
    case Family::Exp: return cfg.delta_angle - std::arg(model.param);
  }
  return cfg.delta_angle;
}

int row_from_phase(double phase, double cut, double period) {
  return static_cast<int>(std::floor((phase - cut) / period)) + 1;
}

// Phase value congruent to `target` (mod period) inside [low, low + period).
double phase_in_row(double target, double low, double period) {
  double t = std::fmod(target - low, period);
  if (t < 0) t += period;
  return low + t;
}

double wrap_positive(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a <= 0) a += kTwoPi;
  return a;
}

}  // namespace

// ============================================================================
// Construction
// ============================================================================

MapModel make_cosh() {
  MapModel m;
  m.family = Family::Cosh;
  m.param = cplx{1.0, 0.0};
  m.critical_values = {cplx{1.0, 0.0}, cplx{-1.0, 0.0}};
  m.singular_radius = 1.0;
  return m;
}

MapModel make_coshsq() {
  MapModel m;
  m.family = Family::CoshSq;
  m.param = cplx{1.0, 0.0};
  m.critical_values = {cplx{1.0, 0.0}, cplx{0.0, 0.0}};
  m.singular_radius = 1.0;
  return m;
}

MapModel make_exp(cplx lambda) {
  if (std::abs(lambda) == 0.0) throw Error(ErrorCode::BadConfig, "exp family needs lambda != 0");
  MapModel m;
  m.family = Family::Exp;
  m.param = lambda;
  m.singular_radius = std::max(0.25, std::abs(lambda) / 4.0);
  return m;
}

MapModel make_cosh_family(cplx a) {
  if (std::abs(a) == 0.0) throw Error(ErrorCode::BadConfig, "cosh family needs a != 0");
  MapModel m;
  m.family = Family::CoshFam;
  m.param = a;
  m.critical_values = {a, -a};
  m.singular_radius = std::abs(a);
  return m;
}

const char* family_code(Family f) {
  switch (f) {
    case Family::Cosh: return "cosh";
    case Family::CoshSq: return "coshsq";
    case Family::Exp: return "exp";
    case Family::CoshFam: return "coshfam";
  }
  return "cosh";
}

Family family_from_code(const std::string& code) {
  if (code == "cosh") return Family::Cosh;
  if (code == "coshsq") return Family::CoshSq;
  if (code == "exp") return Family::Exp;
  if (code == "coshfam") return Family::CoshFam;
  throw Error(ErrorCode::ParseError, "unknown family code '" + code + "'");
}

std::string symbol_text(const Symbol& s) {
  return std::to_string(s.row) + (s.side == Side::R ? "R" : "L");
}

Symbol symbol_from_text(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::ParseError, "empty symbol");
  char side = text.back();
  if (side != 'L' && side != 'R')
    throw Error(ErrorCode::ParseError, "symbol '" + text + "' must end in L or R");
  const std::string digits = text.substr(0, text.size() - 1);
  if (digits.empty()) throw Error(ErrorCode::ParseError, "symbol '" + text + "' lacks a row");
  std::size_t pos = 0;
  int row = 0;
  try {
    row = std::stoi(digits, &pos);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "bad row in symbol '" + text + "'");
  }
  if (pos != digits.size())
    throw Error(ErrorCode::ParseError, "trailing characters in symbol '" + text + "'");
  return Symbol{row, side == 'R' ? Side::R : Side::L};
}

PartitionConfig make_partition(const MapModel& model) {
  double r;
  switch (model.family) {
    case Family::Cosh:
    case Family::CoshSq: r = 3.0; break;
    case Family::Exp: r = std::max(2.0, 2.0 * std::abs(model.param)); break;
    case Family::CoshFam: r = 3.0 * std::max(1.0, std::abs(model.param)); break;
    default: r = 3.0; break;
  }
  return make_partition(model, r);
}

PartitionConfig make_partition(const MapModel& model, double disk_radius) {
  double angle = model.family == Family::Exp ? kPi : kPi / 2.0;
  return make_partition(model, disk_radius, angle);
}

PartitionConfig make_partition(const MapModel& model, double disk_radius, double delta_angle) {
  PartitionConfig cfg;
  cfg.disk_radius = disk_radius;
  cfg.delta_angle = delta_angle;
  cfg.metric_radius = 1.5 * model.singular_radius;
  cfg.probe_radius = 100.0 * disk_radius;
  if (disk_radius < model.singular_radius)
    throw Error(ErrorCode::BadConfig, "disk radius smaller than the singular radius");
  if (std::abs(evaluate(model, cplx{0, 0})) >= disk_radius)
    throw Error(ErrorCode::BadConfig, "disk must contain the image of the origin");
  if (cfg.metric_radius >= disk_radius || cfg.metric_radius < model.singular_radius)
    throw Error(ErrorCode::BadConfig, "metric radius must lie in [singular_radius, disk_radius)");
  return cfg;
}

// ============================================================================
// Evaluation
// ============================================================================

cplx evaluate(const MapModel& model, cplx z) {
  switch (model.family) {
    case Family::Cosh: return std::cosh(z);
    case Family::CoshSq: {
      cplx c = std::cosh(z);
      return c * c;
    }
    case Family::Exp: return model.param * std::exp(z);
    case Family::CoshFam: return model.param * std::cosh(z);
  }
  return {};
}

cplx derivative(const MapModel& model, cplx z, int order) {
  if (order < 1 || order > 8)
    throw Error(ErrorCode::OrderOutOfRange, "derivative order must be in [1, 8]");
  switch (model.family) {
    case Family::Cosh: return (order % 2 == 1) ? std::sinh(z) : std::cosh(z);
    case Family::CoshSq: {
      // cosh^2 z = (1 + cosh 2z)/2, so the k-th derivative is
      // 2^{k-1} sinh(2z) (k odd) or 2^{k-1} cosh(2z) (k even).
      double scale = std::ldexp(1.0, order - 1);
      cplx w = 2.0 * z;
      return scale * ((order % 2 == 1) ? std::sinh(w) : std::cosh(w));
    }
    case Family::Exp: return model.param * std::exp(z);
    case Family::CoshFam: return model.param * ((order % 2 == 1) ? std::sinh(z) : std::cosh(z));
  }
  return {};
}

int local_degree(const MapModel& model, cplx z0) {
  double mags[9] = {0};
  double peak = 0;
  for (int k = 1; k <= 8; ++k) {
    double fact = 1;
    for (int j = 2; j <= k; ++j) fact *= j;
    mags[k] = std::abs(derivative(model, z0, k)) / fact;
    peak = std::max(peak, mags[k]);
  }
  if (!(peak > 0))
    throw Error(ErrorCode::DegeneratePoint, "all derivatives vanish to working precision");
  for (int k = 1; k <= 8; ++k)
    if (mags[k] > 1e-9 * peak) return k;
  throw Error(ErrorCode::DegeneratePoint, "no nonzero derivative below order 9");
}

std::vector<cplx> critical_points_in(const MapModel& model, const Box& box) {
  std::vector<cplx> out;
  if (model.family == Family::Exp) return out;
  // Critical points of the shipped cosh-type maps form a lattice on the
  // imaginary axis: k*pi for cosh and a*cosh, k*pi/2 for cosh^2.
  const double pitch = model.family == Family::CoshSq ? kPi / 2.0 : kPi;
  if (box.re_lo > 0.0 || box.re_hi < 0.0) return out;
  const int k_lo = static_cast<int>(std::ceil(box.im_lo / pitch - 1e-12));
  const int k_hi = static_cast<int>(std::floor(box.im_hi / pitch + 1e-12));
  for (int k = k_lo; k <= k_hi; ++k) out.emplace_back(0.0, k * pitch);
  return out;
}

bool nearest_critical_point(const MapModel& model, cplx z, cplx* out) {
  if (model.family == Family::Exp) return false;
  const double pitch = model.family == Family::CoshSq ? kPi / 2.0 : kPi;
  *out = cplx{0.0, std::round(z.imag() / pitch) * pitch};
  return true;
}

// ============================================================================
// Symbols
// ============================================================================

Symbol symbol_of_unchecked(const MapModel& model, const PartitionConfig& cfg, cplx z) {
  const double cut = cut_offset(model, cfg);
  const double period = row_period(model.family);
  if (model.family == Family::Exp) {
    return Symbol{row_from_phase(z.imag(), cut, period), Side::R};
  }
  if (z.real() >= 0.0) {
    return Symbol{row_from_phase(right_phase(z), cut, period), Side::R};
  }
  const double v = left_phase(z);
  return Symbol{-(row_from_phase(v, cut, period)), Side::L};
}

namespace {

double dist_to_delta(const PartitionConfig& cfg, cplx z) {
  const cplx dir{std::cos(cfg.delta_angle), std::sin(cfg.delta_angle)};
  const cplx base = cfg.disk_radius * dir;
  const cplx rel = z - base;
  const double along = rel.real() * dir.real() + rel.imag() * dir.imag();
  const double t = std::max(0.0, along);
  return std::abs(rel - t * dir);
}

}  // namespace

Symbol symbol_of(const MapModel& model, const PartitionConfig& cfg, cplx z) {
  if (std::abs(z) <= cfg.disk_radius)
    throw Error(ErrorCode::InsideD, "point lies in the closed partition disk");
  if (dist_to_delta(cfg, z) <= 1e-12 * std::max(1.0, std::abs(z)))
    throw Error(ErrorCode::OnDelta, "point lies on the delta ray");
  const cplx fz = evaluate(model, z);
  if (std::isfinite(fz.real()) && std::isfinite(fz.imag())) {
    if (!(std::abs(fz) > cfg.disk_radius))
      throw Error(ErrorCode::NotInTract, "image modulus does not exceed the disk radius");
    if (dist_to_delta(cfg, fz) <= 1e-12 * std::max(1.0, std::abs(fz)))
      throw Error(ErrorCode::OnDelta, "point lies on a boundary cut (preimage of delta)");
  }
  // An overflowing image certifies a tract interior far beyond the cuts: the
  // relative distance band to any cut preimage is astronomically wide there,
  // so the proximity checks carry no information and are skipped.
  return symbol_of_unchecked(model, cfg, z);
}

cplx newton_solve(const MapModel& model, cplx w, cplx seed, double tol, int max_iter) {
  cplx z = seed;
  const double target = tol * std::max(1.0, std::abs(w));
  for (int i = 0; i < max_iter; ++i) {
    const cplx r = evaluate(model, z) - w;
    if (std::abs(r) <= target) return z;
    const cplx d = derivative(model, z, 1);
    if (!(std::abs(d) > 0))
      throw Error(ErrorCode::NoConvergence, "derivative vanished during Newton iteration");
    const cplx step = r / d;
    z -= step;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw Error(ErrorCode::NoConvergence, "Newton iterate left the finite plane");
  }
  if (std::abs(evaluate(model, z) - w) <= 100.0 * target) return z;
  throw Error(ErrorCode::NoConvergence, "Newton iteration did not reach tolerance");
}

cplx inverse_branch(const MapModel& model, const PartitionConfig& cfg, cplx w, const Symbol& s) {
  if (!(std::abs(w) > cfg.disk_radius) ||
      dist_to_delta(cfg, w) <= 1e-12 * std::max(1.0, std::abs(w)))
    throw Error(ErrorCode::WrongDomain, "target value is outside the slit plane");
  if (model.family == Family::Exp && s.side == Side::L)
    throw Error(ErrorCode::WrongDomain, "exponential maps have right-side symbols only");

  cplx z0;
  switch (model.family) {
    case Family::Exp: {
      z0 = std::log(w / model.param);
      const int r0 = symbol_of_unchecked(model, cfg, z0).row;
      z0 += cplx{0.0, kTwoPi * (s.row - r0)};
      break;
    }
    case Family::Cosh:
    case Family::CoshFam: {
      const cplx zeta = std::acosh(w / model.param);  // principal branch, Re >= 0
      if (s.side == Side::R) {
        const int r0 = symbol_of_unchecked(model, cfg, zeta).row;
        z0 = zeta + cplx{0.0, kTwoPi * (s.row - r0)};
      } else {
        const int r0 = symbol_of_unchecked(model, cfg, -zeta).row;
        z0 = -zeta + cplx{0.0, kTwoPi * (s.row - r0)};
      }
      break;
    }
    case Family::CoshSq: {
      const cplx root = std::sqrt(w);
      // cosh z = +sqrt(w) or -sqrt(w); a 2 pi i shift moves two rows (the row
      // pitch is pi), so the candidates have complementary row parity and
      // exactly one matches the requested row.
      const cplx cands[2] = {std::acosh(root), std::acosh(-root)};
      bool done = false;
      for (const cplx& zeta : cands) {
        const cplx base = s.side == Side::R ? zeta : -zeta;
        const int r0 = symbol_of_unchecked(model, cfg, base).row;
        if ((s.row - r0) % 2 == 0) {
          z0 = base + cplx{0.0, kTwoPi * double((s.row - r0) / 2)};
          done = true;
          break;
        }
      }
      if (!done) throw Error(ErrorCode::NoConvergence, "no branch candidate matched the row parity");
      break;
    }
  }

  cplx z = newton_solve(model, w, z0, 1e-12);
  Symbol got = symbol_of_unchecked(model, cfg, z);
  if (!(got == s)) {
    // One corrective row shift covers the rare case of a seed landing at a
    // strip edge; anything else means the requested branch does not exist.
    const double period = kTwoPi;
    const int delta = s.row - got.row;
    if (got.side == s.side && std::abs(delta) <= 2 && model.family != Family::CoshSq) {
      z = newton_solve(model, w, z + cplx{0.0, period * delta}, 1e-12);
      got = symbol_of_unchecked(model, cfg, z);
    }
    if (!(got == s))
      throw Error(ErrorCode::WrongDomain, "inverse branch landed in symbol " + symbol_text(got) +
                                              " instead of " + symbol_text(s));
  }
  return z;
}

Orbit forward_orbit(const MapModel& model, cplx z, int n, double bailout) {
  if (n < 0 || n > 10000) throw Error(ErrorCode::BadConfig, "orbit length must be in [0, 1e4]");
  Orbit orbit;
  orbit.points.push_back(z);
  for (int i = 0; i < n; ++i) {
    const cplx next = evaluate(model, orbit.points.back());
    if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) {
      orbit.escaped = true;  // overflow counts as escape; keep the last finite iterate
      break;
    }
    orbit.points.push_back(next);
    if (std::abs(next) > bailout) {
      orbit.escaped = true;
      break;
    }
  }
  return orbit;
}

// ============================================================================
// Hyperbolic geometry
// ============================================================================

double hyperbolic_density(double R, cplx z) {
  const double r = std::abs(z);
  if (!(r > R)) throw Error(ErrorCode::InsideD, "density is defined outside the disk only");
  return 1.0 / (r * std::log(r / R));
}

double expansion_norm_values(double R, cplx z, cplx fz, cplx dfz) {
  return std::abs(dfz) * hyperbolic_density(R, fz) / hyperbolic_density(R, z);
}

double expansion_norm(const MapModel& model, double R, cplx z) {
  return expansion_norm_values(R, z, evaluate(model, z), derivative(model, z, 1));
}

bool is_disjoint_type(const MapModel& model, double R, int samples) {
  // sup_{|z|=R} |f| < R suffices by the maximum principle.
  double worst = 0;
  for (int i = 0; i < samples; ++i) {
    const double th = kTwoPi * (i + 0.5) / samples;
    worst = std::max(worst, std::abs(evaluate(model, R * cplx{std::cos(th), std::sin(th)})));
    if (worst >= R) return false;
  }
  return worst < R;
}

// ============================================================================
// Strip geometry helpers
// ============================================================================

double anchor_height(const MapModel& model, const Symbol& s0, const Symbol& s1) {
  PartitionConfig cfg;  // the cut layout depends only on delta_angle
  cfg.delta_angle = model.family == Family::Exp ? kPi : kPi / 2.0;
  const double cut = cut_offset(model, cfg);
  const double period = row_period(model.family);

  if (model.family == Family::Exp) {
    const double low = cut + (s0.row - 1) * period;
    return phase_in_row(-std::arg(model.param), low, period);
  }

  // Direction the image must take: toward +Re for a right successor, toward
  // -Re for a left successor.
  double target;
  if (model.family == Family::CoshSq) {
    target = s1.side == Side::R ? 0.0 : kPi / 2.0;
  } else {
    const double shift = std::arg(model.param);
    target = (s1.side == Side::R ? 0.0 : kPi) - shift;
  }

  if (s0.side == Side::R) {
    const double low = cut + (s0.row - 1) * period;
    return phase_in_row(target, low, period);
  }
  // Left row k occupies the mirrored phase interval [cut-(k+1)P, cut-kP).
  const double low = cut - (s0.row + 1) * period;
  return -phase_in_row(target, low, period);
}

double symbol_probe_angle(const MapModel& model, const PartitionConfig& cfg, const Symbol& s) {
  const double cut = cut_offset(model, cfg);
  const double period = row_period(model.family);
  double y_mid;
  if (s.side == Side::R) {
    y_mid = cut + (s.row - 1) * period + period / 2.0;
  } else {
    y_mid = -(cut - (s.row + 1) * period + period / 2.0);
  }
  const double R = std::max(cfg.probe_radius, 2.0 * (std::abs(y_mid) + 1.0));
  const double x = std::sqrt(R * R - y_mid * y_mid);
  const double angle = std::atan2(y_mid, s.side == Side::R ? x : -x);
  return wrap_positive(angle - cfg.delta_angle);
}

bool symbol_less(const MapModel& model, const PartitionConfig& cfg, const Symbol& a,
                 const Symbol& b) {
  if (a == b) return false;
  return symbol_probe_angle(model, cfg, a) < symbol_probe_angle(model, cfg, b);
}

Symbol symbol_successor(const MapModel& model, const Symbol& s) {
  (void)model;
  if (s.side == Side::R) return Symbol{s.row + 1, Side::R};
  return Symbol{s.row - 1, Side::L};
}

Symbol symbol_predecessor(const MapModel& model, const Symbol& s) {
  (void)model;
  if (s.side == Side::R) return Symbol{s.row - 1, Side::R};
  return Symbol{s.row + 1, Side::L};
}

}  // namespace crinis
