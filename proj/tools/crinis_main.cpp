// Command-line front end: trace and export curves, inspect sign splittings,
// render SVG figures, and run the conformance suite.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "crinis/address.hpp"
#include "crinis/conformance.hpp"
#include "crinis/curve_io.hpp"
#include "crinis/error.hpp"
#include "crinis/hands.hpp"
#include "crinis/map_model.hpp"
#include "crinis/svg.hpp"
#include "crinis/trace.hpp"

namespace {

using crinis::cplx;
using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

// Thrown for corrupted config files; mapped to exit code 2.
struct ConfigFault {
  std::string message;
};

struct Common {
  std::string config_path;
  std::string family = "cosh";
  double param_re = 1.0, param_im = 0.0;
  double disk_radius = 3.0;
  double delta_angle = kPi / 2.0;
  crinis::TraceParams p;
  std::uint64_t seed = 12345;

  std::map<std::string, CLI::Option*> opts;  // config key -> option (flags win)
};

void add_common(CLI::App* cmd, Common& c) {
  c.opts["family"] =
      cmd->add_option("--family", c.family, "Map family: cosh, coshsq, exp, coshfam");
  c.opts["param_re"] = cmd->add_option("--param-re", c.param_re, "Family parameter, real part");
  c.opts["param_im"] =
      cmd->add_option("--param-im", c.param_im, "Family parameter, imaginary part");
  c.opts["disk_radius"] =
      cmd->add_option("--disk-radius", c.disk_radius, "Partition disk radius");
  c.opts["delta_angle"] =
      cmd->add_option("--delta-angle", c.delta_angle, "Angle of the cut ray (radians)");
  c.opts["depth"] = cmd->add_option("--depth", c.p.depth, "Pullback depth for level-0 tracing");
  c.opts["level"] = cmd->add_option("--level", c.p.level, "Canonical-tail level N");
  c.opts["step"] = cmd->add_option("--step", c.p.step, "Max arclength between vertices");
  c.opts["crit_tol"] =
      cmd->add_option("--crit-tol", c.p.crit_tol, "Critical-point collision radius");
  c.opts["newton_tol"] = cmd->add_option("--newton-tol", c.p.newton_tol, "Newton tolerance");
  c.opts["window_far"] =
      cmd->add_option("--window-far", c.p.window_far, "Far cutoff of the traced window");
  c.opts["bailout"] = cmd->add_option("--bailout", c.p.bailout, "Escape bailout modulus");
  c.opts["seed"] = cmd->add_option("--seed", c.seed, "Seed for randomized checks");
  cmd->add_option("--config", c.config_path, "JSON config file (flags win over its values)");
}

// Applies config values to options the command line did not set; rejects
// unknown keys and malformed values.
void apply_config(Common& c) {
  if (c.config_path.empty()) return;
  json doc;
  try {
    doc = json::parse(crinis::read_text_file(c.config_path));
  } catch (const crinis::Error& e) {
    throw ConfigFault{e.what()};
  } catch (const std::exception& e) {
    throw ConfigFault{std::string("config is not valid JSON: ") + e.what()};
  }
  if (!doc.is_object()) throw ConfigFault{"config root must be an object"};

  auto want_num = [](const json& j, const char* key) -> double {
    if (!j.is_number()) throw ConfigFault{std::string("config key ") + key + " must be a number"};
    return j.get<double>();
  };
  for (const auto& [key, val] : doc.items()) {
    if (key == "family") {
      if (!val.is_string()) throw ConfigFault{"config key family must be a string"};
      if (c.opts["family"]->count() == 0) c.family = val.get<std::string>();
    } else if (key == "param") {
      if (!val.is_array() || val.size() != 2)
        throw ConfigFault{"config key param must be [re, im]"};
      if (c.opts["param_re"]->count() == 0) c.param_re = want_num(val[0], "param[0]");
      if (c.opts["param_im"]->count() == 0) c.param_im = want_num(val[1], "param[1]");
    } else if (key == "disk_radius") {
      if (c.opts["disk_radius"]->count() == 0) c.disk_radius = want_num(val, "disk_radius");
    } else if (key == "delta_angle") {
      if (c.opts["delta_angle"]->count() == 0) c.delta_angle = want_num(val, "delta_angle");
    } else if (key == "depth") {
      if (c.opts["depth"]->count() == 0) c.p.depth = static_cast<int>(want_num(val, "depth"));
    } else if (key == "level") {
      if (c.opts["level"]->count() == 0) c.p.level = static_cast<int>(want_num(val, "level"));
    } else if (key == "step") {
      if (c.opts["step"]->count() == 0) c.p.step = want_num(val, "step");
    } else if (key == "crit_tol") {
      if (c.opts["crit_tol"]->count() == 0) c.p.crit_tol = want_num(val, "crit_tol");
    } else if (key == "newton_tol") {
      if (c.opts["newton_tol"]->count() == 0) c.p.newton_tol = want_num(val, "newton_tol");
    } else if (key == "window_far") {
      if (c.opts["window_far"]->count() == 0) c.p.window_far = want_num(val, "window_far");
    } else if (key == "bailout") {
      if (c.opts["bailout"]->count() == 0) c.p.bailout = want_num(val, "bailout");
    } else if (key == "seed") {
      if (!val.is_number_unsigned())
        throw ConfigFault{"config key seed must be a non-negative integer"};
      if (c.opts["seed"]->count() == 0) c.seed = val.get<std::uint64_t>();
    } else {
      throw ConfigFault{"unknown config key \"" + key + "\""};
    }
  }
}

crinis::MapModel make_model(const Common& c) {
  const cplx param(c.param_re, c.param_im);
  switch (crinis::family_from_code(c.family)) {
    case crinis::Family::Cosh:
      return crinis::make_cosh();
    case crinis::Family::CoshSq:
      return crinis::make_coshsq();
    case crinis::Family::Exp:
      return crinis::make_exp(param);
    case crinis::Family::CoshFam:
      return crinis::make_cosh_family(param);
  }
  throw crinis::Error(crinis::ErrorCode::ParseError, "unknown family");
}

struct ViewOpts {
  crinis::RenderOptions ro;
};

void add_view(CLI::App* cmd, ViewOpts& v) {
  cmd->add_option("--re-lo", v.ro.re_lo, "View box: left");
  cmd->add_option("--re-hi", v.ro.re_hi, "View box: right");
  cmd->add_option("--im-lo", v.ro.im_lo, "View box: bottom");
  cmd->add_option("--im-hi", v.ro.im_hi, "View box: top");
  cmd->add_option("--width", v.ro.width_px, "Image width in pixels");
  cmd->add_option("--grey-depth", v.ro.grey_depth,
                  "Draw iterated preimages of the real axis up to this depth");
  cmd->add_option("--grid", v.ro.grid, "Marching-squares grid resolution");
}

// ---------------------------------------------------------------------------
// trace
// ---------------------------------------------------------------------------

struct TraceArgs {
  Common common;
  std::string address;
  std::string sign = "+";
  std::string out;
  std::string svg;
  ViewOpts view;
};

int run_trace(TraceArgs& a) {
  crinis::MapModel model;
  crinis::PartitionConfig cfg;
  crinis::SignedAddress sa;
  try {
    apply_config(a.common);
    model = make_model(a.common);
    cfg = crinis::make_partition(model, a.common.disk_radius, a.common.delta_angle);
    sa.addr = crinis::parse_address(a.address);
    if (a.sign == "+")
      sa.sign = crinis::SignBit::Plus;
    else if (a.sign == "-")
      sa.sign = crinis::SignBit::Minus;
    else
      throw crinis::Error(crinis::ErrorCode::ParseError, "--sign must be + or -");
    crinis::validate(a.common.p);
  } catch (const ConfigFault& e) {
    std::cerr << "config error: " << e.message << "\n";
    return 2;
  } catch (const crinis::Error& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }

  const crinis::TailCurve curve =
      crinis::gamma_curve(model, cfg, sa, a.common.p.level, a.common.p);
  crinis::write_text_file(a.out, crinis::curve_to_json(model, curve));
  if (!a.svg.empty())
    crinis::write_text_file(a.svg, crinis::render_svg(model, {curve}, a.view.ro));
  std::cout << "wrote " << a.out << ": " << curve.points.size() << " vertices, "
            << curve.markers.size() << " markers, level " << curve.level << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

struct SplitArgs {
  Common common;
  std::string address;
  std::string out;
  bool as_json = false;
};

// Far endpoint of the first bristle segment: the next marker if present, else
// the end of the curve.
cplx bristle_end(const crinis::TailCurve& c) {
  if (c.markers.size() >= 2) return c.markers[1].point;
  return c.points.back().z;
}

int run_split(SplitArgs& a) {
  crinis::MapModel model;
  crinis::PartitionConfig cfg;
  crinis::ExternalAddress addr;
  try {
    apply_config(a.common);
    model = make_model(a.common);
    cfg = crinis::make_partition(model, a.common.disk_radius, a.common.delta_angle);
    addr = crinis::parse_address(a.address);
    crinis::validate(a.common.p);
  } catch (const ConfigFault& e) {
    std::cerr << "config error: " << e.message << "\n";
    return 2;
  } catch (const crinis::Error& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }

  const int level = a.common.p.level;
  const crinis::TailCurve plus = crinis::gamma_curve(
      model, cfg, crinis::SignedAddress{addr, crinis::SignBit::Plus}, level, a.common.p);
  const crinis::TailCurve minus = crinis::gamma_curve(
      model, cfg, crinis::SignedAddress{addr, crinis::SignBit::Minus}, level, a.common.p);
  const crinis::GammaDecomposition dp = crinis::decompose_gamma(plus);
  const crinis::GammaDecomposition dm = crinis::decompose_gamma(minus);

  const std::size_t shared = std::min(dp.unbounded_tail.size(), dm.unbounded_tail.size());
  double tail_dev = 0;
  for (std::size_t i = 0; i < shared; ++i)
    tail_dev = std::max(tail_dev, std::abs(dp.unbounded_tail[i] - dm.unbounded_tail[i]));

  std::string text;
  if (a.as_json) {
    json o;
    o["address"] = crinis::format_address(addr);
    o["level"] = level;
    o["shared_tail_vertices"] = shared;
    o["shared_tail_max_dev"] = tail_dev;
    if (!dp.critical_points.empty()) {
      o["c0"] = {dp.critical_points.front().real(), dp.critical_points.front().imag()};
      o["plus_bristle_end"] = {bristle_end(plus).real(), bristle_end(plus).imag()};
      o["minus_bristle_end"] = {bristle_end(minus).real(), bristle_end(minus).imag()};
    } else {
      o["c0"] = nullptr;
      o["signs_identical"] = true;
    }
    o["plus_curve"] = json::parse(crinis::curve_to_json(model, plus));
    o["minus_curve"] = json::parse(crinis::curve_to_json(model, minus));
    text = o.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "address " << crinis::format_address(addr) << ", level " << level << "\n";
    if (dp.critical_points.empty() && dm.critical_points.empty()) {
      os << "signs identical: no critical splitting at this level\n";
      os << "curve: " << plus.points.size() << " vertices, max sign deviation " << tail_dev
         << "\n";
    } else {
      const cplx c0 = dp.critical_points.front();
      os << "c0 = " << c0.real() << (c0.imag() < 0 ? "" : "+") << c0.imag() << "i\n";
      os << "shared tail: " << shared << " vertices, max deviation " << tail_dev << "\n";
      const cplx bp = bristle_end(plus), bm = bristle_end(minus);
      os << "+ bristle ends at " << bp.real() << (bp.imag() < 0 ? "" : "+") << bp.imag()
         << "i\n";
      os << "- bristle ends at " << bm.real() << (bm.imag() < 0 ? "" : "+") << bm.imag()
         << "i\n";
    }
    text = os.str();
  }
  if (a.out.empty())
    std::cout << text;
  else {
    crinis::write_text_file(a.out, text);
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

struct RenderArgs {
  Common common;
  std::vector<std::string> curve_files;
  std::vector<std::string> addresses;  // signed address texts
  std::string out;
  ViewOpts view;
};

int run_render(RenderArgs& a) {
  crinis::MapModel model;
  crinis::PartitionConfig cfg;
  std::vector<crinis::SignedAddress> sas;
  try {
    apply_config(a.common);
    model = make_model(a.common);
    cfg = crinis::make_partition(model, a.common.disk_radius, a.common.delta_angle);
    for (const std::string& s : a.addresses) sas.push_back(crinis::parse_signed_address(s));
    crinis::validate(a.common.p);
  } catch (const ConfigFault& e) {
    std::cerr << "config error: " << e.message << "\n";
    return 2;
  } catch (const crinis::Error& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }

  std::vector<crinis::TailCurve> curves;
  bool model_from_file = false;
  for (const std::string& f : a.curve_files) {
    crinis::MapModel fm;
    curves.push_back(crinis::curve_from_json(crinis::read_text_file(f), &fm));
    if (!model_from_file) {
      model = fm;
      model_from_file = true;
    } else if (fm.family != model.family || std::abs(fm.param - model.param) > 1e-12) {
      throw crinis::Error(crinis::ErrorCode::BadConfig,
                          "curve files come from different maps");
    }
  }
  for (const crinis::SignedAddress& sa : sas)
    curves.push_back(crinis::gamma_curve(model, cfg, sa, a.common.p.level, a.common.p));

  crinis::write_text_file(a.out, crinis::render_svg(model, curves, a.view.ro));
  std::cout << "wrote " << a.out << ": " << curves.size() << " curves\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyArgs {
  Common common;
  std::string filter;
  std::string out;
  bool runtimes = false;
};

int run_verify(VerifyArgs& a) {
  crinis::MapModel model;
  crinis::PartitionConfig cfg;
  try {
    apply_config(a.common);
    model = make_model(a.common);
    cfg = crinis::make_partition(model, a.common.disk_radius, a.common.delta_angle);
    crinis::validate(a.common.p);
  } catch (const ConfigFault& e) {
    std::cerr << "config error: " << e.message << "\n";
    return 2;
  } catch (const crinis::Error& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }

  const crinis::TraceParams& p = a.common.p;
  auto wanted = [&](const std::string& name) {
    return a.filter.empty() || name.find(a.filter) != std::string::npos;
  };

  std::vector<crinis::CheckReport> reports;

  if (wanted("expansion"))
    reports.push_back(crinis::check_expansion(model, cfg, 10000, a.common.seed));

  if (wanted("cyclic-order")) {
    // Deterministic batch of eventually periodic addresses near the real
    // strips.
    std::mt19937_64 rng(a.common.seed);
    std::vector<crinis::Symbol> pool;
    for (int row = -1; row <= 1; ++row) {
      pool.push_back(crinis::Symbol{row, crinis::Side::R});
      pool.push_back(crinis::Symbol{row, crinis::Side::L});
    }
    std::uniform_int_distribution<int> pre_len(0, 2), per_len(1, 3),
        pick(0, static_cast<int>(pool.size()) - 1);
    std::vector<crinis::ExternalAddress> addrs;
    while (addrs.size() < 12) {
      std::vector<crinis::Symbol> pre, per;
      const int np = pre_len(rng), nq = per_len(rng);
      for (int i = 0; i < np; ++i) pre.push_back(pool[pick(rng)]);
      for (int i = 0; i < nq; ++i) per.push_back(pool[pick(rng)]);
      try {
        const crinis::ExternalAddress cand = crinis::make_address(pre, per);
        bool dup = false;
        for (const auto& b : addrs) dup = dup || crinis::same_address(b, cand);
        if (!dup) addrs.push_back(cand);
      } catch (const crinis::Error&) {
      }
    }
    crinis::CheckReport r =
        crinis::check_cyclic_order(model, cfg, addrs, 10.0 * cfg.disk_radius, p);
    r.seed = a.common.seed;
    reports.push_back(std::move(r));
  }

  if (wanted("convergence")) {
    const crinis::Symbol s0R{0, crinis::Side::R};
    const crinis::Symbol s1R{1, crinis::Side::R};
    const crinis::ExternalAddress limit_addr = crinis::make_address({}, {s0R});
    std::vector<crinis::ExternalAddress> approach;
    for (int k = 0; k < 6; ++k) {
      std::vector<crinis::Symbol> pre(static_cast<std::size_t>(3 + k), s0R);
      pre.push_back(s1R);
      approach.push_back(crinis::make_address(pre, {s0R}));
    }
    // Window: from the second marker (first repeat corner) up to the tail
    // point nearest |z| = 5, measured on the limit curve.
    crinis::TraceParams lp = p;
    lp.level = std::max(p.level, 6);
    const crinis::TailCurve lim = crinis::gamma_curve(
        model, cfg, crinis::SignedAddress{limit_addr, crinis::SignBit::Plus}, lp.level, lp);
    if (lim.markers.size() < 2)
      throw crinis::Error(crinis::ErrorCode::BadConfig,
                          "limit curve has no repeat corner at this level; raise --level");
    const double t_lo = lim.points[lim.markers[1].vertex_index].t;
    double t_hi = lim.points.front().t;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lim.markers[0].vertex_index; ++i) {
      const double d = std::fabs(std::abs(lim.points[i].z) - 5.0);
      if (d < best) {
        best = d;
        t_hi = lim.points[i].t;
      }
    }
    reports.push_back(crinis::check_convergence(
        model, cfg, crinis::SignedAddress{limit_addr, crinis::SignBit::Plus}, approach, t_lo,
        t_hi, lp));
  }

  if (wanted("counting")) {
    std::vector<std::pair<cplx, long long>> pts;
    switch (model.family) {
      case crinis::Family::CoshSq:
        pts = {{cplx(2, 0), 2}, {cplx(0, 0), 4}, {cplx(0, kPi / 2), 8}, {cplx(0, -kPi / 2), 8}};
        break;
      case crinis::Family::Cosh:
        pts = {{cplx(2, 0), 2}, {cplx(0, 0), 4}};
        break;
      default:
        pts = {{cplx(2, 0), 2}};
        break;
    }
    reports.push_back(crinis::check_counting(model, pts, p));
  }

  const std::string text = crinis::reports_to_json(reports, a.runtimes);
  if (a.out.empty())
    std::cout << text;
  else {
    crinis::write_text_file(a.out, text);
    std::cout << "wrote " << a.out << "\n";
  }
  for (const crinis::CheckReport& r : reports)
    std::cerr << (r.passed ? "PASS " : "FAIL ") << r.name << "\n";
  bool all = true;
  for (const crinis::CheckReport& r : reports) all = all && r.passed;
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Escaping-set combinatorics: dynamic-ray tracing, signed-address "
               "splittings, and conformance checks for cosh-type entire maps"};
  app.require_subcommand(0, 1);

  TraceArgs ta;
  CLI::App* trace = app.add_subcommand("trace", "Trace a signed address and write curve JSON");
  add_common(trace, ta.common);
  trace->add_option("--address", ta.address, "External address, e.g. \"0R | 0R\"")->required();
  trace->add_option("--sign", ta.sign, "Sign of the canonical tail: + or -");
  trace->add_option("--out", ta.out, "Output curve JSON path")->required();
  trace->add_option("--svg", ta.svg, "Also render the curve to this SVG path");
  add_view(trace, ta.view);

  SplitArgs sa;
  CLI::App* split =
      app.add_subcommand("split", "Compare both signs of an address and report the splitting");
  add_common(split, sa.common);
  split->add_option("--address", sa.address, "External address")->required();
  split->add_option("--out", sa.out, "Write the report here instead of stdout");
  split->add_flag("--json", sa.as_json, "Emit a JSON report embedding both curves");

  RenderArgs ra;
  CLI::App* render = app.add_subcommand("render", "Render curves to a deterministic SVG");
  add_common(render, ra.common);
  render->add_option("--curve", ra.curve_files, "Curve JSON file (repeatable)");
  render->add_option("--address", ra.addresses,
                     "Signed address to trace and draw, e.g. \"0R | 0R +\" (repeatable)");
  render->add_option("--out", ra.out, "Output SVG path")->required();
  add_view(render, ra.view);

  VerifyArgs va;
  CLI::App* verify = app.add_subcommand("verify", "Run conformance checks and report JSON");
  add_common(verify, va.common);
  verify->add_option("--filter", va.filter, "Run only checks whose name contains this text");
  verify->add_option("--out", va.out, "Write the JSON report here instead of stdout");
  verify->add_flag("--runtimes", va.runtimes, "Include runtime fields in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(trace)) return run_trace(ta);
    if (app.got_subcommand(split)) return run_split(sa);
    if (app.got_subcommand(render)) return run_render(ra);
    if (app.got_subcommand(verify)) return run_verify(va);
    std::cout << app.help();
    return 0;
  } catch (const ConfigFault& e) {
    std::cerr << "config error: " << e.message << "\n";
    return 2;
  } catch (const crinis::Error& e) {
    std::cerr << "error [" << crinis::error_code_name(e.code()) << "]: " << e.message() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
