#include "crinis/curve_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "crinis/address.hpp"
#include "json.hpp"

namespace crinis {
namespace {

using json = nlohmann::json;

// Decimal rounding to 12 significant digits keeps documents compact and makes
// a fixed build reproduce files byte-identically.
double round12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return std::strtod(buf, nullptr);
}

double want_number(const json& j, const char* what) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, std::string(what) + " must be a number");
  return j.get<double>();
}

const json& want_key(const json& o, const char* key) {
  auto it = o.find(key);
  if (it == o.end())
    throw Error(ErrorCode::ParseError, std::string("missing key \"") + key + "\"");
  return *it;
}

std::string want_string(const json& o, const char* key) {
  const json& j = want_key(o, key);
  if (!j.is_string())
    throw Error(ErrorCode::ParseError, std::string(key) + " must be a string");
  return j.get<std::string>();
}

}  // namespace

std::string curve_to_json(const MapModel& model, const TailCurve& curve) {
  json o;
  o["family"] = family_code(model.family);
  o["params"] = {round12(model.param.real()), round12(model.param.imag())};
  o["address"] = format_address(curve.signed_addr.addr);
  o["sign"] = curve.signed_addr.sign == SignBit::Plus ? "+" : "-";
  o["level"] = curve.level;
  json pts = json::array();
  for (const TimedPoint& q : curve.points)
    pts.push_back({round12(q.t), round12(q.z.real()), round12(q.z.imag())});
  o["points"] = std::move(pts);
  json ms = json::array();
  for (const CriticalMarker& m : curve.markers) {
    json mo;
    mo["index"] = m.vertex_index;
    mo["re"] = round12(m.point.real());
    mo["im"] = round12(m.point.imag());
    mo["deg"] = m.local_deg;
    mo["bristle"] = m.chosen_bristle == BristleSide::Left ? "L" : "R";
    ms.push_back(std::move(mo));
  }
  o["markers"] = std::move(ms);
  return o.dump(2) + "\n";
}

TailCurve curve_from_json(const std::string& text, MapModel* model) {
  json o;
  try {
    o = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
  }
  if (!o.is_object()) throw Error(ErrorCode::ParseError, "curve document must be an object");

  const std::string fam = want_string(o, "family");
  const json& pj = want_key(o, "params");
  if (!pj.is_array() || pj.size() != 2)
    throw Error(ErrorCode::ParseError, "params must be [re, im]");
  const cplx param(want_number(pj[0], "params[0]"), want_number(pj[1], "params[1]"));

  MapModel m;
  switch (family_from_code(fam)) {
    case Family::Cosh:
      m = make_cosh();
      break;
    case Family::CoshSq:
      m = make_coshsq();
      break;
    case Family::Exp:
      m = make_exp(param);
      break;
    case Family::CoshFam:
      m = make_cosh_family(param);
      break;
  }

  TailCurve c;
  c.signed_addr.addr = parse_address(want_string(o, "address"));
  const std::string sg = want_string(o, "sign");
  if (sg == "+")
    c.signed_addr.sign = SignBit::Plus;
  else if (sg == "-")
    c.signed_addr.sign = SignBit::Minus;
  else
    throw Error(ErrorCode::ParseError, "sign must be \"+\" or \"-\"");
  if (!want_key(o, "level").is_number_integer())
    throw Error(ErrorCode::ParseError, "level must be an integer");
  c.level = want_key(o, "level").get<int>();
  if (c.level < 0 || c.level > 64)
    throw Error(ErrorCode::ParseError, "level out of range");

  const json& pts = want_key(o, "points");
  if (!pts.is_array() || pts.size() < 2)
    throw Error(ErrorCode::ParseError, "points must be an array of at least two entries");
  c.points.reserve(pts.size());
  for (const json& e : pts) {
    if (!e.is_array() || e.size() != 3)
      throw Error(ErrorCode::ParseError, "each point must be [t, re, im]");
    c.points.push_back(
        TimedPoint{want_number(e[0], "t"), cplx(want_number(e[1], "re"), want_number(e[2], "im"))});
  }

  const json& ms = want_key(o, "markers");
  if (!ms.is_array()) throw Error(ErrorCode::ParseError, "markers must be an array");
  for (const json& e : ms) {
    if (!e.is_object()) throw Error(ErrorCode::ParseError, "each marker must be an object");
    CriticalMarker mk;
    const json& idx = want_key(e, "index");
    if (!idx.is_number_integer() || idx.get<long long>() < 0 ||
        idx.get<unsigned long long>() >= c.points.size())
      throw Error(ErrorCode::ParseError, "marker index out of range");
    mk.vertex_index = idx.get<std::size_t>();
    mk.point = cplx(want_number(want_key(e, "re"), "marker re"),
                    want_number(want_key(e, "im"), "marker im"));
    const json& dg = want_key(e, "deg");
    if (!dg.is_number_integer() || dg.get<int>() < 1)
      throw Error(ErrorCode::ParseError, "marker deg must be a positive integer");
    mk.local_deg = dg.get<int>();
    const std::string br = want_string(e, "bristle");
    if (br == "L")
      mk.chosen_bristle = BristleSide::Left;
    else if (br == "R")
      mk.chosen_bristle = BristleSide::Right;
    else
      throw Error(ErrorCode::ParseError, "marker bristle must be \"L\" or \"R\"");
    c.markers.push_back(mk);
  }
  // Interchange carries geometry only; the split between the asymptotic block
  // and the pulled block is a tracing artifact.
  c.first_pulled = 0;

  if (model) *model = m;
  return c;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::BadConfig, "cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::BadConfig, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::BadConfig, "read failed: " + path);
  return ss.str();
}

}  // namespace crinis
