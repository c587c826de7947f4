#include <cmath>
#include <string>

#include "crinis/curve_io.hpp"
#include "crinis/trace.hpp"
#include "doctest.h"

using namespace crinis;

namespace {

TailCurve synthetic_curve() {
  TailCurve c;
  c.signed_addr = parse_signed_address("0R | 1L +");
  c.level = 2;
  c.points = {{1.5, {10.0, 0.5}},
              {0.7, {3.0, 0.25}},
              {0.2, {1.2, 0.125}}};
  CriticalMarker mk;
  mk.vertex_index = 1;
  mk.point = c.points[1].z;
  mk.local_deg = 2;
  mk.chosen_bristle = BristleSide::Left;
  c.markers = {mk};
  c.first_pulled = 2;
  return c;
}

}  // namespace

TEST_SUITE("curve_io") {

TEST_CASE("synthetic curve round trips") {
  const MapModel m = make_exp(cplx(0.4, 0.1));
  const TailCurve c = synthetic_curve();
  const std::string json = curve_to_json(m, c);
  MapModel m2;
  const TailCurve back = curve_from_json(json, &m2);

  CHECK(m2.family == Family::Exp);
  CHECK(std::abs(m2.param - m.param) < 1e-12);
  CHECK(same_signed_address(back.signed_addr, c.signed_addr));
  CHECK(back.level == 2);
  REQUIRE(back.points.size() == c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    CHECK(back.points[i].t == doctest::Approx(c.points[i].t).epsilon(1e-12));
    CHECK(std::abs(back.points[i].z - c.points[i].z) < 1e-12);
  }
  REQUIRE(back.markers.size() == 1);
  CHECK(back.markers[0].vertex_index == 1);
  CHECK(std::abs(back.markers[0].point - c.markers[0].point) < 1e-12);
  CHECK(back.markers[0].local_deg == 2);
  CHECK(back.markers[0].chosen_bristle == BristleSide::Left);
  // The pullback provenance index is not part of the interchange schema.
  CHECK(back.first_pulled == 0);
}

TEST_CASE("serialization is stable under a parse/serialize cycle") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const TailCurve c =
      gamma_curve(m, cfg, parse_signed_address("| 0R +"), 3, p);
  const std::string once = curve_to_json(m, c);
  MapModel m2;
  const TailCurve back = curve_from_json(once, &m2);
  const std::string twice = curve_to_json(m2, back);
  CHECK(once == twice);
}

TEST_CASE("traced curve round trips within serialization precision") {
  const MapModel m = make_coshsq();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const TailCurve c = trace_level0(m, cfg, parse_address("| 1R"), p);
  MapModel m2;
  const TailCurve back = curve_from_json(curve_to_json(m, c), &m2);
  CHECK(m2.family == Family::CoshSq);
  REQUIRE(back.points.size() == c.points.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < c.points.size(); ++i)
    worst = std::max(worst, std::abs(back.points[i].z - c.points[i].z));
  CHECK(worst < 1e-11);
}

TEST_CASE("malformed documents are rejected") {
  MapModel m;
  for (const char* bad : {
           "{",                                  // not JSON
           "[]",                                 // wrong root type
           "{\"family\":\"cosh\"}",              // missing fields
           // Unknown family code.
           "{\"family\":\"tanh\",\"params\":[],\"address\":\"| 0R\","
           "\"sign\":\"+\",\"level\":0,\"points\":[[1,2,3]],\"markers\":[]}",
           // Bad address grammar inside an otherwise valid document.
           "{\"family\":\"cosh\",\"params\":[],\"address\":\"0R\","
           "\"sign\":\"+\",\"level\":0,\"points\":[[1,2,3]],\"markers\":[]}",
           // Bad sign.
           "{\"family\":\"cosh\",\"params\":[],\"address\":\"| 0R\","
           "\"sign\":\"*\",\"level\":0,\"points\":[[1,2,3]],\"markers\":[]}",
           // Point row with too few entries.
           "{\"family\":\"cosh\",\"params\":[],\"address\":\"| 0R\","
           "\"sign\":\"+\",\"level\":0,\"points\":[[1,2]],\"markers\":[]}",
       }) {
    CHECK_THROWS_AS((void)curve_from_json(bad, &m), Error);
  }
}

TEST_CASE("text file helpers") {
  const std::string path = "/tmp/crinis_io_roundtrip.txt";
  const std::string content = "line one\nline two\n\xcf\x80\n";
  write_text_file(path, content);
  CHECK(read_text_file(path) == content);
  CHECK_THROWS_AS((void)read_text_file("/tmp/crinis_io_missing_file_xyz"),
                  Error);
}

}  // TEST_SUITE
