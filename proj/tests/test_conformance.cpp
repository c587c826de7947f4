#include <array>
#include <string>
#include <vector>

#include "crinis/conformance.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace crinis;

TEST_SUITE("conformance") {

TEST_CASE("expansion threshold logic on synthetic map values") {
  const double R = 1.5;
  // A genuinely expanding sample set: fixed points with large derivative.
  std::vector<std::array<cplx, 3>> good = {
      {cplx(3, 0), cplx(3, 0), cplx(100, 0)},
      {cplx(0, 5), cplx(0, 5), cplx(40, 0)},
  };
  const CheckReport pass = check_expansion_values("synthetic-good", R, good);
  CHECK(pass.name == "synthetic-good");
  CHECK(pass.passed);
  CHECK(pass.observed > 1.0);
  CHECK(pass.threshold == 1.0);
  CHECK(pass.samples == 2);

  // Insert one contracting sample: the minimum drops below 1 and fails.
  std::vector<std::array<cplx, 3>> bad = good;
  bad.push_back({cplx(3, 0), cplx(3, 0), cplx(0.01, 0)});
  const CheckReport fail = check_expansion_values("synthetic-bad", R, bad);
  CHECK_FALSE(fail.passed);
  CHECK(fail.observed == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(fail.samples == 3);
}

TEST_CASE("measured expansion of cosh is reproducible and exceeds one") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const CheckReport r = check_expansion(m, cfg, 10000, 12345);
  CHECK(r.passed);
  CHECK(r.samples == 10000);
  CHECK(r.seed == 12345);
  // Golden minimum from an independent run of the same seeded experiment.
  CHECK(r.observed == doctest::Approx(1.184202289840358).epsilon(1e-12));
  // Same seed, same numbers -- byte-identical deterministic reports.
  const CheckReport r2 = check_expansion(m, cfg, 10000, 12345);
  CHECK(reports_to_json({r}, false) == reports_to_json({r2}, false));
  // A different seed measures a different minimum (same verdict).
  const CheckReport r3 = check_expansion(m, cfg, 10000, 54321);
  CHECK(r3.passed);
  CHECK(r3.observed != r.observed);
}

TEST_CASE("cyclic order of landing angles matches the address order") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  const TraceParams p;
  const std::vector<ExternalAddress> addrs = {
      parse_address("| 0R"), parse_address("| 1R"), parse_address("| 1L"),
      parse_address("0R | -1R")};
  const CheckReport r =
      check_cyclic_order(m, cfg, addrs, 10.0 * cfg.disk_radius, p);
  CHECK(r.passed);
  CHECK(r.observed == 1.0);  // fraction of agreeing triples
  CHECK(r.samples >= 4);     // all triples over the shift closure
  // Fewer than three distinct addresses is a configuration error.
  CHECK_THROWS_AS((void)check_cyclic_order(
                      m, cfg, {parse_address("| 0R"), parse_address("| 1R")},
                      30.0, p),
                  Error);
}

TEST_CASE("neighboring tails converge to the canonical curve") {
  const MapModel m = make_cosh();
  const PartitionConfig cfg = make_partition(m);
  TraceParams p;
  p.level = 6;
  const SignedAddress limit = parse_signed_address("| 0R +");
  // Approach addresses 0R^(3+k) 1R (0R)^inf walk toward the limit address.
  std::vector<ExternalAddress> approach;
  for (int k = 0; k < 6; ++k) {
    std::string text;
    for (int i = 0; i < 3 + k; ++i) text += "0R ";
    text += "1R | 0R";
    approach.push_back(parse_address(text));
  }
  // Measurement window on the limit curve: from its first repeat corner out
  // to the vertex nearest |z| = 5 (computed from the curve, not hardcoded).
  const TailCurve lim = gamma_curve(m, cfg, limit, 6, p);
  REQUIRE(lim.markers.size() >= 2);
  const double t_lo = lim.points[lim.markers[1].vertex_index].t;
  double t_hi = lim.points.front().t;
  double best = 1e300;
  for (std::size_t i = 0; i < lim.markers[0].vertex_index; ++i) {
    const double d = std::fabs(std::abs(lim.points[i].z) - 5.0);
    if (d < best) { best = d; t_hi = lim.points[i].t; }
  }
  const CheckReport r = check_convergence(m, cfg, limit, approach, t_lo, t_hi, p);
  CHECK(r.passed);
  REQUIRE(r.observed_series.size() == approach.size());
  for (std::size_t i = 1; i < r.observed_series.size(); ++i)
    CHECK(r.observed_series[i] <= r.observed_series[i - 1] + 1e-12);
  CHECK(r.observed_series.back() < 1e-3);
  CHECK(r.observed == doctest::Approx(r.observed_series.back()));
}

TEST_CASE("the counting formula is enforced, not assumed") {
  const MapModel m = make_cosh();
  const TraceParams p;
  const CheckReport ok =
      check_counting(m, {{cplx(2, 0), 2}, {cplx(0, 0), 4}}, p);
  CHECK(ok.passed);
  CHECK(ok.samples == 2);
  // A wrong expected count must be reported as a failure.
  const CheckReport wrong = check_counting(m, {{cplx(2, 0), 4}}, p);
  CHECK_FALSE(wrong.passed);
  CHECK(!wrong.detail.empty());
}

TEST_CASE("report serialization") {
  CheckReport a;
  a.name = "alpha";
  a.passed = true;
  a.observed = 1.25;
  a.threshold = 1.0;
  a.samples = 7;
  a.seed = 99;
  a.runtime_ms = 1234;
  a.detail = "fine";
  CheckReport b = a;
  b.name = "beta";
  b.observed_series = {0.5, 0.25};

  const std::string with_rt = reports_to_json({a, b}, true);
  const std::string without_rt = reports_to_json({a, b}, false);
  const nlohmann::json jw = nlohmann::json::parse(with_rt);
  const nlohmann::json jo = nlohmann::json::parse(without_rt);
  REQUIRE(jw.is_array());
  REQUIRE(jw.size() == 2);
  CHECK(jw[0]["name"] == "alpha");
  CHECK(jw[0]["passed"] == true);
  CHECK(jw[0]["observed"] == doctest::Approx(1.25));
  CHECK(jw[0]["threshold"] == doctest::Approx(1.0));
  CHECK(jw[0]["samples"] == 7);
  CHECK(jw[0]["seed"] == 99);
  CHECK(jw[0]["detail"] == "fine");
  // Wall-clock data appears only on request, so that reruns compare equal.
  CHECK(jw[0].contains("runtime_ms"));
  CHECK_FALSE(jo[0].contains("runtime_ms"));
  // The per-stage series appears only when the check produced one.
  CHECK_FALSE(jo[0].contains("observed_series"));
  REQUIRE(jo[1].contains("observed_series"));
  CHECK(jo[1]["observed_series"].size() == 2);
  // Identical reports serialize identically without runtimes.
  CheckReport c = a;
  c.runtime_ms = 9999;
  CHECK(reports_to_json({a}, false) == reports_to_json({c}, false));
}

}  // TEST_SUITE
