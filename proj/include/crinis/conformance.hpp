// Executable desk-scale checks of the structural claims realized by the
// tracer: metric expansion, cyclic-order coherence, convergence of
// neighboring tails, and the signed-address counting formula.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crinis/address.hpp"
#include "crinis/map_model.hpp"
#include "crinis/trace.hpp"

namespace crinis {

struct CheckReport {
  std::string name;
  bool passed = false;
  double observed = 0.0;     // the measured quantity the threshold applies to
  double threshold = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
  long long runtime_ms = 0;
  std::string detail;        // human-readable context (first failure, etc.)
  // Auxiliary observed sequence for checks that measure one value per stage
  // (e.g. per-approach-curve distances); empty otherwise.
  std::vector<double> observed_series;
};

// Minimum hyperbolic expansion norm over seeded random in-tract samples with
// |z| in (1.1*R, 100*R) and |f(z)| > R; passes iff the minimum exceeds 1.
CheckReport check_expansion(const MapModel& model, const PartitionConfig& cfg, int samples,
                            std::uint64_t seed);

// Same computation against caller-supplied map values; lets tests exercise
// the threshold logic on synthetic non-expanding stubs.
CheckReport check_expansion_values(const std::string& name, double R,
                                   const std::vector<std::array<cplx, 3>>& z_fz_dfz);

// Trace each address's level-0 tail, read the circular order of the last
// crossings of |z| = R (angles cut at delta), and compare with cyclic_triple
// on every triple; passes iff 100% agree.  Throws CurveMissesCircle.
CheckReport check_cyclic_order(const MapModel& model, const PartitionConfig& cfg,
                               const std::vector<ExternalAddress>& addrs, double R,
                               const TraceParams& p);

// Hausdorff distances (restricted to the potential window [t_lo, t_hi],
// polylines densified to step/2) between the traced tails of the approach
// addresses and the canonical curve of `limit`; passes iff the sequence is
// non-increasing after the first term and the last is below 1e-3.
CheckReport check_convergence(const MapModel& model, const PartitionConfig& cfg,
                              const SignedAddress& limit,
                              const std::vector<ExternalAddress>& approach, double t_lo,
                              double t_hi, const TraceParams& p);

// count_signed_addresses must match the expected count at each point, and for
// expected counts <= 8 a depth-2 sibling enumeration must find exactly that
// many distinct Gamma-curves through the point (within 1e-6).
CheckReport check_counting(const MapModel& model,
                           const std::vector<std::pair<cplx, long long>>& points,
                           const TraceParams& p);

// JSON array of reports as consumed by the CLI verify command.  Wall-clock
// fields are included only when include_runtimes is set, so deterministic
// comparisons can exclude them.
std::string reports_to_json(const std::vector<CheckReport>& reports, bool include_runtimes);

}  // namespace crinis
