// Fundamental hands: partition-parameter selection, removed tail sets X_n,
// hand identity/membership, hand assignment for traced curves, certified
// address intervals, and chained inverse branches.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crinis/address.hpp"
#include "crinis/map_model.hpp"
#include "crinis/trace.hpp"

namespace crinis {

// The finite set S_I of escaping singular values together with their traced
// tails and escape horizons.
struct EscapingSingularData {
  std::vector<cplx> points;                 // S_I, deterministic order
  std::vector<TailCurve> tails;             // tails[i] ends at points[i]
  std::vector<int> escape_horizons;         // N(z): orbit stays outside D from then on
};

enum class SideFlag : std::uint8_t { Above, Below, NotAdjacent };

// Combinatorial hand identity: the itinerary of fundamental-domain symbols
// plus, for each removed-tail encounter along the itinerary, which side of
// the tail the orbit passes.
struct Hand {
  int level = 0;
  std::vector<Symbol> itinerary;     // length level+1
  std::vector<SideFlag> side_flags;  // flattened over k = 1..level, tails in S_I order
  bool operator==(const Hand&) const = default;
};

enum class AssignmentKind : std::uint8_t { Interior, Boundary };

struct HandAssignment {
  SignedAddress target;
  int level = 0;
  Hand hand;
  AssignmentKind kind = AssignmentKind::Interior;  // Interior = case A, Boundary = case B
};

// Choose (or validate) partition parameters so that the singular tails avoid
// delta and respect the disk condition up to the sampled horizon; returns the
// verified config together with the escaping singular data.  Throws
// ConfigNotFound after bounded enlargement attempts; BadConfig when S_I is
// empty (e.g. exponential maps whose singular orbit stays bounded).
std::pair<PartitionConfig, EscapingSingularData> build_partition(const MapModel& model,
                                                                 const TraceParams& p);

// X_n: the tails of those singular values lying in W_{n-1}.  X_0 is empty.
std::vector<TailCurve> removed_set(const MapModel& model, const PartitionConfig& cfg,
                                   const EscapingSingularData& esd, int n);

// Classify z into its level-n hand.  Precondition checked: f^k(z) lies in the
// slit plane and off the removed set X_{n-k+1} for 0 <= k <= n; throws NotInW
// naming the failing index.
Hand hand_of_point(const MapModel& model, const PartitionConfig& cfg,
                   const EscapingSingularData& esd, cplx z, int n);

// Assign the hand a traced curve belongs to (case A: interior) or bounds
// (case B: boundary, resolved by the sign's cyclic-order tie-break with
// witness addresses).  Throws ProbeInconsistent when probes disagree.
HandAssignment assign_hand(const MapModel& model, const PartitionConfig& cfg,
                           const EscapingSingularData& esd, const TailCurve& g,
                           const TraceParams& p);

// A certified open interval of signed addresses around `target` whose members
// map to the same level-n hand.  Possibly smaller than maximal.  Throws
// IntervalCollapsed if certification keeps failing as the interval shrinks.
AddressInterval address_interval(const MapModel& model, const PartitionConfig& cfg,
                                 const EscapingSingularData& esd, const SignedAddress& target,
                                 int n, const TraceParams& p);

// Compose n single-step inverse branches along target's symbols, continuing
// analytically when an intermediate value leaves the slit plane; the sign
// disambiguates detours around critical values.  Postcondition
// |f^n(z) - w| <= 1e-9.  Throws BranchObstructed / WrongDomain.
cplx inverse_chain(const MapModel& model, const PartitionConfig& cfg, const SignedAddress& target,
                   int n, cplx w, const TraceParams& p);

// Serialized hand identity for CLI reports:
// {"level":n, "itinerary":["0R",...], "sides":["A"|"B"|"N",...]}.
std::string hand_text(const Hand& h);

}  // namespace crinis
