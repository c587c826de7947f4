// Eventually periodic external addresses over the fundamental-domain symbols,
// the shift map, lexicographic/cyclic orders, and signed addresses with the
// plus/minus-doubled order.  Everything here is pure and immutable; the symbol
// order is injected through (MapModel, PartitionConfig) and never assumed.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "crinis/map_model.hpp"

namespace crinis {

// Address s_0 ... s_{p-1} (t_0 ... t_{q-1})^infinity.  The period is never
// empty.  Canonical form: the period is primitive and the preperiod minimal.
struct ExternalAddress {
  std::vector<Symbol> preperiod;
  std::vector<Symbol> period;
};

enum class SignBit : std::uint8_t { Minus, Plus };

struct SignedAddress {
  ExternalAddress addr;
  SignBit sign = SignBit::Plus;
};

// Open interval (lo, hi) in the cyclic order on signed addresses.
struct AddressInterval {
  SignedAddress lo;
  SignedAddress hi;
};

enum class Ordering : std::int8_t { LT = -1, EQ = 0, GT = 1 };

// Canonicalizing constructor; throws EmptyPeriod.
ExternalAddress make_address(std::vector<Symbol> preperiod, std::vector<Symbol> period);

// Reduce to primitive period + minimal preperiod.  Idempotent.
ExternalAddress canonical(const ExternalAddress& a);

// k-th symbol of the infinite expansion (k is 0-based and unbounded).
Symbol symbol_at(const ExternalAddress& a, std::size_t k);

// Drop the first symbol and re-canonicalize.
ExternalAddress shift(const ExternalAddress& a);

// Equality via canonical forms (decides "ties forever" soundly for
// eventually periodic sequences).
bool same_address(const ExternalAddress& a, const ExternalAddress& b);
bool same_signed_address(const SignedAddress& p, const SignedAddress& q);

// Number of leading symbols that always suffices to decide lex_compare.
std::size_t lex_budget(const ExternalAddress& a, const ExternalAddress& b);

// Lexicographic comparison under the symbol order induced by the partition.
Ordering lex_compare(const MapModel& model, const PartitionConfig& cfg, const ExternalAddress& a,
                     const ExternalAddress& b);

// True iff the triple (a, x, b) is positively oriented in the cyclic order:
// a<x<b or x<b<a or b<a<x.  Throws NonDistinct unless pairwise distinct.
bool cyclic_triple(const MapModel& model, const PartitionConfig& cfg, const ExternalAddress& a,
                   const ExternalAddress& x, const ExternalAddress& b);

// Total order on signed addresses: lex order first, Minus before Plus on ties.
Ordering signed_compare(const MapModel& model, const PartitionConfig& cfg, const SignedAddress& p,
                        const SignedAddress& q);

bool signed_cyclic_triple(const MapModel& model, const PartitionConfig& cfg,
                          const SignedAddress& p, const SignedAddress& x,
                          const SignedAddress& q);

// Membership in the open interval; endpoints are excluded.  Throws
// NonDistinct if the interval is degenerate (lo == hi).
bool interval_contains(const MapModel& model, const PartitionConfig& cfg,
                       const AddressInterval& interval, const SignedAddress& p);

// Text grammar: "SYM (space SYM)* '|' SYM (space SYM)*" where SYM is an
// integer row followed by L or R; the part after '|' is the period, e.g.
// "0R | 1L 2R".  Signed addresses append a trailing '+' or '-'.
ExternalAddress parse_address(const std::string& text);
std::string format_address(const ExternalAddress& a);
SignedAddress parse_signed_address(const std::string& text);
std::string format_signed_address(const SignedAddress& p);

}  // namespace crinis
