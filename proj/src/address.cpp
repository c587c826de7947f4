#include "crinis/address.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

namespace crinis {
namespace {

bool symbols_equal(const std::vector<Symbol>& a, const std::vector<Symbol>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

ExternalAddress make_address(std::vector<Symbol> preperiod, std::vector<Symbol> period) {
  if (period.empty()) throw Error(ErrorCode::EmptyPeriod, "address period must be nonempty");
  return canonical(ExternalAddress{std::move(preperiod), std::move(period)});
}

ExternalAddress canonical(const ExternalAddress& a) {
  if (a.period.empty()) throw Error(ErrorCode::EmptyPeriod, "address period must be nonempty");
  ExternalAddress out = a;

  // Primitive period: the shortest divisor-length prefix that tiles the word.
  const std::size_t q = out.period.size();
  for (std::size_t d = 1; d < q; ++d) {
    if (q % d != 0) continue;
    bool tiles = true;
    for (std::size_t i = d; i < q && tiles; ++i)
      tiles = out.period[i] == out.period[i % d];
    if (tiles) {
      out.period.resize(d);
      break;
    }
  }

  // Minimal preperiod: while the preperiod's last symbol equals the period's
  // last symbol, absorb it by rotating the period one step to the right.
  while (!out.preperiod.empty() && out.preperiod.back() == out.period.back()) {
    out.preperiod.pop_back();
    std::rotate(out.period.rbegin(), out.period.rbegin() + 1, out.period.rend());
  }
  return out;
}

Symbol symbol_at(const ExternalAddress& a, std::size_t k) {
  if (k < a.preperiod.size()) return a.preperiod[k];
  return a.period[(k - a.preperiod.size()) % a.period.size()];
}

ExternalAddress shift(const ExternalAddress& a) {
  ExternalAddress out = a;
  if (!out.preperiod.empty()) {
    out.preperiod.erase(out.preperiod.begin());
  } else {
    std::rotate(out.period.begin(), out.period.begin() + 1, out.period.end());
  }
  return canonical(out);
}

bool same_address(const ExternalAddress& a, const ExternalAddress& b) {
  const ExternalAddress ca = canonical(a);
  const ExternalAddress cb = canonical(b);
  return symbols_equal(ca.preperiod, cb.preperiod) && symbols_equal(ca.period, cb.period);
}

bool same_signed_address(const SignedAddress& p, const SignedAddress& q) {
  return p.sign == q.sign && same_address(p.addr, q.addr);
}

std::size_t lex_budget(const ExternalAddress& a, const ExternalAddress& b) {
  const std::size_t p = std::max(a.preperiod.size(), b.preperiod.size());
  return p + 2 * std::lcm(a.period.size(), b.period.size());
}

Ordering lex_compare(const MapModel& model, const PartitionConfig& cfg, const ExternalAddress& a,
                     const ExternalAddress& b) {
  const std::size_t budget = lex_budget(a, b);
  for (std::size_t k = 0; k < budget; ++k) {
    const Symbol sa = symbol_at(a, k);
    const Symbol sb = symbol_at(b, k);
    if (sa == sb) continue;
    return symbol_less(model, cfg, sa, sb) ? Ordering::LT : Ordering::GT;
  }
  return Ordering::EQ;
}

bool cyclic_triple(const MapModel& model, const PartitionConfig& cfg, const ExternalAddress& a,
                   const ExternalAddress& x, const ExternalAddress& b) {
  if (same_address(a, x) || same_address(x, b) || same_address(a, b))
    throw Error(ErrorCode::NonDistinct, "cyclic triple needs pairwise distinct addresses");
  const bool ax = lex_compare(model, cfg, a, x) == Ordering::LT;
  const bool xb = lex_compare(model, cfg, x, b) == Ordering::LT;
  const bool ba = lex_compare(model, cfg, b, a) == Ordering::LT;
  return (ax && xb) || (xb && ba) || (ba && ax);
}

Ordering signed_compare(const MapModel& model, const PartitionConfig& cfg, const SignedAddress& p,
                        const SignedAddress& q) {
  const Ordering lex = lex_compare(model, cfg, p.addr, q.addr);
  if (lex != Ordering::EQ) return lex;
  if (p.sign == q.sign) return Ordering::EQ;
  return p.sign == SignBit::Minus ? Ordering::LT : Ordering::GT;
}

bool signed_cyclic_triple(const MapModel& model, const PartitionConfig& cfg,
                          const SignedAddress& p, const SignedAddress& x,
                          const SignedAddress& q) {
  if (same_signed_address(p, x) || same_signed_address(x, q) || same_signed_address(p, q))
    throw Error(ErrorCode::NonDistinct, "cyclic triple needs pairwise distinct signed addresses");
  const bool px = signed_compare(model, cfg, p, x) == Ordering::LT;
  const bool xq = signed_compare(model, cfg, x, q) == Ordering::LT;
  const bool qp = signed_compare(model, cfg, q, p) == Ordering::LT;
  return (px && xq) || (xq && qp) || (qp && px);
}

bool interval_contains(const MapModel& model, const PartitionConfig& cfg,
                       const AddressInterval& interval, const SignedAddress& p) {
  if (same_signed_address(interval.lo, interval.hi))
    throw Error(ErrorCode::NonDistinct, "interval endpoints must differ");
  if (same_signed_address(interval.lo, p) || same_signed_address(interval.hi, p)) return false;
  return signed_cyclic_triple(model, cfg, interval.lo, p, interval.hi);
}

// ============================================================================
// Text form
// ============================================================================

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string spaced;
  spaced.reserve(text.size() + 8);
  for (char c : text) {
    if (c == '|') {
      spaced += " | ";
    } else {
      spaced += c;
    }
  }
  std::istringstream in(spaced);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

}  // namespace

ExternalAddress parse_address(const std::string& text) {
  const std::vector<std::string> tokens = tokenize(text);
  std::vector<Symbol> pre, per;
  bool seen_bar = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (tok == "|") {
      if (seen_bar)
        throw Error(ErrorCode::ParseError, "second '|' at token " + std::to_string(i));
      seen_bar = true;
      continue;
    }
    try {
      (seen_bar ? per : pre).push_back(symbol_from_text(tok));
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError,
                  e.message() + " (token " + std::to_string(i) + ")");
    }
  }
  if (!seen_bar) throw Error(ErrorCode::ParseError, "address needs a '|' before the period");
  if (per.empty()) throw Error(ErrorCode::EmptyPeriod, "address period must be nonempty");
  return make_address(std::move(pre), std::move(per));
}

std::string format_address(const ExternalAddress& a) {
  const ExternalAddress c = canonical(a);
  std::string out;
  for (const Symbol& s : c.preperiod) {
    out += symbol_text(s);
    out += ' ';
  }
  out += '|';
  for (const Symbol& s : c.period) {
    out += ' ';
    out += symbol_text(s);
  }
  return out;
}

SignedAddress parse_signed_address(const std::string& text) {
  std::string body = text;
  // Trim trailing whitespace, then peel the sign token.
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.pop_back();
  if (body.empty()) throw Error(ErrorCode::ParseError, "empty signed address");
  const char sign_char = body.back();
  if (sign_char != '+' && sign_char != '-')
    throw Error(ErrorCode::ParseError, "signed address must end in '+' or '-'");
  body.pop_back();
  return SignedAddress{parse_address(body), sign_char == '+' ? SignBit::Plus : SignBit::Minus};
}

std::string format_signed_address(const SignedAddress& p) {
  return format_address(p.addr) + (p.sign == SignBit::Plus ? " +" : " -");
}

}  // namespace crinis
