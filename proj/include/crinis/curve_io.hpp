// JSON interchange for traced curves:
// {"family":..., "params":..., "address":"0R | 1L", "sign":"+", "level":N,
//  "points":[[t,re,im],...],
//  "markers":[{"index":..., "re":..., "im":..., "deg":..., "bristle":"L|R"}]}
// Decimal serialization at 1e-12 precision; bit-exactness is not promised
// across platforms but a fixed build round-trips byte-identically.
#pragma once

#include <string>

#include "crinis/map_model.hpp"
#include "crinis/trace.hpp"

namespace crinis {

std::string curve_to_json(const MapModel& model, const TailCurve& curve);
// Parses the JSON document; returns the curve and fills *model.
TailCurve curve_from_json(const std::string& text, MapModel* model);

// Write/read helpers (throw ParseError / BadConfig on I/O or schema faults).
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace crinis
