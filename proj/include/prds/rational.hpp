#pragma once

#include <cstdint>
#include <string>

#include <gmpxx.h>

namespace prds {

// Parses "a/b", plain integers, and exact decimals ("0.25" -> 1/4).
mpq_class parse_rational(const std::string& text);

// Always renders as "num/den" ("1" -> "1/1"); the JSON report schema form.
std::string rational_str(const mpq_class& q);

// Fixed 17-significant-digit float rendering used at every CLI/file boundary.
std::string format_double(double x);

} // namespace prds
