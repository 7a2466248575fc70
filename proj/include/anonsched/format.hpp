#pragma once

#include <string>

namespace anonsched {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

/// Fixed number of significant digits ("%.*g").
std::string format_sig(double value, int digits);

/// Parses a full string as a double; throws std::invalid_argument otherwise.
double parse_double(const std::string& text);

}  // namespace anonsched
