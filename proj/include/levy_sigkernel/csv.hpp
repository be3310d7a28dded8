#pragma once

// Minimal CSV helpers. Doubles are written in the shortest form that parses
// back to the same value.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace levy_sigkernel {

std::string format_double(double x);
/// Throws ConfigError on malformed input.
double parse_double(std::string_view text);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);
/// Splits on commas; no quoting.
std::vector<std::vector<std::string>> read_csv(std::istream& in);

}  // namespace levy_sigkernel
