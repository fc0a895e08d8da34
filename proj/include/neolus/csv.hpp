#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace neolus::csv {

/// Splits RFC 4180 text into rows of fields. Handles quoted fields, doubled quotes and CRLF.
std::vector<std::vector<std::string>> parse(std::string_view text);
std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace neolus::csv
