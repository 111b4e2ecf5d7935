#pragma once

#include <string>
#include <vector>

namespace sforge {

// All float serialization goes through fmt17: 17 significant digits, enough
// for any double to round-trip bit exactly, and a single fixed rendering so
// identical runs produce byte-identical files.
std::string fmt17(double v);

void append_fmt17(std::string& out, double v);

std::string join_fmt17(const std::vector<double>& v, char sep);

// Minimal JSON string escaping (quotes, backslash, control chars).
std::string json_escape(const std::string& s);

double parse_double(const std::string& s);

}  // namespace sforge
