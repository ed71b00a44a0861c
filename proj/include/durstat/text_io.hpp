#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace durstat {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Fixed-precision text, used for report tables.
std::string format_fixed(double value, int decimals);

std::vector<std::string> split_fields(std::string_view line, char delim = ',');

double parse_number(std::string_view text);

/// One value per line, or a CSV whose header names `column`.
std::vector<double> read_series(std::istream& in, const std::string& column = "duration_s");
std::vector<double> read_series_file(const std::string& path, const std::string& column = "duration_s");

void write_series(std::ostream& out, const std::vector<double>& values);

/// 64-bit FNV-1a, stable across platforms.
unsigned long long fnv1a64(std::string_view bytes);

}  // namespace durstat
