#include "durstat/text_io.hpp"

#include "durstat/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace durstat {

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::vector<std::string> split_fields(std::string_view line, char delim) {
    std::vector<std::string> out;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
    }
    return out;
}

double parse_number(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '+')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw InvalidArgument("not a number: '" + std::string(text) + "'");
    return value;
}

std::vector<double> read_series(std::istream& in, const std::string& column) {
    std::vector<double> values;
    std::string line;
    long col = -1;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (first) {
            first = false;
            const auto it = std::find(fields.begin(), fields.end(), column);
            if (it != fields.end()) {
                col = it - fields.begin();
                continue;
            }
            if (fields.size() > 1) throw InvalidArgument("series header lacks column '" + column + "'");
        }
        const auto idx = col < 0 ? 0 : static_cast<std::size_t>(col);
        if (idx >= fields.size()) throw InvalidArgument("short series row: " + line);
        values.push_back(parse_number(fields[idx]));
    }
    return values;
}

std::vector<double> read_series_file(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    return read_series(in, column);
}

void write_series(std::ostream& out, const std::vector<double>& values) {
    for (double v : values) out << format_number(v) << '\n';
}

unsigned long long fnv1a64(std::string_view bytes) {
    unsigned long long h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace durstat
