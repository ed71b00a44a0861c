#include "durstat/events.hpp"

#include "durstat/error.hpp"
#include "durstat/text_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace durstat {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

template <typename Int>
bool parse_int(std::string_view s, Int& value) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    return ec == std::errc{} && ptr == end;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// "SS" or "SS.fff..." to centiseconds, rounding half up on the third decimal.
std::optional<Centis> parse_decimal_centis(std::string_view s) {
    const auto dot = s.find('.');
    const auto whole = s.substr(0, dot);
    if (!all_digits(whole)) return std::nullopt;
    Centis value = 0;
    if (!parse_int(whole, value)) return std::nullopt;
    value *= centis_per_second;
    if (dot == std::string_view::npos) return value;
    const auto frac = s.substr(dot + 1);
    if (frac.empty()) return value;
    if (!all_digits(frac)) return std::nullopt;
    Centis hundredths = (frac[0] - '0') * 10 + (frac.size() > 1 ? frac[1] - '0' : 0);
    if (frac.size() > 2 && frac[2] >= '5') ++hundredths;
    return value + hundredths;
}

}  // namespace

char direction_code(Direction d) { return d == Direction::buy ? 'B' : 'S'; }

std::optional<std::int32_t> parse_date(std::string_view text) {
    text = trim(text);
    int y = 0;
    unsigned m = 0, d = 0;
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
            !parse_int(text.substr(8, 2), d))
            return std::nullopt;
    } else if (text.size() == 8 && all_digits(text)) {
        parse_int(text.substr(0, 4), y);
        parse_int(text.substr(4, 2), m);
        parse_int(text.substr(6, 2), d);
    } else {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

std::string format_date(std::int32_t day) {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::optional<Centis> parse_time_of_day(std::string_view text) {
    text = trim(text);
    if (text.find(':') == std::string_view::npos) {
        auto v = parse_decimal_centis(text);
        if (!v || *v >= centis_per_day) return std::nullopt;
        return v;
    }
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    int hh = 0, mm = 0;
    if (!all_digits(text.substr(0, c1)) || !parse_int(text.substr(0, c1), hh)) return std::nullopt;
    const auto mm_text = c2 == std::string_view::npos ? text.substr(c1 + 1) : text.substr(c1 + 1, c2 - c1 - 1);
    if (!all_digits(mm_text) || !parse_int(mm_text, mm)) return std::nullopt;
    Centis sec = 0;
    if (c2 != std::string_view::npos) {
        auto s = parse_decimal_centis(text.substr(c2 + 1));
        if (!s) return std::nullopt;
        sec = *s;
    }
    if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || sec < 0 || sec >= 60 * centis_per_second) return std::nullopt;
    return (hh * 3600 + mm * 60) * centis_per_second + sec;
}

std::string format_seconds(Centis time_of_day) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(time_of_day / centis_per_second),
                  static_cast<long long>(time_of_day % centis_per_second));
    return buf;
}

SessionCalendar::SessionCalendar(std::vector<Session> sessions, std::vector<std::int32_t> days)
    : sessions_(std::move(sessions)), days_(std::move(days)) {
    if (sessions_.empty()) throw InvalidArgument("calendar needs at least one session");
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
        const auto& s = sessions_[i];
        if (s.open < 0 || s.close > centis_per_day || s.close <= s.open)
            throw InvalidArgument("calendar session " + std::to_string(i) + " is empty or out of range");
        if (i > 0 && s.open <= sessions_[i - 1].close)
            throw InvalidArgument("calendar sessions must be disjoint and ordered");
    }
    std::sort(days_.begin(), days_.end());
    days_.erase(std::unique(days_.begin(), days_.end()), days_.end());
}

SessionCalendar SessionCalendar::szse2003() {
    return SessionCalendar({{(9 * 3600 + 30 * 60) * centis_per_second, (11 * 3600 + 30 * 60) * centis_per_second},
                            {13 * 3600 * centis_per_second, 15 * 3600 * centis_per_second}});
}

SessionCalendar SessionCalendar::from_json_text(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("calendar is not valid JSON: ") + e.what());
    }
    std::vector<Session> sessions;
    for (const auto& pair : doc.at("sessions")) {
        if (!pair.is_array() || pair.size() != 2) throw InvalidArgument("calendar session must be [open, close]");
        const auto open = parse_time_of_day(pair[0].get<std::string>());
        const auto close = parse_time_of_day(pair[1].get<std::string>());
        if (!open || !close) throw InvalidArgument("calendar session has an unparseable time");
        sessions.push_back({*open, *close});
    }
    std::vector<std::int32_t> days;
    if (doc.contains("days")) {
        for (const auto& d : doc["days"]) {
            const auto day = parse_date(d.get<std::string>());
            if (!day) throw InvalidArgument("calendar has an unparseable date: " + d.get<std::string>());
            days.push_back(*day);
        }
    }
    return SessionCalendar(std::move(sessions), std::move(days));
}

SessionCalendar SessionCalendar::load(const std::string& spec) {
    if (spec.empty() || spec == "default-szse2003") return szse2003();
    std::ifstream in(spec);
    if (!in) throw InvalidArgument("cannot open calendar file " + spec);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

bool SessionCalendar::admits_day(std::int32_t day) const {
    return days_.empty() || std::binary_search(days_.begin(), days_.end(), day);
}

std::optional<std::size_t> SessionCalendar::session_of(Centis time_of_day) const {
    for (std::size_t i = 0; i < sessions_.size(); ++i)
        if (sessions_[i].contains(time_of_day)) return i;
    return std::nullopt;
}

int SessionCalendar::minutes_in_session(std::size_t session) const {
    const auto& s = sessions_.at(session);
    return static_cast<int>((s.close - s.open + centis_per_minute - 1) / centis_per_minute);
}

int SessionCalendar::minutes_per_day() const {
    int total = 0;
    for (std::size_t i = 0; i < sessions_.size(); ++i) total += minutes_in_session(i);
    return total;
}

int SessionCalendar::minute_index(Centis time_of_day) const {
    int offset = 0;
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
        const int len = minutes_in_session(i);
        if (sessions_[i].contains(time_of_day)) {
            const int m = static_cast<int>((time_of_day - sessions_[i].open) / centis_per_minute);
            return offset + std::min(m, len - 1) + 1;
        }
        offset += len;
    }
    return 0;
}

std::optional<std::size_t> SessionCalendar::session_of_minute(int minute) const {
    int offset = 0;
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
        const int len = minutes_in_session(i);
        if (minute > offset && minute <= offset + len) return i;
        offset += len;
    }
    return std::nullopt;
}

Centis SessionCalendar::minute_start(int minute) const {
    int offset = 0;
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
        const int len = minutes_in_session(i);
        if (minute > offset && minute <= offset + len)
            return sessions_[i].open + (minute - offset - 1) * centis_per_minute;
        offset += len;
    }
    throw InvalidArgument("minute " + std::to_string(minute) + " is outside the calendar");
}

std::size_t EventSeries::trading_days() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < events.size(); ++i)
        if (i == 0 || events[i].day != events[i - 1].day) ++n;
    return n;
}

EventSchema EventSchema::parse(std::string_view mapping) {
    EventSchema schema;
    for (auto item : split(mapping, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw InvalidArgument("schema entry without '=': " + std::string(item));
        const auto key = trim(item.substr(0, eq));
        const auto value = std::string(trim(item.substr(eq + 1)));
        if (key == "date") {
            schema.date_column = value;
        } else if (key == "time") {
            schema.time_column = value;
        } else if (key == "direction") {
            schema.direction_column = value;
        } else if (key == "delimiter") {
            if (value == "tab") schema.delimiter = '\t';
            else if (value == "semicolon") schema.delimiter = ';';
            else if (value.size() == 1) schema.delimiter = value[0];
            else throw InvalidArgument("delimiter must be a single character");
        } else if (key == "buy") {
            schema.buy_codes = {value};
        } else if (key == "sell") {
            schema.sell_codes = {value};
        } else {
            throw InvalidArgument("unknown schema key: " + std::string(key));
        }
    }
    return schema;
}

EventSchema EventSchema::canonical() {
    EventSchema schema;
    schema.time_column = "seconds";
    return schema;
}

EventSchema EventSchema::detect(std::string_view header_line) {
    EventSchema def;
    if (!header_line.empty() && header_line.back() == '\r') header_line.remove_suffix(1);
    const auto fields = split_fields(header_line, def.delimiter);
    const bool has_time = std::find(fields.begin(), fields.end(), def.time_column) != fields.end();
    const bool has_seconds = std::find(fields.begin(), fields.end(), "seconds") != fields.end();
    return (!has_time && has_seconds) ? canonical() : def;
}

ParseResult parse_event_stream(std::istream& in, const EventSchema& schema, std::string symbol) {
    ParseResult result;
    result.series.symbol = std::move(symbol);

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        for (auto f : split(line, schema.delimiter)) header.emplace_back(f);
    }
    if (header.empty()) throw EmptySeriesError("event stream is empty");

    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw InvalidArgument("event stream header lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto date_col = column(schema.date_column);
    const auto time_col = column(schema.time_column);
    const auto dir_col = column(schema.direction_column);
    const auto needed = std::max({date_col, time_col, dir_col}) + 1;

    auto is_code = [](const std::vector<std::string>& codes, std::string_view v) {
        return std::find(codes.begin(), codes.end(), v) != codes.end();
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++result.raw_records;
        const auto fields = split(line, schema.delimiter);
        if (fields.size() < needed) {
            result.errors.push_back({line_no, "expected at least " + std::to_string(needed) + " fields"});
            continue;
        }
        const auto day = parse_date(fields[date_col]);
        if (!day) {
            result.errors.push_back({line_no, "unparseable date '" + std::string(fields[date_col]) + "'"});
            continue;
        }
        const auto tod = parse_time_of_day(fields[time_col]);
        if (!tod) {
            result.errors.push_back({line_no, "unparseable timestamp '" + std::string(fields[time_col]) + "'"});
            continue;
        }
        Direction dir;
        if (is_code(schema.buy_codes, fields[dir_col])) {
            dir = Direction::buy;
        } else if (is_code(schema.sell_codes, fields[dir_col])) {
            dir = Direction::sell;
        } else {
            result.errors.push_back({line_no, "unknown direction code '" + std::string(fields[dir_col]) + "'"});
            continue;
        }
        result.series.events.push_back({*day, *tod, dir});
    }
    if (result.raw_records == 0) throw EmptySeriesError("event stream has a header but no records");

    std::stable_sort(result.series.events.begin(), result.series.events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp() < b.timestamp(); });
    return result;
}

FilterResult filter_to_sessions(const EventSeries& series, const SessionCalendar& calendar) {
    FilterResult result;
    result.series.symbol = series.symbol;
    result.series.calendar = calendar;
    result.series.events.reserve(series.events.size());
    for (const auto& e : series.events) {
        if (calendar.admits_day(e.day) && calendar.session_of(e.time_of_day))
            result.series.events.push_back(e);
        else
            ++result.removed;
    }
    return result;
}

DirectionSplit split_by_direction(const EventSeries& series) {
    DirectionSplit out{{series.symbol, {}, series.calendar}, {series.symbol, {}, series.calendar}};
    for (const auto& e : series.events) (e.direction == Direction::buy ? out.buy : out.sell).events.push_back(e);
    return out;
}

void write_events_csv(std::ostream& out, const EventSeries& series) {
    out << "date,seconds,direction\n";
    for (const auto& e : series.events)
        out << format_date(e.day) << ',' << format_seconds(e.time_of_day) << ',' << direction_code(e.direction)
            << '\n';
}

}  // namespace durstat
