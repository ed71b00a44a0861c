#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace durstat {

// Time is kept in integer hundredths of a second, the resolution of the feed.
using Centis = std::int64_t;

inline constexpr Centis centis_per_second = 100;
inline constexpr Centis centis_per_minute = 60 * centis_per_second;
inline constexpr Centis centis_per_day = 86400 * centis_per_second;

enum class Direction : std::uint8_t { buy, sell };

char direction_code(Direction d);

// Days since 1970-01-01 <-> "YYYY-MM-DD".
std::optional<std::int32_t> parse_date(std::string_view text);
std::string format_date(std::int32_t day);

// "HH:MM:SS[.ff]" or plain seconds-of-day "34265.25"; rounded to 0.01 s.
std::optional<Centis> parse_time_of_day(std::string_view text);
std::string format_seconds(Centis time_of_day);

struct Session {
    Centis open = 0;
    Centis close = 0;

    bool contains(Centis t) const { return t >= open && t <= close; }
    bool operator==(const Session&) const = default;
};

/// Trading-day layout: ordered, disjoint sessions (inclusive bounds) and an
/// optional list of trading dates. An empty date list admits every date.
class SessionCalendar {
public:
    explicit SessionCalendar(std::vector<Session> sessions, std::vector<std::int32_t> days = {});

    /// Two continuous-auction sessions, 09:30-11:30 and 13:00-15:00.
    static SessionCalendar szse2003();

    /// JSON document {"sessions": [["09:30","11:30"], ...], "days": ["2003-01-02", ...]}.
    static SessionCalendar from_json_text(std::string_view text);
    /// Either "default-szse2003" or a path to a JSON calendar.
    static SessionCalendar load(const std::string& spec);

    const std::vector<Session>& sessions() const { return sessions_; }
    const std::vector<std::int32_t>& days() const { return days_; }

    bool admits_day(std::int32_t day) const;
    std::optional<std::size_t> session_of(Centis time_of_day) const;

    int minutes_in_session(std::size_t session) const;
    int minutes_per_day() const;

    /// 1-based minute of the trading day, or 0 outside every session. The
    /// closing instant belongs to the session's last minute.
    int minute_index(Centis time_of_day) const;
    std::optional<std::size_t> session_of_minute(int minute) const;
    Centis minute_start(int minute) const;

private:
    std::vector<Session> sessions_;
    std::vector<std::int32_t> days_;
};

struct Event {
    std::int32_t day = 0;
    Centis time_of_day = 0;
    Direction direction = Direction::buy;

    Centis timestamp() const { return static_cast<Centis>(day) * centis_per_day + time_of_day; }
    bool operator==(const Event&) const = default;
};

struct EventSeries {
    std::string symbol;
    std::vector<Event> events;
    SessionCalendar calendar = SessionCalendar::szse2003();

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }
    /// Number of distinct dates carrying at least one event.
    std::size_t trading_days() const;
};

/// Column mapping for delimited input.
struct EventSchema {
    std::string date_column = "date";
    std::string time_column = "time";
    std::string direction_column = "direction";
    char delimiter = ',';
    std::vector<std::string> buy_codes{"B", "b", "buy", "BUY", "Buy", "1"};
    std::vector<std::string> sell_codes{"S", "s", "sell", "SELL", "Sell", "-1"};

    /// "date=TradeDate,time=Time,direction=Side[,delimiter=;]".
    static EventSchema parse(std::string_view mapping);
    /// Layout written by write_events_csv.
    static EventSchema canonical();
    /// Canonical layout when the header has "seconds" but no "time" column,
    /// the default otherwise.
    static EventSchema detect(std::string_view header_line);
};

struct RecordError {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    EventSeries series;
    std::vector<RecordError> errors;
    std::size_t raw_records = 0;
};

/// Reads a header line followed by records. Malformed records are reported
/// in `errors` and skipped; an input without any record throws EmptySeriesError.
ParseResult parse_event_stream(std::istream& in, const EventSchema& schema, std::string symbol = {});

struct FilterResult {
    EventSeries series;
    std::size_t removed = 0;
};

FilterResult filter_to_sessions(const EventSeries& series, const SessionCalendar& calendar);

struct DirectionSplit {
    EventSeries buy;
    EventSeries sell;
};

DirectionSplit split_by_direction(const EventSeries& series);

/// Canonical "date,seconds,direction" CSV.
void write_events_csv(std::ostream& out, const EventSeries& series);

}  // namespace durstat
