#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uqt {

/// Naive local time, second resolution. No time-zone or DST handling.
using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

inline constexpr std::chrono::seconds kStep{900};
inline constexpr int kSamplesPerDay = 96;

/// Parses `YYYY-MM-DDTHH:MM[:SS]` (a space may replace the `T`). Throws DataError.
Timestamp parse_timestamp(std::string_view text);
/// Parses `YYYY-MM-DD`. Throws DataError.
Date parse_date(std::string_view text);
std::string format_timestamp(Timestamp ts);
std::string format_date(Date d);

Date date_of(Timestamp ts);
/// Seconds elapsed since local midnight.
int seconds_of_day(Timestamp ts);
/// Monday = 0 ... Sunday = 6.
int day_of_week(Timestamp ts);

struct CalendarFeatures {
    double day_of_week = 0.0;
    double is_holiday = 0.0;
    double is_school_period = 0.0;
};

/// Holidays and school periods used to derive the calendar feature columns.
class CalendarInfo {
public:
    CalendarInfo() = default;
    CalendarInfo(std::set<Date> holidays, std::vector<std::pair<Date, Date>> school_periods)
        : holidays_(std::move(holidays)), school_periods_(std::move(school_periods)) {}

    /// One ISO date per line; blank lines and `#` comments ignored.
    static CalendarInfo from_files(const std::filesystem::path& holidays_file,
                                   const std::filesystem::path& school_periods_file);

    bool is_holiday(Date d) const { return holidays_.contains(d); }
    bool is_school_day(Date d) const;
    CalendarFeatures features(Timestamp ts) const;

    const std::set<Date>& holidays() const noexcept { return holidays_; }
    const std::vector<std::pair<Date, Date>>& school_periods() const noexcept { return school_periods_; }

    void write_files(const std::filesystem::path& holidays_file,
                     const std::filesystem::path& school_periods_file) const;

private:
    std::set<Date> holidays_;
    std::vector<std::pair<Date, Date>> school_periods_;  // inclusive ranges
};

/// Madrid-style calendar (national plus local holidays, academic terms) for
/// the given range of years. Used by the synthetic data source.
CalendarInfo default_calendar(int first_year, int last_year);

}  // namespace uqt
