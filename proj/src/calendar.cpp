#include "uqt/calendar.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "uqt/error.hpp"

namespace uqt {

using namespace std::chrono;

namespace {

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw DataError("cannot parse datetime '" + std::string(whole) + "'");
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
    return s;
}

}  // namespace

Date parse_date(std::string_view raw) {
    auto text = trim(raw);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw DataError("cannot parse date '" + std::string(raw) + "'");
    Date d{year{parse_int(text.substr(0, 4), raw)}, month{static_cast<unsigned>(parse_int(text.substr(5, 2), raw))},
           day{static_cast<unsigned>(parse_int(text.substr(8, 2), raw))}};
    if (!d.ok()) throw DataError("invalid calendar date '" + std::string(raw) + "'");
    return d;
}

Timestamp parse_timestamp(std::string_view raw) {
    auto text = trim(raw);
    if (text.size() < 16 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':')
        throw DataError("cannot parse datetime '" + std::string(raw) + "'");
    Date d = parse_date(text.substr(0, 10));
    int hh = parse_int(text.substr(11, 2), raw);
    int mm = parse_int(text.substr(14, 2), raw);
    int ss = 0;
    if (text.size() >= 19 && text[16] == ':') ss = parse_int(text.substr(17, 2), raw);
    else if (text.size() != 16) throw DataError("cannot parse datetime '" + std::string(raw) + "'");
    if (hh > 23 || mm > 59 || ss > 59 || hh < 0 || mm < 0 || ss < 0)
        throw DataError("time of day out of range in '" + std::string(raw) + "'");
    return sys_days{d} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

std::string format_timestamp(Timestamp ts) {
    const int sod = seconds_of_day(ts);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d", format_date(date_of(ts)).c_str(), sod / 3600, (sod / 60) % 60,
                  sod % 60);
    return buf;
}

Date date_of(Timestamp ts) { return Date{floor<days>(ts)}; }

int seconds_of_day(Timestamp ts) { return static_cast<int>((ts - floor<days>(ts)).count()); }

int day_of_week(Timestamp ts) {
    // iso_encoding: Monday = 1 ... Sunday = 7
    return static_cast<int>(weekday{floor<days>(ts)}.iso_encoding()) - 1;
}

bool CalendarInfo::is_school_day(Date d) const {
    for (const auto& [first, last] : school_periods_)
        if (first <= d && d <= last) return true;
    return false;
}

CalendarFeatures CalendarInfo::features(Timestamp ts) const {
    const Date d = date_of(ts);
    return {static_cast<double>(day_of_week(ts)), is_holiday(d) ? 1.0 : 0.0, is_school_day(d) ? 1.0 : 0.0};
}

CalendarInfo CalendarInfo::from_files(const std::filesystem::path& holidays_file,
                                      const std::filesystem::path& school_periods_file) {
    std::set<Date> holidays;
    std::vector<std::pair<Date, Date>> periods;
    if (!holidays_file.empty()) {
        std::ifstream in(holidays_file);
        if (!in) throw SchemaError("cannot open holiday file " + holidays_file.string());
        std::string line;
        while (std::getline(in, line)) {
            auto t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            holidays.insert(parse_date(t));
        }
    }
    if (!school_periods_file.empty()) {
        std::ifstream in(school_periods_file);
        if (!in) throw SchemaError("cannot open school-period file " + school_periods_file.string());
        std::string line;
        while (std::getline(in, line)) {
            auto t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            auto comma = t.find(',');
            if (comma == std::string_view::npos) throw SchemaError("school period line needs 'start,end': " + line);
            Date a = parse_date(t.substr(0, comma));
            Date b = parse_date(t.substr(comma + 1));
            if (b < a) throw DataError("school period ends before it starts: " + line);
            periods.emplace_back(a, b);
        }
    }
    return CalendarInfo(std::move(holidays), std::move(periods));
}

void CalendarInfo::write_files(const std::filesystem::path& holidays_file,
                               const std::filesystem::path& school_periods_file) const {
    std::ofstream h(holidays_file);
    for (const auto& d : holidays_) h << format_date(d) << '\n';
    std::ofstream s(school_periods_file);
    for (const auto& [a, b] : school_periods_) s << format_date(a) << ',' << format_date(b) << '\n';
}

CalendarInfo default_calendar(int first_year, int last_year) {
    std::set<Date> holidays;
    std::vector<std::pair<Date, Date>> periods;
    // Fixed-date national holidays plus Madrid regional and city holidays.
    constexpr std::pair<unsigned, unsigned> fixed[] = {{1, 1},  {1, 6},  {5, 1},   {5, 2},   {5, 15},  {8, 15},
                                                       {10, 12}, {11, 1}, {11, 9}, {12, 6}, {12, 8}, {12, 25}};
    for (int y = first_year; y <= last_year; ++y) {
        for (auto [m, d] : fixed) holidays.insert(Date{year{y}, month{m}, day{d}});
        periods.emplace_back(Date{year{y}, January, day{8}}, Date{year{y}, March, day{29}});
        periods.emplace_back(Date{year{y}, April, day{8}}, Date{year{y}, June, day{21}});
        periods.emplace_back(Date{year{y}, September, day{9}}, Date{year{y}, December, day{20}});
    }
    return CalendarInfo(std::move(holidays), std::move(periods));
}

}  // namespace uqt
