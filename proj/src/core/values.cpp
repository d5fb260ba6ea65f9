#include "kgdiff/values.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace kgdiff::values {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Days from civil (Howard Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
    if (pos + count > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < count; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    pos += count;
    out = v;
    return true;
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

}  // namespace

std::optional<double> parse_number(std::string_view lexical) {
    auto s = trim(lexical);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    // from_chars accepts "inf"/"nan"; require a digit or '.' start after the sign
    std::size_t first = s.front() == '-' ? 1 : 0;
    if (first >= s.size() || !(std::isdigit(static_cast<unsigned char>(s[first])) || s[first] == '.'))
        return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<double> parse_datetime(std::string_view lexical) {
    auto s = trim(lexical);
    std::size_t pos = 0;
    bool negative_year = false;
    if (!s.empty() && s[0] == '-') {
        negative_year = true;
        pos = 1;
    }
    std::size_t year_start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos - year_start < 4) return std::nullopt;
    std::int64_t year = 0;
    for (std::size_t i = year_start; i < pos; ++i) year = year * 10 + (s[i] - '0');
    if (negative_year) year = -year;
    int month = 0, day = 0, hour = 0, minute = 0, second = 0;
    double frac = 0;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!read_digits(s, pos, 2, month) || pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!read_digits(s, pos, 2, day)) return std::nullopt;
    if (month < 1 || month > 12) return std::nullopt;
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int max_day = kDays[month - 1] + (month == 2 && is_leap(year) ? 1 : 0);
    if (day < 1 || day > max_day) return std::nullopt;
    if (pos < s.size() && s[pos] == 'T') {
        ++pos;
        if (!read_digits(s, pos, 2, hour) || pos >= s.size() || s[pos] != ':') return std::nullopt;
        ++pos;
        if (!read_digits(s, pos, 2, minute) || pos >= s.size() || s[pos] != ':') return std::nullopt;
        ++pos;
        if (!read_digits(s, pos, 2, second)) return std::nullopt;
        if (hour > 24 || minute > 59 || second > 59) return std::nullopt;
        if (hour == 24 && (minute != 0 || second != 0)) return std::nullopt;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            double scale = 0.1;
            std::size_t start = pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
                frac += (s[pos] - '0') * scale;
                scale /= 10;
                ++pos;
            }
            if (pos == start) return std::nullopt;
        }
    }
    int offset_minutes = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z') {
            ++pos;
        } else if (s[pos] == '+' || s[pos] == '-') {
            int sign = s[pos] == '-' ? -1 : 1;
            ++pos;
            int oh = 0, om = 0;
            if (!read_digits(s, pos, 2, oh) || pos >= s.size() || s[pos] != ':') return std::nullopt;
            ++pos;
            if (!read_digits(s, pos, 2, om)) return std::nullopt;
            offset_minutes = sign * (oh * 60 + om);
        } else {
            return std::nullopt;
        }
    }
    if (pos != s.size()) return std::nullopt;
    const double days = static_cast<double>(days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)));
    return days * 86400.0 + hour * 3600.0 + minute * 60.0 + second + frac - offset_minutes * 60.0;
}

std::optional<bool> parse_boolean(std::string_view lexical) {
    auto s = trim(lexical);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    return std::nullopt;
}

std::string format_iso8601(double epoch_seconds) {
    const double whole = std::floor(epoch_seconds);
    auto total = static_cast<std::int64_t>(whole);
    std::int64_t days = total / 86400;
    std::int64_t rem = total % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t y = 0;
    unsigned m = 0, d = 0;
    civil_from_days(days, y, m, d);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", y < 0 ? "-" : "",
                  static_cast<long long>(y < 0 ? -y : y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    return buf;
}

std::optional<std::string> normalize_datetime(std::string_view lexical) {
    auto v = parse_datetime(lexical);
    if (!v) return std::nullopt;
    std::string iso = format_iso8601(*v);
    iso.pop_back();  // drop 'Z'
    return iso;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace kgdiff::values
