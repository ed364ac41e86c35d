#include "tsar/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "tsar/errors.hpp"

namespace tsar {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// civil-days algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
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
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool parse_fixed_uint(const std::string& s, std::size_t pos, std::size_t len, unsigned& out) {
    if (pos + len > s.size()) return false;
    unsigned v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        v = v * 10 + static_cast<unsigned>(s[i] - '0');
    }
    out = v;
    return true;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool is_nan_token(const std::string& s) {
    if (s.size() != 3) return false;
    return std::tolower(s[0]) == 'n' && std::tolower(s[1]) == 'a' && std::tolower(s[2]) == 'n';
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text) {
    unsigned year4 = 0, month = 0, day = 0, hh = 0, mm = 0, ss = 0;
    const std::string s = trim(text);
    if (!parse_fixed_uint(s, 0, 4, year4) || s.size() < 10 || s[4] != '-' || s[7] != '-' ||
        !parse_fixed_uint(s, 5, 2, month) || !parse_fixed_uint(s, 8, 2, day))
        throw Error("invalid timestamp '" + text + "'");
    std::size_t pos = 10;
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != ' ') throw Error("invalid timestamp '" + text + "'");
        ++pos;
        if (!parse_fixed_uint(s, pos, 2, hh) || pos + 5 > s.size() || s[pos + 2] != ':' ||
            !parse_fixed_uint(s, pos + 3, 2, mm))
            throw Error("invalid timestamp '" + text + "'");
        pos += 5;
        if (pos < s.size() && s[pos] == ':') {
            if (!parse_fixed_uint(s, pos + 1, 2, ss)) throw Error("invalid timestamp '" + text + "'");
            pos += 3;
        }
        if (pos < s.size()) {
            if (s.substr(pos) != "Z" && s.substr(pos) != "+00:00")
                throw Error("timestamp '" + text + "' must be UTC");
        }
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60)
        throw Error("invalid timestamp '" + text + "'");
    return days_from_civil(year4, month, day) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_timestamp(std::int64_t ts) {
    std::int64_t days = ts / 86400;
    std::int64_t rem = ts % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem % 3600) / 60), static_cast<long long>(rem % 60));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

SeriesFrame read_frame_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CsvError("missing header row", 1);
    auto header = split_line(line);
    if (header.size() < 2) throw CsvError("header must name a timestamp and at least one column", 1);
    std::vector<std::string> names(header.begin() + 1, header.end());

    std::vector<std::int64_t> times;
    std::vector<std::vector<double>> cols(names.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != header.size())
            throw CsvError("expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()),
                           lineno);
        std::int64_t ts;
        try {
            ts = parse_timestamp(fields[0]);
        } catch (const Error& e) {
            throw CsvError(e.what(), lineno);
        }
        if (!times.empty() && ts <= times.back())
            throw CsvError("timestamps must be strictly increasing", lineno);
        if (times.size() >= 2) {
            std::int64_t step = times[1] - times[0];
            if (ts - times.back() != step)
                throw CsvError("non-uniform spacing: expected step " + std::to_string(step) +
                                   "s, got " + std::to_string(ts - times.back()) + "s",
                               lineno);
        }
        times.push_back(ts);
        for (std::size_t c = 0; c < names.size(); ++c) {
            const std::string& f = fields[c + 1];
            if (f.empty() || is_nan_token(f)) {
                cols[c].push_back(kMissing);
                continue;
            }
            double v;
            auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
                throw CsvError("invalid number '" + f + "'", lineno);
            cols[c].push_back(v);
        }
    }
    // header-only files are valid: an empty frame reads as all-missing
    TimeGrid grid{times.empty() ? 0 : times.front(),
                  times.size() > 1 ? times[1] - times[0] : 3600, times.size()};
    return SeriesFrame(grid, std::move(names), std::move(cols));
}

SeriesFrame read_frame_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_frame_csv(in);
}

void write_frame_csv(std::ostream& out, const SeriesFrame& frame) {
    out << "timestamp";
    for (const auto& name : frame.columns()) out << ',' << name;
    out << '\n';
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out << format_timestamp(frame.grid().time_at(static_cast<std::int64_t>(r)));
        for (std::size_t c = 0; c < frame.cols(); ++c) {
            double v = frame.at(static_cast<std::int64_t>(r), c);
            out << ',';
            if (!is_missing(v)) out << format_double(v);
        }
        out << '\n';
    }
}

void write_frame_csv_file(const std::string& path, const SeriesFrame& frame) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_frame_csv(out, frame);
}

}  // namespace tsar
