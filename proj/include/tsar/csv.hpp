#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "tsar/series.hpp"

namespace tsar {

/// Parse an ISO-8601 UTC timestamp ("2024-01-31T06:00:00Z", the trailing Z
/// and seconds optional, or a bare date) to epoch seconds.
std::int64_t parse_timestamp(const std::string& text);

/// Format epoch seconds as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(std::int64_t ts);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Read a frame from CSV: header row required, first column timestamps,
/// remaining columns numbers. Empty cells or "nan" (any case) are missing.
/// Rows must be strictly increasing and uniformly spaced; violations raise
/// CsvError naming the first offending line.
SeriesFrame read_frame_csv(std::istream& in);
SeriesFrame read_frame_csv_file(const std::string& path);

void write_frame_csv(std::ostream& out, const SeriesFrame& frame);
void write_frame_csv_file(const std::string& path, const SeriesFrame& frame);

}  // namespace tsar
