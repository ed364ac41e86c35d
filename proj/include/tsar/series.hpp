#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsar/missing.hpp"

namespace tsar {

/// Uniform time grid: integer epoch-seconds origin plus a fixed positive
/// step. Row t maps to timestamp origin + t * step.
struct TimeGrid {
    std::int64_t origin = 0;
    std::int64_t step = 3600;
    std::size_t length = 0;

    std::int64_t time_at(std::int64_t row) const { return origin + row * step; }

    /// Row index of an on-grid timestamp. Throws when ts is not aligned.
    std::int64_t row_of(std::int64_t ts) const;
};

/// A uniformly spaced, time-indexed table of real-or-missing values.
/// Reads outside the grid return missing for every column. Frames are
/// treated as immutable once filled and are safe to share across threads.
class SeriesFrame {
public:
    SeriesFrame() = default;
    SeriesFrame(TimeGrid grid, std::vector<std::string> columns);
    SeriesFrame(TimeGrid grid, std::vector<std::string> columns,
                std::vector<std::vector<double>> values);

    const TimeGrid& grid() const { return grid_; }
    std::size_t rows() const { return grid_.length; }
    std::size_t cols() const { return names_.size(); }
    const std::vector<std::string>& columns() const { return names_; }

    /// Value at a (possibly out-of-range) row index.
    double at(std::int64_t row, std::size_t col) const {
        if (row < 0 || row >= static_cast<std::int64_t>(grid_.length)) return kMissing;
        return values_[col][static_cast<std::size_t>(row)];
    }

    void set(std::size_t row, std::size_t col, double v) { values_[col][row] = v; }

    std::span<const double> column(std::size_t col) const { return values_[col]; }

private:
    TimeGrid grid_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> values_;  // one contiguous vector per column
};

/// Train/test split ratio, strictly inside (0, 1).
struct SplitSpec {
    double ratio = 2.0 / 3.0;
};

/// Positional prefix split: train gets rows [0, round(r*T)), test the rest,
/// with the cut clamped so both sides are nonempty. Missingness is ignored.
std::pair<SeriesFrame, SeriesFrame> split_train_test(const SeriesFrame& frame,
                                                     const SplitSpec& spec);

/// Partition of {0, ..., n-1} into observed and unobserved index lists.
struct ObservationMask {
    std::vector<std::size_t> observed;
    std::vector<std::size_t> unobserved;

    static ObservationMask from_values(std::span<const double> flat);

    std::size_t size() const { return observed.size() + unobserved.size(); }

    /// Packed bitset of the observed set, usable as a cache key.
    std::vector<std::uint64_t> observed_bits() const;
};

/// Component-major window concatenation: for each column, the values at
/// rows t-past+1, ..., t+future. Out-of-range reads are missing.
std::vector<double> window_concat(const SeriesFrame& frame, std::int64_t t,
                                  std::size_t past, std::size_t future);

/// Inverse of window_concat: rows are time offsets, columns components.
std::vector<std::vector<double>> deconcat(std::span<const double> flat, std::size_t m,
                                          std::size_t past, std::size_t future);

}  // namespace tsar
