#include "tsar/series.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tsar/errors.hpp"

namespace tsar {

std::int64_t TimeGrid::row_of(std::int64_t ts) const {
    if (step <= 0) throw Error("grid step must be positive");
    std::int64_t delta = ts - origin;
    if (delta % step != 0)
        throw Error("timestamp " + std::to_string(ts) + " is off the grid");
    return delta / step;
}

SeriesFrame::SeriesFrame(TimeGrid grid, std::vector<std::string> columns)
    : grid_(grid), names_(std::move(columns)) {
    if (grid_.step <= 0) throw Error("grid step must be positive");
    std::set<std::string> seen(names_.begin(), names_.end());
    if (seen.size() != names_.size()) throw Error("column names must be unique");
    values_.assign(names_.size(), std::vector<double>(grid_.length, kMissing));
}

SeriesFrame::SeriesFrame(TimeGrid grid, std::vector<std::string> columns,
                         std::vector<std::vector<double>> values)
    : SeriesFrame(grid, std::move(columns)) {
    if (values.size() != names_.size()) throw Error("column count mismatch");
    for (const auto& col : values)
        if (col.size() != grid_.length) throw Error("column length mismatch");
    values_ = std::move(values);
}

std::pair<SeriesFrame, SeriesFrame> split_train_test(const SeriesFrame& frame,
                                                     const SplitSpec& spec) {
    if (spec.ratio <= 0.0 || spec.ratio >= 1.0)
        throw Error("split ratio must lie in (0, 1)");
    const std::size_t total = frame.rows();
    if (total < 2) throw Error("frame too short to split");

    auto cut = static_cast<std::int64_t>(std::llround(spec.ratio * static_cast<double>(total)));
    cut = std::clamp<std::int64_t>(cut, 1, static_cast<std::int64_t>(total) - 1);
    const auto n_train = static_cast<std::size_t>(cut);

    TimeGrid train_grid{frame.grid().origin, frame.grid().step, n_train};
    TimeGrid test_grid{frame.grid().time_at(cut), frame.grid().step, total - n_train};

    std::vector<std::vector<double>> train_cols(frame.cols());
    std::vector<std::vector<double>> test_cols(frame.cols());
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        auto col = frame.column(c);
        train_cols[c].assign(col.begin(), col.begin() + cut);
        test_cols[c].assign(col.begin() + cut, col.end());
    }
    return {SeriesFrame(train_grid, frame.columns(), std::move(train_cols)),
            SeriesFrame(test_grid, frame.columns(), std::move(test_cols))};
}

ObservationMask ObservationMask::from_values(std::span<const double> flat) {
    ObservationMask mask;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if (is_missing(flat[i]))
            mask.unobserved.push_back(i);
        else
            mask.observed.push_back(i);
    }
    return mask;
}

std::vector<std::uint64_t> ObservationMask::observed_bits() const {
    std::vector<std::uint64_t> bits((size() + 63) / 64, 0);
    for (std::size_t i : observed) bits[i / 64] |= std::uint64_t{1} << (i % 64);
    return bits;
}

std::vector<double> window_concat(const SeriesFrame& frame, std::int64_t t,
                                  std::size_t past, std::size_t future) {
    if (past < 1 || future < 1) throw Error("window requires past >= 1 and future >= 1");
    const std::size_t span = past + future;
    std::vector<double> flat(frame.cols() * span);
    for (std::size_t c = 0; c < frame.cols(); ++c)
        for (std::size_t u = 0; u < span; ++u)
            flat[c * span + u] =
                frame.at(t - static_cast<std::int64_t>(past) + 1 + static_cast<std::int64_t>(u), c);
    return flat;
}

std::vector<std::vector<double>> deconcat(std::span<const double> flat, std::size_t m,
                                          std::size_t past, std::size_t future) {
    const std::size_t span = past + future;
    if (flat.size() != m * span) throw Error("flat vector length does not match m*(past+future)");
    std::vector<std::vector<double>> window(span, std::vector<double>(m));
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t u = 0; u < span; ++u) window[u][c] = flat[c * span + u];
    return window;
}

}  // namespace tsar
