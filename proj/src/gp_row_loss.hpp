#pragma once

#include <span>
#include <vector>

#include "tsar/series.hpp"

namespace tsar::detail {

// One test row's forecast loss: entries after time t are hidden, the window
// is inferred, and squared deviations at observed future truths accumulate.
template <class InferFn>
double gp_row_loss(const SeriesFrame& test, std::int64_t t, std::size_t past, std::size_t future,
                   const InferFn& infer) {
    const std::size_t m = test.cols();
    const std::size_t span = past + future;
    std::vector<double> flat = window_concat(test, t, past, future);
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t u = past; u < span; ++u) flat[c * span + u] = kMissing;

    bool any_truth = false;
    for (std::size_t c = 0; c < m && !any_truth; ++c)
        for (std::size_t u = past; u < span && !any_truth; ++u)
            if (!is_missing(test.at(
                    t - static_cast<std::int64_t>(past) + 1 + static_cast<std::int64_t>(u), c)))
                any_truth = true;
    if (!any_truth) return 0.0;

    ObservationMask mask = ObservationMask::from_values(flat);
    std::vector<double> inferred = infer(flat, mask);

    double loss = 0.0;
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t u = past; u < span; ++u) {
            double truth =
                test.at(t - static_cast<std::int64_t>(past) + 1 + static_cast<std::int64_t>(u), c);
            if (is_missing(truth)) continue;
            double dev = inferred[c * span + u] - truth;
            loss += dev * dev;
        }
    return loss;
}

}  // namespace tsar::detail
