#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tsar {

/// One hyper-parameter dimension: a name and its nonempty value list,
/// ordered by increasing model complexity.
struct HyperRange {
    std::string name;
    std::vector<double> values;
};

/// Outcome of a greedy grid search. Cursors are 0-based index vectors into
/// the ranges. Every evaluated cursor appears exactly once in evaluations.
struct SearchReport {
    std::vector<std::size_t> chosen;
    std::vector<double> chosen_values;
    std::size_t rounds = 0;
    std::map<std::vector<std::size_t>, double> evaluations;
};

/// All in-range cursors within l1 distance `width` of c, including c itself.
std::vector<std::vector<std::size_t>> neighbors(std::span<const std::size_t> c, std::size_t width,
                                                std::span<const std::size_t> sizes);

/// Greedy local descent from the simplest corner (0, ..., 0): each round
/// scores the l1 ball around the cursor (caching, never re-evaluating) and
/// moves to the best neighbor, preferring lower l1 norm then lexicographic
/// order on ties; stops when the cursor itself wins. NaN scores count as
/// +infinity. The evaluate callback must be pure.
SearchReport greedy_grid_search(const std::vector<HyperRange>& ranges,
                                const std::function<double(std::span<const std::size_t>)>& evaluate,
                                std::size_t width);

}  // namespace tsar
