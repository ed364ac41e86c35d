#include "tsar/ggs.hpp"

#include <cmath>
#include <cstddef>
#include <limits>

#include "tsar/errors.hpp"

namespace tsar {

namespace {

void extend_neighbors(std::vector<std::size_t>& current, std::size_t dim,
                      std::span<const std::size_t> base, std::size_t budget,
                      std::span<const std::size_t> sizes,
                      std::vector<std::vector<std::size_t>>& out) {
    if (dim == base.size()) {
        out.push_back(current);
        return;
    }
    const auto lo = static_cast<std::int64_t>(base[dim]) - static_cast<std::int64_t>(budget);
    const auto hi = static_cast<std::int64_t>(base[dim]) + static_cast<std::int64_t>(budget);
    for (std::int64_t v = std::max<std::int64_t>(lo, 0);
         v <= std::min<std::int64_t>(hi, static_cast<std::int64_t>(sizes[dim]) - 1); ++v) {
        auto used = static_cast<std::size_t>(
            std::abs(v - static_cast<std::int64_t>(base[dim])));
        current.push_back(static_cast<std::size_t>(v));
        extend_neighbors(current, dim + 1, base, budget - used, sizes, out);
        current.pop_back();
    }
}

std::size_t l1_norm(std::span<const std::size_t> c) {
    std::size_t n = 0;
    for (std::size_t v : c) n += v;
    return n;
}

// Candidate order: score, then l1 norm, then lexicographic cursor.
bool better(double score_a, const std::vector<std::size_t>& a, double score_b,
            const std::vector<std::size_t>& b) {
    if (score_a != score_b) return score_a < score_b;
    std::size_t na = l1_norm(a), nb = l1_norm(b);
    if (na != nb) return na < nb;
    return a < b;
}

}  // namespace

std::vector<std::vector<std::size_t>> neighbors(std::span<const std::size_t> c, std::size_t width,
                                                std::span<const std::size_t> sizes) {
    if (c.size() != sizes.size()) throw Error("cursor/sizes dimension mismatch");
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] >= sizes[i]) throw Error("cursor out of range");
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> current;
    current.reserve(c.size());
    extend_neighbors(current, 0, c, width, sizes, out);
    return out;
}

SearchReport greedy_grid_search(const std::vector<HyperRange>& ranges,
                                const std::function<double(std::span<const std::size_t>)>& evaluate,
                                std::size_t width) {
    if (ranges.empty()) throw Error("search requires at least one hyper-parameter");
    if (width < 1) throw Error("search width must be >= 1");
    std::vector<std::size_t> sizes;
    for (const auto& range : ranges) {
        if (range.values.empty()) throw Error("hyper-parameter range must be nonempty");
        sizes.push_back(range.values.size());
    }

    SearchReport report;
    std::vector<std::size_t> cursor(ranges.size(), 0);

    while (true) {
        ++report.rounds;
        auto ball = neighbors(cursor, width, sizes);
        for (const auto& candidate : ball) {
            if (report.evaluations.contains(candidate)) continue;
            double score = evaluate(candidate);
            if (std::isnan(score)) score = std::numeric_limits<double>::infinity();
            report.evaluations.emplace(candidate, score);
        }
        const std::vector<std::size_t>* best = nullptr;
        double best_score = std::numeric_limits<double>::infinity();
        for (const auto& candidate : ball) {
            double score = report.evaluations.at(candidate);
            if (best == nullptr || better(score, candidate, best_score, *best)) {
                best = &candidate;
                best_score = score;
            }
        }
        if (*best == cursor) break;
        cursor = *best;
    }

    report.chosen = cursor;
    for (std::size_t i = 0; i < ranges.size(); ++i)
        report.chosen_values.push_back(ranges[i].values[cursor[i]]);
    return report;
}

}  // namespace tsar
