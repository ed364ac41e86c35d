#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "tsar/lowrank.hpp"
#include "tsar/residual_gp.hpp"
#include "tsar/series.hpp"

namespace tsar::testing {

inline SeriesFrame make_frame(std::vector<std::vector<double>> columns, std::int64_t origin = 0,
                              std::int64_t step = 3600) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < columns.size(); ++c) names.push_back("c" + std::to_string(c + 1));
    TimeGrid grid{origin, step, columns.empty() ? 0 : columns[0].size()};
    return SeriesFrame(grid, std::move(names), std::move(columns));
}

/// Stationary VAR(1)-style series with cross-component coupling, optionally
/// thinned by random missingness.
inline SeriesFrame random_var_frame(std::size_t rows, std::size_t cols, double missing,
                                    std::mt19937& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::vector<double>> columns(cols, std::vector<double>(rows));
    std::vector<double> state(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> next(cols);
        for (std::size_t c = 0; c < cols; ++c) {
            double coupled = state[(c + 1) % cols];
            next[c] = 0.55 * state[c] + 0.25 * coupled + noise(rng);
        }
        state = next;
        for (std::size_t c = 0; c < cols; ++c)
            columns[c][r] = unif(rng) < missing ? kMissing : state[c];
    }
    return make_frame(std::move(columns));
}

/// Correlations estimated from a random normalized frame: a realistic
/// fixture that satisfies the estimator symmetry invariant by construction.
inline LaggedCorrelations random_correlations(std::size_t cols, std::size_t span, double missing,
                                              std::mt19937& rng, std::size_t rows = 400) {
    SeriesFrame frame = random_var_frame(rows, cols, missing, rng);
    Normalizer sigma = compute_sigma(frame);
    SeriesFrame norm = normalize(frame, sigma);
    return estimate_correlations(norm, span > 1 ? span - 1 : 1, 1);
}

inline ObservationMask random_mask(std::size_t n, double observe_prob, std::mt19937& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ObservationMask mask;
    for (std::size_t i = 0; i < n; ++i) {
        if (unif(rng) < observe_prob)
            mask.observed.push_back(i);
        else
            mask.unobserved.push_back(i);
    }
    return mask;
}

inline double rel_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    double denom = want.norm();
    return (got - want).norm() / (denom > 0 ? denom : 1.0);
}

inline double rel_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    double denom = want.norm();
    return (got - want).norm() / (denom > 0 ? denom : 1.0);
}

}  // namespace tsar::testing
