#include "tsar/reference.hpp"

#include "gp_row_loss.hpp"
#include "tsar/errors.hpp"

namespace tsar::reference {

LaggedCorrelations estimate_correlations(const SeriesFrame& norm_train, std::size_t past,
                                         std::size_t future) {
    if (past < 1 || future < 1) throw Error("past and future must be >= 1");
    const std::size_t m = norm_train.cols();
    const auto span = static_cast<std::int64_t>(past + future);
    const auto rows = static_cast<std::int64_t>(norm_train.rows());
    LaggedCorrelations corr(m, past + future);

    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::int64_t tau = 1 - span; tau < span; ++tau) {
                double sum = 0.0;
                std::size_t count = 0;
                for (std::int64_t t = 0; t < rows; ++t) {
                    std::int64_t s = t + tau;
                    if (s < 0 || s >= rows) continue;
                    double x = norm_train.at(t, i);
                    double y = norm_train.at(s, j);
                    if (is_missing(x) || is_missing(y)) continue;
                    sum += x * y;
                    ++count;
                }
                corr.set(i, j, tau, count > 0 ? sum / static_cast<double>(count) : 0.0);
            }
    return corr;
}

double evaluate_gp(const SeriesFrame& test_norm, const FullKernel& kernel, double lambda,
                   std::size_t past, std::size_t future) {
    double total = 0.0;
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(test_norm.rows()); ++t)
        total += detail::gp_row_loss(test_norm, t, past, future,
                                     [&](std::span<const double> flat, const ObservationMask& mask) {
                                         return schur_infer(flat, kernel, mask, lambda, nullptr);
                                     });
    return total;
}

double evaluate_gp(const SeriesFrame& test_norm, const LowRankBlockDiagKernel& kernel,
                   double lambda, std::size_t past, std::size_t future) {
    double total = 0.0;
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(test_norm.rows()); ++t)
        total += detail::gp_row_loss(
            test_norm, t, past, future,
            [&](std::span<const double> flat, const ObservationMask& mask) {
                return schur_infer_lowrank(flat, kernel, mask, lambda, nullptr);
            });
    return total;
}

}  // namespace tsar::reference
