#include "tsar/residual_gp.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "gp_row_loss.hpp"
#include "tsar/errors.hpp"
#include "tsar/parallel.hpp"

namespace tsar {

Normalizer compute_sigma(const SeriesFrame& residuals) {
    Normalizer n;
    n.sigma.resize(residuals.cols(), 1.0);
    for (std::size_t c = 0; c < residuals.cols(); ++c) {
        double sum_sq = 0.0;
        std::size_t count = 0;
        for (double v : residuals.column(c)) {
            if (is_missing(v)) continue;
            sum_sq += v * v;
            ++count;
        }
        if (count == 0) continue;  // all-missing: sigma stays 1
        double rms = std::sqrt(sum_sq / static_cast<double>(count));
        if (rms == 0.0) {
            std::cerr << "tsar: warning: column '" << residuals.columns()[c]
                      << "' has zero residual norm; sigma set to 1\n";
            rms = 1.0;
        }
        n.sigma[c] = rms;
    }
    return n;
}

namespace {

SeriesFrame scale_frame(const SeriesFrame& frame, const Normalizer& n, bool divide) {
    if (n.sigma.size() != frame.cols()) throw Error("normalizer dimension mismatch");
    std::vector<std::vector<double>> cols(frame.cols());
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        auto src = frame.column(c);
        cols[c].assign(src.begin(), src.end());
        double s = n.sigma[c];
        for (double& v : cols[c])
            if (!is_missing(v)) v = divide ? v / s : v * s;
    }
    return SeriesFrame(frame.grid(), frame.columns(), std::move(cols));
}

}  // namespace

SeriesFrame normalize(const SeriesFrame& residuals, const Normalizer& n) {
    return scale_frame(residuals, n, true);
}

SeriesFrame denormalize(const SeriesFrame& normalized, const Normalizer& n) {
    return scale_frame(normalized, n, false);
}

LaggedCorrelations estimate_correlations(const SeriesFrame& norm_train, std::size_t past,
                                         std::size_t future) {
    if (past < 1 || future < 1) throw Error("past and future must be >= 1");
    const std::size_t m = norm_train.cols();
    const std::size_t span = past + future;
    LaggedCorrelations corr(m, span);

    // Only tau >= 0 is estimated; c^(j,i)_(-tau) mirrors c^(i,j)_tau so the
    // estimator symmetry holds bit-identically. At tau = 0 the (i,j) and
    // (j,i) products coincide, so only i <= j is computed.
    struct Item {
        std::size_t i, j;
        std::int64_t tau;
    };
    std::vector<Item> items;
    for (std::int64_t tau = 0; tau < static_cast<std::int64_t>(span); ++tau)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = (tau == 0 ? i : 0); j < m; ++j) items.push_back({i, j, tau});

    const auto rows = static_cast<std::int64_t>(norm_train.rows());
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
    for (std::size_t w = 0; w < items.size(); ++w) {
        const auto [i, j, tau] = items[w];
        auto a = norm_train.column(i);
        auto b = norm_train.column(j);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::int64_t t = 0; t + tau < rows; ++t) {
            double x = a[static_cast<std::size_t>(t)];
            double y = b[static_cast<std::size_t>(t + tau)];
            if (is_missing(x) || is_missing(y)) continue;
            sum += x * y;
            ++count;
        }
        double value = count > 0 ? sum / static_cast<double>(count) : 0.0;
        corr.set(i, j, tau, value);
        corr.set(j, i, -tau, value);
    }
    return corr;
}

Eigen::MatrixXd FullKernel::dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd sigma(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            sigma(r, c) = entry(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    return sigma;
}

Eigen::MatrixXd FullKernel::submatrix(std::span<const std::size_t> rows,
                                      std::span<const std::size_t> cols) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                entry(rows[r], cols[c]);
    return out;
}

Eigen::MatrixXd assemble_kernel(const LaggedCorrelations& corr) {
    return FullKernel(corr).dense();
}

std::vector<double> lambda_grid(std::size_t m, std::size_t past, std::size_t future,
                                double alpha, std::size_t n) {
    if (alpha <= 1.0) throw Error("lambda grid alpha must exceed 1");
    if (n < 1) throw Error("lambda grid must be nonempty");
    std::vector<double> grid;
    grid.reserve(n);
    double top = static_cast<double>(m * (past + future));
    for (std::size_t k = 0; k < n; ++k) grid.push_back(top / std::pow(alpha, static_cast<double>(k)));
    return grid;
}

namespace {

std::shared_ptr<const SchurFactor> factor_schur(const FullKernel& kernel,
                                                const ObservationMask& mask, double lambda) {
    auto factor = std::make_shared<SchurFactor>();
    Eigen::MatrixXd obs = kernel.submatrix(mask.observed, mask.observed);
    obs.diagonal().array() += lambda;
    factor->llt.compute(obs);
    if (factor->llt.info() != Eigen::Success) throw NotPositiveDefiniteError(lambda);
    return factor;
}

}  // namespace

std::vector<double> schur_infer(std::span<const double> rho, const FullKernel& kernel,
                                const ObservationMask& mask, double lambda,
                                SchurSolveCache* cache) {
    if (mask.size() != kernel.size() || rho.size() != kernel.size())
        throw Error("schur_infer dimension mismatch");

    std::vector<double> out(rho.size(), 0.0);
    for (std::size_t i : mask.observed) out[i] = rho[i];
    if (mask.unobserved.empty()) return out;
    if (mask.observed.empty()) return out;  // zero prior mean

    std::shared_ptr<const SchurFactor> factor;
    if (cache) factor = cache->find(mask, lambda);
    if (!factor) {
        factor = factor_schur(kernel, mask, lambda);
        if (cache) cache->insert(mask, lambda, factor);
    }

    Eigen::VectorXd rho_obs(static_cast<Eigen::Index>(mask.observed.size()));
    for (std::size_t k = 0; k < mask.observed.size(); ++k)
        rho_obs[static_cast<Eigen::Index>(k)] = rho[mask.observed[k]];

    Eigen::VectorXd w = factor->llt.solve(rho_obs);
    Eigen::MatrixXd cross = kernel.submatrix(mask.unobserved, mask.observed);
    Eigen::VectorXd filled = cross * w;
    for (std::size_t k = 0; k < mask.unobserved.size(); ++k)
        out[mask.unobserved[k]] = filled[static_cast<Eigen::Index>(k)];
    return out;
}

double evaluate_gp(const SeriesFrame& test_norm, const FullKernel& kernel, double lambda,
                   std::size_t past, std::size_t future, SchurSolveCache* cache) {
    SchurSolveCache local;
    if (!cache) cache = &local;
    const auto rows = static_cast<std::int64_t>(test_norm.rows());
    std::vector<double> losses(static_cast<std::size_t>(rows), 0.0);
    std::atomic<bool> failed{false};
    double failed_lambda = lambda;

#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
    for (std::int64_t t = 0; t < rows; ++t) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            losses[static_cast<std::size_t>(t)] = detail::gp_row_loss(
                test_norm, t, past, future,
                [&](std::span<const double> flat, const ObservationMask& mask) {
                    return schur_infer(flat, kernel, mask, lambda, cache);
                });
        } catch (const NotPositiveDefiniteError& e) {
#pragma omp critical
            {
                failed_lambda = e.lambda();
                failed.store(true);
            }
        }
    }
    if (failed.load()) throw NotPositiveDefiniteError(failed_lambda);

    double total = 0.0;
    for (double l : losses) total += l;  // fixed order keeps the sum deterministic
    return total;
}

}  // namespace tsar
