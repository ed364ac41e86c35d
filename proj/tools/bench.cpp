// Benchmark comparing the OpenMP kernels against their serial reference
// implementations on a synthetic residual series.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "tsar/parallel.hpp"
#include "tsar/reference.hpp"
#include "tsar/residual_gp.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

tsar::SeriesFrame make_series(std::size_t rows, std::size_t cols, double missing, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    tsar::TimeGrid grid{0, 3600, rows};
    std::vector<std::string> names;
    for (std::size_t c = 0; c < cols; ++c) names.push_back("x" + std::to_string(c));
    tsar::SeriesFrame frame(grid, names);
    std::vector<double> shared(rows);
    double ar = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        ar = 0.8 * ar + noise(rng);
        shared[r] = ar;
    }
    for (std::size_t c = 0; c < cols; ++c) {
        double own = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            own = 0.5 * own + noise(rng);
            double v = 0.7 * shared[r] + own;
            frame.set(r, c, unif(rng) < missing ? tsar::kMissing : v);
        }
    }
    return frame;
}

}  // namespace

int main() {
    const std::size_t rows = 20000, cols = 16, past = 8, future = 4;
    std::printf("threads: %d\n", tsar::max_threads());
    std::printf("series: %zu rows x %zu cols, 10%% missing, span %zu\n\n", rows, cols,
                past + future);

    tsar::SeriesFrame series = make_series(rows, cols, 0.10, 99);
    tsar::Normalizer sigma = tsar::compute_sigma(series);
    tsar::SeriesFrame norm = tsar::normalize(series, sigma);

    auto start = Clock::now();
    tsar::LaggedCorrelations serial_corr = tsar::reference::estimate_correlations(norm, past, future);
    double t_serial = seconds_since(start);

    start = Clock::now();
    tsar::LaggedCorrelations parallel_corr = tsar::estimate_correlations(norm, past, future);
    double t_parallel = seconds_since(start);

    double max_dev = 0.0;
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            for (std::int64_t tau = 1 - static_cast<std::int64_t>(past + future);
                 tau < static_cast<std::int64_t>(past + future); ++tau)
                max_dev = std::max(max_dev,
                                   std::abs(serial_corr.at(i, j, tau) - parallel_corr.at(i, j, tau)));
    std::printf("estimate_correlations  serial %8.3fs   openmp %8.3fs   speedup %.2fx   max dev %.2e\n",
                t_serial, t_parallel, t_serial / t_parallel, max_dev);

    tsar::SeriesFrame test = make_series(2000, cols, 0.10, 123);
    tsar::FullKernel kernel(parallel_corr);
    double lambda = 1.0;

    start = Clock::now();
    double loss_serial = tsar::reference::evaluate_gp(test, kernel, lambda, past, future);
    t_serial = seconds_since(start);

    start = Clock::now();
    double loss_parallel = tsar::evaluate_gp(test, kernel, lambda, past, future);
    t_parallel = seconds_since(start);
    std::printf("evaluate_gp (full)     serial %8.3fs   openmp %8.3fs   speedup %.2fx   dev %.2e\n",
                t_serial, t_parallel, t_serial / t_parallel,
                std::abs(loss_serial - loss_parallel));

    auto dirs = tsar::top_r_directions(tsar::lag0_matrix(parallel_corr), 2);
    tsar::LowRankBlockDiagKernel lr = tsar::build_lr_bd(kernel, dirs);

    start = Clock::now();
    double lr_serial = tsar::reference::evaluate_gp(test, lr, lambda, past, future);
    t_serial = seconds_since(start);

    start = Clock::now();
    double lr_parallel = tsar::evaluate_gp(test, lr, lambda, past, future);
    t_parallel = seconds_since(start);
    std::printf("evaluate_gp (lowrank)  serial %8.3fs   openmp %8.3fs   speedup %.2fx   dev %.2e\n",
                t_serial, t_parallel, t_serial / t_parallel, std::abs(lr_serial - lr_parallel));
    return 0;
}
