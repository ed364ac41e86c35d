#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "tsar/errors.hpp"
#include "tsar/reference.hpp"
#include "tsar/residual_gp.hpp"

using namespace tsar;
using tsar::testing::make_frame;

namespace {

// Past-observed/future-hidden mask in component-major flat layout.
ObservationMask var_mask(std::size_t m, std::size_t past, std::size_t future) {
    ObservationMask mask;
    const std::size_t span = past + future;
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t u = 0; u < span; ++u)
            (u < past ? mask.observed : mask.unobserved).push_back(c * span + u);
    return mask;
}

// Extract the U x O linear operator realized by schur_infer.
Eigen::MatrixXd schur_operator(const FullKernel& kernel, const ObservationMask& mask,
                               double lambda) {
    Eigen::MatrixXd op(static_cast<Eigen::Index>(mask.unobserved.size()),
                       static_cast<Eigen::Index>(mask.observed.size()));
    SchurSolveCache cache;
    for (std::size_t k = 0; k < mask.observed.size(); ++k) {
        std::vector<double> rho(kernel.size(), kMissing);
        for (std::size_t i : mask.observed) rho[i] = 0.0;
        rho[mask.observed[k]] = 1.0;
        auto out = schur_infer(rho, kernel, mask, lambda, &cache);
        for (std::size_t u = 0; u < mask.unobserved.size(); ++u)
            op(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k)) =
                out[mask.unobserved[u]];
    }
    return op;
}

// Regression oracle built from the same lagged moments: regress future
// window entries on past entries, moment matrices assembled independently
// and solved by QR.
Eigen::MatrixXd regression_oracle(const LaggedCorrelations& corr, const ObservationMask& mask,
                                  double lambda) {
    const std::size_t span = corr.span();
    auto moment = [&](std::size_t flat_a, std::size_t flat_b) {
        std::size_t ca = flat_a / span, cb = flat_b / span;
        auto ua = static_cast<std::int64_t>(flat_a % span);
        auto ub = static_cast<std::int64_t>(flat_b % span);
        return corr.at(ca, cb, ub - ua);
    };
    const auto no = static_cast<Eigen::Index>(mask.observed.size());
    const auto nu = static_cast<Eigen::Index>(mask.unobserved.size());
    Eigen::MatrixXd gram(no, no);
    for (Eigen::Index a = 0; a < no; ++a)
        for (Eigen::Index b = 0; b < no; ++b)
            gram(a, b) = moment(mask.observed[static_cast<std::size_t>(a)],
                                mask.observed[static_cast<std::size_t>(b)]);
    gram.diagonal().array() += lambda;
    Eigen::MatrixXd cross(nu, no);
    for (Eigen::Index u = 0; u < nu; ++u)
        for (Eigen::Index b = 0; b < no; ++b)
            cross(u, b) = moment(mask.unobserved[static_cast<std::size_t>(u)],
                                 mask.observed[static_cast<std::size_t>(b)]);
    // B = cross * gram^-1, solved column-block wise via QR
    return gram.colPivHouseholderQr().solve(cross.transpose()).transpose();
}

// Brute-force windowed regression on the raw data: stack every fully
// observed (past, future) window pair and solve ordinary least squares.
Eigen::MatrixXd windowed_ols(const SeriesFrame& norm, std::size_t past, std::size_t future) {
    const std::size_t m = norm.cols();
    const auto rows = static_cast<std::int64_t>(norm.rows());
    std::vector<Eigen::VectorXd> xs, ys;
    for (std::int64_t t = static_cast<std::int64_t>(past) - 1;
         t + static_cast<std::int64_t>(future) < rows; ++t) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(m * past));
        Eigen::VectorXd y(static_cast<Eigen::Index>(m * future));
        for (std::size_t c = 0; c < m; ++c) {
            for (std::size_t u = 0; u < past; ++u)
                x[static_cast<Eigen::Index>(c * past + u)] =
                    norm.at(t - static_cast<std::int64_t>(past) + 1 + static_cast<std::int64_t>(u),
                            c);
            for (std::size_t u = 0; u < future; ++u)
                y[static_cast<Eigen::Index>(c * future + u)] =
                    norm.at(t + 1 + static_cast<std::int64_t>(u), c);
        }
        xs.push_back(x);
        ys.push_back(y);
    }
    Eigen::MatrixXd design(static_cast<Eigen::Index>(xs.size()),
                           static_cast<Eigen::Index>(m * past));
    Eigen::MatrixXd target(static_cast<Eigen::Index>(ys.size()),
                           static_cast<Eigen::Index>(m * future));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        design.row(static_cast<Eigen::Index>(i)) = xs[i];
        target.row(static_cast<Eigen::Index>(i)) = ys[i];
    }
    return design.colPivHouseholderQr().solve(target).transpose();
}

// Reorder the schur operator (component-major window indices) to the
// windowed_ols layout (past offsets per component).
Eigen::MatrixXd to_regression_layout(const Eigen::MatrixXd& op, std::size_t m, std::size_t past,
                                     std::size_t future) {
    Eigen::MatrixXd out(op.rows(), op.cols());
    // op rows: (c, u>=past) in flat order c*(span)+u; cols: (c, u<past).
    // windowed layout rows: c*future + f; cols: c*past + p.
    const std::size_t span = past + future;
    std::vector<std::size_t> row_map, col_map;
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t u = 0; u < span; ++u)
            (u < past ? col_map : row_map).push_back(c * (u < past ? past : future) +
                                                     (u < past ? u : u - past));
    Eigen::MatrixXd rearranged(op.rows(), op.cols());
    for (Eigen::Index r = 0; r < op.rows(); ++r)
        for (Eigen::Index c = 0; c < op.cols(); ++c)
            rearranged(static_cast<Eigen::Index>(row_map[static_cast<std::size_t>(r)]),
                       static_cast<Eigen::Index>(col_map[static_cast<std::size_t>(c)])) = op(r, c);
    return rearranged;
}

}  // namespace

TEST_CASE("compute_sigma basics") {
    SUBCASE("alternating signs have unit rms") {
        auto frame = make_frame({{1.0, -1.0, 1.0, -1.0}});
        CHECK(compute_sigma(frame).sigma[0] == 1.0);
    }
    SUBCASE("all-missing column gets sigma 1") {
        auto frame = make_frame({{kMissing, kMissing}});
        CHECK(compute_sigma(frame).sigma[0] == 1.0);
    }
    SUBCASE("single observation") {
        auto frame = make_frame({{kMissing, 3.0, kMissing}});
        CHECK(compute_sigma(frame).sigma[0] == 3.0);
    }
    SUBCASE("all-zero column promoted to 1") {
        auto frame = make_frame({{0.0, 0.0, 0.0}});
        CHECK(compute_sigma(frame).sigma[0] == 1.0);
    }
}

TEST_CASE("normalize and denormalize") {
    auto frame = make_frame({{6.0, kMissing}, {2.0, 4.0}});
    Normalizer n{{3.0, 1.0}};
    auto norm = normalize(frame, n);
    CHECK(norm.at(0, 0) == 2.0);
    CHECK(is_missing(norm.at(1, 0)));
    CHECK(norm.at(1, 1) == 4.0);
    auto back = denormalize(norm, n);
    CHECK(back.at(0, 0) == 6.0);
    CHECK(is_missing(back.at(1, 0)));
    Normalizer wrong{{1.0}};
    CHECK_THROWS_AS(normalize(frame, wrong), Error);
}

TEST_CASE("fully observed normalized column has unit lag-0 correlation") {
    std::mt19937 rng(7);
    auto frame = tsar::testing::random_var_frame(400, 3, 0.0, rng);
    auto norm = normalize(frame, compute_sigma(frame));
    auto corr = estimate_correlations(norm, 3, 2);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::abs(corr.at(i, i, 0) - 1.0) < 1e-12);
}

TEST_CASE("columns with disjoint observation times have zero cross correlation") {
    // a lives in the first five rows, b in the last five; no lag within the
    // window span can bridge the gap, so every denominator is empty.
    std::vector<double> a(20, kMissing), b(20, kMissing);
    for (std::size_t t = 0; t < 5; ++t) a[t] = 1.0 + static_cast<double>(t);
    for (std::size_t t = 15; t < 20; ++t) b[t] = -2.0 * static_cast<double>(t);
    auto corr = estimate_correlations(make_frame({a, b}), 2, 1);
    for (std::int64_t tau = -2; tau <= 2; ++tau) {
        CHECK(corr.at(0, 1, tau) == 0.0);
        CHECK(corr.at(1, 0, tau) == 0.0);
    }
}

TEST_CASE("single pair average by hand") {
    auto corr = estimate_correlations(make_frame({{0.5, -0.4}}), 1, 1);
    CHECK(corr.at(0, 0, 1) == 0.5 * -0.4);
    CHECK(corr.at(0, 0, -1) == corr.at(0, 0, 1));
    CHECK(corr.at(0, 0, 0) == (0.25 + 0.16) / 2.0);
}

TEST_CASE("estimator symmetry holds bit-identically under missingness") {
    std::mt19937 rng(9);
    auto frame = tsar::testing::random_var_frame(300, 4, 0.3, rng);
    auto norm = normalize(frame, compute_sigma(frame));
    auto corr = estimate_correlations(norm, 4, 2);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::int64_t tau = -5; tau <= 5; ++tau)
                CHECK(corr.at(i, j, tau) == corr.at(j, i, -tau));
}

TEST_CASE("parallel estimator matches the serial reference") {
    std::mt19937 rng(13);
    auto frame = tsar::testing::random_var_frame(250, 3, 0.25, rng);
    auto norm = normalize(frame, compute_sigma(frame));
    auto fast = estimate_correlations(norm, 3, 3);
    auto slow = reference::estimate_correlations(norm, 3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::int64_t tau = -5; tau <= 5; ++tau)
                CHECK(std::abs(fast.at(i, j, tau) - slow.at(i, j, tau)) < 1e-13);
}

TEST_CASE("assemble_kernel builds the block-Toeplitz matrix") {
    SUBCASE("2x2 Toeplitz") {
        LaggedCorrelations corr(1, 2);
        corr.set(0, 0, 0, 1.0);
        corr.set(0, 0, 1, 0.5);
        corr.set(0, 0, -1, 0.5);
        auto sigma = assemble_kernel(corr);
        CHECK(sigma(0, 0) == 1.0);
        CHECK(sigma(0, 1) == 0.5);
        CHECK(sigma(1, 0) == 0.5);
        CHECK(sigma(1, 1) == 1.0);
    }
    SUBCASE("unit lag-0 correlations give the identity") {
        LaggedCorrelations corr(2, 3);
        corr.set(0, 0, 0, 1.0);
        corr.set(1, 1, 0, 1.0);
        CHECK(assemble_kernel(corr).isApprox(Eigen::MatrixXd::Identity(6, 6)));
    }
    SUBCASE("symmetry for estimated correlations") {
        std::mt19937 rng(17);
        for (int iter = 0; iter < 5; ++iter) {
            auto corr = tsar::testing::random_correlations(3, 4, 0.2, rng);
            auto sigma = assemble_kernel(corr);
            CHECK(sigma == sigma.transpose());
        }
    }
}

TEST_CASE("lambda_grid") {
    auto grid = lambda_grid(1, 1, 1, std::cbrt(10.0), 3);
    REQUIRE(grid.size() == 3);
    CHECK(grid[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(grid[1] == doctest::Approx(2.0 / std::cbrt(10.0)).epsilon(1e-15));
    CHECK(grid[2] == doctest::Approx(2.0 / std::pow(10.0, 2.0 / 3.0)).epsilon(1e-15));

    CHECK(lambda_grid(3, 2, 2, 2.0, 1) == std::vector<double>{12.0});
    CHECK_THROWS_AS(lambda_grid(1, 1, 1, 1.0, 3), Error);

    std::mt19937 rng(23);
    std::uniform_real_distribution<double> alpha_dist(1.01, 10.0);
    for (int iter = 0; iter < 20; ++iter) {
        auto g = lambda_grid(2, 3, 1, alpha_dist(rng), 8);
        for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] < g[k - 1]);
    }
}

TEST_CASE("schur_infer hand examples") {
    LaggedCorrelations corr(1, 2);
    corr.set(0, 0, 0, 1.0);
    corr.set(0, 0, 1, 0.7);
    corr.set(0, 0, -1, 0.7);
    FullKernel kernel(corr);

    SUBCASE("all observed passes through") {
        std::vector<double> rho{0.3, -0.9};
        auto mask = ObservationMask::from_values(rho);
        CHECK(schur_infer(rho, kernel, mask, 0.5) == rho);
    }
    SUBCASE("all unobserved is the zero prior mean") {
        std::vector<double> rho{kMissing, kMissing};
        auto mask = ObservationMask::from_values(rho);
        CHECK(schur_infer(rho, kernel, mask, 0.0) == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("2x2 conditional mean with and without regularization") {
        std::vector<double> rho{2.0, kMissing};
        auto mask = ObservationMask::from_values(rho);
        auto plain = schur_infer(rho, kernel, mask, 0.0);
        CHECK(plain[0] == 2.0);
        CHECK(plain[1] == doctest::Approx(0.7 * 2.0).epsilon(1e-14));
        auto damped = schur_infer(rho, kernel, mask, 0.25);
        CHECK(damped[1] == doctest::Approx(0.7 * 2.0 / 1.25).epsilon(1e-14));
    }
}

TEST_CASE("schur_infer is linear in the observed values") {
    std::mt19937 rng(29);
    auto corr = tsar::testing::random_correlations(3, 4, 0.2, rng);
    FullKernel kernel(corr);
    auto mask = tsar::testing::random_mask(kernel.size(), 0.6, rng);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    std::vector<double> rho(kernel.size(), kMissing);
    for (std::size_t i : mask.observed) rho[i] = unif(rng);
    std::vector<double> scaled = rho;
    for (std::size_t i : mask.observed) scaled[i] *= -2.5;
    auto base = schur_infer(rho, kernel, mask, 1.0);
    auto twice = schur_infer(scaled, kernel, mask, 1.0);
    for (std::size_t i : mask.unobserved)
        CHECK(twice[i] == doctest::Approx(-2.5 * base[i]).epsilon(1e-12));
    for (std::size_t i : mask.observed) CHECK(base[i] == rho[i]);  // passthrough
}

TEST_CASE("single observation shrinks by 1/(sigma00 + lambda)") {
    std::mt19937 rng(31);
    auto corr = tsar::testing::random_correlations(2, 3, 0.1, rng);
    FullKernel kernel(corr);
    ObservationMask mask;
    mask.observed = {2};
    for (std::size_t i = 0; i < kernel.size(); ++i)
        if (i != 2) mask.unobserved.push_back(i);
    std::vector<double> rho(kernel.size(), kMissing);
    rho[2] = 1.0;
    double prev_norm = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        auto out = schur_infer(rho, kernel, mask, lambda);
        double expected_scale = 1.0 / (kernel.entry(2, 2) + lambda);
        CHECK(out[0] == doctest::Approx(kernel.entry(0, 2) * expected_scale).epsilon(1e-12));
        Eigen::VectorXd u(static_cast<Eigen::Index>(mask.unobserved.size()));
        for (std::size_t k = 0; k < mask.unobserved.size(); ++k)
            u[static_cast<Eigen::Index>(k)] = out[mask.unobserved[k]];
        CHECK(u.norm() < prev_norm);
        prev_norm = u.norm();
    }
}

TEST_CASE("cached and fresh schur solves are bit-identical") {
    std::mt19937 rng(37);
    auto corr = tsar::testing::random_correlations(2, 4, 0.2, rng);
    FullKernel kernel(corr);
    auto mask = tsar::testing::random_mask(kernel.size(), 0.5, rng);
    std::vector<double> rho(kernel.size(), kMissing);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (std::size_t i : mask.observed) rho[i] = unif(rng);
    SchurSolveCache cache;
    auto first = schur_infer(rho, kernel, mask, 0.8, &cache);
    auto second = schur_infer(rho, kernel, mask, 0.8, &cache);  // cache hit
    auto fresh = schur_infer(rho, kernel, mask, 0.8, nullptr);
    CHECK(first == second);
    CHECK(first == fresh);
}

TEST_CASE("schur_infer reports non-factorizable kernels") {
    // Sigma_OO = [[1,2],[2,1]] has eigenvalues 3 and -1: LLT fails at
    // lambda 0 but succeeds once lambda pushes the spectrum positive.
    LaggedCorrelations corr(1, 3);
    corr.set(0, 0, 0, 1.0);
    corr.set(0, 0, 1, 2.0);
    corr.set(0, 0, -1, 2.0);
    FullKernel kernel(corr);
    std::vector<double> rho{1.0, 1.0, kMissing};
    auto mask = ObservationMask::from_values(rho);
    CHECK_THROWS_AS(schur_infer(rho, kernel, mask, 0.0), NotPositiveDefiniteError);
    try {
        schur_infer(rho, kernel, mask, 0.0);
    } catch (const NotPositiveDefiniteError& e) {
        CHECK(e.lambda() == 0.0);
    }
    CHECK_NOTHROW(schur_infer(rho, kernel, mask, 2.0));
}

TEST_CASE("evaluate_gp edge cases") {
    LaggedCorrelations corr(1, 2);
    corr.set(0, 0, 0, 1.0);
    corr.set(0, 0, 1, 0.5);
    corr.set(0, 0, -1, 0.5);
    FullKernel kernel(corr);

    SUBCASE("all-missing test frame scores zero") {
        auto frame = make_frame({{kMissing, kMissing, kMissing}});
        CHECK(evaluate_gp(frame, kernel, 0.0, 1, 1) == 0.0);
    }
    SUBCASE("two-row hand computation") {
        auto frame = make_frame({{0.6, -0.2}});
        double expected = (0.5 * 0.6 - (-0.2)) * (0.5 * 0.6 - (-0.2));
        CHECK(evaluate_gp(frame, kernel, 0.0, 1, 1) == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("identity kernel scores the squared observed future values") {
    std::mt19937 rng(41);
    const std::size_t m = 2, past = 2, future = 2;
    auto frame = tsar::testing::random_var_frame(40, m, 0.3, rng);
    LaggedCorrelations corr(m, past + future);
    for (std::size_t i = 0; i < m; ++i) corr.set(i, i, 0, 1.0);
    FullKernel kernel(corr);

    // direct enumeration: every window's observed future truths score their
    // squared value because predictions are identically zero
    double expected = 0.0;
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(frame.rows()); ++t)
        for (std::size_t c = 0; c < m; ++c)
            for (std::size_t f = 1; f <= future; ++f) {
                double truth = frame.at(t + static_cast<std::int64_t>(f), c);
                if (!is_missing(truth)) expected += truth * truth;
            }
    CHECK(evaluate_gp(frame, kernel, 0.0, past, future) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("parallel evaluate_gp equals the serial reference exactly") {
    std::mt19937 rng(43);
    auto train = tsar::testing::random_var_frame(300, 2, 0.1, rng);
    auto sigma = compute_sigma(train);
    auto norm_train = normalize(train, sigma);
    FullKernel kernel(estimate_correlations(norm_train, 3, 2));
    auto test = normalize(tsar::testing::random_var_frame(60, 2, 0.2, rng), sigma);
    double fast = evaluate_gp(test, kernel, 1.5, 3, 2);
    double slow = reference::evaluate_gp(test, kernel, 1.5, 3, 2);
    CHECK(fast == slow);
}

TEST_CASE("schur inference with the standard mask matches regression oracles") {
    std::mt19937 rng(47);
    const std::size_t m = 2, past = 2, future = 1;
    auto frame = tsar::testing::random_var_frame(2000, m, 0.0, rng);
    auto norm = normalize(frame, compute_sigma(frame));
    auto corr = estimate_correlations(norm, past, future);
    FullKernel kernel(corr);
    auto mask = var_mask(m, past, future);

    SUBCASE("moments oracle, lambda = 0") {
        auto op = schur_operator(kernel, mask, 0.0);
        auto oracle = regression_oracle(corr, mask, 0.0);
        CHECK(tsar::testing::rel_error(op, oracle) < 1e-6);
    }
    SUBCASE("ridge oracle from the same moments, lambda > 0") {
        auto op = schur_operator(kernel, mask, 0.7);
        auto oracle = regression_oracle(corr, mask, 0.7);
        CHECK(tsar::testing::rel_error(op, oracle) < 1e-6);
    }
    SUBCASE("windowed OLS on raw data converges with train length") {
        auto error_at = [&](std::size_t rows, unsigned seed) {
            std::mt19937 local(seed);
            auto data = tsar::testing::random_var_frame(rows, m, 0.0, local);
            auto n = normalize(data, compute_sigma(data));
            auto c = estimate_correlations(n, past, future);
            auto op = to_regression_layout(schur_operator(FullKernel(c), mask, 0.0), m, past,
                                           future);
            return tsar::testing::rel_error(op, windowed_ols(n, past, future));
        };
        double coarse = error_at(800, 101);
        double fine = error_at(16000, 101);
        CHECK(fine < coarse);
        CHECK(fine < 0.05);
    }
}
