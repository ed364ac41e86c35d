#include "tsar/model.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <map>

#include "tsar/errors.hpp"
#include "tsar/parallel.hpp"

namespace tsar {

bool HyperSpec::all_fixed(std::size_t components) const {
    if (!fixed_rank || !fixed_lambda) return false;
    if (fixed_counts.size() != components) return false;
    for (const auto& f : fixed_counts)
        if (!f.trend || !f.day || !f.week || !f.year) return false;
    return true;
}

namespace {

std::vector<double> iota_values(int from, int to) {
    std::vector<double> v;
    for (int k = from; k <= to; ++k) v.push_back(static_cast<double>(k));
    return v;
}

std::vector<HyperRange> baseline_ranges(const HyperSpec& spec, std::size_t component) {
    HyperSpec::FixedCounts fixed;
    if (component < spec.fixed_counts.size()) fixed = spec.fixed_counts[component];
    auto range = [](const char* name, std::optional<int> fix, int hi) {
        if (fix) return HyperRange{name, {static_cast<double>(*fix)}};
        return HyperRange{name, iota_values(0, hi)};
    };
    return {range("k_trend", fixed.trend, 1),
            range("k_day", fixed.day, max_day_harmonics(spec.periods)),
            range("k_week", fixed.week, 6),
            range("k_year", fixed.year, 51)};
}

HarmonicCounts counts_from_values(std::span<const double> values) {
    return HarmonicCounts{static_cast<int>(values[0]), static_cast<int>(values[1]),
                          static_cast<int>(values[2]), static_cast<int>(values[3])};
}

SeriesFrame residual_frame(const SeriesFrame& data, const std::vector<BaselineModel>& baselines,
                           std::int64_t t_offset = 0) {
    std::vector<std::vector<double>> cols(data.cols());
    for (std::size_t c = 0; c < data.cols(); ++c) {
        auto src = data.column(c);
        cols[c].resize(src.size());
        for (std::size_t r = 0; r < src.size(); ++r) {
            double x = src[r];
            cols[c][r] = is_missing(x)
                             ? kMissing
                             : x - baselines[c].value_at(t_offset + static_cast<std::int64_t>(r));
        }
    }
    return SeriesFrame(data.grid(), data.columns(), std::move(cols));
}

// Greedy search over the four harmonic counts of one component: fit on the
// train rows, score on the test rows (test row r lives at time n_train + r).
SearchReport search_baseline(std::span<const double> train_col, std::span<const double> test_col,
                             std::int64_t n_train, const HyperSpec& spec, std::size_t component) {
    auto ranges = baseline_ranges(spec, component);
    return greedy_grid_search(
        ranges,
        [&](std::span<const std::size_t> cursor) {
            std::vector<double> values(cursor.size());
            for (std::size_t i = 0; i < cursor.size(); ++i)
                values[i] = ranges[i].values[cursor[i]];
            HarmonicCounts counts = counts_from_values(values);
            BaselineModel candidate =
                fit_baseline(train_col, counts, spec.periods, spec.gamma, 0);
            return eval_baseline(test_col, n_train, candidate);
        },
        spec.width);
}

}  // namespace

TsarModel fit(const SeriesFrame& data, std::size_t past, std::size_t future,
              const HyperSpec& spec) {
    if (past < 1 || future < 1) throw Error("past and future must be >= 1");
    if (data.cols() == 0) throw Error("data has no columns");
    const std::size_t m = data.cols();
    const bool skip_split = spec.all_fixed(m);
    if (!skip_split && data.rows() < 2) throw Error("frame too short to split");

    TsarModel model;
    model.grid = data.grid();
    model.columns = data.columns();
    model.past = past;
    model.future = future;
    model.baselines.resize(m);
    model.baseline_reports.resize(m);

    SeriesFrame train, test;
    std::int64_t n_train = 0;
    if (!skip_split) {
        std::tie(train, test) = split_train_test(data, SplitSpec{spec.ratio});
        n_train = static_cast<std::int64_t>(train.rows());
    }

    // Per-component baseline selection; components are independent.
    std::vector<HarmonicCounts> chosen(m);
    if (skip_split) {
        for (std::size_t c = 0; c < m; ++c) {
            const auto& f = spec.fixed_counts[c];
            chosen[c] = HarmonicCounts{*f.trend, *f.day, *f.week, *f.year};
        }
    } else {
        std::vector<std::exception_ptr> failures(m);
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
        for (std::size_t c = 0; c < m; ++c) {
            try {
                model.baseline_reports[c] =
                    search_baseline(train.column(c), test.column(c), n_train, spec, c);
                chosen[c] = counts_from_values(model.baseline_reports[c].chosen_values);
            } catch (...) {
                failures[c] = std::current_exception();
            }
        }
        for (std::size_t c = 0; c < m; ++c)
            if (failures[c]) {
                try {
                    std::rethrow_exception(failures[c]);
                } catch (const std::exception& e) {
                    throw Error("component '" + data.columns()[c] + "': " + e.what());
                }
            }
    }

    // Re-fit each baseline on the full data with its chosen counts.
    for (std::size_t c = 0; c < m; ++c)
        model.baselines[c] = fit_baseline(data.column(c), chosen[c], spec.periods, spec.gamma, 0);

    SeriesFrame residuals = residual_frame(data, model.baselines);

    // GP hyper-parameter selection on the split residuals.
    if (spec.fixed_rank && *spec.fixed_rank > m) throw Error("fixed rank exceeds component count");
    if (spec.fixed_lambda && !(*spec.fixed_lambda >= 0.0))
        throw Error("fixed lambda must be nonnegative");
    if (skip_split) {
        model.rank = *spec.fixed_rank;
        model.lambda = *spec.fixed_lambda;
    } else {
        auto [res_train, res_test] = split_train_test(residuals, SplitSpec{spec.ratio});
        Normalizer sigma_train = compute_sigma(res_train);
        SeriesFrame norm_train = normalize(res_train, sigma_train);
        SeriesFrame norm_test = normalize(res_test, sigma_train);
        FullKernel train_kernel(estimate_correlations(norm_train, past, future));

        std::vector<HyperRange> gp_ranges;
        if (spec.fixed_rank)
            gp_ranges.push_back({"rank", {static_cast<double>(*spec.fixed_rank)}});
        else
            gp_ranges.push_back({"rank", iota_values(0, static_cast<int>(m))});
        if (spec.fixed_lambda)
            gp_ranges.push_back({"lambda", {*spec.fixed_lambda}});
        else
            gp_ranges.push_back({"lambda", lambda_grid(m, past, future, spec.lambda_alpha,
                                                       spec.lambda_grid_size)});

        std::map<std::size_t, LowRankBlockDiagKernel> kernels_by_rank;
        std::map<std::size_t, WoodburySolveCache> caches_by_rank;
        model.gp_report = greedy_grid_search(
            gp_ranges,
            [&](std::span<const std::size_t> cursor) {
                auto rank = static_cast<std::size_t>(gp_ranges[0].values[cursor[0]]);
                double lambda = gp_ranges[1].values[cursor[1]];
                auto it = kernels_by_rank.find(rank);
                if (it == kernels_by_rank.end()) {
                    auto dirs =
                        top_r_directions(lag0_matrix(train_kernel.correlations()), rank);
                    it = kernels_by_rank.emplace(rank, build_lr_bd(train_kernel, dirs)).first;
                }
                try {
                    return evaluate_gp(norm_test, it->second, lambda, past, future,
                                       &caches_by_rank[rank]);
                } catch (const NotPositiveDefiniteError&) {
                    return std::numeric_limits<double>::infinity();
                }
            },
            spec.width);
        model.rank = static_cast<std::size_t>(model.gp_report->chosen_values[0]);
        model.lambda = model.gp_report->chosen_values[1];
    }

    // Final estimation on the full data with the chosen hyper-parameters.
    model.normalizer = compute_sigma(residuals);
    SeriesFrame norm_full = normalize(residuals, model.normalizer);
    model.correlations = estimate_correlations(norm_full, past, future);
    FullKernel full(model.correlations);
    model.kernel = build_lr_bd(full, top_r_directions(lag0_matrix(model.correlations), model.rank));
    return model;
}

SeriesFrame predict(const TsarModel& model, const SeriesFrame& new_data, std::int64_t when) {
    if (new_data.columns() != model.columns)
        throw Error("new data columns do not match the model");
    const TimeGrid& grid = model.grid;
    if ((when - grid.origin) % grid.step != 0) throw Error("prediction time off the model grid");
    const std::int64_t t = (when - grid.origin) / grid.step;

    std::int64_t shift = 0;
    if (new_data.rows() > 0) {
        if (new_data.grid().step != grid.step) throw Error("new data step does not match the model");
        if ((new_data.grid().origin - grid.origin) % grid.step != 0)
            throw Error("new data origin off the model grid");
        shift = (new_data.grid().origin - grid.origin) / grid.step;
    }

    const std::size_t m = model.columns.size();
    const std::size_t span = model.past + model.future;
    const auto t_start = t - static_cast<std::int64_t>(model.past) + 1;

    std::vector<double> flat(m * span, kMissing);
    std::vector<double> raw(m * span, kMissing);
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t u = 0; u < span; ++u) {
            std::int64_t global = t_start + static_cast<std::int64_t>(u);
            double x = new_data.at(global - shift, c);
            raw[c * span + u] = x;
            if (!is_missing(x))
                flat[c * span + u] =
                    (x - model.baselines[c].value_at(global)) / model.normalizer.sigma[c];
        }

    ObservationMask mask = ObservationMask::from_values(flat);
    std::vector<double> inferred = schur_infer_lowrank(flat, model.kernel, mask, model.lambda);

    TimeGrid out_grid{grid.origin + t_start * grid.step, grid.step, span};
    SeriesFrame out(out_grid, model.columns);
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t u = 0; u < span; ++u) {
            double x = raw[c * span + u];
            if (!is_missing(x)) {
                out.set(u, c, x);  // observed values pass through untouched
            } else {
                std::int64_t global = t_start + static_cast<std::int64_t>(u);
                out.set(u, c,
                        model.baselines[c].value_at(global) +
                            model.normalizer.sigma[c] * inferred[c * span + u]);
            }
        }
    return out;
}

}  // namespace tsar
