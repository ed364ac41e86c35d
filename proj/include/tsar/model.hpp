#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsar/baseline.hpp"
#include "tsar/ggs.hpp"
#include "tsar/lowrank.hpp"
#include "tsar/residual_gp.hpp"
#include "tsar/series.hpp"

namespace tsar {

/// Fit configuration: split ratio, search width, lambda grid shape, and
/// optional fixed hyper-parameter values. A fixed value collapses its search
/// range to a single point; when everything is fixed no split happens and
/// the model is trained once on all data.
struct HyperSpec {
    double ratio = 2.0 / 3.0;
    std::size_t width = 1;
    double lambda_alpha = default_lambda_alpha();
    std::size_t lambda_grid_size = 10;
    double gamma = 1e-8;
    PeriodSet periods = PeriodSet::hourly();

    struct FixedCounts {
        std::optional<int> trend, day, week, year;
    };
    std::vector<FixedCounts> fixed_counts;  // per component; empty means none fixed
    std::optional<std::size_t> fixed_rank;
    std::optional<double> fixed_lambda;

    bool all_fixed(std::size_t components) const;
};

/// The complete fitted artifact: per-component baselines, the normalizer,
/// full-data lagged correlations, the deployed low-rank plus block-diagonal
/// kernel, chosen hyper-parameters, and the search audit trail.
struct TsarModel {
    TimeGrid grid;
    std::vector<std::string> columns;
    std::size_t past = 1;
    std::size_t future = 1;
    std::vector<BaselineModel> baselines;
    Normalizer normalizer;
    LaggedCorrelations correlations;
    LowRankBlockDiagKernel kernel;
    std::size_t rank = 0;
    double lambda = 0.0;
    std::vector<SearchReport> baseline_reports;
    std::optional<SearchReport> gp_report;
};

TsarModel fit(const SeriesFrame& data, std::size_t past, std::size_t future,
              const HyperSpec& spec = {});

/// Conditional-mean forecast/imputation of the window t-past+1 .. t+future.
/// Observed entries of new_data pass through bit-identically; missing ones
/// are baseline plus the inferred residual. Output has no missing values.
SeriesFrame predict(const TsarModel& model, const SeriesFrame& new_data, std::int64_t when);

/// Self-describing versioned document with a payload checksum. load rejects
/// higher format versions and corrupt payloads; round-tripping a model
/// reproduces its predictions bit-identically.
std::string save_model(const TsarModel& model);
TsarModel load_model(const std::string& bytes);

void save_model_file(const std::string& path, const TsarModel& model);
TsarModel load_model_file(const std::string& path);

}  // namespace tsar
