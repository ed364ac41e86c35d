#include "tsar/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "tsar/csv.hpp"
#include "tsar/errors.hpp"
#include "tsar/model.hpp"

namespace tsar {

namespace {

struct FixRule {
    std::string column;  // empty: applies to every column
    std::string hyper;
    double value = 0.0;
};

FixRule parse_fix(const std::string& text) {
    auto eq = text.find('=');
    if (eq == std::string::npos) throw Error("--fix expects <column>.<hyper>=<value>");
    std::string lhs = text.substr(0, eq);
    std::string rhs = text.substr(eq + 1);
    FixRule rule;
    auto dot = lhs.rfind('.');
    if (dot == std::string::npos) {
        rule.hyper = lhs;
    } else {
        rule.column = lhs.substr(0, dot);
        rule.hyper = lhs.substr(dot + 1);
    }
    try {
        rule.value = std::stod(rhs);
    } catch (const std::exception&) {
        throw Error("--fix value '" + rhs + "' is not a number");
    }
    return rule;
}

void apply_fix(HyperSpec& spec, const FixRule& rule, const std::vector<std::string>& columns) {
    auto set_count = [&](std::size_t c) -> HyperSpec::FixedCounts& {
        if (spec.fixed_counts.size() != columns.size()) spec.fixed_counts.resize(columns.size());
        return spec.fixed_counts[c];
    };
    std::vector<std::size_t> targets;
    if (rule.column.empty()) {
        for (std::size_t c = 0; c < columns.size(); ++c) targets.push_back(c);
    } else {
        bool found = false;
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == rule.column) {
                targets.push_back(c);
                found = true;
            }
        if (!found) throw Error("--fix names unknown column '" + rule.column + "'");
    }

    if (rule.hyper == "rank") {
        if (rule.value < 0) throw Error("rank must be >= 0");
        spec.fixed_rank = static_cast<std::size_t>(rule.value);
        return;
    }
    if (rule.hyper == "lambda") {
        if (rule.value < 0) throw Error("lambda must be >= 0");
        spec.fixed_lambda = rule.value;
        return;
    }
    for (std::size_t c : targets) {
        auto& fixed = set_count(c);
        int v = static_cast<int>(rule.value);
        if (rule.hyper == "k-trend" || rule.hyper == "k_trend")
            fixed.trend = v;
        else if (rule.hyper == "k-day" || rule.hyper == "k_day")
            fixed.day = v;
        else if (rule.hyper == "k-week" || rule.hyper == "k_week")
            fixed.week = v;
        else if (rule.hyper == "k-year" || rule.hyper == "k_year")
            fixed.year = v;
        else
            throw Error("unknown hyper-parameter '" + rule.hyper + "' in --fix");
    }
}

PeriodSet preset_for(const std::string& preset, const SeriesFrame& data) {
    if (preset == "hourly") return PeriodSet::hourly();
    if (preset == "daily") return PeriodSet::daily();
    // auto: pick from the grid step
    return data.grid().step == 86400 ? PeriodSet::daily() : PeriodSet::hourly();
}

int cmd_fit(const std::string& input, const std::string& model_path, std::size_t past,
            std::size_t future, HyperSpec spec, const std::string& preset,
            const std::vector<std::string>& fixes, std::optional<int> k_trend,
            std::optional<int> k_day, std::optional<int> k_week, std::optional<int> k_year,
            std::optional<double> rank, std::optional<double> lambda) {
    SeriesFrame data = read_frame_csv_file(input);
    spec.periods = preset_for(preset, data);

    auto set_all = [&](std::optional<int> v, auto member) {
        if (!v) return;
        if (spec.fixed_counts.size() != data.cols()) spec.fixed_counts.resize(data.cols());
        for (auto& f : spec.fixed_counts) f.*member = *v;
    };
    set_all(k_trend, &HyperSpec::FixedCounts::trend);
    set_all(k_day, &HyperSpec::FixedCounts::day);
    set_all(k_week, &HyperSpec::FixedCounts::week);
    set_all(k_year, &HyperSpec::FixedCounts::year);
    if (rank) spec.fixed_rank = static_cast<std::size_t>(*rank);
    if (lambda) spec.fixed_lambda = *lambda;
    for (const auto& f : fixes) apply_fix(spec, parse_fix(f), data.columns());

    TsarModel model = fit(data, past, future, spec);
    save_model_file(model_path, model);

    for (std::size_t c = 0; c < model.columns.size(); ++c) {
        const auto& b = model.baselines[c];
        std::cout << "component " << model.columns[c] << ": k_trend=" << b.counts.trend
                  << " k_day=" << b.counts.day << " k_week=" << b.counts.week
                  << " k_year=" << b.counts.year;
        const auto& report = model.baseline_reports[c];
        if (!report.evaluations.empty())
            std::cout << " (test loss " << format_double(report.evaluations.at(report.chosen))
                      << ")";
        std::cout << "\n";
    }
    std::cout << "rank=" << model.rank << " lambda=" << format_double(model.lambda);
    if (model.gp_report)
        std::cout << " (test loss "
                  << format_double(model.gp_report->evaluations.at(model.gp_report->chosen)) << ")";
    std::cout << "\n";
    std::cout << "model written to " << model_path << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input,
                const std::string& time_text, const std::string& output) {
    TsarModel model = load_model_file(model_path);
    SeriesFrame data = read_frame_csv_file(input);
    std::int64_t when = parse_timestamp(time_text);
    SeriesFrame window = predict(model, data, when);
    write_frame_csv_file(output, window);
    std::cout << "prediction written to " << output << "\n";
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& input) {
    TsarModel model = load_model_file(model_path);
    SeriesFrame data = read_frame_csv_file(input);
    if (data.columns() != model.columns) throw Error("data columns do not match the model");
    if (data.grid().step != model.grid.step) throw Error("data step does not match the model");
    if ((data.grid().origin - model.grid.origin) % model.grid.step != 0)
        throw Error("data origin off the model grid");
    std::int64_t offset = (data.grid().origin - model.grid.origin) / model.grid.step;

    double baseline_total = 0.0;
    std::vector<std::vector<double>> resid_cols(data.cols());
    for (std::size_t c = 0; c < data.cols(); ++c) {
        double loss = eval_baseline(data.column(c), offset, model.baselines[c]);
        baseline_total += loss;
        std::cout << "baseline loss " << model.columns[c] << ": " << format_double(loss) << "\n";
        auto col = data.column(c);
        resid_cols[c].resize(col.size());
        for (std::size_t r = 0; r < col.size(); ++r)
            resid_cols[c][r] =
                is_missing(col[r])
                    ? kMissing
                    : col[r] - model.baselines[c].value_at(offset + static_cast<std::int64_t>(r));
    }
    SeriesFrame residuals(data.grid(), data.columns(), std::move(resid_cols));
    SeriesFrame norm = normalize(residuals, model.normalizer);
    double gp_loss = evaluate_gp(norm, model.kernel, model.lambda, model.past, model.future);
    std::cout << "baseline loss total: " << format_double(baseline_total) << "\n";
    std::cout << "gp loss: " << format_double(gp_loss) << "\n";
    return 0;
}

int cmd_kernel_dump(const std::string& model_path, const std::string& output) {
    TsarModel model = load_model_file(model_path);
    Eigen::MatrixXd dense = model.kernel.dense();
    std::ofstream out(output);
    if (!out) throw Error("cannot open '" + output + "' for writing");
    const auto span = static_cast<std::int64_t>(model.past + model.future);
    bool first = true;
    for (const auto& name : model.columns)
        for (std::int64_t u = 0; u < span; ++u) {
            if (!first) out << ',';
            out << name << ':' << (u - static_cast<std::int64_t>(model.past) + 1);
            first = false;
        }
    out << '\n';
    for (Eigen::Index r = 0; r < dense.rows(); ++r) {
        for (Eigen::Index c = 0; c < dense.cols(); ++c) {
            if (c > 0) out << ',';
            out << format_double(dense(r, c));
        }
        out << '\n';
    }
    std::cout << "kernel written to " << output << "\n";
    return 0;
}

int cmd_synth(const std::string& output, std::size_t rows, std::size_t cols, double missing,
              unsigned seed, const std::string& start) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    TimeGrid grid{parse_timestamp(start), 3600, rows};
    std::vector<std::string> names;
    for (std::size_t c = 0; c < cols; ++c) names.push_back("x" + std::to_string(c + 1));
    SeriesFrame frame(grid, names);
    for (std::size_t c = 0; c < cols; ++c) {
        double ar = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            ar = 0.7 * ar + noise(rng);
            double t = static_cast<double>(r);
            double value = 3.0 + 2.0 * std::sin(2.0 * std::numbers::pi * t / 24.0) + ar;
            frame.set(r, c, unif(rng) < missing ? kMissing : value);
        }
    }
    write_frame_csv_file(output, frame);
    std::cout << "synthetic series written to " << output << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"seasonal baseline + Gaussian-process vector time series forecaster"};
    app.require_subcommand(1);

    std::string input, output, model_path, time_text, preset = "auto", start = "2024-01-01";
    std::size_t past = 24, future = 24, rows = 2048, cols = 2;
    double missing = 0.0;
    unsigned seed = 0;
    HyperSpec spec;
    std::vector<std::string> fixes;
    std::optional<int> k_trend, k_day, k_week, k_year;
    std::optional<double> rank, lambda;

    auto* fit_cmd = app.add_subcommand("fit", "fit a model from a CSV series");
    fit_cmd->add_option("--input,-i", input, "input CSV")->required();
    fit_cmd->add_option("--model,-m", model_path, "output model file")->required();
    fit_cmd->add_option("--past,-P", past, "window memory length")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--future,-F", future, "forecast horizon")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--ratio", spec.ratio, "train fraction of the split");
    fit_cmd->add_option("--width", spec.width, "greedy search width")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--alpha", spec.lambda_alpha, "lambda grid decay factor");
    fit_cmd->add_option("--lambda-grid", spec.lambda_grid_size, "lambda grid length");
    fit_cmd->add_option("--gamma", spec.gamma, "baseline regularization constant");
    fit_cmd->add_option("--preset", preset, "period preset: hourly, daily or auto")
        ->check(CLI::IsMember({"hourly", "daily", "auto"}));
    fit_cmd->add_option("--fix", fixes,
                        "fix a hyper-parameter: <column>.<hyper>=<value> or <hyper>=<value>");
    fit_cmd->add_option("--k-trend", k_trend, "fix trend switch for all columns");
    fit_cmd->add_option("--k-day", k_day, "fix daily harmonics for all columns");
    fit_cmd->add_option("--k-week", k_week, "fix weekly harmonics for all columns");
    fit_cmd->add_option("--k-year", k_year, "fix yearly harmonics for all columns");
    fit_cmd->add_option("--rank", rank, "fix the kernel rank");
    fit_cmd->add_option("--lambda", lambda, "fix the Tikhonov regularization");

    auto* predict_cmd = app.add_subcommand("predict", "forecast/impute one window");
    predict_cmd->add_option("--model,-m", model_path, "model file")->required();
    predict_cmd->add_option("--input,-i", input, "new data CSV")->required();
    predict_cmd->add_option("--time,-t", time_text, "prediction time (ISO-8601 UTC)")->required();
    predict_cmd->add_option("--output,-o", output, "output CSV")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "score a model on a CSV series");
    eval_cmd->add_option("--model,-m", model_path, "model file")->required();
    eval_cmd->add_option("--input,-i", input, "data CSV")->required();

    auto* dump_cmd = app.add_subcommand("kernel-dump", "export the dense kernel as CSV");
    dump_cmd->add_option("--model,-m", model_path, "model file")->required();
    dump_cmd->add_option("--output,-o", output, "output CSV")->required();

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic hourly series");
    synth_cmd->add_option("--output,-o", output, "output CSV")->required();
    synth_cmd->add_option("--rows", rows, "number of rows");
    synth_cmd->add_option("--cols", cols, "number of columns");
    synth_cmd->add_option("--missing", missing, "missing-value fraction");
    synth_cmd->add_option("--seed", seed, "random seed");
    synth_cmd->add_option("--start", start, "first timestamp");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (fit_cmd->parsed())
            return cmd_fit(input, model_path, past, future, spec, preset, fixes, k_trend, k_day,
                           k_week, k_year, rank, lambda);
        if (predict_cmd->parsed()) return cmd_predict(model_path, input, time_text, output);
        if (eval_cmd->parsed()) return cmd_evaluate(model_path, input);
        if (dump_cmd->parsed()) return cmd_kernel_dump(model_path, output);
        if (synth_cmd->parsed()) return cmd_synth(output, rows, cols, missing, seed, start);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace tsar
