#include "tsar/baseline.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "tsar/errors.hpp"
#include "tsar/missing.hpp"

namespace tsar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void append_harmonics(std::vector<double>& row, std::int64_t t, int count, double period) {
    for (int k = 1; k <= count; ++k) {
        double phase = kTwoPi * static_cast<double>(t) * k / period;
        row.push_back(std::sin(phase));
        row.push_back(std::cos(phase));
    }
}

}  // namespace

int max_day_harmonics(const PeriodSet& periods) {
    return static_cast<int>(std::floor(periods.day / 2.0));
}

void validate_counts(const HarmonicCounts& counts, const PeriodSet& periods) {
    if (counts.trend < 0 || counts.trend > 1) throw Error("trend count must be 0 or 1");
    if (counts.day < 0 || counts.day > max_day_harmonics(periods))
        throw Error("day harmonics out of range [0, " +
                    std::to_string(max_day_harmonics(periods)) + "]");
    if (counts.week < 0 || counts.week > 6) throw Error("week harmonics out of range [0, 6]");
    if (counts.year < 0 || counts.year > 51) throw Error("year harmonics out of range [0, 51]");
    if (!(periods.day < periods.week && periods.week < periods.year))
        throw Error("periods must satisfy day < week < year");
}

std::vector<double> design_row(std::int64_t t, const HarmonicCounts& counts,
                               const PeriodSet& periods) {
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(counts.coefficient_count()));
    row.push_back(1.0);
    if (counts.trend == 1) row.push_back(static_cast<double>(t));
    append_harmonics(row, t, counts.day, periods.day);
    append_harmonics(row, t, counts.week, periods.week);
    append_harmonics(row, t, counts.year, periods.year);
    return row;
}

double BaselineModel::value_at(std::int64_t t) const {
    double v = beta0 + (counts.trend == 1 ? alpha0 * static_cast<double>(t) : 0.0);
    auto add = [&](const std::vector<double>& s, const std::vector<double>& c, double period) {
        for (std::size_t k = 0; k < s.size(); ++k) {
            double phase = kTwoPi * static_cast<double>(t) * (static_cast<double>(k) + 1.0) / period;
            v += s[k] * std::sin(phase) + c[k] * std::cos(phase);
        }
    };
    add(day_sin, day_cos, periods.day);
    add(week_sin, week_cos, periods.week);
    add(year_sin, year_cos, periods.year);
    return v;
}

BaselineModel fit_baseline(std::span<const double> series, const HarmonicCounts& counts,
                           const PeriodSet& periods, double gamma, std::int64_t t_offset) {
    validate_counts(counts, periods);
    if (gamma <= 0.0) throw Error("gamma must be positive");

    const int d = counts.coefficient_count();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd phi(d);

    std::size_t n_obs = 0;
    for (std::size_t r = 0; r < series.size(); ++r) {
        double x = series[r];
        if (is_missing(x)) continue;
        auto row = design_row(t_offset + static_cast<std::int64_t>(r), counts, periods);
        for (int i = 0; i < d; ++i) phi[i] = row[static_cast<std::size_t>(i)];
        gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
        rhs += phi * x;
        ++n_obs;
    }

    BaselineModel model;
    model.counts = counts;
    model.periods = periods;
    model.day_sin.assign(static_cast<std::size_t>(counts.day), 0.0);
    model.day_cos.assign(static_cast<std::size_t>(counts.day), 0.0);
    model.week_sin.assign(static_cast<std::size_t>(counts.week), 0.0);
    model.week_cos.assign(static_cast<std::size_t>(counts.week), 0.0);
    model.year_sin.assign(static_cast<std::size_t>(counts.year), 0.0);
    model.year_cos.assign(static_cast<std::size_t>(counts.year), 0.0);
    if (n_obs == 0) return model;  // all-missing: zero model, beta0 = 0

    gram = gram.selfadjointView<Eigen::Lower>();
    // penalty on every coefficient except the constant term
    for (int i = 1; i < d; ++i) gram(i, i) += gamma;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    Eigen::VectorXd theta = ldlt.solve(rhs);
    theta += ldlt.solve(rhs - gram * theta);  // one refinement pass

    int idx = 0;
    model.beta0 = theta[idx++];
    if (counts.trend == 1) model.alpha0 = theta[idx++];
    auto take = [&](std::vector<double>& s, std::vector<double>& c, int count) {
        for (int k = 0; k < count; ++k) {
            s[static_cast<std::size_t>(k)] = theta[idx++];
            c[static_cast<std::size_t>(k)] = theta[idx++];
        }
    };
    take(model.day_sin, model.day_cos, counts.day);
    take(model.week_sin, model.week_cos, counts.week);
    take(model.year_sin, model.year_cos, counts.year);
    return model;
}

double eval_baseline(std::span<const double> series, std::int64_t t_offset,
                     const BaselineModel& model) {
    double loss = 0.0;
    for (std::size_t r = 0; r < series.size(); ++r) {
        double x = series[r];
        if (is_missing(x)) continue;
        double dev = x - model.value_at(t_offset + static_cast<std::int64_t>(r));
        loss += dev * dev;
    }
    return loss;
}

std::vector<double> predict_baseline(const BaselineModel& model, std::int64_t t_from,
                                     std::int64_t t_to) {
    if (t_from > t_to) throw Error("t_from must not exceed t_to");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(t_to - t_from + 1));
    for (std::int64_t t = t_from; t <= t_to; ++t) out.push_back(model.value_at(t));
    return out;
}

double train_objective(std::span<const double> series, std::int64_t t_offset,
                       const BaselineModel& model, double gamma) {
    double penalty = 0.0;
    if (model.counts.trend == 1) penalty += model.alpha0 * model.alpha0;
    for (const auto* coeffs : {&model.day_sin, &model.day_cos, &model.week_sin, &model.week_cos,
                               &model.year_sin, &model.year_cos})
        for (double c : *coeffs) penalty += c * c;
    return eval_baseline(series, t_offset, model) + gamma * penalty;
}

}  // namespace tsar
