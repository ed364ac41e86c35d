#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tsar {

/// Seasonality period lengths in units of grid steps.
struct PeriodSet {
    double day = 24.0;
    double week = 168.0;
    double year = 8766.0;

    static PeriodSet hourly() { return {24.0, 168.0, 8766.0}; }
    static PeriodSet daily() { return {1.0, 7.0, 365.25}; }
};

/// Harmonic counts per seasonality plus the trend switch. Valid ranges:
/// trend in {0,1}, day in {0..max_day_harmonics}, week in {0..6},
/// year in {0..51}.
struct HarmonicCounts {
    int trend = 0;
    int day = 0;
    int week = 0;
    int year = 0;

    int coefficient_count() const { return 1 + trend + 2 * (day + week + year); }
};

/// Nyquist cap on daily harmonics for the given grid: floor(day period / 2).
int max_day_harmonics(const PeriodSet& periods);

void validate_counts(const HarmonicCounts& counts, const PeriodSet& periods);

/// Fitted scalar Fourier baseline for one component. Time arguments are
/// row indices relative to the origin of the window the model was fit on.
struct BaselineModel {
    HarmonicCounts counts;
    PeriodSet periods;
    double alpha0 = 0.0;  // linear trend slope, 0 when counts.trend == 0
    double beta0 = 0.0;   // constant term
    std::vector<double> day_sin, day_cos;
    std::vector<double> week_sin, week_cos;
    std::vector<double> year_sin, year_cos;

    double value_at(std::int64_t t) const;
};

/// Feature vector at time t. Fixed order: constant, optional trend, then for
/// day, week, year and k = 1..K each: sin(2*pi*t*k/P), cos(2*pi*t*k/P).
std::vector<double> design_row(std::int64_t t, const HarmonicCounts& counts,
                               const PeriodSet& periods);

/// Least-squares fit of the baseline over the observed entries of one
/// column, Tikhonov-regularized on every coefficient except the constant.
/// Row index r corresponds to time t_offset + r. An all-missing column
/// yields the all-zero model.
BaselineModel fit_baseline(std::span<const double> series, const HarmonicCounts& counts,
                           const PeriodSet& periods, double gamma = 1e-8,
                           std::int64_t t_offset = 0);

/// Sum of squared deviations over the observed entries; empty sum is 0.
double eval_baseline(std::span<const double> series, std::int64_t t_offset,
                     const BaselineModel& model);

/// Baseline values for t in [t_from, t_to], always real.
std::vector<double> predict_baseline(const BaselineModel& model, std::int64_t t_from,
                                     std::int64_t t_to);

/// Train objective of eq-style fit: squared residuals plus the coefficient
/// penalty (constant excluded). Used by the nested-counts monotonicity test.
double train_objective(std::span<const double> series, std::int64_t t_offset,
                       const BaselineModel& model, double gamma);

}  // namespace tsar
