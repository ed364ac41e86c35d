#pragma once

#include "tsar/lowrank.hpp"
#include "tsar/residual_gp.hpp"
#include "tsar/series.hpp"

namespace tsar::reference {

/// Serial, direct-definition correlation estimator: every (i, j, tau) cell,
/// negative lags included, is averaged independently with no mirroring.
/// Kept as the check and benchmark counterpart of the parallel estimator.
LaggedCorrelations estimate_correlations(const SeriesFrame& norm_train, std::size_t past,
                                         std::size_t future);

/// Serial GP test loss, no solve cache, rows in order.
double evaluate_gp(const SeriesFrame& test_norm, const FullKernel& kernel, double lambda,
                   std::size_t past, std::size_t future);

double evaluate_gp(const SeriesFrame& test_norm, const LowRankBlockDiagKernel& kernel,
                   double lambda, std::size_t past, std::size_t future);

}  // namespace tsar::reference
