#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "tsar/residual_gp.hpp"
#include "tsar/series.hpp"

namespace tsar {

/// Top eigenpairs of the lag-0 correlation matrix. Vectors are orthonormal,
/// eigenvalues sorted descending, and each vector's largest-magnitude entry
/// is positive (lowest index on ties) so results are reproducible.
struct PrincipalDirections {
    std::vector<double> eigenvalues;
    std::vector<Eigen::VectorXd> vectors;

    std::size_t rank() const { return vectors.size(); }
};

/// M x M matrix of lag-0 correlation coefficients.
Eigen::MatrixXd lag0_matrix(const LaggedCorrelations& corr);

PrincipalDirections top_r_directions(const Eigen::MatrixXd& lag0, std::size_t r);

/// Kernel of the form V^T Sigma_lr V + D: a low-rank projection along the
/// principal directions plus one Toeplitz autocovariance block per
/// component. Diagonal blocks match the source kernel's by construction.
/// Storage is M*R + R^2*(2*(P+F)-1) + M*(P+F) scalars.
class LowRankBlockDiagKernel {
public:
    LowRankBlockDiagKernel() = default;

    std::size_t components() const { return m_; }
    std::size_t span() const { return span_; }
    std::size_t rank() const { return dirs_.rank(); }
    std::size_t size() const { return m_ * span_; }

    const PrincipalDirections& directions() const { return dirs_; }

    /// Reduced-kernel lag value d^(k,l)_tau = v_k^T C_tau v_l.
    double sigma_lr_lag(std::size_t k, std::size_t l, std::int64_t tau) const {
        return sigma_lr_.at(k, l, tau);
    }
    const LaggedCorrelations& sigma_lr() const { return sigma_lr_; }

    /// Block-diagonal lag value (Cbar_m)_(a,b) for |b-a| = tau >= 0.
    double dbar_lag(std::size_t m, std::size_t tau) const { return dbar_[m][tau]; }
    const std::vector<std::vector<double>>& dbar() const { return dbar_; }

    /// Dense reduced kernel Sigma_lr, direction-major, size R(P+F).
    Eigen::MatrixXd sigma_lr_dense() const;

    /// Dense reconstruction of the whole kernel (exports and oracles).
    Eigen::MatrixXd dense() const;

    double entry(std::size_t row, std::size_t col) const;

    /// Number of stored scalars; matches the storage formula exactly.
    std::size_t storage_element_count() const {
        return m_ * rank() + sigma_lr_.raw().size() + m_ * span_;
    }

    friend LowRankBlockDiagKernel build_lr_bd(const FullKernel&, const PrincipalDirections&);
    friend LowRankBlockDiagKernel make_lowrank_kernel(std::size_t, std::size_t,
                                                      PrincipalDirections, LaggedCorrelations,
                                                      std::vector<std::vector<double>>);

private:
    std::size_t m_ = 0;
    std::size_t span_ = 0;
    PrincipalDirections dirs_;
    LaggedCorrelations sigma_lr_;           // R pseudo-components, span L
    std::vector<std::vector<double>> dbar_;  // per component, lags 0..L-1
};

/// Projects the source kernel onto the principal directions and keeps each
/// component's own Toeplitz block so diagonal blocks agree with the source.
LowRankBlockDiagKernel build_lr_bd(const FullKernel& full, const PrincipalDirections& dirs);

/// Rebuilds a kernel from stored parts (deserialization).
LowRankBlockDiagKernel make_lowrank_kernel(std::size_t m, std::size_t span,
                                           PrincipalDirections dirs, LaggedCorrelations sigma_lr,
                                           std::vector<std::vector<double>> dbar);

/// Prepared Woodbury solve for one (observed set, lambda) pair: per-component
/// Cholesky factors of the block-diagonal part plus the capacitance LU.
struct WoodburyFactor {
    std::vector<std::vector<std::size_t>> comp_offsets;  // observed offsets per component
    std::vector<std::vector<std::size_t>> comp_pos;      // their positions in the observed list
    std::vector<Eigen::LLT<Eigen::MatrixXd>> blocks;
    Eigen::MatrixXd slr;                // dense reduced kernel
    Eigen::FullPivLU<Eigen::MatrixXd> capacitance;  // I + Slr * (V A^-1 V^T)
    bool has_lowrank = false;
};

using WoodburySolveCache = detail::SolveCache<WoodburyFactor>;

WoodburyFactor factor_woodbury(const LowRankBlockDiagKernel& kernel, const ObservationMask& mask,
                               double lambda);

/// Solves (Sigma_lrbd_OO + lambda I) y = rhs via block-diagonal solves and
/// the Woodbury identity; cost linear in the number of components.
std::vector<double> woodbury_solve(const LowRankBlockDiagKernel& kernel,
                                   const ObservationMask& mask, double lambda,
                                   std::span<const double> rhs);

/// schur_infer against the low-rank plus block-diagonal kernel; identical
/// contract, linear in M for fixed rank and span.
std::vector<double> schur_infer_lowrank(std::span<const double> rho,
                                        const LowRankBlockDiagKernel& kernel,
                                        const ObservationMask& mask, double lambda,
                                        WoodburySolveCache* cache = nullptr);

double evaluate_gp(const SeriesFrame& test_norm, const LowRankBlockDiagKernel& kernel,
                   double lambda, std::size_t past, std::size_t future,
                   WoodburySolveCache* cache = nullptr);

}  // namespace tsar
