#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "tsar/series.hpp"

namespace tsar {

/// Per-component normalization scales. sigma is 1 for all-missing columns
/// and zero-norm columns are promoted to 1.
struct Normalizer {
    std::vector<double> sigma;
};

/// Root-mean-square of the observed entries of each column.
Normalizer compute_sigma(const SeriesFrame& residuals);

SeriesFrame normalize(const SeriesFrame& residuals, const Normalizer& n);
SeriesFrame denormalize(const SeriesFrame& normalized, const Normalizer& n);

/// Lagged correlation coefficients c^(i,j)_tau for tau in (-span, span),
/// stored dense. The estimator guarantees c^(i,j)_tau == c^(j,i)_(-tau)
/// bit-identically: each pair is computed once and mirrored.
class LaggedCorrelations {
public:
    LaggedCorrelations() = default;
    LaggedCorrelations(std::size_t components, std::size_t span)
        : m_(components), span_(span), c_(components * components * (2 * span - 1), 0.0) {}

    std::size_t components() const { return m_; }
    std::size_t span() const { return span_; }

    double at(std::size_t i, std::size_t j, std::int64_t tau) const {
        return c_[index(i, j, tau)];
    }
    void set(std::size_t i, std::size_t j, std::int64_t tau, double v) {
        c_[index(i, j, tau)] = v;
    }

    std::span<const double> raw() const { return c_; }
    std::span<double> raw() { return c_; }

private:
    std::size_t index(std::size_t i, std::size_t j, std::int64_t tau) const {
        auto shifted = static_cast<std::size_t>(tau + static_cast<std::int64_t>(span_) - 1);
        return (i * m_ + j) * (2 * span_ - 1) + shifted;
    }

    std::size_t m_ = 0;
    std::size_t span_ = 0;
    std::vector<double> c_;
};

/// Averaged lagged products of observed pairs over the whole frame, with
/// span = past + future; zero where no overlapping pair exists.
LaggedCorrelations estimate_correlations(const SeriesFrame& norm_train, std::size_t past,
                                         std::size_t future);

/// Block-Toeplitz kernel view over lagged correlations: block (i,j) has
/// entry (a,b) = c^(i,j)_(b-a). Materialized on demand; the estimator does
/// not guarantee positive semidefiniteness.
class FullKernel {
public:
    FullKernel() = default;
    explicit FullKernel(LaggedCorrelations corr) : corr_(std::move(corr)) {}

    std::size_t size() const { return corr_.components() * corr_.span(); }
    std::size_t components() const { return corr_.components(); }
    std::size_t span() const { return corr_.span(); }

    double entry(std::size_t row, std::size_t col) const {
        const std::size_t span = corr_.span();
        return corr_.at(row / span, col / span,
                        static_cast<std::int64_t>(col % span) - static_cast<std::int64_t>(row % span));
    }

    Eigen::MatrixXd dense() const;
    Eigen::MatrixXd submatrix(std::span<const std::size_t> rows,
                              std::span<const std::size_t> cols) const;

    const LaggedCorrelations& correlations() const { return corr_; }

private:
    LaggedCorrelations corr_;
};

/// Dense symmetric kernel matrix for the given correlations.
Eigen::MatrixXd assemble_kernel(const LaggedCorrelations& corr);

/// Descending Tikhonov grid m*(past+future) * alpha^-k, k = 0..n-1.
std::vector<double> lambda_grid(std::size_t m, std::size_t past, std::size_t future,
                                double alpha, std::size_t n);

inline double default_lambda_alpha() { return std::cbrt(10.0); }

namespace detail {

/// Thread-safe map from (observed bitset, lambda) to a prepared factor.
/// Factors are deterministic functions of the key, so racing inserts of the
/// same key are benign, and a full cache simply stops admitting new keys:
/// results are bit-identical with or without a hit, only the cost differs.
template <class Factor>
class SolveCache {
public:
    explicit SolveCache(std::size_t capacity = 512) : capacity_(capacity) {}

    struct Key {
        std::vector<std::uint64_t> mask;
        std::uint64_t lambda_bits;
        bool operator==(const Key&) const = default;
    };

    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::size_t h = std::hash<std::uint64_t>{}(k.lambda_bits);
            for (auto w : k.mask) h = h * 1099511628211ULL + std::hash<std::uint64_t>{}(w);
            return h;
        }
    };

    std::shared_ptr<const Factor> find(const ObservationMask& mask, double lambda) const {
        Key key{mask.observed_bits(), std::bit_cast<std::uint64_t>(lambda)};
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = map_.find(key);
        return it == map_.end() ? nullptr : it->second;
    }

    void insert(const ObservationMask& mask, double lambda, std::shared_ptr<const Factor> f) {
        Key key{mask.observed_bits(), std::bit_cast<std::uint64_t>(lambda)};
        std::lock_guard<std::mutex> lock(mutex_);
        if (map_.size() >= capacity_) return;
        map_.emplace(std::move(key), std::move(f));
    }

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::unordered_map<Key, std::shared_ptr<const Factor>, KeyHash> map_;
};

}  // namespace detail

/// Cholesky factor of the observed kernel block plus lambda*I.
struct SchurFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
};

using SchurSolveCache = detail::SolveCache<SchurFactor>;

/// Conditional-mean inference: observed entries pass through unchanged,
/// unobserved ones get Sigma_UO (Sigma_OO + lambda I)^-1 rho_O. An empty
/// observed set yields the zero prior mean. Throws NotPositiveDefiniteError
/// when the observed block fails to factor; callers escalate lambda.
std::vector<double> schur_infer(std::span<const double> rho, const FullKernel& kernel,
                                const ObservationMask& mask, double lambda,
                                SchurSolveCache* cache = nullptr);

/// Forecast loss over a normalized test frame: for each row t, everything
/// after t is masked, the window is inferred, and squared deviations at the
/// observed future entries accumulate. The frame must be normalized with
/// the train sigma.
double evaluate_gp(const SeriesFrame& test_norm, const FullKernel& kernel, double lambda,
                   std::size_t past, std::size_t future, SchurSolveCache* cache = nullptr);

}  // namespace tsar
