#include "tsar/lowrank.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "gp_row_loss.hpp"
#include "tsar/errors.hpp"
#include "tsar/parallel.hpp"

namespace tsar {

Eigen::MatrixXd lag0_matrix(const LaggedCorrelations& corr) {
    const auto m = static_cast<Eigen::Index>(corr.components());
    Eigen::MatrixXd lag0(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            lag0(i, j) = corr.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), 0);
    return lag0;
}

namespace {

void normalize_sign(Eigen::VectorXd& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    if (v[best] < 0.0) v = -v;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

}  // namespace

PrincipalDirections top_r_directions(const Eigen::MatrixXd& lag0, std::size_t r) {
    const auto m = static_cast<std::size_t>(lag0.rows());
    if (r > m) throw Error("rank exceeds component count");
    PrincipalDirections dirs;
    if (r == 0) return dirs;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lag0);
    if (solver.info() != Eigen::Success) throw Error("eigendecomposition did not converge");

    std::vector<Eigen::VectorXd> vectors(m);
    std::vector<double> values(m);
    for (std::size_t k = 0; k < m; ++k) {
        vectors[k] = solver.eigenvectors().col(static_cast<Eigen::Index>(k));
        normalize_sign(vectors[k]);
        values[k] = solver.eigenvalues()[static_cast<Eigen::Index>(k)];
    }
    std::vector<std::size_t> order(m);
    for (std::size_t k = 0; k < m; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return lex_less(vectors[a], vectors[b]);
    });

    const double scale = lag0.norm();
    for (std::size_t k = 0; k < r; ++k) {
        const auto& v = vectors[order[k]];
        double lambda = values[order[k]];
        if ((lag0 * v - lambda * v).norm() > 1e-8 * std::max(scale, 1.0))
            throw Error("eigenpair residual too large");
        dirs.eigenvalues.push_back(lambda);
        dirs.vectors.push_back(v);
    }
    return dirs;
}

LowRankBlockDiagKernel build_lr_bd(const FullKernel& full, const PrincipalDirections& dirs) {
    const LaggedCorrelations& corr = full.correlations();
    const std::size_t m = corr.components();
    const std::size_t span = corr.span();
    const std::size_t r = dirs.rank();

    LowRankBlockDiagKernel kernel;
    kernel.m_ = m;
    kernel.span_ = span;
    kernel.dirs_ = dirs;
    kernel.sigma_lr_ = LaggedCorrelations(r, span);
    kernel.dbar_.assign(m, std::vector<double>(span, 0.0));

    // Reduced kernel lags d^(k,l)_tau = v_k^T C_tau v_l, contracted over the
    // stored correlation lags; the mirror d^(l,k)_(-tau) = d^(k,l)_tau keeps
    // the symmetry bit-exact, as in the correlation estimator.
    Eigen::MatrixXd c_tau(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::int64_t tau = 0; tau < static_cast<std::int64_t>(span); ++tau) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                c_tau(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    corr.at(i, j, tau);
        for (std::size_t k = 0; k < r; ++k)
            for (std::size_t l = (tau == 0 ? k : 0); l < r; ++l) {
                double d = dirs.vectors[k].dot(c_tau * dirs.vectors[l]);
                kernel.sigma_lr_.set(k, l, tau, d);
                kernel.sigma_lr_.set(l, k, -tau, d);
            }
    }

    // Cbar_m lags: the m-th diagonal block of Sigma - V^T Sigma_lr V. Both
    // terms are Toeplitz in the lag, so one value per lag suffices.
    for (std::size_t comp = 0; comp < m; ++comp)
        for (std::size_t tau = 0; tau < span; ++tau) {
            double projected = 0.0;
            for (std::size_t k = 0; k < r; ++k)
                for (std::size_t l = 0; l < r; ++l)
                    projected += dirs.vectors[k][static_cast<Eigen::Index>(comp)] *
                                 dirs.vectors[l][static_cast<Eigen::Index>(comp)] *
                                 kernel.sigma_lr_.at(k, l, static_cast<std::int64_t>(tau));
            kernel.dbar_[comp][tau] =
                corr.at(comp, comp, static_cast<std::int64_t>(tau)) - projected;
        }
    return kernel;
}

LowRankBlockDiagKernel make_lowrank_kernel(std::size_t m, std::size_t span,
                                           PrincipalDirections dirs, LaggedCorrelations sigma_lr,
                                           std::vector<std::vector<double>> dbar) {
    if (sigma_lr.components() != dirs.rank() || (dirs.rank() > 0 && sigma_lr.span() != span))
        throw Error("reduced kernel shape does not match the directions");
    if (dbar.size() != m) throw Error("block-diagonal part has the wrong component count");
    for (const auto& lags : dbar)
        if (lags.size() != span) throw Error("block-diagonal lag count does not match the span");
    for (const auto& v : dirs.vectors)
        if (static_cast<std::size_t>(v.size()) != m)
            throw Error("principal direction length does not match the component count");
    LowRankBlockDiagKernel kernel;
    kernel.m_ = m;
    kernel.span_ = span;
    kernel.dirs_ = std::move(dirs);
    kernel.sigma_lr_ = std::move(sigma_lr);
    kernel.dbar_ = std::move(dbar);
    return kernel;
}

Eigen::MatrixXd LowRankBlockDiagKernel::sigma_lr_dense() const {
    const std::size_t r = rank();
    const auto n = static_cast<Eigen::Index>(r * span_);
    Eigen::MatrixXd slr(n, n);
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t l = 0; l < r; ++l)
            for (std::size_t a = 0; a < span_; ++a)
                for (std::size_t b = 0; b < span_; ++b)
                    slr(static_cast<Eigen::Index>(k * span_ + a),
                        static_cast<Eigen::Index>(l * span_ + b)) =
                        sigma_lr_.at(k, l,
                                     static_cast<std::int64_t>(b) - static_cast<std::int64_t>(a));
    return slr;
}

double LowRankBlockDiagKernel::entry(std::size_t row, std::size_t col) const {
    const std::size_t mi = row / span_, a = row % span_;
    const std::size_t mj = col / span_, b = col % span_;
    const auto tau = static_cast<std::int64_t>(b) - static_cast<std::int64_t>(a);
    double v = 0.0;
    for (std::size_t k = 0; k < rank(); ++k)
        for (std::size_t l = 0; l < rank(); ++l)
            v += dirs_.vectors[k][static_cast<Eigen::Index>(mi)] *
                 dirs_.vectors[l][static_cast<Eigen::Index>(mj)] * sigma_lr_.at(k, l, tau);
    if (mi == mj) v += dbar_[mi][static_cast<std::size_t>(tau < 0 ? -tau : tau)];
    return v;
}

Eigen::MatrixXd LowRankBlockDiagKernel::dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = entry(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return out;
}

WoodburyFactor factor_woodbury(const LowRankBlockDiagKernel& kernel, const ObservationMask& mask,
                               double lambda) {
    const std::size_t m = kernel.components();
    const std::size_t span = kernel.span();
    const std::size_t r = kernel.rank();

    WoodburyFactor factor;
    factor.comp_offsets.resize(m);
    factor.comp_pos.resize(m);
    factor.blocks.resize(m);
    for (std::size_t pos = 0; pos < mask.observed.size(); ++pos) {
        std::size_t flat = mask.observed[pos];
        factor.comp_offsets[flat / span].push_back(flat % span);
        factor.comp_pos[flat / span].push_back(pos);
    }

    for (std::size_t comp = 0; comp < m; ++comp) {
        const auto& offsets = factor.comp_offsets[comp];
        if (offsets.empty()) continue;
        const auto n = static_cast<Eigen::Index>(offsets.size());
        Eigen::MatrixXd block(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) {
                auto lag = static_cast<std::int64_t>(offsets[static_cast<std::size_t>(b)]) -
                           static_cast<std::int64_t>(offsets[static_cast<std::size_t>(a)]);
                block(a, b) = kernel.dbar_lag(comp, static_cast<std::size_t>(lag < 0 ? -lag : lag));
            }
        block.diagonal().array() += lambda;
        factor.blocks[comp].compute(block);
        if (factor.blocks[comp].info() != Eigen::Success) throw NotPositiveDefiniteError(lambda);
    }

    if (r == 0 || mask.observed.empty()) return factor;
    factor.has_lowrank = true;
    factor.slr = kernel.sigma_lr_dense();

    // M2 = V_O A^-1 V_O^T, assembled per component from the small inverse
    // blocks; cost stays linear in the number of components.
    const auto rl = static_cast<Eigen::Index>(r * span);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(rl, rl);
    for (std::size_t comp = 0; comp < m; ++comp) {
        const auto& offsets = factor.comp_offsets[comp];
        if (offsets.empty()) continue;
        const auto n = static_cast<Eigen::Index>(offsets.size());
        Eigen::MatrixXd inv = factor.blocks[comp].solve(Eigen::MatrixXd::Identity(n, n));
        for (std::size_t k = 0; k < r; ++k) {
            double vk = kernel.directions().vectors[k][static_cast<Eigen::Index>(comp)];
            for (std::size_t l = 0; l < r; ++l) {
                double w = vk * kernel.directions().vectors[l][static_cast<Eigen::Index>(comp)];
                for (Eigen::Index a = 0; a < n; ++a)
                    for (Eigen::Index b = 0; b < n; ++b)
                        m2(static_cast<Eigen::Index>(k * span) +
                               static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(a)]),
                           static_cast<Eigen::Index>(l * span) +
                               static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(b)])) +=
                            w * inv(a, b);
            }
        }
    }

    // Capacitance in product form, I + Slr * M2: valid even when Slr is
    // singular, unlike inverting Slr directly.
    factor.capacitance.compute(Eigen::MatrixXd::Identity(rl, rl) + factor.slr * m2);
    if (!factor.capacitance.isInvertible()) throw NotPositiveDefiniteError(lambda);
    return factor;
}

namespace {

// z = A^-1 rhs, block by block; entries of unobserved components untouched.
Eigen::VectorXd block_diag_solve(const WoodburyFactor& factor, const Eigen::VectorXd& rhs) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rhs.size());
    for (std::size_t comp = 0; comp < factor.comp_offsets.size(); ++comp) {
        const auto& pos = factor.comp_pos[comp];
        if (pos.empty()) continue;
        Eigen::VectorXd local(static_cast<Eigen::Index>(pos.size()));
        for (std::size_t a = 0; a < pos.size(); ++a)
            local[static_cast<Eigen::Index>(a)] = rhs[static_cast<Eigen::Index>(pos[a])];
        local = factor.blocks[comp].solve(local);
        for (std::size_t a = 0; a < pos.size(); ++a)
            out[static_cast<Eigen::Index>(pos[a])] = local[static_cast<Eigen::Index>(a)];
    }
    return out;
}

// V_O z: project observed entries onto the principal directions per slot.
Eigen::VectorXd apply_v(const LowRankBlockDiagKernel& kernel, const WoodburyFactor& factor,
                        const Eigen::VectorXd& z) {
    const std::size_t r = kernel.rank();
    const std::size_t span = kernel.span();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r * span));
    for (std::size_t comp = 0; comp < factor.comp_offsets.size(); ++comp) {
        const auto& offsets = factor.comp_offsets[comp];
        const auto& pos = factor.comp_pos[comp];
        for (std::size_t a = 0; a < offsets.size(); ++a) {
            double value = z[static_cast<Eigen::Index>(pos[a])];
            for (std::size_t k = 0; k < r; ++k)
                out[static_cast<Eigen::Index>(k * span + offsets[a])] +=
                    kernel.directions().vectors[k][static_cast<Eigen::Index>(comp)] * value;
        }
    }
    return out;
}

// V_O^T w at the observed entries.
Eigen::VectorXd apply_vt(const LowRankBlockDiagKernel& kernel, const WoodburyFactor& factor,
                         std::size_t n_obs, const Eigen::VectorXd& w) {
    const std::size_t r = kernel.rank();
    const std::size_t span = kernel.span();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_obs));
    for (std::size_t comp = 0; comp < factor.comp_offsets.size(); ++comp) {
        const auto& offsets = factor.comp_offsets[comp];
        const auto& pos = factor.comp_pos[comp];
        for (std::size_t a = 0; a < offsets.size(); ++a) {
            double value = 0.0;
            for (std::size_t k = 0; k < r; ++k)
                value += kernel.directions().vectors[k][static_cast<Eigen::Index>(comp)] *
                         w[static_cast<Eigen::Index>(k * span + offsets[a])];
            out[static_cast<Eigen::Index>(pos[a])] = value;
        }
    }
    return out;
}

Eigen::VectorXd apply_woodbury(const LowRankBlockDiagKernel& kernel, const WoodburyFactor& factor,
                               const Eigen::VectorXd& rhs) {
    Eigen::VectorXd z = block_diag_solve(factor, rhs);
    if (!factor.has_lowrank) return z;
    Eigen::VectorXd vz = apply_v(kernel, factor, z);
    Eigen::VectorXd w = factor.capacitance.solve(factor.slr * vz);
    Eigen::VectorXd correction =
        block_diag_solve(factor, apply_vt(kernel, factor, static_cast<std::size_t>(rhs.size()), w));
    return z - correction;
}

}  // namespace

std::vector<double> woodbury_solve(const LowRankBlockDiagKernel& kernel,
                                   const ObservationMask& mask, double lambda,
                                   std::span<const double> rhs) {
    if (rhs.size() != mask.observed.size()) throw Error("rhs length must match observed set");
    WoodburyFactor factor = factor_woodbury(kernel, mask, lambda);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rhs.size()));
    for (std::size_t i = 0; i < rhs.size(); ++i) b[static_cast<Eigen::Index>(i)] = rhs[i];
    Eigen::VectorXd y = apply_woodbury(kernel, factor, b);
    return {y.data(), y.data() + y.size()};
}

std::vector<double> schur_infer_lowrank(std::span<const double> rho,
                                        const LowRankBlockDiagKernel& kernel,
                                        const ObservationMask& mask, double lambda,
                                        WoodburySolveCache* cache) {
    if (mask.size() != kernel.size() || rho.size() != kernel.size())
        throw Error("schur_infer_lowrank dimension mismatch");

    std::vector<double> out(rho.size(), 0.0);
    for (std::size_t i : mask.observed) out[i] = rho[i];
    if (mask.unobserved.empty() || mask.observed.empty()) return out;

    std::shared_ptr<const WoodburyFactor> factor;
    if (cache) factor = cache->find(mask, lambda);
    if (!factor) {
        factor = std::make_shared<WoodburyFactor>(factor_woodbury(kernel, mask, lambda));
        if (cache) cache->insert(mask, lambda, factor);
    }

    Eigen::VectorXd rho_obs(static_cast<Eigen::Index>(mask.observed.size()));
    for (std::size_t i = 0; i < mask.observed.size(); ++i)
        rho_obs[static_cast<Eigen::Index>(i)] = rho[mask.observed[i]];
    Eigen::VectorXd y = apply_woodbury(kernel, *factor, rho_obs);

    // Sigma_UO y = V_U^T Slr (V_O y) + D_UO y: low-rank plus per-component
    // Toeplitz cross terms, no dense materialization.
    const std::size_t r = kernel.rank();
    const std::size_t span = kernel.span();
    Eigen::VectorXd p;
    if (r > 0) {
        Eigen::VectorXd vy = apply_v(kernel, *factor, y);
        p = factor->slr * vy;
    }
    for (std::size_t flat : mask.unobserved) {
        const std::size_t comp = flat / span;
        const std::size_t u = flat % span;
        double value = 0.0;
        if (r > 0)
            for (std::size_t k = 0; k < r; ++k)
                value += kernel.directions().vectors[k][static_cast<Eigen::Index>(comp)] *
                         p[static_cast<Eigen::Index>(k * span + u)];
        const auto& offsets = factor->comp_offsets[comp];
        const auto& pos = factor->comp_pos[comp];
        for (std::size_t a = 0; a < offsets.size(); ++a) {
            auto lag = static_cast<std::int64_t>(offsets[a]) - static_cast<std::int64_t>(u);
            value += kernel.dbar_lag(comp, static_cast<std::size_t>(lag < 0 ? -lag : lag)) *
                     y[static_cast<Eigen::Index>(pos[a])];
        }
        out[flat] = value;
    }
    return out;
}

double evaluate_gp(const SeriesFrame& test_norm, const LowRankBlockDiagKernel& kernel,
                   double lambda, std::size_t past, std::size_t future,
                   WoodburySolveCache* cache) {
    WoodburySolveCache local;
    if (!cache) cache = &local;
    const auto rows = static_cast<std::int64_t>(test_norm.rows());
    std::vector<double> losses(static_cast<std::size_t>(rows), 0.0);
    std::atomic<bool> failed{false};
    double failed_lambda = lambda;

#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
    for (std::int64_t t = 0; t < rows; ++t) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            losses[static_cast<std::size_t>(t)] = detail::gp_row_loss(
                test_norm, t, past, future,
                [&](std::span<const double> flat, const ObservationMask& mask) {
                    return schur_infer_lowrank(flat, kernel, mask, lambda, cache);
                });
        } catch (const NotPositiveDefiniteError& e) {
#pragma omp critical
            {
                failed_lambda = e.lambda();
                failed.store(true);
            }
        }
    }
    if (failed.load()) throw NotPositiveDefiniteError(failed_lambda);

    double total = 0.0;
    for (double l : losses) total += l;
    return total;
}

}  // namespace tsar
