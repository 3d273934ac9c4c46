#pragma once

#include "identpde/dictionary.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace identpde {

struct SolverConfig {
    double lambda = 500;
    double rho = 0;  // ADMM penalty; 0 selects trace(A^T A)/p
    double tol = 1e-6;
    int max_iters = 10000;
};

/// Group-Lasso minimizer in max-norm-scaled coordinates.
template <typename Scalar = double>
struct SparseSolution {
    Vector<Scalar> z;                 // one entry per system column; excluded columns are 0
    Vector<Scalar> block_magnitudes;  // filled by normalized_block_magnitudes
    std::vector<Index> excluded;      // columns with zero max-norm
    double lambda = 0;
    double rho = 0;
    Scalar objective = 0;
    int iterations = 0;
    bool converged = false;
};

/// 1/2 |b - A z|^2 + lambda * sum_blocks |z_block|_2.
template <typename Scalar>
Scalar group_lasso_objective(const Matrix<Scalar>& a, const Vector<Scalar>& b, const std::vector<std::vector<Index>>& blocks,
                             const Vector<Scalar>& z, Scalar lambda) {
    Scalar penalty = 0;
    for (const auto& blk : blocks) {
        Scalar sq = 0;
        for (Index c : blk) sq += z(c) * z(c);
        penalty += std::sqrt(sq);
    }
    return Scalar(0.5) * (b - a * z).squaredNorm() + lambda * penalty;
}

/// Block soft-thresholding: shrinks each block's Euclidean norm by t.
template <typename Scalar>
void block_soft_threshold(Vector<Scalar>& v, const std::vector<std::vector<Index>>& blocks, Scalar t) {
    for (const auto& blk : blocks) {
        Scalar sq = 0;
        for (Index c : blk) sq += v(c) * v(c);
        const Scalar nrm = std::sqrt(sq);
        const Scalar scale = nrm > t ? 1 - t / nrm : Scalar(0);
        for (Index c : blk) v(c) *= scale;
    }
}

/// ADMM for min 1/2 |b - A z|^2 + lambda sum_blocks |z_block|_2 with the
/// splitting x = z. The x-update reuses one Cholesky factor of A^T A + rho I.
/// Stops when the primal residual |x - z| and the dual residual rho |z - z_prev|
/// fall below sqrt(p) tol + tol * scale.
template <typename Scalar>
SparseSolution<Scalar> group_lasso_admm(const Matrix<Scalar>& a, const Vector<Scalar>& b,
                                        const std::vector<std::vector<Index>>& blocks, const SolverConfig& cfg) {
    if (a.rows() != b.size()) throw std::invalid_argument("group lasso: matrix and rhs disagree in rows");
    if (!(cfg.lambda >= 0)) throw std::invalid_argument("group lasso: lambda must be >= 0");
    if (!(cfg.rho >= 0)) throw std::invalid_argument("group lasso: rho must be >= 0 (0 selects it automatically)");
    if (!(cfg.tol > 0) || cfg.max_iters < 1) throw std::invalid_argument("group lasso: bad tolerance or iteration cap");
    const Index p = a.cols();
    SparseSolution<Scalar> sol;
    sol.lambda = cfg.lambda;
    sol.z = Vector<Scalar>::Zero(p);
    if (p == 0) {
        sol.converged = true;
        sol.objective = Scalar(0.5) * b.squaredNorm();
        return sol;
    }

    Matrix<Scalar> gram = a.transpose() * a;
    const Vector<Scalar> atb = a.transpose() * b;
    const Scalar rho = cfg.rho > 0 ? static_cast<Scalar>(cfg.rho) : std::max<Scalar>(gram.trace() / static_cast<Scalar>(p), Scalar(1e-12));
    sol.rho = static_cast<double>(rho);
    gram.diagonal().array() += rho;
    Eigen::LLT<Matrix<Scalar>> chol(gram);
    if (chol.info() != Eigen::Success) throw NumericalError("group lasso: factorization failed");

    const Scalar thresh = static_cast<Scalar>(cfg.lambda) / rho;
    const auto tol = static_cast<Scalar>(cfg.tol);
    const Scalar sqrt_p = std::sqrt(static_cast<Scalar>(p));
    Vector<Scalar> x = Vector<Scalar>::Zero(p), z = x, w = x, z_prev = x;
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        x = chol.solve(atb + rho * (z - w));
        z_prev = z;
        z = x + w;
        block_soft_threshold(z, blocks, thresh);
        w += x - z;
        const Scalar r_primal = (x - z).norm();
        const Scalar r_dual = rho * (z - z_prev).norm();
        const Scalar eps_primal = sqrt_p * tol + tol * std::max(x.norm(), z.norm());
        const Scalar eps_dual = sqrt_p * tol + tol * rho * w.norm();
        if (r_primal < eps_primal && r_dual < eps_dual) {
            sol.converged = true;
            ++it;
            break;
        }
    }
    sol.iterations = it;
    sol.z = z;
    sol.objective = group_lasso_objective(a, b, blocks, z, static_cast<Scalar>(cfg.lambda));
    return sol;
}

/// Max-norm-scaled copy of the active (nonzero) columns and their blocks.
template <typename Scalar>
struct ScaledSystem {
    Matrix<Scalar> a;
    std::vector<Index> active;  // system column of each scaled column
    std::vector<std::vector<Index>> blocks;
    std::vector<Index> excluded;
};

template <typename Scalar>
ScaledSystem<Scalar> scale_by_max_norm(const FeatureSystem<Scalar>& sys) {
    ScaledSystem<Scalar> s;
    std::vector<Index> position(static_cast<std::size_t>(sys.n_cols()), -1);
    for (Index c = 0; c < sys.n_cols(); ++c) {
        if (sys.columns[static_cast<std::size_t>(c)].norms.max > 0) {
            position[static_cast<std::size_t>(c)] = static_cast<Index>(s.active.size());
            s.active.push_back(c);
        } else {
            s.excluded.push_back(c);
        }
    }
    s.a.resize(sys.n_rows(), static_cast<Index>(s.active.size()));
    for (std::size_t k = 0; k < s.active.size(); ++k) {
        const Index c = s.active[k];
        s.a.col(static_cast<Index>(k)) = sys.matrix.col(c) / sys.columns[static_cast<std::size_t>(c)].norms.max;
    }
    for (Index j = 0; j < sys.n_features(); ++j) {
        std::vector<Index> blk;
        for (Index k = 0; k < sys.block_size[static_cast<std::size_t>(j)]; ++k) {
            const Index pos = position[static_cast<std::size_t>(sys.block_offset[static_cast<std::size_t>(j)] + k)];
            if (pos >= 0) blk.push_back(pos);
        }
        if (!blk.empty()) s.blocks.push_back(std::move(blk));
    }
    return s;
}

/// Group Lasso on the feature system with every column divided by its max-norm.
/// Zero columns are left out and keep a zero coefficient.
template <typename Scalar>
SparseSolution<Scalar> group_lasso_admm(const FeatureSystem<Scalar>& sys, const SolverConfig& cfg) {
    if (sys.n_rows() == 0 || sys.n_cols() == 0) throw std::invalid_argument("group lasso: empty feature system");
    const ScaledSystem<Scalar> s = scale_by_max_norm(sys);
    SparseSolution<Scalar> inner = group_lasso_admm<Scalar>(s.a, sys.b_hat, s.blocks, cfg);
    SparseSolution<Scalar> sol = inner;
    sol.z = Vector<Scalar>::Zero(sys.n_cols());
    for (std::size_t k = 0; k < s.active.size(); ++k) sol.z(s.active[k]) = inner.z(static_cast<Index>(k));
    sol.excluded = s.excluded;
    return sol;
}

/// Physical coefficients z / ||F[j,l]||_inf.
template <typename Scalar>
Vector<Scalar> denormalized_coefficients(const FeatureSystem<Scalar>& sys, const SparseSolution<Scalar>& sol) {
    Vector<Scalar> a = Vector<Scalar>::Zero(sys.n_cols());
    for (Index c = 0; c < sys.n_cols(); ++c) {
        const Scalar m = sys.columns[static_cast<std::size_t>(c)].norms.max;
        if (m > 0) a(c) = sol.z(c) / m;
    }
    return a;
}

/// Mean absolute value over the domain of the coefficient function of feature j
/// held in `coeffs` (system column layout).
template <typename Scalar>
Scalar coefficient_function_mean_abs(const FeatureSystem<Scalar>& sys, const Vector<Scalar>& coeffs, Index j) {
    const auto js = static_cast<std::size_t>(j);
    const Index off = sys.block_offset[js];
    if (sys.block_size[js] == 1) return std::abs(coeffs(off));
    const Vector<Scalar> nodal = coeffs.segment(off, sys.block_size[js]);
    return sys.basis.abs_integral(nodal) / (sys.basis.x_max() - sys.basis.x_min());
}

/// Thresholding statistic per feature:
///   ||F[j]||_{L1} * mean_x | sum_l z_{j,l} / ||F[j,l]||_inf phi_l(x) |.
/// With one column per feature this is ||F[j]||_{L1} |z_j| / ||F[j]||_inf.
template <typename Scalar>
Vector<Scalar> normalized_block_magnitudes(const FeatureSystem<Scalar>& sys, const SparseSolution<Scalar>& sol) {
    if (sol.z.size() != sys.n_cols()) throw std::invalid_argument("solution does not match the feature system");
    const Vector<Scalar> a = denormalized_coefficients(sys, sol);
    Vector<Scalar> mags(sys.n_features());
    for (Index j = 0; j < sys.n_features(); ++j)
        mags(j) = sys.feature_norms[static_cast<std::size_t>(j)].function_l1 * coefficient_function_mean_abs(sys, a, j);
    return mags;
}

struct Threshold {
    double value = 0.1;
    bool relative = true;  // value is a fraction of the largest magnitude
};

/// {j : magnitude_j >= tau and magnitude_j > 0}.
template <typename Scalar>
std::vector<int> select_candidates(const Vector<Scalar>& magnitudes, Threshold tau) {
    if (!(tau.value >= 0)) throw std::invalid_argument("threshold must be >= 0");
    Scalar t = static_cast<Scalar>(tau.value);
    if (tau.relative) t *= magnitudes.size() ? magnitudes.maxCoeff() : Scalar(0);
    std::vector<int> out;
    for (Index j = 0; j < magnitudes.size(); ++j)
        if (magnitudes(j) > 0 && magnitudes(j) >= t) out.push_back(static_cast<int>(j));
    return out;
}

/// Quantities entering the Lasso recovery guarantee for constant coefficients.
struct RecoveryInputs {
    double mu = 0;
    int s = 1;
    double w_max = 1;
    double w_min = 1;
    double epsilon = 0;
    double dx = 1;
    double dt = 1;

    double denominator() const { return w_min * (1 - mu * (s - 1)) - w_max * mu * s; }
};

/// Balancing parameter that guarantees support containment:
///   [1-(s-1)mu] eps+ / ((w_min[1-mu(s-1)] - w_max mu s) dx dt),  eps+ = eps (1 + 1e-6).
inline double lambda_recovery(const RecoveryInputs& in) {
    if (in.s < 1) throw std::invalid_argument("sparsity s must be >= 1");
    if (!(in.mu >= 0) || !(in.w_min > 0) || !(in.w_max >= in.w_min) || !(in.epsilon >= 0))
        throw std::invalid_argument("recovery inputs out of range");
    if (!(in.mu * (in.s - 1) < 1)) throw std::invalid_argument("condition mu(s-1) < 1 violated");
    if (!(in.mu * in.s / (1 - in.mu * (in.s - 1)) < in.w_min / in.w_max))
        throw std::invalid_argument("condition mu s / (1 - mu(s-1)) < w_min / w_max violated");
    const double eps_plus = in.epsilon * (1 + 1e-6);
    return (1 - (in.s - 1) * in.mu) * eps_plus / (in.denominator() * in.dx * in.dt);
}

/// Right-hand side of the weighted coefficient error bound
///   (w_max + eps / sqrt(dx dt)) eps / (w_min[1-mu(s-1)] - w_max mu s).
inline double recovery_error_bound(const RecoveryInputs& in) {
    return (in.w_max + in.epsilon / std::sqrt(in.dx * in.dt)) * in.epsilon / in.denominator();
}

/// mu, w_max and w_min of a constant-coefficient system (function L2 norms).
template <typename Scalar>
RecoveryInputs recovery_inputs(const FeatureSystem<Scalar>& sys, int s, double epsilon) {
    RecoveryInputs in;
    in.mu = static_cast<double>(mutual_coherence(sys.feature_values).mu);
    in.s = s;
    in.epsilon = epsilon;
    in.dx = static_cast<double>(sys.grid.dx());
    in.dt = static_cast<double>(sys.grid.dt());
    in.w_max = 0;
    in.w_min = std::numeric_limits<double>::infinity();
    for (const auto& n : sys.feature_norms) {
        if (!(n.function_l2 > 0)) continue;
        const double w = static_cast<double>(n.max / n.function_l2);
        in.w_max = std::max(in.w_max, w);
        in.w_min = std::min(in.w_min, w);
    }
    return in;
}

/// max_j ||F[j]||_{L2} | z_j / ||F[j]||_inf - a_j |.
template <typename Scalar>
Scalar weighted_coefficient_error(const FeatureSystem<Scalar>& sys, const SparseSolution<Scalar>& sol,
                                  const std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>& a_true) {
    const Vector<Scalar> a = denormalized_coefficients(sys, sol);
    Scalar worst = 0;
    for (Index j = 0; j < a.size(); ++j)
        worst = std::max(worst, sys.feature_norms[static_cast<std::size_t>(j)].function_l2 * std::abs(a(j) - a_true(j)));
    return worst;
}

}  // namespace identpde
