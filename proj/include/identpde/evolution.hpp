#pragma once

#include "identpde/dictionary.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace identpde {

/// A candidate PDE u_t = sum_j c_j(x) F_j(u, u_x, u_xx). Each supported feature
/// carries a constant (one value) or FEM node values (basis.size() values).
template <typename Scalar = double>
struct PdeModel {
    std::vector<int> support;                   // increasing feature indices
    std::vector<Vector<Scalar>> coefficients;   // parallel to support
    FemBasis<Scalar> basis;
    int r = 0;

    bool empty() const { return support.empty(); }

    /// c_j at x for the k-th supported feature.
    Scalar coefficient_at(std::size_t k, Scalar x) const {
        const Vector<Scalar>& c = coefficients[k];
        return c.size() == 1 ? c(0) : basis.combine(c, x);
    }

    /// Constant coefficient of feature j, or the mean of its node values; 0 if unsupported.
    Scalar constant(int j) const {
        for (std::size_t k = 0; k < support.size(); ++k)
            if (support[k] == j) return coefficients[k].mean();
        return 0;
    }
};

inline int derivative_order_of(const std::vector<int>& support) {
    int r = 0;
    for (int j : support) r = std::max(r, feature_derivative_order(j));
    return r;
}

/// Constant-coefficient model from (feature, value) pairs.
template <typename Scalar = double>
PdeModel<Scalar> constant_model(std::vector<std::pair<int, Scalar>> terms) {
    std::sort(terms.begin(), terms.end());
    PdeModel<Scalar> m;
    for (const auto& [j, c] : terms) {
        if (j < 0 || j >= kFeatureCount) throw std::invalid_argument("feature index out of range");
        m.support.push_back(j);
        m.coefficients.push_back(Vector<Scalar>::Constant(1, c));
    }
    m.r = derivative_order_of(m.support);
    return m;
}

template <typename Scalar = double>
struct TeeRecord {
    std::vector<int> support;
    Vector<Scalar> coefficients;  // system column layout, zero off the support
    Scalar tee = std::numeric_limits<Scalar>::infinity();
    bool blew_up = false;
    bool rank_deficient = false;
};

struct EvolveConfig {
    double stability_factor = 0.5;
    double blowup_threshold = 1e8;
    long long max_fine_steps = 50'000'000;  // total over the run
    bool weighted_tee = true;               // false: plain sum of |difference|
};

inline void validate(const EvolveConfig& cfg) {
    if (!(cfg.stability_factor > 0 && cfg.stability_factor <= 1))
        throw std::invalid_argument("stability_factor must lie in (0, 1]");
    if (!(cfg.blowup_threshold > 0)) throw std::invalid_argument("blowup_threshold must be > 0");
    if (cfg.max_fine_steps < 1) throw std::invalid_argument("max_fine_steps must be >= 1");
}

/// Least-squares coefficients on the columns of the given features' blocks.
/// Entries outside the support are exactly zero.
template <typename Scalar>
Vector<Scalar> least_squares_fit(const FeatureSystem<Scalar>& sys, const std::vector<int>& support) {
    if (support.empty()) throw std::invalid_argument("least squares: empty support");
    for (int j : support)
        if (j < 0 || j >= sys.n_features()) throw std::invalid_argument("least squares: feature index out of range");
    const std::vector<Index> cols = sys.block_columns(support);
    const auto k = static_cast<Index>(cols.size());
    Matrix<Scalar> a(sys.n_rows(), k);
    Vector<Scalar> scale(k);
    for (Index c = 0; c < k; ++c) {
        const Scalar nrm = sys.matrix.col(cols[static_cast<std::size_t>(c)]).norm();
        scale(c) = nrm > 0 ? nrm : Scalar(1);
        a.col(c) = sys.matrix.col(cols[static_cast<std::size_t>(c)]) / scale(c);
    }
    Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(a);
    qr.setThreshold(Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(std::max(a.rows(), k)));
    if (qr.rank() < k) {
        std::ostringstream msg;
        msg << "least squares: rank-deficient support, dependent columns:";
        for (Index c = qr.rank(); c < k; ++c) {
            const Index col = cols[static_cast<std::size_t>(qr.colsPermutation().indices()(c))];
            const auto& meta = sys.columns[static_cast<std::size_t>(col)];
            msg << ' ' << sys.feature_names[static_cast<std::size_t>(meta.feature)];
            if (sys.varies(meta.feature)) msg << '[' << meta.basis << ']';
        }
        throw NumericalError(msg.str());
    }
    const Vector<Scalar> y = qr.solve(sys.b_hat);
    Vector<Scalar> out = Vector<Scalar>::Zero(sys.n_cols());
    for (Index c = 0; c < k; ++c) out(cols[static_cast<std::size_t>(c)]) = y(c) / scale(c);
    return out;
}

/// Model carried by a coefficient vector in system column layout.
template <typename Scalar>
PdeModel<Scalar> model_from_coefficients(const FeatureSystem<Scalar>& sys, const std::vector<int>& support,
                                         const Vector<Scalar>& coeffs) {
    PdeModel<Scalar> m;
    m.basis = sys.basis;
    m.support = support;
    std::sort(m.support.begin(), m.support.end());
    for (int j : m.support)
        m.coefficients.push_back(coeffs.segment(sys.block_offset[static_cast<std::size_t>(j)], sys.block_size[static_cast<std::size_t>(j)]));
    m.r = derivative_order_of(m.support);
    return m;
}

template <typename Scalar = double>
struct Evolution {
    Field<Scalar> field;
    bool blew_up = false;
    Index fine_steps_per_sample = 0;
    Scalar fine_dt = 0;
};

/// Fine step: stability_factor dx^max(r,1), capped by dx^2 / (2 max diffusion)
/// when r = 2, then shrunk so that it divides dt.
template <typename Scalar>
std::pair<Index, Scalar> fine_time_step(const PdeModel<Scalar>& model, const Grid<Scalar>& grid, Scalar max_abs_u,
                                        const EvolveConfig& cfg) {
    const Scalar dx = grid.dx();
    Scalar step = static_cast<Scalar>(cfg.stability_factor) * std::pow(dx, static_cast<Scalar>(std::max(model.r, 1)));
    if (model.r == 2) {
        Scalar diff = 0;
        for (std::size_t k = 0; k < model.support.size(); ++k) {
            const int j = model.support[k];
            if (j != static_cast<int>(Feature::Uxx) && j != static_cast<int>(Feature::UUxx)) continue;
            const Scalar peak = model.coefficients[k].cwiseAbs().maxCoeff();
            diff += j == static_cast<int>(Feature::Uxx) ? peak : peak * max_abs_u;
        }
        if (diff > 0) step = std::min(step, dx * dx / (2 * diff));
    }
    const auto count = static_cast<Index>(std::ceil(grid.dt() / step * (1 - Scalar(1e-12))));
    const Index n = std::max<Index>(count, 1);
    return {n, grid.dt() / static_cast<Scalar>(n)};
}

/// Forward Euler evolution of `model` from `initial` across the sample times
/// of `grid`. boundary(0, n) and boundary(1, n) are the Dirichlet values used
/// from sample n until the next sample; an empty matrix means zero.
template <typename Scalar>
Evolution<Scalar> evolve_forward_euler(const PdeModel<Scalar>& model, const std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>& initial,
                                       const Grid<Scalar>& grid, const Matrix<Scalar>& boundary, const EvolveConfig& cfg) {
    validate(cfg);
    const Index nx = grid.n_x();
    if (initial.size() != nx) throw std::invalid_argument("initial slice does not match the grid");
    if (!initial.allFinite()) throw std::invalid_argument("initial slice has non-finite entries");
    if (boundary.size() != 0 && (boundary.rows() != 2 || boundary.cols() != grid.n_t()))
        throw std::invalid_argument("boundary values must be 2 x n_t");
    if (model.r >= 1 && nx < 5) throw std::invalid_argument("evolution with derivatives needs n_x >= 5");

    Evolution<Scalar> out;
    out.field = Field<Scalar>::zeros(grid);
    out.field.values.col(0) = initial;
    if (model.empty()) {
        for (Index n = 1; n < grid.n_t(); ++n) out.field.values.col(n) = initial;
        return out;
    }
    const auto [steps, dtf] = fine_time_step(model, grid, initial.cwiseAbs().maxCoeff(), cfg);
    if (steps * (grid.n_t() - 1) > cfg.max_fine_steps) throw NumericalError("evolution: fine step count exceeds max_fine_steps");
    out.fine_steps_per_sample = steps;
    out.fine_dt = dtf;

    // Coefficient functions at the nodes.
    const std::size_t terms = model.support.size();
    Matrix<Scalar> coef(nx, static_cast<Index>(terms));
    for (std::size_t k = 0; k < terms; ++k)
        for (Index i = 0; i < nx; ++i) coef(i, static_cast<Index>(k)) = model.coefficient_at(k, grid.x(i));
    const bool need_ux = model.r >= 1;
    const bool need_uxx = model.r >= 2;

    Vector<Scalar> u = initial;
    Vector<Scalar> ux = Vector<Scalar>::Zero(nx), uxx = Vector<Scalar>::Zero(nx), rhs(nx);
    const auto n = static_cast<std::size_t>(nx);
    const auto limit = static_cast<Scalar>(cfg.blowup_threshold);
    for (Index s = 1; s < grid.n_t(); ++s) {
        const Scalar left = boundary.size() ? boundary(0, s - 1) : Scalar(0);
        const Scalar right = boundary.size() ? boundary(1, s - 1) : Scalar(0);
        for (Index step = 0; step < steps; ++step) {
            if (need_ux || need_uxx)
                eno_slice<Scalar>(std::span<const Scalar>(u.data(), n), grid.dx(),
                                  need_ux ? std::span<Scalar>(ux.data(), n) : std::span<Scalar>(),
                                  need_uxx ? std::span<Scalar>(uxx.data(), n) : std::span<Scalar>());
            for (Index i = 0; i < nx; ++i) {
                Scalar acc = 0;
                for (std::size_t k = 0; k < terms; ++k)
                    acc += coef(i, static_cast<Index>(k)) * feature_value(model.support[k], u(i), ux(i), uxx(i));
                rhs(i) = acc;
            }
            u += dtf * rhs;
            u(0) = left;
            u(nx - 1) = right;
            if (!u.allFinite() || u.cwiseAbs().maxCoeff() > limit) {
                out.blew_up = true;
                out.field.values.rightCols(grid.n_t() - s).setConstant(std::numeric_limits<Scalar>::quiet_NaN());
                return out;
            }
        }
        out.field.values.col(s) = u;
    }
    return out;
}

/// Evolves from the first sample of `data`, with Dirichlet values taken from
/// its boundary nodes.
template <typename Scalar>
Evolution<Scalar> evolve_forward_euler(const PdeModel<Scalar>& model, const Field<Scalar>& data, const EvolveConfig& cfg) {
    Matrix<Scalar> boundary(2, data.grid.n_t());
    boundary.row(0) = data.values.row(0);
    boundary.row(1) = data.values.row(data.grid.n_x() - 1);
    return evolve_forward_euler<Scalar>(model, data.values.col(0), data.grid, boundary, cfg);
}

/// sum |evolved - data| dx dt over all samples (plain sum when !weighted).
template <typename Scalar>
Scalar time_evolution_error(const Field<Scalar>& evolved, const Field<Scalar>& data, bool weighted = true) {
    if (!(evolved.grid == data.grid)) throw std::invalid_argument("TEE: fields live on different grids");
    if (!evolved.all_finite()) return std::numeric_limits<Scalar>::infinity();
    require_finite(data, "time_evolution_error");
    const Scalar sum = (evolved.values - data.values).cwiseAbs().sum();
    return weighted ? sum * data.grid.dx() * data.grid.dt() : sum;
}

template <typename Scalar>
Scalar time_evolution_error(const Evolution<Scalar>& evolved, const Field<Scalar>& data, bool weighted = true) {
    if (evolved.blew_up) return std::numeric_limits<Scalar>::infinity();
    return time_evolution_error(evolved.field, data, weighted);
}

/// Least squares + evolution + TEE for one support.
template <typename Scalar>
TeeRecord<Scalar> evaluate_support(const FeatureSystem<Scalar>& sys, const Field<Scalar>& data, const std::vector<int>& support,
                                   const EvolveConfig& cfg) {
    TeeRecord<Scalar> rec;
    rec.support = support;
    std::sort(rec.support.begin(), rec.support.end());
    try {
        rec.coefficients = least_squares_fit(sys, rec.support);
    } catch (const NumericalError&) {
        rec.coefficients = Vector<Scalar>::Zero(sys.n_cols());
        rec.rank_deficient = true;
        return rec;
    }
    const auto model = model_from_coefficients(sys, rec.support, rec.coefficients);
    const auto evo = evolve_forward_euler(model, data, cfg);
    rec.blew_up = evo.blew_up;
    rec.tee = time_evolution_error(evo, data, cfg.weighted_tee);
    if (!std::isfinite(rec.tee)) rec.blew_up = true;
    return rec;
}

template <typename Scalar = double>
struct SubsetSearchResult {
    std::vector<TeeRecord<Scalar>> records;  // by subset mask over the candidate list
    std::optional<std::size_t> chosen;       // index into records
    PdeModel<Scalar> model;
};

/// true when a is preferred over b: smaller TEE, then smaller support, then
/// lexicographically smaller feature list.
template <typename Scalar>
bool better_record(const TeeRecord<Scalar>& a, const TeeRecord<Scalar>& b) {
    if (a.tee != b.tee) return a.tee < b.tee;
    if (a.support.size() != b.support.size()) return a.support.size() < b.support.size();
    return a.support < b.support;
}

/// Runs every nonempty subset of the candidates. Subset with mask m holds
/// candidates[k] for each set bit k; records come back ordered by m.
template <typename Scalar>
SubsetSearchResult<Scalar> subset_search(const FeatureSystem<Scalar>& sys, const Field<Scalar>& data,
                                         const std::vector<int>& candidates, const EvolveConfig& cfg,
                                         std::size_t max_candidates = 12, unsigned jobs = 1) {
    if (candidates.empty()) throw std::invalid_argument("subset search: empty candidate set");
    if (candidates.size() > max_candidates)
        throw std::invalid_argument("subset search: " + std::to_string(candidates.size()) + " candidates exceed the cap of " +
                                    std::to_string(max_candidates) + "; raise the threshold tau");
    if (!(data.grid == sys.grid)) throw std::invalid_argument("subset search: data grid differs from the system grid");
    validate(cfg);

    const std::size_t total = (std::size_t{1} << candidates.size()) - 1;
    SubsetSearchResult<Scalar> res;
    res.records.resize(total);
    auto run = [&](std::size_t idx) {
        const std::size_t mask = idx + 1;
        std::vector<int> support;
        for (std::size_t k = 0; k < candidates.size(); ++k)
            if (mask & (std::size_t{1} << k)) support.push_back(candidates[k]);
        res.records[idx] = evaluate_support(sys, data, support, cfg);
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(total)));
    if (workers == 1) {
        for (std::size_t i = 0; i < total; ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < total; i = next++) run(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (std::size_t i = 0; i < total; ++i) {
        if (!std::isfinite(res.records[i].tee)) continue;
        if (!res.chosen || better_record(res.records[i], res.records[*res.chosen])) res.chosen = i;
    }
    if (res.chosen) {
        const auto& best = res.records[*res.chosen];
        res.model = model_from_coefficients(sys, best.support, best.coefficients);
    } else {
        res.model.basis = sys.basis;
    }
    return res;
}

}  // namespace identpde
