#pragma once

#include "identpde/denoise.hpp"
#include "identpde/evolution.hpp"
#include "identpde/sparse_solver.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace identpde {

struct IdentConfig {
    DenoiseMethod denoise = DenoiseMethod::None;
    SolverConfig solver;
    Threshold tau;
    Index basis_l = 1;
    std::vector<bool> varying;  // per feature; empty means every feature varies
    EvolveConfig evolve;
    bool tee_on_denoised = true;
    std::size_t max_candidates = 12;
    unsigned jobs = 1;
};

/// Steps 1 and 2: feature system and group Lasso for one basis size.
template <typename Scalar = double>
struct LassoStage {
    Field<Scalar> denoised;
    FeatureSystem<Scalar> system;
    SparseSolution<Scalar> solution;
    Vector<Scalar> coefficients;  // de-normalized, system column layout
    Vector<Scalar> magnitudes;
};

template <typename Scalar>
LassoStage<Scalar> lasso_stage(const Field<Scalar>& data, const IdentConfig& cfg, Index basis_l) {
    if (data.grid.n_x() < 5 || data.grid.n_t() < 2) throw std::invalid_argument("IDENT needs n_x >= 5 and n_t >= 2");
    require_finite(data, "ident");
    LassoStage<Scalar> st;
    st.denoised = denoise_field(data, cfg.denoise);
    const auto derivs = compute_derivatives(st.denoised);
    const FemBasis<Scalar> basis(basis_l, data.grid.x_min(), data.grid.x_max());
    st.system = build_feature_system(st.denoised, basis, derivs, cfg.varying);
    st.solution = group_lasso_admm(st.system, cfg.solver);
    st.magnitudes = normalized_block_magnitudes(st.system, st.solution);
    st.solution.block_magnitudes = st.magnitudes;
    st.coefficients = denormalized_coefficients(st.system, st.solution);
    return st;
}

template <typename Scalar = double>
struct IdentResult {
    std::vector<int> candidates;
    Vector<Scalar> magnitudes;
    Vector<Scalar> lasso_coefficients;
    SparseSolution<Scalar> lasso;
    std::vector<TeeRecord<Scalar>> tee_table;
    std::optional<std::size_t> chosen;
    PdeModel<Scalar> model;
    CoherenceReport<Scalar> coherence;  // of the constant-coefficient features
    std::optional<Scalar> nsr;
    std::vector<std::string> feature_names;
    std::vector<Index> block_size;
    std::string reason;  // empty, "no_candidates" or "no_finite_tee"
};

/// Denoise, differentiate, build features, group Lasso, threshold, then pick
/// the candidate subset with the smallest time evolution error. `truth`, when
/// given, is a constant coefficient per feature used for the NSR diagnostic.
template <typename Scalar>
IdentResult<Scalar> ident_pipeline(const Field<Scalar>& data, const IdentConfig& cfg,
                                   const std::optional<Vector<Scalar>>& truth = std::nullopt) {
    LassoStage<Scalar> st = lasso_stage(data, cfg, cfg.basis_l);
    IdentResult<Scalar> res;
    res.magnitudes = st.magnitudes;
    res.lasso_coefficients = st.coefficients;
    res.lasso = st.solution;
    res.coherence = mutual_coherence(st.system.feature_values);
    res.feature_names = st.system.feature_names;
    res.block_size = st.system.block_size;
    if (truth) res.nsr = noise_to_signal_ratio(st.system, *truth);
    res.model.basis = st.system.basis;
    res.candidates = select_candidates(st.magnitudes, cfg.tau);
    if (res.candidates.empty()) {
        res.reason = "no_candidates";
        return res;
    }
    const Field<Scalar>& target = cfg.tee_on_denoised ? st.denoised : data;
    auto search = subset_search(st.system, target, res.candidates, cfg.evolve, cfg.max_candidates, cfg.jobs);
    res.tee_table = std::move(search.records);
    res.chosen = search.chosen;
    res.model = std::move(search.model);
    if (!res.chosen) res.reason = "no_finite_tee";
    return res;
}

/// NSR of the data as given (no denoising), constant coefficients.
template <typename Scalar>
Scalar data_nsr(const Field<Scalar>& data, const std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>& truth) {
    const auto derivs = compute_derivatives(data);
    const auto sys = build_feature_system(data, FemBasis<Scalar>(1, data.grid.x_min(), data.grid.x_max()), derivs);
    return noise_to_signal_ratio(sys, truth);
}

template <typename Scalar = double>
struct BeeLevel {
    Index l = 1;
    Vector<Scalar> magnitudes;
    std::vector<int> candidates;
    std::optional<SubsetSearchResult<Scalar>> tee;  // over the final candidates, when requested
};

template <typename Scalar = double>
struct BeeResult {
    std::vector<BeeLevel<Scalar>> levels;
    std::vector<Scalar> relative_change;  // between consecutive levels, infinity norm
    IdentResult<Scalar> final_result;     // at the largest L
};

/// Group Lasso magnitudes as L grows, then the full pipeline at the largest L.
/// With tee_per_level, every level also runs the subset search over the final
/// candidate set.
template <typename Scalar>
BeeResult<Scalar> bee_run(const Field<Scalar>& data, const IdentConfig& cfg, std::vector<Index> l_values,
                          bool tee_per_level = false) {
    if (l_values.empty()) throw std::invalid_argument("BEE needs at least one L value");
    for (std::size_t k = 0; k < l_values.size(); ++k) {
        if (l_values[k] < 1) throw std::invalid_argument("BEE L values must be >= 1");
        if (k && l_values[k] <= l_values[k - 1]) throw std::invalid_argument("BEE L values must increase");
    }
    BeeResult<Scalar> res;
    std::vector<LassoStage<Scalar>> stages;
    for (Index l : l_values) {
        stages.push_back(lasso_stage(data, cfg, l));
        BeeLevel<Scalar> lvl;
        lvl.l = l;
        lvl.magnitudes = stages.back().magnitudes;
        lvl.candidates = select_candidates(lvl.magnitudes, cfg.tau);
        res.levels.push_back(std::move(lvl));
        if (!tee_per_level) stages.back() = {};
    }
    for (std::size_t k = 1; k < res.levels.size(); ++k) {
        const auto& prev = res.levels[k - 1].magnitudes;
        const auto& cur = res.levels[k].magnitudes;
        const Scalar scale = std::max(cur.cwiseAbs().maxCoeff(), prev.cwiseAbs().maxCoeff());
        res.relative_change.push_back(scale > 0 ? (cur - prev).cwiseAbs().maxCoeff() / scale : Scalar(0));
    }
    IdentConfig final_cfg = cfg;
    final_cfg.basis_l = l_values.back();
    res.final_result = ident_pipeline(data, final_cfg);
    const auto& cands = res.final_result.candidates;
    if (tee_per_level && !cands.empty()) {
        for (std::size_t k = 0; k < stages.size(); ++k) {
            const Field<Scalar>& target = cfg.tee_on_denoised ? stages[k].denoised : data;
            res.levels[k].tee = subset_search(stages[k].system, target, cands, cfg.evolve, cfg.max_candidates, cfg.jobs);
        }
    }
    return res;
}

/// L1 distance over the domain between the coefficient function of feature j
/// in `model` and `truth`, by composite midpoint quadrature.
template <typename Scalar>
Scalar coefficient_l1_error(const PdeModel<Scalar>& model, int j, const std::function<Scalar(Scalar)>& truth,
                            Index samples = 4096) {
    const Scalar a = model.basis.x_min(), b = model.basis.x_max();
    const Scalar h = (b - a) / static_cast<Scalar>(samples);
    std::optional<std::size_t> slot;
    for (std::size_t k = 0; k < model.support.size(); ++k)
        if (model.support[k] == j) slot = k;
    Scalar total = 0;
    for (Index s = 0; s < samples; ++s) {
        const Scalar x = a + (static_cast<Scalar>(s) + Scalar(0.5)) * h;
        const Scalar est = slot ? model.coefficient_at(*slot, x) : Scalar(0);
        total += std::abs(truth(x) - est);
    }
    return total * h;
}

struct WrongRatio {
    double value = 0;
    bool empty = false;  // nothing identified; value is 0 by convention
};

/// Share of the identified L1 coefficient mass sitting outside the true
/// support. Varying coefficients count with their mean absolute value.
template <typename Scalar>
WrongRatio wrong_coefficient_ratio(const PdeModel<Scalar>& identified, const std::vector<int>& true_support) {
    WrongRatio w;
    double total = 0, wrong = 0;
    for (std::size_t k = 0; k < identified.support.size(); ++k) {
        const Vector<Scalar>& c = identified.coefficients[k];
        double mass;
        if (c.size() == 1) mass = std::abs(static_cast<double>(c(0)));
        else
            mass = static_cast<double>(identified.basis.abs_integral(c) / (identified.basis.x_max() - identified.basis.x_min()));
        total += mass;
        if (std::find(true_support.begin(), true_support.end(), identified.support[k]) == true_support.end()) wrong += mass;
    }
    if (!(total > 0)) {
        w.empty = true;
        return w;
    }
    w.value = std::clamp(wrong / total, 0.0, 1.0);
    return w;
}

template <typename Scalar>
WrongRatio wrong_coefficient_ratio(const IdentResult<Scalar>& result, const PdeModel<Scalar>& truth) {
    return wrong_coefficient_ratio(result.model, truth.support);
}

struct ErrorBudgetParams {
    double dt = 0;
    double dx = 0;
    double fine_dt = 0;  // delta t of the data generator
    double fine_dx = 0;
    int q = 1;           // generator order
    int p = 4;           // derivative approximation order
    int r = 1;           // highest derivative in the PDE
    double sigma = 0;
    std::optional<long> l;  // empty: constant coefficients (L -> infinity)
};

struct ErrorBudget {
    double dt_term = 0;
    double dx_term = 0;
    double generation_term = 0;
    double noise_term = 0;
    double fem_term = 0;
    double total = 0;
};

/// Order-of-magnitude error budget with unit constants:
///   dt + dx^(p+1-r) + (fine_dt + fine_dx^q)(1/dt + 1/dx^r) + sigma (1/dt + 1/dx^r) + 1/L.
inline ErrorBudget predict_error_budget(const ErrorBudgetParams& in) {
    if (!(in.dt > 0) || !(in.dx > 0)) throw std::invalid_argument("error budget needs positive dt and dx");
    if (in.fine_dt < 0 || in.fine_dx < 0 || in.sigma < 0) throw std::invalid_argument("error budget inputs must be >= 0");
    if (in.r < 0 || in.q < 1) throw std::invalid_argument("error budget needs r >= 0 and q >= 1");
    if (in.p < in.r) throw std::invalid_argument("error budget needs p >= r");
    if (in.l && *in.l < 1) throw std::invalid_argument("error budget needs L >= 1");
    ErrorBudget e;
    const double inv = 1 / in.dt + 1 / std::pow(in.dx, in.r);
    e.dt_term = in.dt;
    e.dx_term = std::pow(in.dx, in.p + 1 - in.r);
    e.generation_term = (in.fine_dt + std::pow(in.fine_dx, in.q)) * inv;
    e.noise_term = in.sigma * inv;
    e.fem_term = in.l ? 1.0 / static_cast<double>(*in.l) : 0.0;
    e.total = e.dt_term + e.dx_term + e.generation_term + e.noise_term + e.fem_term;
    return e;
}

}  // namespace identpde
