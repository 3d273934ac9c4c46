#include "identpde/experiment.hpp"
#include "identpde/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>

namespace identpde {

namespace {

namespace fs = std::filesystem;

enum class Source { BurgersAnalytic, Simulate, File };

struct DataPlan {
    Source source = Source::BurgersAnalytic;
    // analytic
    double dx = 1.0 / 56, dt = 0.004, t_end = 0.05;
    // simulated
    SimConfig sim;
    Index cx = 1, ct = 1;
    // file
    fs::path path;
    double noise_percent = 0;
    bool noise_after_downsample = false;
};

struct TruthPlan {
    std::vector<int> support;
    std::vector<std::pair<int, double>> constants;
    std::vector<std::pair<int, std::string>> varying;

    bool any() const { return !support.empty(); }
    std::optional<Vector<double>> constant_vector() const {
        if (constants.empty() || !varying.empty()) return std::nullopt;
        Vector<double> a = Vector<double>::Zero(kFeatureCount);
        for (auto [j, c] : constants) a(j) = c;
        return a;
    }
};

struct Context {
    const ExperimentSpec& spec;
    const RunOptions& opts;
    Provenance prov;
    std::vector<fs::path> written;

    fs::path out(const std::string& stem, const std::string& ext, std::optional<long long> trial = std::nullopt) const {
        std::string name = stem;
        if (trial && spec.trials > 1) name += "_trial" + std::to_string(*trial);
        return opts.out_dir / (name + ext);
    }
    Provenance trial_prov(long long trial) const { return {prov.spec_hash, spec.seed + static_cast<std::uint64_t>(trial)}; }
};

int feature_or_throw(const Config& c, const std::string& key, const std::string& name) {
    auto j = feature_index(name);
    if (!j) throw ConfigError("'" + key + "': unknown feature '" + name + "'", c.line_of(key));
    return *j;
}

std::pair<std::string, std::string> split_pair(const Config& c, const std::string& key, const std::string& item) {
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size())
        throw ConfigError("'" + key + "': expected feature:value, got '" + item + "'", c.line_of(key));
    return {item.substr(0, colon), item.substr(colon + 1)};
}

DataPlan read_data(const Config& c, const fs::path& base) {
    DataPlan p;
    const std::string src = c.get_string("data.source");
    auto bad = [&](const std::string& key, const std::string& msg) { return ConfigError("'" + key + "' " + msg, c.line_of(key)); };
    if (src == "burgers_analytic") {
        p.source = Source::BurgersAnalytic;
        if (c.has("data.n_x") && c.has("data.dx")) throw bad("data.n_x", "conflicts with data.dx");
        if (c.has("data.n_x")) {
            const auto nx = c.get_int("data.n_x");
            if (nx < 5) throw bad("data.n_x", "must be >= 5");
            p.dx = 1.0 / static_cast<double>(nx - 1);
        } else {
            p.dx = c.get_double("data.dx", p.dx);
        }
        p.dt = c.get_double("data.dt", p.dt);
        p.t_end = c.get_double("data.t_end", p.t_end);
        if (!(p.dx > 0) || p.dx > 0.25) throw bad("data.dx", "must lie in (0, 0.25]");
        if (!(p.dt > 0)) throw bad("data.dt", "must be > 0");
        if (!(p.t_end > 0)) throw bad("data.t_end", "must be > 0");
    } else if (src == "simulate") {
        p.source = Source::Simulate;
        p.sim.fine_dx = c.get_double("data.fine_dx", p.sim.fine_dx);
        p.sim.fine_dt = c.get_double("data.fine_dt", p.sim.fine_dt);
        p.sim.t_end = c.get_double("data.t_end", p.sim.t_end);
        p.sim.initial = c.get_string("data.initial", p.sim.initial);
        p.sim.convection = c.get_double("data.convection", p.sim.convection);
        p.sim.advection = c.get_string("data.advection", p.sim.advection);
        p.sim.diffusion = c.get_string("data.diffusion", p.sim.diffusion);
        for (const auto& [key, fn] : {std::pair{"data.initial", p.sim.initial}, {"data.advection", p.sim.advection},
                                      {"data.diffusion", p.sim.diffusion}}) {
            try {
                named_function<double>(fn);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what(), c.line_of(key));
            }
        }
        p.cx = c.get_int("data.downsample_x", 1);
        p.ct = c.get_int("data.downsample_t", 1);
        if (p.cx < 1) throw bad("data.downsample_x", "must be >= 1");
        if (p.ct < 1) throw bad("data.downsample_t", "must be >= 1");
    } else if (src == "file") {
        p.source = Source::File;
        p.path = c.get_string("data.path");
        if (p.path.is_relative()) p.path = base / p.path;
        if (!fs::exists(p.path)) throw ConfigError("'data.path': no such file " + p.path.string(), c.line_of("data.path"));
    } else {
        throw ConfigError("unknown data source '" + src + "'", c.line_of("data.source"));
    }
    p.noise_percent = c.get_double("data.noise_percent", 0);
    if (!(p.noise_percent >= 0)) throw bad("data.noise_percent", "must be >= 0");
    const std::string stage = c.get_string("data.noise_stage", "before_downsample");
    if (stage == "after_downsample") p.noise_after_downsample = true;
    else if (stage != "before_downsample") throw bad("data.noise_stage", "must be before_downsample or after_downsample");
    return p;
}

TruthPlan read_truth(const Config& c) {
    TruthPlan t;
    if (c.has("truth.terms"))
        for (const auto& item : c.get_list("truth.terms")) {
            auto [name, value] = split_pair(c, "truth.terms", item);
            const int j = feature_or_throw(c, "truth.terms", name);
            double v = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || ptr != value.data() + value.size())
                throw ConfigError("'truth.terms': bad coefficient '" + value + "'", c.line_of("truth.terms"));
            t.constants.emplace_back(j, v);
            t.support.push_back(j);
        }
    if (c.has("truth.varying"))
        for (const auto& item : c.get_list("truth.varying")) {
            auto [name, fn] = split_pair(c, "truth.varying", item);
            const int j = feature_or_throw(c, "truth.varying", name);
            try {
                named_function<double>(fn);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what(), c.line_of("truth.varying"));
            }
            t.varying.emplace_back(j, fn);
            t.support.push_back(j);
        }
    std::sort(t.support.begin(), t.support.end());
    if (std::adjacent_find(t.support.begin(), t.support.end()) != t.support.end())
        throw ConfigError("a truth feature is listed twice", c.line_of("truth.terms"));
    return t;
}

Field<double> clean_field(const DataPlan& p) {
    switch (p.source) {
    case Source::BurgersAnalytic: {
        const auto nx = static_cast<Index>(std::llround(1.0 / p.dx)) + 1;
        const auto nt = static_cast<Index>(std::floor(p.t_end / p.dt + 1e-9)) + 1;
        return burgers_analytic(Grid<double>::with_spacing(0.0, p.dx, nx, 0.0, p.dt, nt));
    }
    case Source::Simulate: return simulate_first_order<double>(p.sim);
    case Source::File: return read_field_json(p.path);
    }
    throw std::logic_error("unreachable");
}

// Noise and downsampling applied to a clean field for one trial.
Field<double> prepare(const Field<double>& clean, const DataPlan& p, double percent, Index cx, Index ct, std::uint64_t seed) {
    const DownsampleSpec ds{cx, ct};
    if (p.noise_after_downsample) return add_noise(downsample(clean, ds), NoiseSpec{percent, seed});
    return downsample(add_noise(clean, NoiseSpec{percent, seed}), ds);
}

// Runs fn(trial) for every trial on up to `jobs` threads; results stay in
// trial order and the first failure (by trial) is rethrown.
template <typename T>
std::vector<T> for_trials(long long trials, unsigned jobs, const std::function<T(long long)>& fn) {
    std::vector<T> out(static_cast<std::size_t>(trials));
    std::vector<std::exception_ptr> err(out.size());
    std::atomic<long long> next{0};
    auto worker = [&] {
        for (long long k = next++; k < trials; k = next++) try {
                out[static_cast<std::size_t>(k)] = fn(k);
            } catch (...) {
                err[static_cast<std::size_t>(k)] = std::current_exception();
            }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(trials)));
    if (n == 1) worker();
    else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

std::string truth_coef(const PdeModel<double>& m, int j) {
    for (std::size_t k = 0; k < m.support.size(); ++k)
        if (m.support[k] == j) {
            const auto& c = m.coefficients[k];
            if (c.size() == 1) return format_double(c(0));
            // mean of the piecewise-linear coefficient function
            return format_double((c.sum() - (c(0) + c(c.size() - 1)) / 2) / static_cast<double>(c.size() - 1));
        }
    return "0";
}

// ---- kinds ---------------------------------------------------------------

void run_simulate(Context& ctx, const DataPlan& data) {
    const Field<double> clean = clean_field(data);
    for (long long k = 0; k < ctx.spec.trials; ++k) {
        const auto f = prepare(clean, data, data.noise_percent, data.cx, data.ct, ctx.spec.seed + static_cast<std::uint64_t>(k));
        const auto path = ctx.out("field", ".json", k);
        write_field_json(path, f, ctx.trial_prov(k));
        ctx.written.push_back(path);
    }
}

void run_identify(Context& ctx, const DataPlan& data, const TruthPlan& truth, IdentConfig cfg) {
    const Field<double> clean = clean_field(data);
    const auto truth_vec = truth.constant_vector();
    if (ctx.spec.trials > 1) cfg.jobs = 1;
    const auto results = for_trials<IdentResult<double>>(ctx.spec.trials, ctx.opts.jobs, [&](long long k) {
        const auto f = prepare(clean, data, data.noise_percent, data.cx, data.ct, ctx.spec.seed + static_cast<std::uint64_t>(k));
        return ident_pipeline(f, cfg, truth_vec);
    });
    for (long long k = 0; k < ctx.spec.trials; ++k) {
        const auto& r = results[static_cast<std::size_t>(k)];
        const auto prov = ctx.trial_prov(k);
        auto j = result_to_json(r, prov);
        if (truth.any()) {
            const auto w = wrong_coefficient_ratio(r.model, truth.support);
            j["wrong_coefficient_ratio"] = w.value;
            j["empty"] = w.empty;
        }
        auto p = ctx.out("result", ".json", k);
        write_json(p, j);
        ctx.written.push_back(p);
        p = ctx.out("tee", ".csv", k);
        write_tee_csv(p, r, prov);
        ctx.written.push_back(p);
        p = ctx.out("coherence", ".csv", k);
        write_coherence_csv(p, r, prov);
        ctx.written.push_back(p);
        p = ctx.out("magnitudes", ".csv", k);
        write_magnitudes_csv(p, r, prov);
        ctx.written.push_back(p);
        p = ctx.out("report", ".txt", k);
        std::ofstream rep(p, std::ios::binary);
        rep << prov.header_line() << '\n';
        write_report(rep, r);
        if (!rep) throw std::runtime_error("failed writing " + p.string());
        ctx.written.push_back(p);
    }
}

struct SweepRow {
    std::vector<std::string> cells;
};

void run_sweep(Context& ctx, const DataPlan& data, const TruthPlan& truth, const IdentConfig& base,
               const std::vector<std::string>& param_names, const std::vector<std::vector<double>>& params,
               const std::function<Field<double>(const Field<double>&, const std::vector<double>&, std::uint64_t)>& make,
               const std::vector<DenoiseMethod>& methods) {
    if (!truth.any()) throw ConfigError("sweeps need a [truth] section");
    const Field<double> clean = clean_field(data);
    const auto truth_vec = truth.constant_vector();

    struct Job {
        std::size_t param;
        DenoiseMethod method;
        long long trial;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < params.size(); ++p)
        for (auto m : methods)
            for (long long k = 0; k < ctx.spec.trials; ++k) jobs.push_back({p, m, k});

    IdentConfig cfg = base;
    cfg.jobs = 1;
    const auto rows = for_trials<SweepRow>(static_cast<long long>(jobs.size()), ctx.opts.jobs, [&](long long idx) {
        const Job& job = jobs[static_cast<std::size_t>(idx)];
        const std::uint64_t seed = ctx.spec.seed + static_cast<std::uint64_t>(job.trial);
        const Field<double> f = make(clean, params[job.param], seed);
        IdentConfig c = cfg;
        c.denoise = job.method;
        const auto r = ident_pipeline(f, c);
        SweepRow row;
        for (double v : params[job.param]) row.cells.push_back(format_double(v));
        row.cells.push_back(to_string(job.method));
        row.cells.push_back(std::to_string(job.trial));
        row.cells.push_back(std::to_string(seed));
        row.cells.push_back(truth_vec ? format_double(data_nsr(f, *truth_vec)) : "");
        const auto w = wrong_coefficient_ratio(r.model, truth.support);
        row.cells.push_back(format_double(w.value));
        row.cells.push_back(w.empty ? "1" : "0");
        row.cells.push_back(support_label(r.model.support, r.feature_names));
        for (int j : truth.support) row.cells.push_back(truth_coef(r.model, j));
        return row;
    });

    std::vector<std::string> cols = param_names;
    for (const char* s : {"denoise", "trial", "seed", "nsr", "wrong_ratio", "empty", "support"}) cols.emplace_back(s);
    for (int j : truth.support) cols.push_back("coef_" + std::string(feature_name(j)));
    const auto path = ctx.out("sweep", ".csv");
    CsvWriter csv(path, ctx.prov, cols);
    for (const auto& r : rows) csv.row(r.cells);
    csv.close();
    ctx.written.push_back(path);
}

std::vector<DenoiseMethod> read_methods(const Config& c, DenoiseMethod fallback) {
    if (!c.has("sweep.denoise")) {
        c.get_string("sweep.denoise", "");
        return {fallback};
    }
    std::vector<DenoiseMethod> out;
    for (const auto& s : c.get_list("sweep.denoise")) {
        try {
            out.push_back(parse_denoise_method(s));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what(), c.line_of("sweep.denoise"));
        }
    }
    return out;
}

void run_grid_ladder(Context& ctx, const Config& c, const DataPlan& data, const IdentConfig& cfg) {
    if (data.source != Source::BurgersAnalytic) throw ConfigError("grid_ladder needs data.source = burgers_analytic", c.line_of("data.source"));
    const auto levels = c.get_double_list("sweep.log2_dx");
    const double ratio = c.get_double("sweep.dt_ratio", 1.0);
    if (!(ratio > 0)) throw ConfigError("'sweep.dt_ratio' must be > 0", c.line_of("sweep.dt_ratio"));
    for (double l : levels)
        if (l != std::floor(l) || l > -2 || l < -14) throw ConfigError("'sweep.log2_dx' entries must be integers in [-14, -2]", c.line_of("sweep.log2_dx"));

    struct Level {
        Vector<double> coef;
        std::vector<std::string> names;
        bool converged = false;
    };
    const auto out = for_trials<Level>(static_cast<long long>(levels.size()) * ctx.spec.trials, ctx.opts.jobs, [&](long long idx) {
        const auto lvl = static_cast<std::size_t>(idx / ctx.spec.trials);
        const long long trial = idx % ctx.spec.trials;
        DataPlan p = data;
        p.dx = std::ldexp(1.0, static_cast<int>(levels[lvl]));
        p.dt = ratio * p.dx;
        const auto f = prepare(clean_field(p), p, p.noise_percent, 1, 1, ctx.spec.seed + static_cast<std::uint64_t>(trial));
        const auto st = lasso_stage(f, cfg, 1);
        return Level{st.coefficients, st.system.feature_names, st.solution.converged};
    });

    std::vector<std::string> cols{"log2_dx", "dx", "dt", "trial", "converged"};
    for (int j = 0; j < kFeatureCount; ++j) cols.emplace_back(feature_name(j));
    const auto path = ctx.out("ladder", ".csv");
    CsvWriter csv(path, ctx.prov, cols);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto lvl = i / static_cast<std::size_t>(ctx.spec.trials);
        const double dx = std::ldexp(1.0, static_cast<int>(levels[lvl]));
        std::vector<std::string> row{format_double(levels[lvl]), format_double(dx), format_double(ratio * dx),
                                     std::to_string(i % static_cast<std::size_t>(ctx.spec.trials)), out[i].converged ? "1" : "0"};
        for (int j = 0; j < kFeatureCount; ++j) row.push_back(format_double(out[i].coef(j)));
        csv.row(row);
    }
    csv.close();
    ctx.written.push_back(path);
}

void run_bee(Context& ctx, const Config& c, const DataPlan& data, const TruthPlan& truth, IdentConfig cfg) {
    std::vector<Index> ls;
    for (double v : c.get_double_list("sweep.l_values")) {
        if (v != std::floor(v) || v < 1) throw ConfigError("'sweep.l_values' entries must be positive integers", c.line_of("sweep.l_values"));
        ls.push_back(static_cast<Index>(v));
    }
    for (std::size_t k = 1; k < ls.size(); ++k)
        if (ls[k] <= ls[k - 1]) throw ConfigError("'sweep.l_values' must increase", c.line_of("sweep.l_values"));
    const bool tee_per_level = c.get_bool("sweep.tee_per_level", false);
    const Field<double> clean = clean_field(data);
    if (ctx.spec.trials > 1) cfg.jobs = 1;

    struct Out {
        BeeResult<double> bee;
        std::vector<PdeModel<double>> fitted;  // final support refit at every L
    };
    const auto results = for_trials<Out>(ctx.spec.trials, ctx.opts.jobs, [&](long long k) {
        const auto f = prepare(clean, data, data.noise_percent, data.cx, data.ct, ctx.spec.seed + static_cast<std::uint64_t>(k));
        Out o;
        o.bee = bee_run(f, cfg, ls, tee_per_level);
        const auto& support = o.bee.final_result.model.support;
        if (!support.empty())
            for (Index l : ls) {
                const auto st = lasso_stage(f, cfg, l);
                try {
                    o.fitted.push_back(model_from_coefficients(st.system, support, least_squares_fit(st.system, support)));
                } catch (const NumericalError&) {
                    o.fitted.emplace_back();
                }
            }
        return o;
    });

    for (long long k = 0; k < ctx.spec.trials; ++k) {
        const auto& o = results[static_cast<std::size_t>(k)];
        const auto prov = ctx.trial_prov(k);
        const auto& names = o.bee.final_result.feature_names;

        std::vector<std::string> cols{"L", "relative_change"};
        for (const auto& n : names) cols.push_back(n);
        auto path = ctx.out("bee_magnitudes", ".csv", k);
        CsvWriter mags(path, prov, cols);
        for (std::size_t i = 0; i < o.bee.levels.size(); ++i) {
            const auto& lvl = o.bee.levels[i];
            std::vector<std::string> row{std::to_string(lvl.l), i ? format_double(o.bee.relative_change[i - 1]) : ""};
            for (Index j = 0; j < lvl.magnitudes.size(); ++j) row.push_back(format_double(lvl.magnitudes(j)));
            mags.row(row);
        }
        mags.close();
        ctx.written.push_back(path);

        if (tee_per_level) {
            path = ctx.out("bee_tee", ".csv", k);
            CsvWriter tee(path, prov, {"L", "support", "tee", "chosen"});
            for (const auto& lvl : o.bee.levels) {
                if (!lvl.tee) continue;
                for (std::size_t r = 0; r < lvl.tee->records.size(); ++r) {
                    const auto& rec = lvl.tee->records[r];
                    tee.row({std::to_string(lvl.l), support_label(rec.support, names), format_double(rec.tee),
                             lvl.tee->chosen && *lvl.tee->chosen == r ? "1" : "0"});
                }
            }
            tee.close();
            ctx.written.push_back(path);
        }

        path = ctx.out("bee_coefficient_error", ".csv", k);
        CsvWriter err(path, prov, {"L", "feature", "l1_error"});
        for (std::size_t i = 0; i < o.fitted.size(); ++i)
            for (const auto& [j, fn] : truth.varying) {
                const auto truth_fn = named_function<double>(fn);
                const double e = o.fitted[i].empty() ? std::numeric_limits<double>::infinity()
                                                     : coefficient_l1_error<double>(o.fitted[i], j, truth_fn);
                err.row({std::to_string(ls[i]), std::string(feature_name(j)), format_double(e)});
            }
        err.close();
        ctx.written.push_back(path);

        path = ctx.out("result", ".json", k);
        write_json(path, result_to_json(o.bee.final_result, prov));
        ctx.written.push_back(path);
    }
}

}  // namespace

IdentConfig ident_config_from(const Config& c) {
    IdentConfig cfg;
    auto bad = [&](const std::string& key, const std::string& msg) { return ConfigError("'" + key + "' " + msg, c.line_of(key)); };
    try {
        cfg.denoise = parse_denoise_method(c.get_string("ident.denoise", "none"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), c.line_of("ident.denoise"));
    }
    cfg.solver.lambda = c.get_double("ident.lambda", cfg.solver.lambda);
    cfg.solver.rho = c.get_double("ident.rho", cfg.solver.rho);
    cfg.solver.tol = c.get_double("ident.tol", cfg.solver.tol);
    const auto iters = c.get_int("ident.max_iters", cfg.solver.max_iters);
    if (!(cfg.solver.lambda >= 0)) throw bad("ident.lambda", "must be >= 0");
    if (!(cfg.solver.rho >= 0)) throw bad("ident.rho", "must be >= 0 (0 picks it automatically)");
    if (!(cfg.solver.tol > 0)) throw bad("ident.tol", "must be > 0");
    if (iters < 1) throw bad("ident.max_iters", "must be >= 1");
    cfg.solver.max_iters = static_cast<int>(iters);

    cfg.tau.value = c.get_double("ident.tau", cfg.tau.value);
    const std::string mode = c.get_string("ident.tau_mode", "relative");
    if (mode == "absolute") cfg.tau.relative = false;
    else if (mode != "relative") throw bad("ident.tau_mode", "must be relative or absolute");
    if (!(cfg.tau.value >= 0)) throw bad("ident.tau", "must be >= 0");

    const auto l = c.get_int("ident.basis_l", 1);
    if (l < 1) throw bad("ident.basis_l", "must be >= 1");
    cfg.basis_l = static_cast<Index>(l);

    const auto vary = c.get_list("ident.vary", std::vector<std::string>{"all"});
    if (vary.size() == 1 && vary[0] == "all") cfg.varying.clear();
    else {
        cfg.varying.assign(kFeatureCount, false);
        if (!(vary.size() == 1 && vary[0] == "none"))
            for (const auto& n : vary) cfg.varying[static_cast<std::size_t>(feature_or_throw(c, "ident.vary", n))] = true;
    }

    cfg.evolve.stability_factor = c.get_double("ident.stability_factor", cfg.evolve.stability_factor);
    cfg.evolve.blowup_threshold = c.get_double("ident.blowup_threshold", cfg.evolve.blowup_threshold);
    cfg.evolve.max_fine_steps = c.get_int("ident.max_fine_steps", cfg.evolve.max_fine_steps);
    try {
        validate(cfg.evolve);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), c.line_of("ident.stability_factor"));
    }
    const std::string weighting = c.get_string("ident.tee_weighting", "weighted");
    if (weighting == "sum") cfg.evolve.weighted_tee = false;
    else if (weighting != "weighted") throw bad("ident.tee_weighting", "must be weighted or sum");
    const std::string on = c.get_string("ident.tee_on", "denoised");
    if (on == "raw") cfg.tee_on_denoised = false;
    else if (on != "denoised") throw bad("ident.tee_on", "must be denoised or raw");
    const auto cap = c.get_int("ident.max_candidates", static_cast<long long>(cfg.max_candidates));
    if (cap < 1 || cap > 20) throw bad("ident.max_candidates", "must lie in [1, 20]");
    cfg.max_candidates = static_cast<std::size_t>(cap);
    return cfg;
}

std::vector<fs::path> run_experiment(const ExperimentSpec& spec, const RunOptions& opts) {
    const Config& c = spec.config;
    // Read everything up front so unknown keys fail before any work.
    c.get_string("experiment.kind");
    c.get_string("experiment.name", "");
    c.get_int("experiment.seed", 0);
    c.get_int("experiment.trials", 1);
    const DataPlan data = read_data(c, spec.base_dir);
    Context ctx{spec, opts, Provenance{spec.hash, spec.seed}, {}};

    fs::create_directories(opts.out_dir);
    switch (spec.kind) {
    case ExperimentKind::Simulate:
        c.reject_unused();
        run_simulate(ctx, data);
        break;
    case ExperimentKind::Identify: {
        const TruthPlan truth = read_truth(c);
        IdentConfig cfg = ident_config_from(c);
        cfg.jobs = opts.jobs;
        c.reject_unused();
        run_identify(ctx, data, truth, cfg);
        break;
    }
    case ExperimentKind::NoiseSweep: {
        const TruthPlan truth = read_truth(c);
        const IdentConfig cfg = ident_config_from(c);
        const auto levels = c.get_double_list("sweep.noise_percent");
        const auto methods = read_methods(c, cfg.denoise);
        c.reject_unused();
        for (double p : levels)
            if (!(p >= 0)) throw ConfigError("'sweep.noise_percent' entries must be >= 0", c.line_of("sweep.noise_percent"));
        std::vector<std::vector<double>> params;
        for (double p : levels) params.push_back({p});
        run_sweep(ctx, data, truth, cfg, {"noise_percent"}, params,
                  [&](const Field<double>& clean, const std::vector<double>& p, std::uint64_t seed) {
                      return prepare(clean, data, p[0], data.cx, data.ct, seed);
                  },
                  methods);
        break;
    }
    case ExperimentKind::DownsampleSweep: {
        if (data.cx != 1 || data.ct != 1)
            throw ConfigError("downsample_sweep sets the factors itself; drop data.downsample_x/t", c.line_of("data.downsample_x"));
        const TruthPlan truth = read_truth(c);
        const IdentConfig cfg = ident_config_from(c);
        const auto factors = c.get_double_list("sweep.factors");
        const std::string axis = c.get_string("sweep.axis", "both");
        const auto methods = read_methods(c, cfg.denoise);
        c.reject_unused();
        if (axis != "both" && axis != "x" && axis != "t") throw ConfigError("'sweep.axis' must be both, x or t", c.line_of("sweep.axis"));
        std::vector<std::vector<double>> params;
        for (double f : factors) {
            if (f != std::floor(f) || f < 1) throw ConfigError("'sweep.factors' entries must be positive integers", c.line_of("sweep.factors"));
            params.push_back({axis == "t" ? 1.0 : f, axis == "x" ? 1.0 : f});
        }
        run_sweep(ctx, data, truth, cfg, {"c_x", "c_t"}, params,
                  [&](const Field<double>& clean, const std::vector<double>& p, std::uint64_t seed) {
                      return prepare(clean, data, data.noise_percent, static_cast<Index>(p[0]), static_cast<Index>(p[1]), seed);
                  },
                  methods);
        break;
    }
    case ExperimentKind::GridLadder: {
        const IdentConfig cfg = ident_config_from(c);
        c.get_double_list("sweep.log2_dx");
        c.get_double("sweep.dt_ratio", 1.0);
        c.reject_unused();
        run_grid_ladder(ctx, c, data, cfg);
        break;
    }
    case ExperimentKind::Bee: {
        const TruthPlan truth = read_truth(c);
        IdentConfig cfg = ident_config_from(c);
        cfg.jobs = opts.jobs;
        c.get_double_list("sweep.l_values");
        c.get_bool("sweep.tee_per_level", false);
        c.reject_unused();
        run_bee(ctx, c, data, truth, cfg);
        break;
    }
    }
    return ctx.written;
}

}  // namespace identpde
