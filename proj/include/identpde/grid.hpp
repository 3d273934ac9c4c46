#pragma once

#include "identpde/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace identpde {

/// Uniform 1-D space-time lattice. Node i sits at x_min + i*dx, sample n at
/// t_min + n*dt (both zero-based).
template <typename Scalar = double>
class Grid {
public:
    Grid() = default;

    Grid(Scalar x_min, Scalar x_max, Index n_x, Scalar t_min, Scalar dt, Index n_t)
        : x_min_(x_min), x_max_(x_max), t_min_(t_min), dt_(dt), n_x_(n_x), n_t_(n_t) {
        if (n_x < 1 || n_t < 1) throw std::invalid_argument("grid needs n_x >= 1 and n_t >= 1");
        if (!(dt > 0)) throw std::invalid_argument("grid needs dt > 0");
        if (n_x > 1) {
            if (!(x_max > x_min)) throw std::invalid_argument("grid needs x_max > x_min");
            dx_ = (x_max - x_min) / static_cast<Scalar>(n_x - 1);
        } else {
            dx_ = x_max > x_min ? x_max - x_min : Scalar(1);
        }
    }

    /// Grid with n_x nodes spaced dx apart starting at x_min.
    static Grid with_spacing(Scalar x_min, Scalar dx, Index n_x, Scalar t_min, Scalar dt, Index n_t) {
        if (!(dx > 0)) throw std::invalid_argument("grid needs dx > 0");
        Grid g(x_min, x_min + dx * static_cast<Scalar>(n_x - 1), n_x, t_min, dt, n_t);
        g.dx_ = dx;
        return g;
    }

    /// Restores a grid exactly from its stored parameters.
    static Grid from_parts(Scalar x_min, Scalar x_max, Scalar dx, Index n_x, Scalar t_min, Scalar dt, Index n_t) {
        Grid g(x_min, x_max > x_min ? x_max : x_min + dx, std::max<Index>(n_x, 1), t_min, dt, n_t);
        if (!(dx > 0)) throw std::invalid_argument("grid needs dx > 0");
        g.x_max_ = x_max;
        g.dx_ = dx;
        return g;
    }

    Scalar x_min() const { return x_min_; }
    Scalar x_max() const { return x_max_; }
    Scalar t_min() const { return t_min_; }
    Scalar dx() const { return dx_; }
    Scalar dt() const { return dt_; }
    Index n_x() const { return n_x_; }
    Index n_t() const { return n_t_; }

    Scalar x(Index i) const { return x_min_ + static_cast<Scalar>(i) * dx_; }
    Scalar t(Index n) const { return t_min_ + static_cast<Scalar>(n) * dt_; }
    Scalar t_max() const { return t(n_t_ - 1); }

    Vector<Scalar> nodes() const {
        Vector<Scalar> xs(n_x_);
        for (Index i = 0; i < n_x_; ++i) xs(i) = x(i);
        return xs;
    }

    bool operator==(const Grid&) const = default;

private:
    Scalar x_min_ = 0;
    Scalar x_max_ = 1;
    Scalar t_min_ = 0;
    Scalar dx_ = 1;
    Scalar dt_ = 1;
    Index n_x_ = 1;
    Index n_t_ = 1;
};

/// Samples u_i^n on a grid. Column n is the spatial slice at time t_n.
template <typename Scalar = double>
struct Field {
    Grid<Scalar> grid;
    Matrix<Scalar> values;

    Field() = default;
    Field(Grid<Scalar> g, Matrix<Scalar> v) : grid(std::move(g)), values(std::move(v)) {
        if (values.rows() != grid.n_x() || values.cols() != grid.n_t())
            throw std::invalid_argument("field values do not match grid dimensions");
    }

    static Field zeros(const Grid<Scalar>& g) { return Field(g, Matrix<Scalar>::Zero(g.n_x(), g.n_t())); }

    /// Evaluates f(x, t) at every node.
    template <typename Fn>
    static Field sample(const Grid<Scalar>& g, Fn&& f) {
        Matrix<Scalar> v(g.n_x(), g.n_t());
        for (Index n = 0; n < g.n_t(); ++n)
            for (Index i = 0; i < g.n_x(); ++i) v(i, n) = f(g.x(i), g.t(n));
        return Field(g, std::move(v));
    }

    bool all_finite() const { return values.allFinite(); }
};

template <typename Scalar>
void require_finite(const Field<Scalar>& f, const char* what) {
    if (!f.all_finite()) throw std::invalid_argument(std::string(what) + ": field has non-finite entries");
}

/// Unweighted vector norm (sum |f|^p)^(1/p).
template <typename Scalar>
Scalar vector_lp_norm(const Field<Scalar>& f, Scalar p) {
    if (!(p > 0) || !std::isfinite(p)) throw std::invalid_argument("lp norm needs 0 < p < inf");
    require_finite(f, "vector_lp_norm");
    return std::pow(f.values.array().abs().pow(p).sum(), Scalar(1) / p);
}

/// Grid-weighted norm (sum |f|^p dx dt)^(1/p) = vector_lp_norm * (dx dt)^(1/p).
template <typename Scalar>
Scalar function_lp_norm(const Field<Scalar>& f, Scalar p) {
    if (!(p > 0) || !std::isfinite(p)) throw std::invalid_argument("lp norm needs 0 < p < inf");
    require_finite(f, "function_lp_norm");
    const Scalar cell = f.grid.dx() * f.grid.dt();
    return std::pow(f.values.array().abs().pow(p).sum() * cell, Scalar(1) / p);
}

struct NoiseSpec {
    double percent = 0;
    std::uint64_t seed = 0;
};

/// sigma = (P/100) * ||u||_2 / sqrt(N1 N2).
template <typename Scalar>
Scalar noise_sigma(const Field<Scalar>& f, double percent) {
    const auto count = static_cast<Scalar>(f.values.size());
    return static_cast<Scalar>(percent / 100.0) * f.values.norm() / std::sqrt(count);
}

/// Adds i.i.d. N(0, sigma^2) noise drawn from std::mt19937_64(seed), filled in
/// storage order (slice by slice, space fastest).
template <typename Scalar>
Field<Scalar> add_noise(const Field<Scalar>& f, const NoiseSpec& spec) {
    if (!(spec.percent >= 0)) throw std::invalid_argument("noise percent must be >= 0");
    require_finite(f, "add_noise");
    if (spec.percent == 0) return f;
    const Scalar sigma = noise_sigma(f, spec.percent);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<Scalar> normal(Scalar(0), sigma);
    Field<Scalar> out = f;
    Scalar* data = out.values.data();
    for (Index k = 0; k < out.values.size(); ++k) data[k] += normal(rng);
    return out;
}

struct DownsampleSpec {
    Index c_x = 1;
    Index c_t = 1;
};

/// Keeps every c-th sample per axis starting from the first one.
template <typename Scalar>
Field<Scalar> downsample(const Field<Scalar>& f, const DownsampleSpec& spec) {
    if (spec.c_x < 1 || spec.c_t < 1) throw std::invalid_argument("downsample factors must be >= 1");
    const Grid<Scalar>& g = f.grid;
    auto kept = [](Index n, Index c, const char* axis) {
        if (c == 1) return n;
        if (c > n - 1)
            throw std::invalid_argument(std::string("downsample factor exceeds ") + axis + " axis length");
        return (n - 1) / c + 1;
    };
    const Index nx = kept(g.n_x(), spec.c_x, "spatial");
    const Index nt = kept(g.n_t(), spec.c_t, "time");
    if (spec.c_x == 1 && spec.c_t == 1) return f;

    Matrix<Scalar> v(nx, nt);
    for (Index n = 0; n < nt; ++n)
        for (Index i = 0; i < nx; ++i) v(i, n) = f.values(i * spec.c_x, n * spec.c_t);
    auto grid = Grid<Scalar>::with_spacing(g.x_min(), g.dx() * static_cast<Scalar>(spec.c_x), nx, g.t_min(),
                                           g.dt() * static_cast<Scalar>(spec.c_t), nt);
    return Field<Scalar>(grid, std::move(v));
}

}  // namespace identpde
