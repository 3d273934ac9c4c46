#pragma once

#include "identpde/grid.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

namespace identpde {

/// Solution of u_t + (u^2/2)_x = 0, u(x,0) = sin(4 pi x), before the shock
/// (t < 1/(4 pi)): the root of u = sin(4 pi (x - u t)) at every node, with the
/// boundary nodes held at 0.
template <typename Scalar>
Scalar burgers_characteristic_root(Scalar x, Scalar t) {
    const Scalar k = 4 * std::numbers::pi_v<Scalar>;
    auto g = [&](Scalar u) { return u - std::sin(k * (x - u * t)); };
    if (t == 0) return std::sin(k * x);
    // g is increasing on [-1, 1] before the shock and g(-1) <= 0 <= g(1).
    Scalar lo = -1, hi = 1;
    Scalar u = std::sin(k * x);
    for (int it = 0; it < 200; ++it) {
        const Scalar gu = g(u);
        if (std::abs(gu) <= Scalar(1e-15)) return u;
        if (gu < 0) lo = u;
        else hi = u;
        const Scalar dg = 1 + k * t * std::cos(k * (x - u * t));
        Scalar next = dg > 0 ? u - gu / dg : lo - 1;
        if (!(next > lo && next < hi)) next = (lo + hi) / 2;
        if (std::abs(next - u) <= Scalar(1e-16) * (1 + std::abs(u))) return next;
        u = next;
        if (hi - lo <= Scalar(1e-16)) return u;
    }
    if (std::abs(g(u)) <= Scalar(1e-12)) return u;
    throw NumericalError("burgers_analytic: root finder did not converge");
}

template <typename Scalar>
Field<Scalar> burgers_analytic(const Grid<Scalar>& grid) {
    const Scalar shock = 1 / (4 * std::numbers::pi_v<Scalar>);
    if (!(grid.t_max() < shock)) throw std::invalid_argument("burgers_analytic: requested times reach the shock at 1/(4 pi)");
    if (grid.t_min() < 0) throw std::invalid_argument("burgers_analytic: negative time");
    Field<Scalar> f = Field<Scalar>::zeros(grid);
    for (Index n = 0; n < grid.n_t(); ++n)
        for (Index i = 1; i + 1 < grid.n_x(); ++i) f.values(i, n) = burgers_characteristic_root(grid.x(i), grid.t(n));
    return f;
}

/// Spatial function named in configs: a registered name or a number.
/// Registered: zero, sinpi, sin4pi, sin4pi_sin8pi, diffusion_sin, minus_2x.
template <typename Scalar = double>
std::function<Scalar(Scalar)> named_function(const std::string& name) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    if (name == "zero") return [](Scalar) { return Scalar(0); };
    if (name == "sinpi") return [pi](Scalar x) { return std::sin(pi * x); };
    if (name == "sin4pi") return [pi](Scalar x) { return std::sin(4 * pi * x); };
    if (name == "sin4pi_sin8pi") return [pi](Scalar x) { return std::sin(4 * pi * x) + Scalar(0.5) * std::sin(8 * pi * x); };
    if (name == "diffusion_sin") return [pi](Scalar x) { return Scalar(0.05) + Scalar(0.2) * std::sin(pi * x); };
    if (name == "minus_2x") return [](Scalar x) { return -2 * x; };
    double value = 0;
    const char* end = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(name.data(), end, value);
    if (ec == std::errc() && ptr == end && !name.empty()) return [value](Scalar) { return static_cast<Scalar>(value); };
    throw std::invalid_argument("unknown function name '" + name + "'");
}

/// Explicit first-order simulation of
///   u_t + a (u^2/2)_x = b(x) u_x + c(x) u_xx,  u = 0 at both ends.
struct SimConfig {
    double fine_dx = 1.0 / 256;
    double fine_dt = 1.0 / 65536;
    double t_end = 0.1;
    double x_min = 0;
    double x_max = 1;
    int scheme_order = 1;
    std::string initial = "sin4pi";
    double convection = 1;            // a
    std::string advection = "zero";   // b(x)
    std::string diffusion = "zero";   // c(x)
};

/// Fine simulation grid: every fine node, every fine step up to t_end.
template <typename Scalar = double>
Grid<Scalar> fine_grid(const SimConfig& cfg) {
    if (!(cfg.fine_dx > 0) || !(cfg.fine_dt > 0) || !(cfg.t_end >= 0)) throw std::invalid_argument("simulation spacings must be positive");
    const auto nx = static_cast<Index>(std::llround((cfg.x_max - cfg.x_min) / cfg.fine_dx)) + 1;
    if (std::abs(static_cast<double>(nx - 1) * cfg.fine_dx - (cfg.x_max - cfg.x_min)) > 1e-9 * (cfg.x_max - cfg.x_min))
        throw std::invalid_argument("fine_dx does not divide the domain");
    const auto nt = static_cast<Index>(std::floor(cfg.t_end / cfg.fine_dt + 1e-9)) + 1;
    return Grid<Scalar>::with_spacing(static_cast<Scalar>(cfg.x_min), static_cast<Scalar>(cfg.fine_dx), nx, Scalar(0),
                                      static_cast<Scalar>(cfg.fine_dt), nt);
}

namespace detail {

inline Index integer_ratio(double coarse, double fine, const char* what) {
    const double r = coarse / fine;
    const auto k = static_cast<Index>(std::llround(r));
    if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-6 * r)
        throw std::invalid_argument(std::string("output ") + what + " is not an integer multiple of the fine spacing");
    return k;
}

// Godunov flux for the convex flux f(u) = u^2 / 2.
template <typename Scalar>
Scalar godunov_burgers(Scalar ul, Scalar ur) {
    const Scalar a = std::max(ul, Scalar(0));
    const Scalar b = std::min(ur, Scalar(0));
    return std::max(a * a, b * b) / 2;
}

}  // namespace detail

template <typename Scalar>
Field<Scalar> simulate_first_order(const SimConfig& cfg, const Grid<Scalar>& grid_out) {
    if (cfg.scheme_order != 1) throw std::invalid_argument("only the first-order scheme is available");
    if (!(cfg.convection >= 0)) throw std::invalid_argument("convection coefficient must be >= 0");
    const Grid<Scalar> fine = fine_grid<Scalar>(cfg);
    const Index cx = detail::integer_ratio(static_cast<double>(grid_out.dx()), cfg.fine_dx, "dx");
    const Index ct = detail::integer_ratio(static_cast<double>(grid_out.dt()), cfg.fine_dt, "dt");
    if (std::abs(static_cast<double>(grid_out.x_min()) - cfg.x_min) > 1e-12 || grid_out.t_min() != 0)
        throw std::invalid_argument("output grid must start at the simulation origin");
    if ((grid_out.n_x() - 1) * cx > fine.n_x() - 1) throw std::invalid_argument("output grid extends past the domain");
    const Index steps = (grid_out.n_t() - 1) * ct;
    if (static_cast<double>(steps) * cfg.fine_dt > cfg.t_end * (1 + 1e-9) + 1e-15)
        throw std::invalid_argument("output grid extends past t_end");

    const Index nx = fine.n_x();
    const auto u0 = named_function<Scalar>(cfg.initial);
    const auto bfun = named_function<Scalar>(cfg.advection);
    const auto cfun = named_function<Scalar>(cfg.diffusion);
    Vector<Scalar> u(nx), b(nx), c(nx);
    for (Index i = 0; i < nx; ++i) {
        u(i) = u0(fine.x(i));
        b(i) = bfun(fine.x(i));
        c(i) = cfun(fine.x(i));
    }
    u(0) = 0;
    u(nx - 1) = 0;
    if (!u.allFinite() || !b.allFinite() || !c.allFinite()) throw std::invalid_argument("simulation inputs are not finite");
    if (c.minCoeff() < 0) throw std::invalid_argument("diffusion coefficient must be >= 0");

    const auto dx = static_cast<Scalar>(cfg.fine_dx);
    const auto dt = static_cast<Scalar>(cfg.fine_dt);
    const Scalar speed = static_cast<Scalar>(cfg.convection) * u.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
    if (c.maxCoeff() > 0 && dt > dx * dx / (2 * c.maxCoeff()))
        throw std::invalid_argument("unstable: fine_dt exceeds fine_dx^2 / (2 max c)");
    if (dt * speed / dx + 2 * dt * c.maxCoeff() / (dx * dx) > 1 + 1e-12)
        throw std::invalid_argument("unstable: combined advection and diffusion step exceeds the explicit limit");

    Field<Scalar> out = Field<Scalar>::zeros(grid_out);
    auto record = [&](Index n) {
        for (Index i = 0; i < grid_out.n_x(); ++i) out.values(i, n) = u(i * cx);
    };
    record(0);
    const auto a = static_cast<Scalar>(cfg.convection);
    Vector<Scalar> flux(nx - 1), next(nx);
    for (Index s = 1; s <= steps; ++s) {
        if (a != 0)
            for (Index i = 0; i + 1 < nx; ++i) flux(i) = a * detail::godunov_burgers(u(i), u(i + 1));
        for (Index i = 1; i + 1 < nx; ++i) {
            Scalar rhs = 0;
            if (a != 0) rhs -= (flux(i) - flux(i - 1)) / dx;
            if (b(i) > 0) rhs += b(i) * (u(i + 1) - u(i)) / dx;
            else if (b(i) < 0) rhs += b(i) * (u(i) - u(i - 1)) / dx;
            if (c(i) != 0) rhs += c(i) * (u(i + 1) - 2 * u(i) + u(i - 1)) / (dx * dx);
            next(i) = u(i) + dt * rhs;
        }
        next(0) = 0;
        next(nx - 1) = 0;
        u.swap(next);
        if (!u.allFinite()) throw NumericalError("simulation produced non-finite values");
        if (s % ct == 0) record(s / ct);
    }
    return out;
}

/// Simulation sampled at every fine node and step.
template <typename Scalar = double>
Field<Scalar> simulate_first_order(const SimConfig& cfg) {
    return simulate_first_order<Scalar>(cfg, fine_grid<Scalar>(cfg));
}

}  // namespace identpde
