#pragma once

#include "identpde/grid.hpp"

#include <algorithm>
#include <array>
#include <span>
#include <vector>

namespace identpde {

enum class DerivativeKind { Ut, Ux, Uxx };

/// Finite-difference estimate of a derivative of a Field. Column k holds the
/// estimate at source time index k + time_offset.
template <typename Scalar = double>
struct DerivativeField {
    Grid<Scalar> grid;
    Matrix<Scalar> values;
    DerivativeKind kind = DerivativeKind::Ux;
    Index time_offset = 0;

    Index first_time() const { return time_offset; }
    Index last_time() const { return time_offset + values.cols() - 1; }
};

/// (u^n - u^{n-1}) / dt, defined for n = 1 .. n_t - 1.
template <typename Scalar>
DerivativeField<Scalar> backward_time_derivative(const Field<Scalar>& f) {
    if (f.grid.n_t() < 2) throw std::invalid_argument("backward time derivative needs n_t >= 2");
    const Index nt = f.grid.n_t();
    DerivativeField<Scalar> out;
    out.grid = f.grid;
    out.kind = DerivativeKind::Ut;
    out.time_offset = 1;
    out.values = (f.values.rightCols(nt - 1) - f.values.leftCols(nt - 1)) / f.grid.dt();
    return out;
}

namespace detail {

// Fornberg's recursion: weights for derivatives 0..max_order at z on the given nodes.
template <typename Scalar, std::size_t N>
std::array<std::array<Scalar, N>, 3> fd_weights(Scalar z, const std::array<Scalar, N>& xs) {
    constexpr int m = 2;
    std::array<std::array<Scalar, N>, 3> c{};
    Scalar c1 = 1;
    Scalar c4 = xs[0] - z;
    c[0][0] = 1;
    for (std::size_t i = 1; i < N; ++i) {
        const int mn = std::min<int>(static_cast<int>(i), m);
        Scalar c2 = 1;
        const Scalar c5 = c4;
        c4 = xs[i] - z;
        for (std::size_t j = 0; j < i; ++j) {
            const Scalar c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (static_cast<Scalar>(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - static_cast<Scalar>(k) * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

// Unit-spacing weights of the degree-4 interpolant's first and second
// derivative, indexed by [order-1][position of x_i in the stencil][node].
template <typename Scalar>
const std::array<std::array<std::array<Scalar, 5>, 5>, 2>& eno_weights() {
    static const auto table = [] {
        std::array<std::array<std::array<Scalar, 5>, 5>, 2> w{};
        const std::array<Scalar, 5> nodes{0, 1, 2, 3, 4};
        for (int s = 0; s < 5; ++s) {
            auto c = fd_weights<Scalar, 5>(static_cast<Scalar>(s), nodes);
            w[0][s] = c[1];
            w[1][s] = c[2];
        }
        return w;
    }();
    return table;
}

}  // namespace detail

/// Left end of the 5-point ENO stencil for every node of a slice. Starting from
/// {x_i}, the stencil grows by one point at a time toward the side whose next
/// undivided difference is smaller in magnitude (ties go left); near the ends
/// it grows toward the only available side.
template <typename Scalar>
void eno_stencils(std::span<const Scalar> u, std::span<Index> left) {
    const auto n = static_cast<Index>(u.size());
    // diff[k][j]: k-th forward difference starting at j.
    std::array<std::vector<Scalar>, 5> diff;
    diff[0].assign(u.begin(), u.end());
    for (int k = 1; k <= 4; ++k) {
        diff[k].resize(static_cast<std::size_t>(n - k));
        for (Index j = 0; j + k < n; ++j) diff[k][j] = diff[k - 1][j + 1] - diff[k - 1][j];
    }
    for (Index i = 0; i < n; ++i) {
        Index l = i, r = i;
        for (int k = 1; k <= 4; ++k) {
            const bool can_left = l > 0;
            const bool can_right = r < n - 1;
            bool go_left;
            if (can_left && can_right) go_left = std::abs(diff[k][l - 1]) <= std::abs(diff[k][l]);
            else go_left = can_left;
            if (go_left) --l;
            else ++r;
        }
        left[i] = l;
    }
}

/// ENO first and second derivatives of one spatial slice. Either output may be
/// empty to skip it.
template <typename Scalar>
void eno_slice(std::span<const Scalar> u, Scalar dx, std::span<Scalar> ux, std::span<Scalar> uxx) {
    const auto n = static_cast<Index>(u.size());
    if (n < 5) throw std::invalid_argument("ENO derivative needs at least 5 spatial points");
    std::vector<Index> left(static_cast<std::size_t>(n));
    eno_stencils<Scalar>(u, left);
    const auto& w = detail::eno_weights<Scalar>();
    const Scalar inv_dx = Scalar(1) / dx;
    const Scalar inv_dx2 = inv_dx * inv_dx;
    for (Index i = 0; i < n; ++i) {
        const Index l = left[i];
        const auto s = static_cast<std::size_t>(i - l);
        // weights sum to zero, so differences against u_i give exact zeros on constants
        Scalar d1 = 0, d2 = 0;
        for (std::size_t k = 0; k < 5; ++k) {
            const Scalar du = u[l + k] - u[i];
            d1 += w[0][s][k] * du;
            d2 += w[1][s][k] * du;
        }
        if (!ux.empty()) ux[i] = d1 * inv_dx;
        if (!uxx.empty()) uxx[i] = d2 * inv_dx2;
    }
}

/// Spatial derivative (order 1 or 2) of every time slice by 5-point ENO.
template <typename Scalar>
DerivativeField<Scalar> eno_spatial_derivative(const Field<Scalar>& f, int order) {
    if (order != 1 && order != 2) throw std::invalid_argument("ENO derivative order must be 1 or 2");
    if (f.grid.n_x() < 5) throw std::invalid_argument("ENO derivative needs n_x >= 5");
    require_finite(f, "eno_spatial_derivative");
    DerivativeField<Scalar> out;
    out.grid = f.grid;
    out.kind = order == 1 ? DerivativeKind::Ux : DerivativeKind::Uxx;
    out.values.resize(f.grid.n_x(), f.grid.n_t());
    const auto nx = static_cast<std::size_t>(f.grid.n_x());
    for (Index n = 0; n < f.grid.n_t(); ++n) {
        std::span<const Scalar> slice(f.values.col(n).data(), nx);
        std::span<Scalar> dst(out.values.col(n).data(), nx);
        if (order == 1) eno_slice<Scalar>(slice, f.grid.dx(), dst, {});
        else eno_slice<Scalar>(slice, f.grid.dx(), {}, dst);
    }
    return out;
}

/// u_t, u_x and u_xx of a field, as consumed by the feature builder.
template <typename Scalar = double>
struct Derivatives {
    DerivativeField<Scalar> ut;
    DerivativeField<Scalar> ux;
    DerivativeField<Scalar> uxx;
};

template <typename Scalar>
Derivatives<Scalar> compute_derivatives(const Field<Scalar>& f) {
    return {backward_time_derivative(f), eno_spatial_derivative(f, 1), eno_spatial_derivative(f, 2)};
}

}  // namespace identpde
