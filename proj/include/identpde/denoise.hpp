#pragma once

#include "identpde/grid.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace identpde {

enum class DenoiseMethod { None, LS, MA, LSMA };

/// Five-point moving average. The two nodes nearest each end average over the
/// part of the window that lies inside the sequence.
template <typename Scalar>
Vector<Scalar> moving_average_5(const Vector<Scalar>& d) {
    const Index n = d.size();
    if (n < 5) throw std::invalid_argument("moving average needs at least 5 samples");
    Vector<Scalar> out(n);
    for (Index i = 0; i < n; ++i) {
        const Index lo = std::max<Index>(0, i - 2);
        const Index hi = std::min<Index>(n - 1, i + 2);
        out(i) = d.segment(lo, hi - lo + 1).mean();
    }
    return out;
}

/// Linear map from a window of samples to the local quadratic
/// p(x) = a0 + a1 (x - x_i) + a2 (x - x_i)^2 in units of dx, so that
/// (a0, a1 dx, a2 dx^2) = map * d[first .. first + map.cols()).
template <typename Scalar>
struct LocalQuadraticFit {
    Index first = 0;
    Matrix<Scalar> map;  // 3 x window
};

namespace detail {

// Row of the window-averaged monomials [1, s, s^2] over [lo, hi], offsets from i.
template <typename Scalar>
Eigen::Matrix<Scalar, 1, 3> averaged_monomials(Index lo, Index hi, Index i) {
    Eigen::Matrix<Scalar, 1, 3> row = Eigen::Matrix<Scalar, 1, 3>::Zero();
    for (Index w = lo; w <= hi; ++w) {
        const auto s = static_cast<Scalar>(w - i);
        row += Eigen::Matrix<Scalar, 1, 3>(1, s, s * s);
    }
    return row / static_cast<Scalar>(hi - lo + 1);
}

// Least-squares solve of B c = R d for the linear map (B^T B)^{-1} B^T R.
template <typename Scalar>
Matrix<Scalar> normal_equation_map(const Matrix<Scalar>& design, const Matrix<Scalar>& rhs_map) {
    const Matrix<Scalar> gram = design.transpose() * design;
    Eigen::LDLT<Matrix<Scalar>> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= Scalar(1e-12) * ldlt.vectorD().maxCoeff())
        throw NumericalError("local quadratic fit: rank-deficient design");
    return ldlt.solve(design.transpose() * rhs_map);
}

}  // namespace detail

/// Fit used by each method at node i of an n-point slice. Windows shift inward
/// near the ends so that every moving average is taken over a full window;
/// slices too short for that fall back to clipped averages.
template <typename Scalar>
LocalQuadraticFit<Scalar> local_quadratic_fit(DenoiseMethod method, Index n, Index i) {
    if (n < 5) throw std::invalid_argument("denoising needs at least 5 samples per slice");
    if (i < 0 || i >= n) throw std::invalid_argument("fit index out of range");
    LocalQuadraticFit<Scalar> fit;
    switch (method) {
    case DenoiseMethod::None: {
        fit.first = i;
        fit.map = Matrix<Scalar>::Zero(3, 1);
        fit.map(0, 0) = 1;
        return fit;
    }
    case DenoiseMethod::LS: {
        const Index c = std::clamp<Index>(i, 2, n - 3);
        fit.first = c - 2;
        Matrix<Scalar> design(5, 3);
        for (Index k = 0; k < 5; ++k) design.row(k) = detail::averaged_monomials<Scalar>(c - 2 + k, c - 2 + k, i);
        fit.map = detail::normal_equation_map<Scalar>(design, Matrix<Scalar>::Identity(5, 5));
        return fit;
    }
    case DenoiseMethod::MA:
    case DenoiseMethod::LSMA: {
        const Index half = method == DenoiseMethod::MA ? 1 : 2;  // matched averages at c-half .. c+half
        const Index reach = half + 2;
        const Index c = n >= 2 * reach + 1 ? std::clamp<Index>(i, reach, n - 1 - reach)
                                           : std::clamp<Index>(i, half, n - 1 - half);
        const Index lo = std::max<Index>(0, c - reach);
        const Index hi = std::min<Index>(n - 1, c + reach);
        const Index rows = 2 * half + 1;
        Matrix<Scalar> design(rows, 3);
        Matrix<Scalar> rhs = Matrix<Scalar>::Zero(rows, hi - lo + 1);
        for (Index k = 0; k < rows; ++k) {
            const Index j = c - half + k;
            const Index wlo = std::max<Index>(0, j - 2);
            const Index whi = std::min<Index>(n - 1, j + 2);
            design.row(k) = detail::averaged_monomials<Scalar>(wlo, whi, i);
            rhs.block(k, wlo - lo, 1, whi - wlo + 1).setConstant(Scalar(1) / static_cast<Scalar>(whi - wlo + 1));
        }
        fit.first = lo;
        fit.map = detail::normal_equation_map<Scalar>(design, rhs);
        return fit;
    }
    }
    throw std::invalid_argument("unknown denoise method");
}

/// LSMA quadratic at node i: the quadratic whose five-point window averages
/// best match the data's moving averages at the five nearest centers.
/// Returns (a0, a1, a2) of a0 + a1 (x - x_i) + a2 (x - x_i)^2.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> lsma_fit(const std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>& d, Index i, Scalar dx) {
    auto fit = local_quadratic_fit<Scalar>(DenoiseMethod::LSMA, d.size(), i);
    Eigen::Matrix<Scalar, 3, 1> c = fit.map * d.segment(fit.first, fit.map.cols());
    c(1) /= dx;
    c(2) /= dx * dx;
    return c;
}

/// Replaces every time slice by its pointwise fitted values p(x_i).
template <typename Scalar>
Field<Scalar> denoise_field(const Field<Scalar>& f, DenoiseMethod method) {
    if (method == DenoiseMethod::None) return f;
    const Index n = f.grid.n_x();
    if (n < 5) throw std::invalid_argument("denoising needs n_x >= 5");
    std::vector<LocalQuadraticFit<Scalar>> fits;
    fits.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) fits.push_back(local_quadratic_fit<Scalar>(method, n, i));

    Field<Scalar> out = f;
    for (Index t = 0; t < f.grid.n_t(); ++t) {
        const auto slice = f.values.col(t);
        for (Index i = 0; i < n; ++i) {
            const auto& fit = fits[static_cast<std::size_t>(i)];
            out.values(i, t) = fit.map.row(0).dot(slice.segment(fit.first, fit.map.cols()));
        }
    }
    return out;
}

inline std::string to_string(DenoiseMethod m) {
    switch (m) {
    case DenoiseMethod::None: return "none";
    case DenoiseMethod::LS: return "ls";
    case DenoiseMethod::MA: return "ma";
    case DenoiseMethod::LSMA: return "lsma";
    }
    return "none";
}

inline DenoiseMethod parse_denoise_method(const std::string& s) {
    if (s == "none") return DenoiseMethod::None;
    if (s == "ls") return DenoiseMethod::LS;
    if (s == "ma") return DenoiseMethod::MA;
    if (s == "lsma") return DenoiseMethod::LSMA;
    throw std::invalid_argument("unknown denoise method '" + s + "'");
}

}  // namespace identpde
