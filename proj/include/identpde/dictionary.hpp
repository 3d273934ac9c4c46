#pragma once

#include "identpde/derivatives.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace identpde {

/// Dictionary of candidate right-hand-side terms, in column order.
enum class Feature : int { One = 0, U, U2, Ux, Ux2, UUx, Uxx, Uxx2, UUxx, UxUxx };

inline constexpr int kFeatureCount = 10;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "1", "u", "u^2", "u_x", "u_x^2", "u*u_x", "u_xx", "u_xx^2", "u*u_xx", "u_x*u_xx"};

inline std::string_view feature_name(int j) { return kFeatureNames.at(static_cast<std::size_t>(j)); }

inline std::optional<int> feature_index(std::string_view name) {
    for (int j = 0; j < kFeatureCount; ++j)
        if (kFeatureNames[static_cast<std::size_t>(j)] == name) return j;
    return std::nullopt;
}

/// Highest spatial derivative a feature involves.
inline int feature_derivative_order(int j) {
    switch (static_cast<Feature>(j)) {
    case Feature::One:
    case Feature::U:
    case Feature::U2: return 0;
    case Feature::Ux:
    case Feature::Ux2:
    case Feature::UUx: return 1;
    default: return 2;
    }
}

/// Feature j evaluated pointwise from u, u_x, u_xx.
template <typename Scalar>
inline Scalar feature_value(int j, Scalar u, Scalar ux, Scalar uxx) {
    switch (static_cast<Feature>(j)) {
    case Feature::One: return 1;
    case Feature::U: return u;
    case Feature::U2: return u * u;
    case Feature::Ux: return ux;
    case Feature::Ux2: return ux * ux;
    case Feature::UUx: return u * ux;
    case Feature::Uxx: return uxx;
    case Feature::Uxx2: return uxx * uxx;
    case Feature::UUxx: return u * uxx;
    case Feature::UxUxx: return ux * uxx;
    }
    return 0;
}

/// Continuous piecewise-linear hat functions on L uniform nodes spanning
/// [x_min, x_max] (both ends included). L = 1 is the constant function 1.
template <typename Scalar = double>
class FemBasis {
public:
    FemBasis() = default;
    FemBasis(Index count, Scalar x_min, Scalar x_max) : count_(count), x_min_(x_min), x_max_(x_max) {
        if (count < 1) throw std::invalid_argument("FEM basis needs L >= 1");
        if (!(x_max > x_min)) throw std::invalid_argument("FEM basis needs x_max > x_min");
    }

    Index size() const { return count_; }
    Scalar x_min() const { return x_min_; }
    Scalar x_max() const { return x_max_; }
    Scalar spacing() const { return count_ > 1 ? (x_max_ - x_min_) / static_cast<Scalar>(count_ - 1) : x_max_ - x_min_; }
    Scalar node(Index l) const { return x_min_ + static_cast<Scalar>(l) * spacing(); }

    /// phi_l(x), l zero-based.
    Scalar eval(Index l, Scalar x) const {
        if (l < 0 || l >= count_) throw std::invalid_argument("basis index out of range");
        const Scalar slack = Scalar(1e-9) * (x_max_ - x_min_);
        if (x < x_min_ - slack || x > x_max_ + slack) throw std::invalid_argument("x outside the basis domain");
        if (count_ == 1) return 1;
        if ((l > 0 && x <= node(l - 1)) || (l + 1 < count_ && x >= node(l + 1))) return 0;
        const Scalar r = std::abs(x - node(l)) / spacing();
        return r < 1 ? 1 - r : 0;
    }

    /// Sum_l coeffs(l) phi_l(x).
    Scalar combine(const Eigen::Ref<const Vector<Scalar>>& coeffs, Scalar x) const {
        if (coeffs.size() != count_) throw std::invalid_argument("coefficient count does not match basis");
        if (count_ == 1) return coeffs(0);
        const Scalar h = spacing();
        const Scalar s = std::clamp((x - x_min_) / h, Scalar(0), static_cast<Scalar>(count_ - 1));
        const Index l = std::min<Index>(static_cast<Index>(s), count_ - 2);
        const Scalar w = s - static_cast<Scalar>(l);
        return (1 - w) * coeffs(l) + w * coeffs(l + 1);
    }

    /// Exact integral of |Sum_l coeffs(l) phi_l| over the domain.
    Scalar abs_integral(const Eigen::Ref<const Vector<Scalar>>& coeffs) const {
        if (coeffs.size() != count_) throw std::invalid_argument("coefficient count does not match basis");
        if (count_ == 1) return std::abs(coeffs(0)) * (x_max_ - x_min_);
        const Scalar h = spacing();
        Scalar total = 0;
        for (Index l = 0; l + 1 < count_; ++l) {
            const Scalar a = coeffs(l), b = coeffs(l + 1);
            if (a * b >= 0) total += h * (std::abs(a) + std::abs(b)) / 2;
            else total += h * (a * a + b * b) / (2 * (std::abs(a) + std::abs(b)));
        }
        return total;
    }

    bool operator==(const FemBasis&) const = default;

private:
    Index count_ = 1;
    Scalar x_min_ = 0;
    Scalar x_max_ = 1;
};

/// Norms of one column of the feature matrix.
template <typename Scalar>
struct ColumnNorms {
    Scalar max = 0;
    Scalar l1 = 0;
    Scalar l2 = 0;
    Scalar function_l1 = 0;  // weighted by dx dt
    Scalar function_l2 = 0;

    static ColumnNorms of(const Eigen::Ref<const Vector<Scalar>>& c, Scalar cell) {
        ColumnNorms n;
        n.max = c.size() ? c.cwiseAbs().maxCoeff() : Scalar(0);
        n.l1 = c.cwiseAbs().sum();
        n.l2 = c.norm();
        n.function_l1 = n.l1 * cell;
        n.function_l2 = n.l2 * std::sqrt(cell);
        return n;
    }
};

template <typename Scalar>
struct ColumnMeta {
    int feature = 0;
    Index basis = 0;
    ColumnNorms<Scalar> norms;
};

/// Empirical regression system  matrix * a ~ b_hat. Each feature owns a
/// contiguous block of columns: one per FEM basis function when its
/// coefficient may vary in space, a single column otherwise.
template <typename Scalar = double>
struct FeatureSystem {
    Grid<Scalar> grid;
    FemBasis<Scalar> basis;
    Matrix<Scalar> matrix;
    Vector<Scalar> b_hat;
    std::vector<ColumnMeta<Scalar>> columns;
    std::vector<std::string> feature_names;
    std::vector<Index> block_offset;  // first column of each feature's block
    std::vector<Index> block_size;
    // Constant-coefficient feature columns F[j] and their norms.
    Matrix<Scalar> feature_values;
    std::vector<ColumnNorms<Scalar>> feature_norms;
    Index first_time = 1;  // source time index of the first row block

    Index n_features() const { return static_cast<Index>(block_size.size()); }
    Index n_rows() const { return matrix.rows(); }
    Index n_cols() const { return matrix.cols(); }
    Scalar cell() const { return grid.dx() * grid.dt(); }
    bool varies(Index j) const { return block_size[static_cast<std::size_t>(j)] > 1; }

    /// Columns of the given features' blocks, in increasing order.
    std::vector<Index> block_columns(const std::vector<int>& features) const {
        std::vector<Index> cols;
        for (int j : features)
            for (Index k = 0; k < block_size[static_cast<std::size_t>(j)]; ++k)
                cols.push_back(block_offset[static_cast<std::size_t>(j)] + k);
        return cols;
    }
};

namespace detail {

template <typename Scalar>
void finalize_blocks(FeatureSystem<Scalar>& sys) {
    sys.block_offset.assign(sys.block_size.size(), 0);
    Index off = 0;
    for (std::size_t j = 0; j < sys.block_size.size(); ++j) {
        sys.block_offset[j] = off;
        off += sys.block_size[j];
    }
    const Scalar cell = sys.cell();
    sys.columns.resize(static_cast<std::size_t>(sys.matrix.cols()));
    for (std::size_t j = 0; j < sys.block_size.size(); ++j)
        for (Index k = 0; k < sys.block_size[j]; ++k) {
            const Index c = sys.block_offset[j] + k;
            sys.columns[static_cast<std::size_t>(c)] = {static_cast<int>(j), k, ColumnNorms<Scalar>::of(sys.matrix.col(c), cell)};
        }
    sys.feature_norms.clear();
    for (Index j = 0; j < sys.feature_values.cols(); ++j)
        sys.feature_norms.push_back(ColumnNorms<Scalar>::of(sys.feature_values.col(j), cell));
}

}  // namespace detail

/// Builds the feature system from data and its derivatives. Rows run over the
/// times with a backward-difference u_t (n >= 1), space fastest.
/// `varying[j]` selects an FEM block for feature j; empty means all vary.
template <typename Scalar>
FeatureSystem<Scalar> build_feature_system(const Field<Scalar>& u, const FemBasis<Scalar>& basis,
                                           const Derivatives<Scalar>& d, std::vector<bool> varying = {}) {
    const Grid<Scalar>& g = u.grid;
    if (!(d.ut.grid == g) || !(d.ux.grid == g) || !(d.uxx.grid == g))
        throw std::invalid_argument("derivative fields are not on the data grid");
    if (d.ux.values.rows() != g.n_x() || d.ux.values.cols() != g.n_t() || d.uxx.values.rows() != g.n_x() ||
        d.uxx.values.cols() != g.n_t() || d.ut.values.rows() != g.n_x())
        throw std::invalid_argument("derivative field shape mismatch");
    if (d.ut.last_time() != g.n_t() - 1) throw std::invalid_argument("u_t does not end at the last sample");
    if (varying.empty()) varying.assign(kFeatureCount, true);
    if (varying.size() != static_cast<std::size_t>(kFeatureCount))
        throw std::invalid_argument("varying mask must have one entry per feature");

    const Index nx = g.n_x();
    const Index t0 = d.ut.first_time();
    const Index nt = g.n_t() - t0;
    const Index rows = nx * nt;

    FeatureSystem<Scalar> sys;
    sys.grid = g;
    sys.basis = basis;
    sys.first_time = t0;
    sys.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
    sys.feature_values.resize(rows, kFeatureCount);
    sys.b_hat.resize(rows);
    for (Index n = 0; n < nt; ++n)
        for (Index i = 0; i < nx; ++i) {
            const Index r = n * nx + i;
            const Scalar uu = u.values(i, n + t0), ux = d.ux.values(i, n + t0), uxx = d.uxx.values(i, n + t0);
            for (int j = 0; j < kFeatureCount; ++j) sys.feature_values(r, j) = feature_value(j, uu, ux, uxx);
            sys.b_hat(r) = d.ut.values(i, n);
        }

    const Index L = basis.size();
    Matrix<Scalar> phi(nx, L);  // phi_l at each node
    for (Index i = 0; i < nx; ++i)
        for (Index l = 0; l < L; ++l) phi(i, l) = basis.eval(l, g.x(i));

    sys.block_size.resize(kFeatureCount);
    Index cols = 0;
    for (int j = 0; j < kFeatureCount; ++j) {
        sys.block_size[static_cast<std::size_t>(j)] = varying[static_cast<std::size_t>(j)] ? L : 1;
        cols += sys.block_size[static_cast<std::size_t>(j)];
    }
    sys.matrix.resize(rows, cols);
    Index c = 0;
    for (int j = 0; j < kFeatureCount; ++j) {
        if (sys.block_size[static_cast<std::size_t>(j)] == 1) {
            sys.matrix.col(c++) = sys.feature_values.col(j);
            continue;
        }
        for (Index l = 0; l < L; ++l, ++c)
            for (Index n = 0; n < nt; ++n)
                sys.matrix.col(c).segment(n * nx, nx) =
                    sys.feature_values.col(j).segment(n * nx, nx).cwiseProduct(phi.col(l));
    }
    detail::finalize_blocks(sys);
    return sys;
}

/// Wraps an arbitrary matrix as a constant-coefficient system, one column per
/// feature. dx and dt only enter the function norms.
template <typename Scalar>
FeatureSystem<Scalar> make_feature_system(Matrix<Scalar> matrix, Vector<Scalar> b, Scalar dx, Scalar dt) {
    if (matrix.rows() != b.size()) throw std::invalid_argument("matrix and right-hand side disagree in rows");
    FeatureSystem<Scalar> sys;
    sys.grid = Grid<Scalar>::with_spacing(Scalar(0), dx, 1, Scalar(0), dt, 1);
    sys.basis = FemBasis<Scalar>(1, Scalar(0), Scalar(1));
    sys.feature_values = matrix;
    sys.matrix = std::move(matrix);
    sys.b_hat = std::move(b);
    sys.block_size.assign(static_cast<std::size_t>(sys.matrix.cols()), 1);
    for (Index j = 0; j < sys.matrix.cols(); ++j) sys.feature_names.push_back("c" + std::to_string(j + 1));
    detail::finalize_blocks(sys);
    return sys;
}

template <typename Scalar = double>
struct CoherenceReport {
    Matrix<Scalar> pairwise;  // |<c_j, c_l>| / (|c_j| |c_l|)
    Scalar mu = 0;
    std::vector<Index> zero_columns;
};

/// Pairwise coherence of the columns of a matrix. Zero columns get a zero row
/// and column and are reported.
template <typename Derived>
CoherenceReport<typename Derived::Scalar> mutual_coherence(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    const Index p = m.cols();
    Vector<Scalar> norms = m.colwise().norm().transpose();
    Matrix<Scalar> unit = m;
    CoherenceReport<Scalar> rep;
    for (Index j = 0; j < p; ++j) {
        if (norms(j) > 0) unit.col(j) /= norms(j);
        else {
            unit.col(j).setZero();
            rep.zero_columns.push_back(j);
        }
    }
    rep.pairwise = (unit.transpose() * unit).cwiseAbs();
    for (Index j = 0; j < p; ++j) {
        if (norms(j) > 0) rep.pairwise(j, j) = 1;
        for (Index l = 0; l < p; ++l) rep.pairwise(j, l) = std::min<Scalar>(rep.pairwise(j, l), 1);
    }
    rep.mu = 0;
    for (Index j = 0; j < p; ++j)
        for (Index l = 0; l < p; ++l)
            if (j != l) rep.mu = std::max(rep.mu, rep.pairwise(j, l));
    return rep;
}

template <typename Scalar>
CoherenceReport<Scalar> mutual_coherence(const FeatureSystem<Scalar>& sys) {
    return mutual_coherence(sys.matrix);
}

/// ||F a - b||_{L2} / min_{a_j != 0} ||F[j]||_{L2} |a_j| on the constant-coefficient features.
template <typename Scalar>
Scalar noise_to_signal_ratio(const FeatureSystem<Scalar>& sys, const std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>& a_true) {
    if (a_true.size() != sys.feature_values.cols())
        throw std::invalid_argument("coefficient vector length does not match the feature count");
    Scalar signal = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < a_true.size(); ++j)
        if (a_true(j) != 0)
            signal = std::min(signal, sys.feature_norms[static_cast<std::size_t>(j)].function_l2 * std::abs(a_true(j)));
    if (!std::isfinite(signal)) throw std::invalid_argument("NSR needs at least one nonzero coefficient");
    const Scalar noise = (sys.feature_values * a_true - sys.b_hat).norm() * std::sqrt(sys.cell());
    return noise / signal;
}

}  // namespace identpde
