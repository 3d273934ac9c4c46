#include "identpde/dictionary.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace identpde;

TEST(FemBasis, HatValues) {
    FemBasis<double> b(6, 0.0, 1.0);
    for (Index l = 0; l < 6; ++l) {
        EXPECT_DOUBLE_EQ(b.eval(l, b.node(l)), 1.0);
        if (l > 0) EXPECT_DOUBLE_EQ(b.eval(l, b.node(l - 1)), 0.0);
        if (l < 5) {
            EXPECT_DOUBLE_EQ(b.eval(l, b.node(l + 1)), 0.0);
            const double mid = (b.node(l) + b.node(l + 1)) / 2;
            EXPECT_NEAR(b.eval(l, mid), 0.5, 1e-15);
            EXPECT_NEAR(b.eval(l + 1, mid), 0.5, 1e-15);
        }
    }
    EXPECT_THROW(b.eval(6, 0.5), std::invalid_argument);
    EXPECT_THROW(b.eval(0, 1.5), std::invalid_argument);
}

TEST(FemBasis, PartitionOfUnity) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> x(-0.3, 2.1);
    for (Index L : {1, 2, 7, 20}) {
        FemBasis<double> b(L, -0.3, 2.1);
        for (int k = 0; k < 100; ++k) {
            const double s = x(rng);
            double sum = 0;
            for (Index l = 0; l < L; ++l) sum += b.eval(l, s);
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(FemBasis, InterpolationError) {
    // Nodal interpolation of a smooth coefficient converges like 1/L^2, which
    // more than meets the 1/L rate.
    const auto c = [](double x) { return 0.05 + 0.2 * std::sin(M_PI * x); };
    auto l1_error = [&](Index L) {
        FemBasis<double> b(L, 0.0, 1.0);
        Vector<double> nodes(L);
        for (Index l = 0; l < L; ++l) nodes(l) = c(b.node(l));
        const int m = 20000;
        double e = 0;
        for (int k = 0; k < m; ++k) {
            const double x = (k + 0.5) / m;
            e += std::abs(c(x) - b.combine(nodes, x)) / m;
        }
        return e;
    };
    for (Index L : {5, 10, 20}) EXPECT_GE(l1_error(L) / l1_error(2 * L), 1.5) << "L = " << L;
}

TEST(FemBasis, AbsIntegral) {
    FemBasis<double> b(3, 0.0, 2.0);
    Vector<double> c(3);
    c << 1, -1, 1;
    EXPECT_NEAR(b.abs_integral(c), 1.0, 1e-15);  // four triangles of area 1/4
}

namespace {

Field<double> smooth_field(Index nx, Index nt) {
    auto g = Grid<double>::with_spacing(0.0, 1.0 / static_cast<double>(nx - 1), nx, 0.0, 0.01, nt);
    return Field<double>::sample(g, [](double x, double t) { return std::sin(2 * M_PI * x) * std::exp(-t) + 0.3 * x; });
}

}  // namespace

TEST(FeatureSystem, ConstantField) {
    auto g = Grid<double>::with_spacing(0.0, 0.1, 11, 0.0, 0.1, 3);
    auto u = Field<double>(g, Matrix<double>::Constant(11, 3, 2.0));
    auto sys = build_feature_system(u, FemBasis<double>(1, 0.0, 1.0), compute_derivatives(u));
    ASSERT_EQ(sys.n_cols(), 10);
    EXPECT_EQ(sys.n_rows(), 11 * 2);
    EXPECT_TRUE((sys.matrix.col(static_cast<int>(Feature::U)).array() == 2.0).all());
    EXPECT_TRUE((sys.matrix.col(static_cast<int>(Feature::U2)).array() == 4.0).all());
    EXPECT_LE(sys.matrix.col(static_cast<int>(Feature::Ux)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FeatureSystem, BlockLayout) {
    auto u = smooth_field(41, 4);
    const auto d = compute_derivatives(u);
    auto sys20 = build_feature_system(u, FemBasis<double>(20, 0.0, 1.0), d);
    ASSERT_EQ(sys20.n_cols(), 200);
    // Feature 7 (one-based, u_xx), basis 3 (one-based) sits at zero-based column 122.
    const auto& meta = sys20.columns[122];
    EXPECT_EQ(meta.feature, 6);
    EXPECT_EQ(meta.basis, 2);

    auto sys1 = build_feature_system(u, FemBasis<double>(1, 0.0, 1.0), d);
    for (int j = 0; j < kFeatureCount; ++j) {
        const Vector<double> summed = sys20.matrix.middleCols(20 * j, 20).rowwise().sum();
        EXPECT_LE((summed - sys1.matrix.col(j)).cwiseAbs().maxCoeff(), 1e-12 * (1 + sys1.matrix.col(j).cwiseAbs().maxCoeff()));
    }
    for (Index c = 0; c < sys20.n_cols(); ++c) {
        const auto& n = sys20.columns[static_cast<std::size_t>(c)].norms;
        const double l2 = sys20.matrix.col(c).norm();
        EXPECT_NEAR(n.l2, l2, 1e-12 * (1 + l2));
        EXPECT_NEAR(n.max, sys20.matrix.col(c).cwiseAbs().maxCoeff(), 1e-12 * (1 + n.max));
    }
}

TEST(FeatureSystem, VaryingMask) {
    auto u = smooth_field(21, 3);
    std::vector<bool> vary(kFeatureCount, false);
    vary[static_cast<int>(Feature::Uxx)] = true;
    auto sys = build_feature_system(u, FemBasis<double>(5, 0.0, 1.0), compute_derivatives(u), vary);
    EXPECT_EQ(sys.n_cols(), 9 + 5);
    EXPECT_TRUE(sys.varies(static_cast<int>(Feature::Uxx)));
    EXPECT_FALSE(sys.varies(static_cast<int>(Feature::U)));
}

TEST(Coherence, Examples) {
    Matrix<double> orth(3, 2);
    orth << 1, 0, 0, 1, 0, 0;
    EXPECT_EQ(mutual_coherence(orth).mu, 0.0);
    Matrix<double> dup(3, 2);
    dup << 1, 1, 2, 2, 3, 3;
    EXPECT_NEAR(mutual_coherence(dup).mu, 1.0, 1e-15);
    Matrix<double> m(2, 2);
    m << 1, 1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0);
    EXPECT_NEAR(mutual_coherence(m).mu, 1 / std::sqrt(2.0), 1e-15);
    const auto rep = mutual_coherence(m);
    EXPECT_EQ(rep.pairwise(0, 0), 1.0);
    EXPECT_EQ(rep.pairwise(0, 1), rep.pairwise(1, 0));
}

TEST(Coherence, ScaleInvariance) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1);
    Matrix<double> a = Matrix<double>::NullaryExpr(30, 6, [&] { return n(rng); });
    Matrix<double> b = a;
    const double s[] = {3.0, 1e-4, 7e5, 1.0, 0.5, 12.0};
    for (Index j = 0; j < 6; ++j) b.col(j) *= s[j];
    const auto ra = mutual_coherence(a), rb = mutual_coherence(b);
    EXPECT_LE((ra.pairwise - rb.pairwise).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(ra.mu, rb.mu, 1e-12);
}

TEST(Coherence, ZeroColumnsFlagged) {
    Matrix<double> m(3, 3);
    m << 1, 0, 1, 0, 0, 1, 0, 0, 0;
    const auto rep = mutual_coherence(m);
    ASSERT_EQ(rep.zero_columns.size(), 1u);
    EXPECT_EQ(rep.zero_columns[0], 1);
    EXPECT_EQ(rep.pairwise.row(1).sum(), 0.0);
}

TEST(Nsr, ExactSystemIsZero) {
    auto g = Grid<double>::with_spacing(0.0, 0.1, 11, 0.0, 0.1, 3);
    Matrix<double> f(6, 2);
    f << 1, 0, 2, 1, 0, 1, 1, 1, 3, 0, 0, 2;
    Vector<double> a(2);
    a << 0.5, -2;
    auto sys = make_feature_system<double>(f, f * a, 0.1, 0.1);
    EXPECT_NEAR(noise_to_signal_ratio(sys, a), 0.0, 1e-15);
    Vector<double> zero = Vector<double>::Zero(2);
    EXPECT_THROW(noise_to_signal_ratio(sys, zero), std::invalid_argument);
}
