#include "identpde/denoise.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace identpde;

TEST(MovingAverage, Examples) {
    Vector<double> c = Vector<double>::Constant(9, -1.5);
    EXPECT_LE((moving_average_5(c).array() + 1.5).abs().maxCoeff(), 1e-15);

    Vector<double> x = Vector<double>::LinSpaced(11, 0.0, 1.0);
    auto mx = moving_average_5(x);
    for (Index i = 2; i < 9; ++i) EXPECT_NEAR(mx(i), x(i), 1e-15);

    Vector<double> spike(5);
    spike << 0, 0, 5, 0, 0;
    EXPECT_DOUBLE_EQ(moving_average_5(spike)(2), 1.0);
    EXPECT_THROW(moving_average_5(Vector<double>(Vector<double>::Zero(4))), std::invalid_argument);
}

TEST(Lsma, ReproducesQuadratics) {
    const double dx = 0.03;
    Vector<double> d(21);
    for (Index i = 0; i < d.size(); ++i) {
        const double x = 0.2 + dx * static_cast<double>(i);
        d(i) = 2 + 3 * x + 4 * x * x;
    }
    for (Index i = 0; i < d.size(); ++i) {
        const auto a = lsma_fit<double>(d, i, dx);
        const double x = 0.2 + dx * static_cast<double>(i);
        EXPECT_NEAR(a(0), d(i), 1e-10);
        EXPECT_NEAR(a(1), 3 + 8 * x, 1e-8);
        EXPECT_NEAR(a(2), 4, 1e-6);
    }
    Vector<double> c = Vector<double>::Constant(12, 0.7);
    const auto a = lsma_fit<double>(c, 5, 0.1);
    EXPECT_NEAR(a(0), 0.7, 1e-12);
    EXPECT_NEAR(a(1), 0.0, 1e-10);
    EXPECT_NEAR(a(2), 0.0, 1e-8);
}

TEST(Lsma, ThirdOrderOnSmoothData) {
    std::vector<double> hs, es;
    for (int k = 5; k <= 8; ++k) {
        const double dx = std::ldexp(1.0, -k);
        const Index n = (Index{1} << k) + 1;
        Vector<double> d(n);
        for (Index i = 0; i < n; ++i) {
            const double x = dx * static_cast<double>(i);
            d(i) = std::sin(2 * x) + dx * dx * dx * std::cos(7 * x);
        }
        double err = 0;
        for (Index i = 0; i < n; ++i) {
            const double x = dx * static_cast<double>(i);
            err = std::max(err, std::abs(lsma_fit<double>(d, i, dx)(0) - std::sin(2 * x)));
        }
        hs.push_back(std::log(dx));
        es.push_back(std::log(err));
    }
    const double s = (es.back() - es.front()) / (hs.back() - hs.front());
    EXPECT_NEAR(s, 3.0, 0.3);
}

TEST(Lsma, DesignIndependentOfSpacing) {
    // The map acts on samples in grid units, so it depends only on the node's
    // position in the slice.
    const auto a = local_quadratic_fit<double>(DenoiseMethod::LSMA, 40, 17);
    const auto b = local_quadratic_fit<double>(DenoiseMethod::LSMA, 400, 200);
    EXPECT_EQ(a.map, b.map);
    Eigen::JacobiSVD<Matrix<double>> svd(a.map);
    EXPECT_TRUE(std::isfinite(svd.singularValues()(0) / svd.singularValues()(2)));
}

TEST(Denoise, QuadraticFieldsUnchanged) {
    auto g = Grid<double>::with_spacing(0.0, 0.05, 21, 0.0, 0.1, 4);
    auto f = Field<double>::sample(g, [](double x, double t) { return 1 - 2 * x + (3 + t) * x * x; });
    for (auto m : {DenoiseMethod::None, DenoiseMethod::LS, DenoiseMethod::MA, DenoiseMethod::LSMA})
        EXPECT_LE((denoise_field(f, m).values - f.values).cwiseAbs().maxCoeff(), 1e-10) << to_string(m);
}

TEST(Denoise, CommutesWithConstantShift) {
    auto g = Grid<double>::with_spacing(0.0, 0.05, 21, 0.0, 0.1, 3);
    auto f = add_noise(Field<double>::sample(g, [](double x, double t) { return std::sin(6 * x + t); }), {10.0, 5});
    Field<double> shifted(g, f.values.array() + 4.0);
    for (auto m : {DenoiseMethod::LS, DenoiseMethod::MA, DenoiseMethod::LSMA}) {
        const Matrix<double> lhs = denoise_field(shifted, m).values;
        const Matrix<double> rhs = denoise_field(f, m).values.array() + 4.0;
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12) << to_string(m);
    }
}

TEST(Denoise, ReducesNoise) {
    auto g = Grid<double>::with_spacing(0.0, 1.0 / 128, 129, 0.0, 0.1, 3);
    auto clean = Field<double>::sample(g, [](double x, double) { return std::sin(4 * M_PI * x); });
    auto noisy = add_noise(clean, {5.0, 11});
    const double before = (noisy.values - clean.values).norm();
    const double after = (denoise_field(noisy, DenoiseMethod::LSMA).values - clean.values).norm();
    EXPECT_LT(after, 0.7 * before);
}

TEST(Denoise, ParseNames) {
    EXPECT_EQ(parse_denoise_method("lsma"), DenoiseMethod::LSMA);
    EXPECT_EQ(to_string(DenoiseMethod::MA), "ma");
    EXPECT_THROW(parse_denoise_method("savgol"), std::invalid_argument);
}
