#include "identpde/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace identpde;

TEST(Grid, NormsSmallCases) {
    auto g = Grid<double>::with_spacing(0.0, 0.5, 2, 0.0, 0.5, 2);
    auto ones = Field<double>(g, Matrix<double>::Ones(2, 2));
    EXPECT_DOUBLE_EQ(vector_lp_norm(ones, 2.0), 2.0);
    EXPECT_DOUBLE_EQ(function_lp_norm(ones, 2.0), 1.0);
    EXPECT_EQ(function_lp_norm(Field<double>::zeros(g), 3.0), 0.0);

    auto g1 = Grid<double>::with_spacing(0.0, 1.0, 2, 0.0, 1.0, 2);
    Matrix<double> v(2, 2);
    v << 1, 3, 2, 4;
    EXPECT_DOUBLE_EQ(function_lp_norm(Field<double>(g1, v), 1.0), 10.0);
}

TEST(Grid, NormRelationAndHomogeneity) {
    auto g = Grid<double>::with_spacing(0.0, 0.1, 11, 0.0, 0.03, 7);
    auto f = Field<double>::sample(g, [](double x, double t) { return std::sin(3 * x) - t * x; });
    for (double p : {1.0, 2.0, 3.5}) {
        const double rel = vector_lp_norm(f, p) * std::pow(g.dx() * g.dt(), 1 / p);
        EXPECT_NEAR(function_lp_norm(f, p), rel, 1e-14 * rel);
        for (double a : {-2.5, 0.0, 7.0}) {
            Field<double> s(g, a * f.values);
            EXPECT_NEAR(function_lp_norm(s, p), std::abs(a) * function_lp_norm(f, p), 1e-13);
        }
    }
    EXPECT_THROW(function_lp_norm(f, 0.0), std::invalid_argument);
    Field<double> bad = f;
    bad.values(2, 2) = std::nan("");
    EXPECT_THROW(function_lp_norm(bad, 2.0), std::invalid_argument);
}

TEST(Grid, NoiseSigmaAndStatistics) {
    // ||u||_2 = 10 on 100 samples, P = 8 -> 0.08 * 10 / 10
    auto g = Grid<double>::with_spacing(0.0, 0.1, 10, 0.0, 0.1, 10);
    auto f = Field<double>(g, Matrix<double>::Constant(10, 10, 1.0));
    EXPECT_NEAR(noise_sigma(f, 8.0), 0.08, 1e-15);

    EXPECT_EQ(add_noise(f, {0.0, 3}).values, f.values);
    auto a = add_noise(f, {8.0, 42});
    auto b = add_noise(f, {8.0, 42});
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(add_noise(f, {8.0, 43}).values, a.values);

    auto big = Grid<double>::with_spacing(0.0, 1e-2, 101, 0.0, 1e-2, 200);
    auto fb = Field<double>::sample(big, [](double x, double t) { return std::sin(6 * x) + t; });
    const double sigma = noise_sigma(fb, 5.0);
    const Matrix<double> e = add_noise(fb, {5.0, 9}).values - fb.values;
    const double mean = e.mean();
    const double sd = std::sqrt((e.array() - mean).square().sum() / static_cast<double>(e.size() - 1));
    EXPECT_NEAR(sd, sigma, 0.05 * sigma);
}

TEST(Grid, Downsample) {
    auto g = Grid<double>::with_spacing(0.0, 1.0 / 8, 9, 0.0, 0.1, 5);
    auto f = Field<double>::sample(g, [](double x, double t) { return x + 10 * t; });
    auto same = downsample(f, {1, 1});
    EXPECT_EQ(same.values, f.values);
    EXPECT_TRUE(same.grid == f.grid);

    auto d = downsample(f, {2, 1});
    ASSERT_EQ(d.grid.n_x(), 5);
    for (Index i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(d.values(i, 0), f.values(2 * i, 0));  // nodes 1,3,5,7,9 one-based
    EXPECT_DOUBLE_EQ(d.grid.dx(), 0.25);

    auto fine = Grid<double>::with_spacing(0.0, 1.0 / 256, 257, 0.0, 0.01, 3);
    EXPECT_DOUBLE_EQ(downsample(Field<double>::zeros(fine), {4, 1}).grid.dx(), 1.0 / 64);
    EXPECT_THROW(downsample(f, {0, 1}), std::invalid_argument);
    EXPECT_THROW(downsample(f, {9, 1}), std::invalid_argument);
}

TEST(Grid, RejectsBadShapes) {
    EXPECT_THROW(Grid<double>(0, 1, 0, 0, 0.1, 3), std::invalid_argument);
    EXPECT_THROW(Grid<double>(0, 1, 4, 0, 0.0, 3), std::invalid_argument);
    auto g = Grid<double>::with_spacing(0.0, 0.1, 4, 0.0, 0.1, 3);
    EXPECT_THROW(Field<double>(g, Matrix<double>::Zero(3, 3)), std::invalid_argument);
}
