#include "identpde/derivatives.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace identpde;

namespace {

double slope(const std::vector<double>& h, const std::vector<double>& e) {
    // least-squares slope of log e against log h
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double x = std::log(h[k]), y = std::log(e[k]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(TimeDerivative, LinearAndQuadratic) {
    auto g = Grid<double>::with_spacing(0.0, 0.25, 5, 0.0, 0.1, 6);
    auto lin = backward_time_derivative(Field<double>::sample(g, [](double, double t) { return t; }));
    EXPECT_EQ(lin.time_offset, 1);
    EXPECT_NEAR((lin.values.array() - 1.0).abs().maxCoeff(), 0.0, 1e-13);

    auto quad = backward_time_derivative(Field<double>::sample(g, [](double, double t) { return t * t; }));
    for (Index n = 1; n < g.n_t(); ++n) EXPECT_NEAR(quad.values(2, n - 1), 2 * g.t(n) - g.dt(), 1e-13);
}

TEST(TimeDerivative, FirstOrderOnSine) {
    std::vector<double> hs, es;
    for (double dt : {1e-2, 1e-3}) {
        auto g = Grid<double>::with_spacing(0.0, 0.25, 5, 0.0, dt, static_cast<Index>(std::lround(1 / dt)) + 1);
        auto d = backward_time_derivative(Field<double>::sample(g, [](double, double t) { return std::sin(t); }));
        double err = 0;
        for (Index n = 1; n < g.n_t(); ++n) err = std::max(err, std::abs(d.values(0, n - 1) - std::cos(g.t(n))));
        EXPECT_LE(err, dt);
        hs.push_back(dt);
        es.push_back(err);
    }
    EXPECT_NEAR(slope(hs, es), 1.0, 0.1);
}

TEST(Eno, ConstantAndPolynomials) {
    auto g = Grid<double>::with_spacing(-1.0, 0.05, 41, 0.0, 0.1, 2);
    auto c = Field<double>::sample(g, [](double, double) { return 3.25; });
    EXPECT_EQ(eno_spatial_derivative(c, 1).values.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(eno_spatial_derivative(c, 2).values.cwiseAbs().maxCoeff(), 0.0);

    auto q = Field<double>::sample(g, [](double x, double) { return x * x * x * x - 2 * x * x * x + x - 1; });
    auto ux = eno_spatial_derivative(q, 1);
    auto uxx = eno_spatial_derivative(q, 2);
    for (Index i = 2; i + 2 < g.n_x(); ++i) {
        const double x = g.x(i);
        EXPECT_NEAR(ux.values(i, 0), 4 * x * x * x - 6 * x * x + 1, 1e-10);
        EXPECT_NEAR(uxx.values(i, 0), 12 * x * x - 12 * x, 1e-10);
    }
}

TEST(Eno, ConvergenceOnSine) {
    std::vector<double> hs, e1, e2;
    for (int k = 6; k <= 9; ++k) {
        const double dx = std::ldexp(1.0, -k);
        auto g = Grid<double>::with_spacing(0.0, dx, (1 << k) + 1, 0.0, 0.1, 2);
        auto f = Field<double>::sample(g, [](double x, double) { return std::sin(x); });
        auto ux = eno_spatial_derivative(f, 1);
        auto uxx = eno_spatial_derivative(f, 2);
        double a = 0, b = 0;
        for (Index i = 0; i < g.n_x(); ++i) {
            a = std::max(a, std::abs(ux.values(i, 0) - std::cos(g.x(i))));
            b = std::max(b, std::abs(uxx.values(i, 0) + std::sin(g.x(i))));
        }
        hs.push_back(dx);
        e1.push_back(a);
        e2.push_back(b);
    }
    EXPECT_GE(slope(hs, e1), 3.5);
    EXPECT_GE(slope(hs, e2), 2.5);
}

TEST(Eno, TranslationEquivariance) {
    auto g1 = Grid<double>::with_spacing(0.0, 0.02, 51, 0.0, 0.1, 2);
    auto g2 = Grid<double>::with_spacing(0.75, 0.02, 51, 0.0, 0.1, 2);
    auto kink = [](double s) { return std::abs(s - 0.5) + std::sin(5 * s); };
    auto f1 = Field<double>::sample(g1, [&](double x, double) { return kink(x); });
    auto f2 = Field<double>::sample(g2, [&](double x, double) { return kink(x - 0.75); });
    EXPECT_LE((eno_spatial_derivative(f1, 1).values - eno_spatial_derivative(f2, 1).values).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((eno_spatial_derivative(f1, 2).values - eno_spatial_derivative(f2, 2).values).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Eno, AvoidsKink) {
    // |x - 0.5| sampled so the kink sits between nodes: away from the two
    // cells next to it the ENO stencil never straddles the kink.
    auto g = Grid<double>::with_spacing(0.0, 0.04, 26, 0.0, 0.1, 2);
    auto f = Field<double>::sample(g, [](double x, double) { return std::abs(x - 0.51); });
    auto ux = eno_spatial_derivative(f, 1);
    for (Index i = 0; i < g.n_x(); ++i) {
        if (std::abs(g.x(i) - 0.51) < 0.05) continue;
        EXPECT_NEAR(ux.values(i, 0), g.x(i) > 0.51 ? 1.0 : -1.0, 1e-10) << "node " << i;
    }
}

TEST(Eno, RejectsShortSlices) {
    auto g = Grid<double>::with_spacing(0.0, 0.1, 4, 0.0, 0.1, 2);
    EXPECT_THROW(eno_spatial_derivative(Field<double>::zeros(g), 1), std::invalid_argument);
    EXPECT_THROW(eno_spatial_derivative(Field<double>::zeros(g), 3), std::invalid_argument);
}
