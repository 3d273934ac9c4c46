#include "identpde/sparse_solver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace identpde;

namespace {

std::vector<std::vector<Index>> pairs(Index p) {
    std::vector<std::vector<Index>> blocks;
    for (Index c = 0; c < p; c += 2) blocks.push_back({c, c + 1});
    return blocks;
}

}  // namespace

TEST(GroupLasso, MatchesProximalGradientOracle) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix<double> a = Matrix<double>::NullaryExpr(20, 6, [&] { return n(rng); });
        Vector<double> b = Vector<double>::NullaryExpr(20, [&] { return n(rng); });
        const auto blocks = pairs(6);
        SolverConfig cfg;
        cfg.lambda = 0.5;
        const auto sol = group_lasso_admm<double>(a, b, blocks, cfg);
        ASSERT_TRUE(sol.converged);
        const auto ref = oracle::group_lasso_fista(a, b, blocks, 0.5);
        const double fo = oracle::group_lasso_value(a, b, blocks, ref, 0.5);
        EXPECT_LE(std::abs(sol.objective - fo), 1e-5 * std::max(1.0, std::abs(fo))) << "trial " << trial;
    }
}

TEST(GroupLasso, ZeroLambdaIsLeastSquares) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    Matrix<double> a = Matrix<double>::NullaryExpr(15, 4, [&] { return n(rng); });
    Vector<double> b = Vector<double>::NullaryExpr(15, [&] { return n(rng); });
    SolverConfig cfg;
    cfg.lambda = 0;
    cfg.tol = 1e-12;
    const auto sol = group_lasso_admm<double>(a, b, {{0}, {1}, {2}, {3}}, cfg);
    const Vector<double> ls = a.colPivHouseholderQr().solve(b);
    EXPECT_LE((sol.z - ls).norm(), 1e-8);
}

TEST(GroupLasso, LargeLambdaGivesZero) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 1);
    Matrix<double> a = Matrix<double>::NullaryExpr(12, 4, [&] { return n(rng); });
    Vector<double> b = Vector<double>::NullaryExpr(12, [&] { return n(rng); });
    const auto blocks = pairs(4);
    double bound = 0;
    const Vector<double> g = a.transpose() * b;
    for (const auto& blk : blocks) bound = std::max(bound, std::hypot(g(blk[0]), g(blk[1])));
    SolverConfig cfg;
    cfg.lambda = bound * 1.0001;
    EXPECT_EQ(group_lasso_admm<double>(a, b, blocks, cfg).z.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GroupLasso, OrthonormalClosedForm) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0, 1);
    Matrix<double> q = Matrix<double>::NullaryExpr(30, 6, [&] { return n(rng); }).householderQr().householderQ() *
                       Matrix<double>::Identity(30, 6);
    Vector<double> b = Vector<double>::NullaryExpr(30, [&] { return n(rng); });
    const auto blocks = pairs(6);
    Vector<double> expect = q.transpose() * b;
    block_soft_threshold(expect, blocks, 0.8);
    SolverConfig cfg;
    cfg.lambda = 0.8;
    cfg.tol = 1e-12;
    EXPECT_LE((group_lasso_admm<double>(q, b, blocks, cfg).z - expect).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GroupLasso, RejectsBadConfig) {
    Matrix<double> a = Matrix<double>::Identity(3, 3);
    Vector<double> b = Vector<double>::Ones(3);
    SolverConfig cfg;
    cfg.lambda = -1;
    EXPECT_THROW(group_lasso_admm<double>(a, b, {{0}, {1}, {2}}, cfg), std::invalid_argument);
    cfg = {};
    cfg.rho = -2;
    EXPECT_THROW(group_lasso_admm<double>(a, b, {{0}, {1}, {2}}, cfg), std::invalid_argument);
    EXPECT_THROW(group_lasso_admm<double>(a, Vector<double>(Vector<double>::Ones(4)), {{0}, {1}, {2}}, SolverConfig{}),
                 std::invalid_argument);
}

TEST(Magnitudes, SingleColumnExample) {
    // One feature column with |F|_1 * dx dt = 3, |F|_inf = 4, z = 2  ->  3 * 2 / 4
    Matrix<double> f(3, 1);
    f << 4, -1, 1;  // l1 = 6
    auto sys = make_feature_system<double>(f, Vector<double>::Zero(3), 0.5, 1.0);
    SparseSolution<double> sol;
    sol.z = Vector<double>::Constant(1, 2.0);
    EXPECT_DOUBLE_EQ(normalized_block_magnitudes(sys, sol)(0), 1.5);
    sol.z.setZero();
    EXPECT_EQ(normalized_block_magnitudes(sys, sol)(0), 0.0);
}

TEST(Threshold, Examples) {
    Vector<double> m(3);
    m << 5, 0.4, 0.3;
    EXPECT_EQ(select_candidates(m, {0.1, true}), std::vector<int>{0});
    Vector<double> z(4);
    z << 0, 1e-9, 0, 2;
    EXPECT_EQ(select_candidates(z, {0.0, false}), (std::vector<int>{1, 3}));
    EXPECT_TRUE(select_candidates(Vector<double>(Vector<double>::Zero(3)), {0.0, false}).empty());
}

TEST(RecoveryBound, LambdaArithmetic) {
    RecoveryInputs in;
    in.mu = 0.1;
    in.s = 2;
    in.epsilon = 0.01;
    in.dx = 0.1;
    in.dt = 0.01;
    // (0.9 / (0.9 - 0.2)) * 0.01 / 0.001
    EXPECT_NEAR(lambda_recovery(in), 0.9 / 0.7 * 10 * (1 + 1e-6), 1e-12);
    EXPECT_NEAR(lambda_recovery(in), 12.857, 1e-3);

    RecoveryInputs flat;
    flat.mu = 0;
    flat.epsilon = 0.2;
    flat.dx = 0.5;
    flat.dt = 0.1;
    EXPECT_NEAR(lambda_recovery(flat), 0.2 * (1 + 1e-6) / 0.05, 1e-12);

    RecoveryInputs bad = in;
    bad.mu = 0.6;
    bad.s = 3;
    EXPECT_THROW(lambda_recovery(bad), std::invalid_argument);
}
