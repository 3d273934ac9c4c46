#pragma once

// Independent reference computations used by the tests.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Accelerated proximal gradient (FISTA) for
//   1/2 |b - A z|^2 + lambda sum_blocks |z_block|_2
// run to a tight fixed point.
inline Vec group_lasso_fista(const Mat& a, const Vec& b, const std::vector<std::vector<Eigen::Index>>& blocks, double lambda,
                             int iters = 200000) {
    const double lip = Eigen::SelfAdjointEigenSolver<Mat>(a.transpose() * a).eigenvalues().maxCoeff();
    const double step = 1.0 / lip;
    Vec z = Vec::Zero(a.cols()), y = z, prev = z;
    double t = 1;
    for (int k = 0; k < iters; ++k) {
        Vec g = y - step * (a.transpose() * (a * y - b));
        for (const auto& blk : blocks) {
            double sq = 0;
            for (auto c : blk) sq += g(c) * g(c);
            const double n = std::sqrt(sq);
            const double s = n > step * lambda ? 1 - step * lambda / n : 0.0;
            for (auto c : blk) g(c) *= s;
        }
        prev = z;
        z = g;
        const double tn = (1 + std::sqrt(1 + 4 * t * t)) / 2;
        y = z + ((t - 1) / tn) * (z - prev);
        t = tn;
        if (k > 100 && (z - prev).norm() < 1e-15 * (1 + z.norm())) break;
    }
    return z;
}

inline double group_lasso_value(const Mat& a, const Vec& b, const std::vector<std::vector<Eigen::Index>>& blocks, const Vec& z,
                                double lambda) {
    double pen = 0;
    for (const auto& blk : blocks) {
        double sq = 0;
        for (auto c : blk) sq += z(c) * z(c);
        pen += std::sqrt(sq);
    }
    return 0.5 * (b - a * z).squaredNorm() + lambda * pen;
}

}  // namespace oracle
