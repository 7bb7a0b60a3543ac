#pragma once

#include <Eigen/Dense>

#include "fbitw/rng.hpp"

namespace testutil {

using Eigen::MatrixXd;

inline MatrixXd random_matrix(int rows, int cols, std::uint64_t seed, double sd = 1.0) {
    fbitw::RngStream rng(seed, 0, fbitw::StreamTag::Aux);
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = sd * rng.next_normal();
    return m;
}

inline double rel_err(const MatrixXd& a, const MatrixXd& b) {
    const double denom = b.norm();
    return denom > 0 ? (a - b).norm() / denom : (a - b).norm();
}

inline double max_abs_err(const MatrixXd& a, const MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testutil
