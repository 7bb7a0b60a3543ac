#pragma once

#include <Eigen/Dense>

#include "fbitw/errors.hpp"

namespace fbitw {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Thin SVD A = U diag(D) V' with deterministic ordering and signs.
struct SvdResult {
    MatrixXd U;  // rows(A) x k, orthonormal columns
    VectorXd D;  // k singular values, descending, >= 0
    MatrixXd V;  // cols(A) x k, orthonormal columns
};

// Singular values below kRankTol * D(0) are treated as zero for rank checks.
inline constexpr double kRankTol = 1e-12;

// Top-k singular triplets of A, computed by eigendecomposition of the
// smaller Gram matrix (AA' if rows <= cols, else A'A). Ties in singular
// values keep the eigensolver's output order; signs follow sign_normalize.
SvdResult thin_svd(const MatrixXd& A, int k);

// Flip the sign of each (U,V) column pair so that the entry of largest
// absolute value in the U column (first index on ties) is positive.
// Idempotent; leaves U diag(D) V' unchanged.
SvdResult sign_normalize(SvdResult s);

// Least squares B = (X'X)^{-1} X'Y; throws SingularDesign when the
// condition number of X'X reaches 1e12.
MatrixXd ols(const MatrixXd& Y, const MatrixXd& X);

// Inverse standard normal CDF (Acklam rational approximation, |err| < 1.2e-8).
double normal_quantile(double p);

// Standard normal CDF, used by tests to sanity-check normal_quantile.
double normal_cdf(double x);

}  // namespace fbitw
