#pragma once

#include <Eigen/Dense>

#include "fbitw/numerics.hpp"

namespace fbitw {

// Factor model estimated by principal components on a complete matrix.
// Normalization: F'F/T = I_r, Lambda'Lambda diagonal.
struct FactorModel {
    MatrixXd F;       // T x r
    MatrixXd Lambda;  // N x r
    VectorXd D;       // r singular values of X/sqrt(TN), descending
    int r = 0;
    int T = 0;
    int N = 0;
    bool rank_deficient = false;  // D(r-1) below kRankTol * D(0)

    MatrixXd common() const { return F * Lambda.transpose(); }
    double common_at(int t, int i) const { return F.row(t).dot(Lambda.row(i)); }
};

// Principal components of X via the scaled SVD of Z = X/sqrt(TN):
// F = sqrt(T) U_r, Lambda = sqrt(N) V_r D_r.
FactorModel estimate_apc(const MatrixXd& X, int r);

// Penalty family for the factor-count criterion; the default penalty is
// k ((N+T)/(NT)) log(min(N,T)).
enum class IcVariant { ICp1, ICp2, ICp3 };

// Number of factors by IC(k) = log V(k) + penalty(k) over k = 1..r_max;
// exact fits win immediately, ties go to the smaller k.
int select_r(const MatrixXd& X, int r_max, IcVariant variant = IcVariant::ICp2);

// Principal components with soft-thresholded singular values
// D_gamma = (D - gamma)_+. The shrinkage is carried by the loadings
// (Lambda = sqrt(N) V_r diag(D_gamma)) so that F Lambda' equals the
// soft-thresholded reconstruction and gamma = 0 reproduces estimate_apc
// bit for bit. Columns shrunk to zero drop out of the returned model.
FactorModel soft_threshold_apc(const MatrixXd& X, int r, double gamma);

}  // namespace fbitw
