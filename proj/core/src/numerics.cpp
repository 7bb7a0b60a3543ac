#include "fbitw/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace fbitw {

namespace {

// Deterministic orthonormal completion: replace column j of M by the first
// canonical basis vector with a non-negligible residual after projecting out
// all other valid columns.
void complete_column(MatrixXd& M, int j, const std::vector<int>& valid) {
    const int n = static_cast<int>(M.rows());
    for (int cand = 0; cand < n; ++cand) {
        VectorXd v = VectorXd::Zero(n);
        v(cand) = 1.0;
        for (int c : valid) v -= M.col(c).dot(v) * M.col(c);
        for (int c = 0; c < j; ++c) v -= M.col(c).dot(v) * M.col(c);
        const double nrm = v.norm();
        if (nrm > 0.5) {
            M.col(j) = v / nrm;
            return;
        }
    }
    M.col(j).setZero();
    M(j % n, j) = 1.0;
}

}  // namespace

SvdResult thin_svd(const MatrixXd& A, int k) {
    const int T = static_cast<int>(A.rows());
    const int N = static_cast<int>(A.cols());
    if (!A.allFinite()) throw InvalidInput("thin_svd: non-finite entries in input");
    if (k < 1 || k > std::min(T, N)) throw RankError("thin_svd: rank out of range");

    const bool use_left = (T <= N);  // eigendecompose AA' (T x T) vs A'A (N x N)
    const int m = use_left ? T : N;

    MatrixXd G(m, m);
    if (use_left)
        G.noalias() = A * A.transpose();
    else
        G.noalias() = A.transpose() * A;

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    if (es.info() != Eigen::Success) throw EstimationError("thin_svd: eigensolver failed");

    // Eigenvalues come out ascending; order descending, stable on ties.
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return es.eigenvalues()(a) > es.eigenvalues()(b); });

    SvdResult s;
    s.D.resize(k);
    MatrixXd W(m, k);  // eigenvectors of the Gram side
    for (int j = 0; j < k; ++j) {
        s.D(j) = std::sqrt(std::max(es.eigenvalues()(idx[j]), 0.0));
        W.col(j) = es.eigenvectors().col(idx[j]);
    }

    // Recover the other side: columns with singular value ~0 get a
    // deterministic orthonormal completion instead of a 0/0 division.
    const double zero_tol = kRankTol * (k > 0 ? s.D(0) : 0.0);
    const int other = use_left ? N : T;
    MatrixXd R(other, k);
    std::vector<int> valid;
    for (int j = 0; j < k; ++j) {
        if (s.D(j) > zero_tol && s.D(j) > 0.0) {
            VectorXd r = use_left ? VectorXd(A.transpose() * W.col(j)) : VectorXd(A * W.col(j));
            R.col(j) = r / r.norm();
            valid.push_back(j);
        }
    }
    for (int j = 0; j < k; ++j) {
        if (s.D(j) <= zero_tol || s.D(j) == 0.0) complete_column(R, j, valid);
    }

    if (use_left) {
        s.U = std::move(W);
        s.V = std::move(R);
    } else {
        s.V = std::move(W);
        s.U = std::move(R);
    }
    return sign_normalize(std::move(s));
}

SvdResult sign_normalize(SvdResult s) {
    const int k = static_cast<int>(s.D.size());
    for (int j = 0; j < k; ++j) {
        int best = 0;
        double best_abs = -1.0;
        for (int i = 0; i < s.U.rows(); ++i) {
            const double a = std::abs(s.U(i, j));
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (s.U(best, j) < 0.0) {
            s.U.col(j) = -s.U.col(j);
            s.V.col(j) = -s.V.col(j);
        }
    }
    return s;
}

MatrixXd ols(const MatrixXd& Y, const MatrixXd& X) {
    if (X.rows() != Y.rows()) throw InvalidInput("ols: row mismatch between Y and X");
    if (X.rows() < X.cols()) throw SingularDesign("ols: fewer rows than regressors");

    const MatrixXd XtX = X.transpose() * X;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(XtX);
    if (es.info() != Eigen::Success) throw SingularDesign("ols: eigensolver failed on X'X");
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin <= 0.0 || lmax / lmin >= 1e12) throw SingularDesign("ols: singular design matrix");

    return es.eigenvectors() *
           es.eigenvalues().cwiseInverse().asDiagonal() *
           (es.eigenvectors().transpose() * (X.transpose() * Y));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("normal_quantile: p outside (0,1)");

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    double q, x;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    return x;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace fbitw
