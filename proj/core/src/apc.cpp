#include "fbitw/apc.hpp"

#include <cmath>
#include <limits>

namespace fbitw {

namespace {

void require_complete(const MatrixXd& X, const char* who) {
    if (!X.allFinite()) throw MaskedInput(std::string(who) + ": matrix has missing entries");
}

}  // namespace

FactorModel estimate_apc(const MatrixXd& X, int r) {
    require_complete(X, "estimate_apc");
    const int T = static_cast<int>(X.rows());
    const int N = static_cast<int>(X.cols());
    if (r < 1 || r > std::min(T, N)) throw RankError("estimate_apc: r out of range");

    const double scale = std::sqrt(static_cast<double>(T) * N);
    SvdResult s = thin_svd(X / scale, r);

    FactorModel fm;
    fm.r = r;
    fm.T = T;
    fm.N = N;
    fm.D = s.D;
    fm.F = std::sqrt(static_cast<double>(T)) * s.U;
    fm.Lambda = std::sqrt(static_cast<double>(N)) * s.V * s.D.asDiagonal();
    fm.rank_deficient = s.D(r - 1) <= kRankTol * s.D(0);
    return fm;
}

int select_r(const MatrixXd& X, int r_max, IcVariant variant) {
    require_complete(X, "select_r");
    const int T = static_cast<int>(X.rows());
    const int N = static_cast<int>(X.cols());
    if (r_max < 1 || 2 * r_max > std::min(T, N))
        throw RankError("select_r: r_max must satisfy 1 <= r_max <= min(T,N)/2");

    const double scale2 = static_cast<double>(T) * N;
    SvdResult s = thin_svd(X / std::sqrt(scale2), r_max);

    // V(k) = ||X - F_k Lambda_k'||_F^2 / (NT) = ||Z||_F^2 - sum_{j<=k} D_j^2.
    // The Gram-matrix route resolves residual variance down to about the
    // square root of machine precision, so exact fits leave V(k)/total near
    // 1e-15; anything below 1e-12 of the total is an exact fit.
    const double total = X.squaredNorm() / scale2;
    const double exact_tol = 1e-12 * std::max(total, 1e-300);
    const double nt_ratio = (static_cast<double>(N) + T) / scale2;
    const double cmin = static_cast<double>(std::min(N, T));
    double penalty_unit = nt_ratio * std::log(cmin);
    if (variant == IcVariant::ICp1) penalty_unit = nt_ratio * std::log(1.0 / nt_ratio);
    if (variant == IcVariant::ICp3) penalty_unit = std::log(cmin) / cmin;

    double cum = 0.0;
    int best_k = 1;
    double best_ic = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= r_max; ++k) {
        cum += s.D(k - 1) * s.D(k - 1);
        const double vk = std::max(total - cum, 0.0);
        if (vk <= exact_tol) return k;  // noiseless fit
        const double ic = std::log(vk) + k * penalty_unit;
        if (ic < best_ic) {
            best_ic = ic;
            best_k = k;
        }
    }
    return best_k;
}

FactorModel soft_threshold_apc(const MatrixXd& X, int r, double gamma) {
    if (gamma < 0.0) throw InvalidInput("soft_threshold_apc: gamma must be >= 0");
    FactorModel fm = estimate_apc(X, r);
    if (gamma == 0.0) return fm;
    if (gamma >= fm.D(0))
        throw InvalidInput("soft_threshold_apc: gamma at or above the top singular value");

    int r_eff = 0;
    for (int j = 0; j < r; ++j)
        if (fm.D(j) - gamma > 0.0) ++r_eff;

    // Lambda currently carries D; rescale columns by (D - gamma)_+ / D.
    FactorModel out = fm;
    if (r_eff < r) {
        out.F = fm.F.leftCols(r_eff).eval();
        out.Lambda = fm.Lambda.leftCols(r_eff).eval();
        out.D = fm.D.head(r_eff).eval();
        out.r = r_eff;
        out.rank_deficient = true;  // effective rank was reduced by shrinkage
    }
    for (int j = 0; j < out.r; ++j) out.Lambda.col(j) *= (fm.D(j) - gamma) / fm.D(j);
    return out;
}

}  // namespace fbitw
