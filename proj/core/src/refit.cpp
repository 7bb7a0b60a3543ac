#include "fbitw/refit.hpp"

#include <cmath>

namespace fbitw {

namespace {

MatrixXd pinv_spd(const MatrixXd& S, const char* who) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw SingularSubBlock(std::string(who) + ": singular second-moment matrix");
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

// Bartlett-kernel HAC of the r-vector series g_t over the given time index
// set, normalized by norm_T.
MatrixXd bartlett_hac(const std::vector<Eigen::VectorXd>& g, int lags, double norm_T) {
    const int n = static_cast<int>(g.size());
    const int r = n > 0 ? static_cast<int>(g[0].size()) : 0;
    MatrixXd out = MatrixXd::Zero(r, r);
    for (int t = 0; t < n; ++t) out.noalias() += g[t] * g[t].transpose();
    for (int l = 1; l <= lags && l < n; ++l) {
        const double w = 1.0 - static_cast<double>(l) / (lags + 1);
        MatrixXd gl = MatrixXd::Zero(r, r);
        for (int t = l; t < n; ++t) gl.noalias() += g[t] * g[t - l].transpose();
        out += w * (gl + gl.transpose());
    }
    return out / norm_T;
}

}  // namespace

FactorModel reestimate(const ImputedPanel& ip, int r) {
    return estimate_apc(ip.X_tilde, r);
}

std::pair<MatrixXd, MatrixXd> compute_B_matrices(const FactorModel& fm,
                                                 const BlockPartition& bp) {
    const int r = fm.r;
    MatrixXd BL = MatrixXd::Identity(r, r);
    MatrixXd BF = MatrixXd::Identity(r, r);

    if (bp.N_m() > 0) {
        MatrixXd So = MatrixXd::Zero(r, r), Sm = MatrixXd::Zero(r, r);
        for (int k = 0; k < bp.N; ++k) {
            const auto row = fm.Lambda.row(bp.col_perm[k]);
            if (k < bp.N_o)
                So.noalias() += row.transpose() * row;
            else
                Sm.noalias() += row.transpose() * row;
        }
        So /= bp.N_o;
        Sm /= bp.N_m();
        const double p1 = static_cast<double>(bp.N_o) / bp.N;
        BL = p1 * MatrixXd::Identity(r, r) + (1.0 - p1) * Sm * pinv_spd(So, "compute_B_matrices");
    }
    if (bp.T_m() > 0) {
        MatrixXd So = MatrixXd::Zero(r, r), Sm = MatrixXd::Zero(r, r);
        for (int k = 0; k < bp.T; ++k) {
            const auto row = fm.F.row(bp.row_perm[k]);
            if (k < bp.T_o)
                So.noalias() += row.transpose() * row;
            else
                Sm.noalias() += row.transpose() * row;
        }
        So /= bp.T_o;
        Sm /= bp.T_m();
        const double p2 = static_cast<double>(bp.T_o) / bp.T;
        BF = p2 * MatrixXd::Identity(r, r) + (1.0 - p2) * Sm * pinv_spd(So, "compute_B_matrices");
    }
    return {BL, BF};
}

VarianceComponents estimate_variance_components(const FactorModel& fm,
                                                const ImputedPanel& ip,
                                                const BlockPartition& bp, int hac_lags) {
    if (hac_lags < 0) throw InvalidInput("estimate_variance_components: negative lag count");
    const int T = fm.T, N = fm.N, r = fm.r;

    VarianceComponents vc;
    vc.hac_lags = hac_lags;
    vc.Sigma_Lambda = fm.Lambda.transpose() * fm.Lambda / N;
    vc.Sigma_F = fm.F.transpose() * fm.F / T;

    vc.Sigma_Lambda_o = MatrixXd::Zero(r, r);
    vc.Sigma_Lambda_m = MatrixXd::Zero(r, r);
    for (int k = 0; k < N; ++k) {
        const auto row = fm.Lambda.row(bp.col_perm[k]);
        if (k < bp.N_o)
            vc.Sigma_Lambda_o.noalias() += row.transpose() * row;
        else
            vc.Sigma_Lambda_m.noalias() += row.transpose() * row;
    }
    vc.Sigma_Lambda_o /= bp.N_o;
    if (bp.N_m() > 0) vc.Sigma_Lambda_m /= bp.N_m();

    vc.Sigma_F_o = MatrixXd::Zero(r, r);
    vc.Sigma_F_m = MatrixXd::Zero(r, r);
    for (int k = 0; k < T; ++k) {
        const auto row = fm.F.row(bp.row_perm[k]);
        if (k < bp.T_o)
            vc.Sigma_F_o.noalias() += row.transpose() * row;
        else
            vc.Sigma_F_m.noalias() += row.transpose() * row;
    }
    vc.Sigma_F_o /= bp.T_o;
    if (bp.T_m() > 0) vc.Sigma_F_m /= bp.T_m();

    // Residuals on observed cells only. ip.X_tilde equals the data there.
    MatrixXd resid = MatrixXd::Zero(T, N);
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t)
            if (ip.mask(t, i)) resid(t, i) = ip.X_tilde(t, i) - fm.common_at(t, i);

    // Gamma_t: cross-sectional independence plug-in.
    vc.Gamma.assign(T, MatrixXd::Zero(r, r));
    vc.Gamma_o.assign(T, MatrixXd::Zero(r, r));
    for (int t = 0; t < T; ++t) {
        int n_obs = 0;
        for (int i = 0; i < N; ++i) {
            if (!ip.mask(t, i)) continue;
            ++n_obs;
            const double e2 = resid(t, i) * resid(t, i);
            vc.Gamma[t].noalias() += e2 * fm.Lambda.row(i).transpose() * fm.Lambda.row(i);
        }
        if (n_obs < r + 1)
            throw InsufficientData("estimate_variance_components: too few observed units at a period");
        vc.Gamma[t] /= N;
        for (int k = 0; k < bp.N_o; ++k) {
            const int i = bp.col_perm[k];
            const double e2 = resid(t, i) * resid(t, i);
            vc.Gamma_o[t].noalias() += e2 * fm.Lambda.row(i).transpose() * fm.Lambda.row(i);
        }
        vc.Gamma_o[t] /= bp.N_o;
    }

    // Phi_i: Bartlett HAC of F_t e_it over the unit's observed periods.
    vc.Phi.assign(N, MatrixXd::Zero(r, r));
    vc.Phi_o.assign(N, MatrixXd::Zero(r, r));
    for (int i = 0; i < N; ++i) {
        std::vector<Eigen::VectorXd> g_all, g_o;
        g_all.reserve(T);
        g_o.reserve(bp.T_o);
        for (int k = 0; k < T; ++k) {
            const int t = bp.row_perm[k];
            if (!ip.mask(t, i)) continue;
            Eigen::VectorXd g = fm.F.row(t).transpose() * resid(t, i);
            if (k < bp.T_o) g_o.push_back(g);
            g_all.push_back(std::move(g));
        }
        if (static_cast<int>(g_all.size()) < r + 1)
            throw InsufficientData("estimate_variance_components: too few observed periods for a unit");
        vc.Phi[i] = bartlett_hac(g_all, hac_lags, T);
        vc.Phi_o[i] = bartlett_hac(g_o, hac_lags, bp.T_o);
    }

    auto bm = compute_B_matrices(fm, bp);
    vc.B_Lambda = std::move(bm.first);
    vc.B_F = std::move(bm.second);
    return vc;
}

CellInference cell_inference(const FactorModel& fm, const VarianceComponents& vc,
                             const BlockPartition& bp, int i, int t, double level,
                             bool stationary) {
    if (i < 0 || i >= bp.N || t < 0 || t >= bp.T)
        throw InvalidInput("cell_inference: index out of range");
    if (!(level > 0.0 && level < 1.0))
        throw InvalidInput("cell_inference: level must lie in (0,1)");

    const double sN = std::sqrt(static_cast<double>(bp.N));
    const double sT = std::sqrt(static_cast<double>(bp.T));
    const double sNo = std::sqrt(static_cast<double>(bp.N_o));
    const double sTo = std::sqrt(static_cast<double>(bp.T_o));

    CellInference out;
    out.block = bp.label(t, i);
    switch (out.block) {
        case Block::Bal: out.delta = std::min(sN, sT); break;
        case Block::Tall: out.delta = std::min(sNo, sT); break;
        case Block::Wide: out.delta = std::min(sN, sTo); break;
        case Block::Miss: out.delta = std::min(sNo, sTo); break;
    }

    const MatrixXd SLinv = pinv_spd(vc.Sigma_Lambda, "cell_inference");
    const MatrixXd SFinv = pinv_spd(vc.Sigma_F, "cell_inference");
    const Eigen::VectorXd li = fm.Lambda.row(i).transpose();
    const Eigen::VectorXd ft = fm.F.row(t).transpose();

    const bool lambda_side_o = !stationary && (out.block == Block::Tall || out.block == Block::Miss);
    const bool factor_side_o = !stationary && (out.block == Block::Wide || out.block == Block::Miss);

    const MatrixXd GammaEff =
        lambda_side_o ? MatrixXd(vc.B_Lambda * vc.Gamma_o[t] * vc.B_Lambda.transpose())
                      : vc.Gamma[t];
    const MatrixXd PhiEff =
        factor_side_o ? MatrixXd(vc.B_F * vc.Phi_o[i] * vc.B_F.transpose()) : vc.Phi[i];

    const double V = li.dot(SLinv * GammaEff * SLinv * li);
    const double W = ft.dot(SFinv * PhiEff * SFinv * ft);

    double n_eff = 0.0, t_eff = 0.0;
    switch (out.block) {
        case Block::Bal: n_eff = bp.N; t_eff = bp.T; break;
        case Block::Tall: n_eff = bp.N_o; t_eff = bp.T; break;
        case Block::Wide: n_eff = bp.N; t_eff = bp.T_o; break;
        case Block::Miss: n_eff = bp.N_o; t_eff = bp.T_o; break;
    }
    const double d2 = out.delta * out.delta;
    double Vhat = d2 * (V / n_eff + W / t_eff);
    if (Vhat < 1e-12) {
        Vhat = 1e-12;
        out.variance_floored = true;
    }
    out.V_hat = Vhat;
    out.C_hat = fm.common_at(t, i);
    out.se = std::sqrt(Vhat) / out.delta;
    const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    out.ci_low = out.C_hat - z * out.se;
    out.ci_high = out.C_hat + z * out.se;
    return out;
}

BlockErrors block_error_summary(const MatrixXd& C_hat, const MatrixXd& C0,
                                const BlockPartition& bp) {
    if (C_hat.rows() != C0.rows() || C_hat.cols() != C0.cols())
        throw InvalidInput("block_error_summary: dimension mismatch");

    double ss[4] = {0, 0, 0, 0};
    long long cells[4] = {0, 0, 0, 0};
    for (int i = 0; i < bp.N; ++i)
        for (int t = 0; t < bp.T; ++t) {
            const int b = static_cast<int>(bp.label(t, i));
            const double d = C_hat(t, i) - C0(t, i);
            ss[b] += d * d;
            ++cells[b];
        }

    const double total_cells = static_cast<double>(bp.N) * bp.T;
    BlockErrors e;
    auto rms = [](double s, long long n) { return n > 0 ? std::sqrt(s / n) : 0.0; };
    e.bal = rms(ss[static_cast<int>(Block::Bal)], cells[static_cast<int>(Block::Bal)]);
    e.tall = rms(ss[static_cast<int>(Block::Tall)], cells[static_cast<int>(Block::Tall)]);
    e.wide = rms(ss[static_cast<int>(Block::Wide)], cells[static_cast<int>(Block::Wide)]);
    e.miss = rms(ss[static_cast<int>(Block::Miss)], cells[static_cast<int>(Block::Miss)]);
    e.overall = std::sqrt((ss[0] + ss[1] + ss[2] + ss[3]) / total_cells);
    e.w_bal = cells[static_cast<int>(Block::Bal)] / total_cells;
    e.w_tall = cells[static_cast<int>(Block::Tall)] / total_cells;
    e.w_wide = cells[static_cast<int>(Block::Wide)] / total_cells;
    e.w_miss = cells[static_cast<int>(Block::Miss)] / total_cells;
    return e;
}

}  // namespace fbitw
