#include "fbitw/treatment.hpp"

#include <cmath>
#include <limits>

namespace fbitw {

namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();

MatrixXd inv_spd(const MatrixXd& S, const char* who) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw SingularSubBlock(std::string(who) + ": singular moment matrix");
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

// Residual outcomes after removing the covariate part, all units and periods.
MatrixXd covariate_residual(const TreatmentPanel& tp, const VectorXd& beta) {
    MatrixXd R = tp.Y;
    for (int k = 0; k < tp.K(); ++k) R -= beta(k) * tp.X_cov[k];
    return R;
}

double z_for(double level) {
    if (!(level > 0.0 && level < 1.0))
        throw InvalidInput("confidence level must lie in (0,1)");
    return normal_quantile(1.0 - (1.0 - level) / 2.0);
}

}  // namespace

void TreatmentPanel::validate() const {
    if (N0 < 1 || N1 < 1) throw InvalidInput("treatment panel: needs controls and treated units");
    if (Y.cols() != N0 + N1) throw InvalidInput("treatment panel: column count mismatch");
    if (T0 < 1 || T0 >= T()) throw InvalidInput("treatment panel: T0 out of range");
    if (!Y.allFinite()) throw InvalidInput("treatment panel: non-finite outcomes");
    for (const auto& x : X_cov)
        if (x.rows() != Y.rows() || x.cols() != Y.cols() || !x.allFinite())
            throw InvalidInput("treatment panel: covariate dimensions or values invalid");
}

IfeFit estimate_ife_beta(const TreatmentPanel& tp, int r, double tol, int max_iter) {
    tp.validate();
    const int T = tp.T(), N0 = tp.N0, K = tp.K();

    IfeFit fit;
    if (K == 0) {
        fit.beta = VectorXd();
        fit.fm = estimate_apc(tp.Y.leftCols(N0), r);
        fit.iterations = 1;
        return fit;
    }

    // Stack control cells for the pooled regression.
    MatrixXd Xs(T * N0, K);
    for (int k = 0; k < K; ++k) {
        const MatrixXd block = tp.X_cov[k].leftCols(N0);
        Xs.col(k) = Eigen::Map<const VectorXd>(block.data(), T * N0);
    }
    const MatrixXd Yc = tp.Y.leftCols(N0);

    MatrixXd C = MatrixXd::Zero(T, N0);
    VectorXd beta = VectorXd::Zero(K);
    fit.converged = false;
    for (int it = 1; it <= max_iter; ++it) {
        const MatrixXd D = Yc - C;
        const VectorXd y = Eigen::Map<const VectorXd>(D.data(), T * N0);
        const VectorXd beta_new = ols(y, Xs);

        MatrixXd R = Yc;
        for (int k = 0; k < K; ++k) R -= beta_new(k) * tp.X_cov[k].leftCols(N0);
        fit.fm = estimate_apc(R, r);
        C = fit.fm.common();

        fit.iterations = it;
        const double step = (beta_new - beta).norm();
        beta = beta_new;
        if (step < tol) {
            fit.converged = true;
            break;
        }
    }
    fit.beta = beta;
    return fit;
}

double sigma_e_hat(const MatrixXd& resid_controls, int r, int K) {
    const int T = static_cast<int>(resid_controls.rows());
    const int N0 = static_cast<int>(resid_controls.cols());
    const double dof = static_cast<double>(T) * N0 - static_cast<double>(r) * (T + N0) +
                       static_cast<double>(r) * r - K;
    if (dof <= 0.0) throw DegenerateDof("sigma_e_hat: nonpositive degrees of freedom");
    return resid_controls.squaredNorm() / dof;
}

TreatmentResult att_tw(const TreatmentPanel& tp, int r, bool use_refit, double level,
                       bool stationary, bool sigma_use_pretreatment, int hac_lags) {
    tp.validate();
    const int T = tp.T(), N = tp.N(), N0 = tp.N0, N1 = tp.N1, T0 = tp.T0, T1 = tp.T1();

    TreatmentResult res;
    IfeFit ife = estimate_ife_beta(tp, r);
    res.beta = ife.beta;
    res.ife_converged = ife.converged;

    const MatrixXd R = covariate_residual(tp, res.beta);

    // Residual panel: the treated outcomes after T0 are treated values, not
    // the untreated potential outcomes, so those cells are missing.
    Panel panel;
    panel.values = R;
    panel.mask = MaskMatrix::Ones(T, N);
    for (int i = N0; i < N; ++i)
        for (int t = T0; t < T; ++t) {
            panel.mask(t, i) = 0;
            panel.values(t, i) = kNan;
        }
    panel.series_ids = tp.unit_ids;
    panel.period_ids = tp.period_ids;
    if (panel.series_ids.empty()) {
        panel.series_ids.resize(N);
        for (int i = 0; i < N; ++i) panel.series_ids[i] = "u" + std::to_string(i + 1);
    }
    if (panel.period_ids.empty()) {
        panel.period_ids.resize(T);
        for (int t = 0; t < T; ++t) panel.period_ids[t] = "t" + std::to_string(t + 1);
    }

    res.bp = partition_blocks(panel);
    auto [ip, tw] = impute_tw(panel, r, res.bp);
    res.fm = reestimate(ip, r);
    res.C_hat = use_refit ? res.fm.common() : ip.C_tilde;
    res.ip = std::move(ip);
    res.vc = estimate_variance_components(res.fm, res.ip, res.bp, hac_lags);

    // Residual variance from the control block (optionally + treated pre-period).
    MatrixXd resid_c = R.leftCols(N0) - res.C_hat.leftCols(N0);
    if (!sigma_use_pretreatment) {
        res.sigma_e2 = sigma_e_hat(resid_c, r, tp.K());
    } else {
        const MatrixXd resid_pre =
            R.block(0, N0, T0, N1) - res.C_hat.block(0, N0, T0, N1);
        const double dof = static_cast<double>(T) * N0 -
                           static_cast<double>(r) * (T + N0) +
                           static_cast<double>(r) * r - tp.K() +
                           static_cast<double>(T0) * N1;
        if (dof <= 0.0) throw DegenerateDof("att_tw: nonpositive degrees of freedom");
        res.sigma_e2 = (resid_c.squaredNorm() + resid_pre.squaredNorm()) / dof;
    }

    // Effects on the treated, t >= T0.
    res.theta_it.resize(T1, N1);
    for (int j = 0; j < N1; ++j)
        for (int s = 0; s < T1; ++s) {
            const int t = T0 + s, i = N0 + j;
            double yhat0 = res.C_hat(t, i);
            for (int k = 0; k < tp.K(); ++k) yhat0 += res.beta(k) * tp.X_cov[k](t, i);
            res.theta_it(s, j) = tp.Y(t, i) - yhat0;
        }
    res.theta_t = res.theta_it.rowwise().mean();
    res.theta_j = res.theta_it.colwise().mean().transpose();

    res.se_theta_t.resize(T1);
    res.ci_low_t.resize(T1);
    res.ci_high_t.resize(T1);
    for (int s = 0; s < T1; ++s) {
        const EffectInference e = att_variance_t(res, tp, T0 + s, stationary, level);
        res.se_theta_t(s) = e.se;
        res.ci_low_t(s) = e.ci_low;
        res.ci_high_t(s) = e.ci_high;
    }

    res.se_theta_it.resize(T1, N1);
    res.ci_low_it.resize(T1, N1);
    res.ci_high_it.resize(T1, N1);
    for (int j = 0; j < N1; ++j)
        for (int s = 0; s < T1; ++s) {
            const EffectInference e =
                individual_effect_inference(res, tp, N0 + j, T0 + s, stationary, level);
            res.se_theta_it(s, j) = e.se;
            res.ci_low_it(s, j) = e.ci_low;
            res.ci_high_it(s, j) = e.ci_high;
        }

    res.se_theta_j.resize(N1);
    res.ci_low_j.resize(N1);
    res.ci_high_j.resize(N1);
    if (T1 >= 2) {
        for (int j = 0; j < N1; ++j) {
            const EffectInference e =
                unit_average_effect_inference(res, tp, N0 + j, stationary, level);
            res.se_theta_j(j) = e.se;
            res.ci_low_j(j) = e.ci_low;
            res.ci_high_j(j) = e.ci_high;
        }
    } else {
        res.se_theta_j.setConstant(kNan);
        res.ci_low_j.setConstant(kNan);
        res.ci_high_j.setConstant(kNan);
    }
    return res;
}

EffectInference att_variance_t(const TreatmentResult& res, const TreatmentPanel& tp,
                               int t, bool stationary, double level) {
    if (t < tp.T0 || t >= tp.T()) throw InvalidInput("att_variance_t: t not in treatment period");
    const int N0 = tp.N0, N1 = tp.N1;

    const VectorXd lbar =
        res.fm.Lambda.bottomRows(N1).colwise().mean().transpose();
    const MatrixXd SLinv = inv_spd(res.vc.Sigma_Lambda, "att_variance_t");
    const MatrixXd Gam =
        stationary ? res.vc.Gamma[t]
                   : MatrixXd(res.vc.B_Lambda * res.vc.Gamma_o[t] * res.vc.B_Lambda.transpose());

    EffectInference out;
    out.delta = std::min(std::sqrt(static_cast<double>(N0)), std::sqrt(static_cast<double>(N1)));
    const double d2 = out.delta * out.delta;
    out.V_hat = d2 / N0 * lbar.dot(SLinv * Gam * SLinv * lbar) + d2 / N1 * res.sigma_e2;
    out.estimate = res.theta_t(t - tp.T0);
    out.se = std::sqrt(std::max(out.V_hat, 0.0)) / out.delta;
    const double z = z_for(level);
    out.ci_low = out.estimate - z * out.se;
    out.ci_high = out.estimate + z * out.se;
    return out;
}

EffectInference individual_effect_inference(const TreatmentResult& res,
                                            const TreatmentPanel& tp, int j, int t,
                                            bool stationary, double level) {
    if (j < tp.N0 || j >= tp.N()) throw InvalidInput("individual_effect_inference: j not treated");
    if (t < tp.T0 || t >= tp.T()) throw InvalidInput("individual_effect_inference: t not in treatment period");
    const int N0 = tp.N0, T0 = tp.T0;

    const MatrixXd SLinv = inv_spd(res.vc.Sigma_Lambda, "individual_effect_inference");
    const MatrixXd SFinv = inv_spd(res.vc.Sigma_F, "individual_effect_inference");
    const VectorXd lj = res.fm.Lambda.row(j).transpose();
    const VectorXd ft = res.fm.F.row(t).transpose();

    // For treated units the full-sample Phi cannot be formed (no residuals in
    // the treatment period), so both branches use the pre-period plug-in; the
    // non-stationary branch adds the B_F sandwich.
    const MatrixXd Phi =
        stationary ? res.vc.Phi_o[j]
                   : MatrixXd(res.vc.B_F * res.vc.Phi_o[j] * res.vc.B_F.transpose());
    const MatrixXd Gam =
        stationary ? res.vc.Gamma_o[t]
                   : MatrixXd(res.vc.B_Lambda * res.vc.Gamma_o[t] * res.vc.B_Lambda.transpose());

    // Idiosyncratic variance at t from the control residuals at t.
    double se2t = 0.0;
    for (int i = 0; i < N0; ++i) {
        const double e = res.ip.X_tilde(t, i) - res.fm.common_at(t, i);
        se2t += e * e;
    }
    se2t /= N0;

    EffectInference out;
    out.delta = 1.0;
    out.V_hat = ft.dot(SFinv * Phi * SFinv * ft) / T0 + lj.dot(SLinv * Gam * SLinv * lj) / N0 + se2t;
    out.estimate = res.theta_it(t - T0, j - N0);
    out.se = std::sqrt(std::max(out.V_hat, 0.0));
    const double z = z_for(level);
    out.ci_low = out.estimate - z * out.se;
    out.ci_high = out.estimate + z * out.se;
    return out;
}

EffectInference unit_average_effect_inference(const TreatmentResult& res,
                                              const TreatmentPanel& tp, int j,
                                              bool stationary, double level) {
    if (j < tp.N0 || j >= tp.N()) throw InvalidInput("unit_average_effect_inference: j not treated");
    if (tp.T1() < 2) throw InvalidInput("unit_average_effect_inference: needs T1 >= 2");
    const int T0 = tp.T0, T1 = tp.T1();

    const MatrixXd SFinv = inv_spd(res.vc.Sigma_F, "unit_average_effect_inference");
    const VectorXd fbar = res.fm.F.bottomRows(T1).colwise().mean().transpose();
    const MatrixXd Phi =
        stationary ? res.vc.Phi_o[j]
                   : MatrixXd(res.vc.B_F * res.vc.Phi_o[j] * res.vc.B_F.transpose());

    // Unit-j idiosyncratic variance from its pre-treatment residuals.
    double se2j = 0.0;
    for (int t = 0; t < T0; ++t) {
        const double e = res.ip.X_tilde(t, j) - res.fm.common_at(t, j);
        se2j += e * e;
    }
    se2j /= T0;

    EffectInference out;
    out.delta = std::min(std::sqrt(static_cast<double>(T0)), std::sqrt(static_cast<double>(T1)));
    const double d2 = out.delta * out.delta;
    out.V_hat = d2 / T0 * fbar.dot(SFinv * Phi * SFinv * fbar) + d2 / T1 * se2j;
    out.estimate = res.theta_j(j - tp.N0);
    out.se = std::sqrt(std::max(out.V_hat, 0.0)) / out.delta;
    const double z = z_for(level);
    out.ci_low = out.estimate - z * out.se;
    out.ci_high = out.estimate + z * out.se;
    return out;
}

}  // namespace fbitw
