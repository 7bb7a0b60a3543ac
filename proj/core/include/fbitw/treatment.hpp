#pragma once

#include <optional>

#include "fbitw/refit.hpp"

namespace fbitw {

// Outcome panel for treatment-effect estimation. Columns are ordered with the
// N0 never-treated control units first, then the N1 treated units. All units
// share the pre-treatment length T0; treated units switch to the treated
// outcome from period T0 on.
struct TreatmentPanel {
    MatrixXd Y;                      // T x N observed outcomes
    std::vector<MatrixXd> X_cov;     // K covariate matrices, each T x N
    int N0 = 0;
    int N1 = 0;
    int T0 = 0;
    std::vector<std::string> unit_ids;
    std::vector<std::string> period_ids;

    int T() const { return static_cast<int>(Y.rows()); }
    int N() const { return N0 + N1; }
    int T1() const { return T() - T0; }
    int K() const { return static_cast<int>(X_cov.size()); }
    void validate() const;
};

struct IfeFit {
    VectorXd beta;          // K coefficients (empty when K = 0)
    FactorModel fm;         // factors/loadings on the control block
    int iterations = 0;
    bool converged = true;
};

// Interactive fixed effects on the control block: alternate pooled least
// squares of Y - C on the covariates with rank-r principal components on
// Y - X beta, starting from C = 0.
IfeFit estimate_ife_beta(const TreatmentPanel& tp, int r, double tol = 1e-8,
                         int max_iter = 1000);

struct TreatmentResult {
    MatrixXd theta_it;  // T1 x N1 effect estimates, rows t = T0..T-1
    VectorXd theta_t;   // T1 cross-sectional averages
    VectorXd theta_j;   // N1 per-unit time averages
    VectorXd beta;
    double sigma_e2 = 0.0;

    VectorXd se_theta_t, ci_low_t, ci_high_t;
    MatrixXd se_theta_it, ci_low_it, ci_high_it;
    VectorXd se_theta_j, ci_low_j, ci_high_j;

    MatrixXd C_hat;  // common component used for the counterfactual, T x N
    FactorModel fm;  // re-estimated factors/loadings on the completed residual panel
    VarianceComponents vc;
    BlockPartition bp;
    ImputedPanel ip;
    bool ife_converged = true;
};

// Full pipeline: interactive-fixed-effects beta on controls, tall/wide
// imputation of the untreated potential outcomes on the residual panel
// (re-estimated when use_refit), then effects with Normal confidence
// intervals at the given level.
TreatmentResult att_tw(const TreatmentPanel& tp, int r, bool use_refit = true,
                       double level = 0.95, bool stationary = false,
                       bool sigma_use_pretreatment = false, int hac_lags = 0);

// sigma_e^2 = sum of squared control residuals over
// (T N0 - r (T + N0) + r^2 - K) degrees of freedom.
double sigma_e_hat(const MatrixXd& resid_controls, int r, int K);

struct EffectInference {
    double estimate = 0.0;
    double se = 0.0;
    double V_hat = 0.0;
    double delta = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Variance of the cross-sectional average effect at period t (original index,
// t >= T0), rate min(sqrt N0, sqrt N1).
EffectInference att_variance_t(const TreatmentResult& res, const TreatmentPanel& tp,
                               int t, bool stationary = false, double level = 0.95);

// Variance of one treated unit's effect at one period; the idiosyncratic
// variance at t is the average squared control residual at t.
EffectInference individual_effect_inference(const TreatmentResult& res,
                                            const TreatmentPanel& tp, int j, int t,
                                            bool stationary = false, double level = 0.95);

// Variance of one treated unit's average effect over the treatment period,
// rate min(sqrt T0, sqrt T1).
EffectInference unit_average_effect_inference(const TreatmentResult& res,
                                              const TreatmentPanel& tp, int j,
                                              bool stationary = false, double level = 0.95);

}  // namespace fbitw
