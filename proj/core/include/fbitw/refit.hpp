#pragma once

#include <vector>

#include "fbitw/tw.hpp"

namespace fbitw {

// Plug-in second-moment objects for the sampling variance of the estimated
// common component. Gamma/Phi are per-period and per-unit r x r matrices in
// the panel's original order; the o-variants restrict sums to the fully
// observed units (for Gamma) and fully observed periods (for Phi).
struct VarianceComponents {
    MatrixXd Sigma_Lambda, Sigma_F;
    MatrixXd Sigma_Lambda_o, Sigma_Lambda_m, Sigma_F_o, Sigma_F_m;
    std::vector<MatrixXd> Gamma;    // per t: (1/N) sum over observed i of l_i l_i' e_it^2
    std::vector<MatrixXd> Gamma_o;  // per t: (1/N_o) sum over fully observed series
    std::vector<MatrixXd> Phi;      // per i: Bartlett HAC of F_t e_it over observed t, 1/T
    std::vector<MatrixXd> Phi_o;    // per i: same over t <= T_o, 1/T_o
    MatrixXd B_Lambda, B_F;
    int hac_lags = 0;
};

struct CellInference {
    double C_hat = 0.0;
    double se = 0.0;
    double delta = 0.0;
    double V_hat = 0.0;  // estimated variance scale (delta^2-normalized)
    double ci_low = 0.0;
    double ci_high = 0.0;
    Block block = Block::Bal;
    bool variance_floored = false;
};

// Principal components re-estimated on the completed matrix X_tilde.
FactorModel reestimate(const ImputedPanel& ip, int r);

// Finite-sample mixing matrices from the re-estimated loadings and factors:
// B_Lambda = (N_o/N) I + (N_m/N)(L_m'L_m/N_m)(L_o'L_o/N_o)^{-1} and the
// analogous B_F from the factor sub-blocks. Both identity when nothing is
// missing on that side.
std::pair<MatrixXd, MatrixXd> compute_B_matrices(const FactorModel& fm,
                                                 const BlockPartition& bp);

// Residuals e_it = X_it - C_hat_it on observed cells feed the plug-ins.
// hac_lags = 0 reduces Phi to (1/T) sum_t F_t F_t' e_it^2.
VarianceComponents estimate_variance_components(const FactorModel& fm,
                                                const ImputedPanel& ip,
                                                const BlockPartition& bp, int hac_lags);

// Standard error and confidence interval for the re-estimated common
// component at original cell (unit i, period t). Rates by block:
// bal min(sqrt N, sqrt T), tall min(sqrt N_o, sqrt T),
// wide min(sqrt N, sqrt T_o), miss min(sqrt N_o, sqrt T_o).
// stationary = true uses the full-sample Gamma/Phi everywhere instead of the
// o-variant sandwiches with B_Lambda / B_F.
CellInference cell_inference(const FactorModel& fm, const VarianceComponents& vc,
                             const BlockPartition& bp, int i, int t, double level,
                             bool stationary = false);

// Per-block error summary against a known truth (simulation use):
// ||C_hat - C0||_F / sqrt(#cells in block) for the four exclusive regions,
// plus the same quantity over the whole matrix and the block-size weights.
struct BlockErrors {
    double bal = 0.0, tall = 0.0, wide = 0.0, miss = 0.0;
    double overall = 0.0;
    double w_bal = 0.0, w_tall = 0.0, w_wide = 0.0, w_miss = 0.0;

    double by_block(Block b) const {
        switch (b) {
            case Block::Bal: return bal;
            case Block::Tall: return tall;
            case Block::Wide: return wide;
            case Block::Miss: return miss;
        }
        return 0.0;
    }
};

BlockErrors block_error_summary(const MatrixXd& C_hat, const MatrixXd& C0,
                                const BlockPartition& bp);

}  // namespace fbitw
