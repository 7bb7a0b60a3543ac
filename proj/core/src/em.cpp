#include "fbitw/em.hpp"

#include <cmath>

namespace fbitw {

namespace {

// Initial fill of the permuted matrix from balanced-block estimates.
MatrixXd balanced_init(const MatrixXd& Xp, const MaskMatrix& Mp, const BlockPartition& bp,
                       int r) {
    const int T = bp.T, N = bp.N, To = bp.T_o, No = bp.N_o;
    if (r > std::min(To, No))
        throw RankError("impute_em: balanced block smaller than the requested rank");

    const FactorModel bal = estimate_apc(Xp.topLeftCorner(To, No), r);

    // Loadings: each series' balanced periods regressed on the balanced factors.
    MatrixXd L(N, r);
    for (int i = 0; i < N; ++i)
        L.row(i) = ols(Xp.col(i).head(To), bal.F).transpose();

    // Factors: each period's balanced series regressed on those loadings.
    MatrixXd F(T, r);
    const MatrixXd Lo = L.topRows(No);
    for (int t = 0; t < T; ++t)
        F.row(t) = ols(Xp.row(t).head(No).transpose(), Lo).transpose();

    MatrixXd filled = F * L.transpose();
    for (int a = 0; a < T; ++a)
        for (int b = 0; b < N; ++b)
            if (Mp(a, b)) filled(a, b) = Xp(a, b);
    return filled;
}

}  // namespace

EmResult impute_em(const Panel& p, int r, EmInit init, double tol, int max_iter) {
    p.validate();
    if (r < 1) throw RankError("impute_em: r must be >= 1");
    if (max_iter < 1) throw InvalidInput("impute_em: max_iter must be >= 1");

    const int T = p.T(), N = p.N();
    MatrixXd filled;
    BlockPartition bp;

    switch (init) {
        case EmInit::Zero: {
            // Zero init needs no balanced block; build a degenerate partition
            // only if one exists, for labeling downstream.
            filled = p.values;
            for (int i = 0; i < N; ++i)
                for (int t = 0; t < T; ++t)
                    if (!p.observed(t, i)) filled(t, i) = 0.0;
            bp = partition_blocks(p);
            break;
        }
        case EmInit::Balanced: {
            bp = partition_blocks(p);
            const MatrixXd Xp = permute_to_blocks(p.values, bp);
            const MaskMatrix Mp = permute_to_blocks(p.mask, bp);
            filled = permute_from_blocks(balanced_init(Xp, Mp, bp, r), bp);
            break;
        }
        case EmInit::Tw: {
            bp = partition_blocks(p);
            filled = impute_tw(p, r, bp).first.X_tilde;
            break;
        }
    }

    EmResult res;
    MatrixXd C_prev;
    for (int k = 1; k <= max_iter; ++k) {
        const FactorModel fm = estimate_apc(filled, r);
        MatrixXd C = fm.common();
        res.objective.push_back((filled - C).squaredNorm());
        res.iterations = k;

        double max_change = 0.0, max_abs = 0.0;
        if (k > 1) {
            for (int i = 0; i < N; ++i)
                for (int t = 0; t < T; ++t) {
                    if (!p.observed(t, i))
                        max_change = std::max(max_change, std::abs(C(t, i) - C_prev(t, i)));
                    max_abs = std::max(max_abs, std::abs(C(t, i)));
                }
        }
        const bool no_missing = p.observed_count() == T * N;
        for (int i = 0; i < N; ++i)
            for (int t = 0; t < T; ++t)
                if (!p.observed(t, i)) filled(t, i) = C(t, i);

        if (no_missing || (k > 1 && max_change / (1.0 + max_abs) < tol)) {
            res.converged = true;
            res.model = fm;
            C_prev = std::move(C);
            break;
        }
        res.model = fm;
        C_prev = std::move(C);
    }

    ImputedPanel ip;
    ip.X_tilde = filled;
    ip.C_tilde = std::move(C_prev);
    ip.mask = p.mask;
    ip.part = bp;
    ip.series_ids = p.series_ids;
    ip.period_ids = p.period_ids;
    res.imputed = std::move(ip);
    return res;
}

}  // namespace fbitw
