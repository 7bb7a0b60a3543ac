#include "fbitw/tw.hpp"

#include <algorithm>
#include <cmath>

namespace fbitw {

namespace {

FactorModel block_apc(const MatrixXd& X, int r, double rpc_gamma) {
    if (rpc_gamma <= 0.0) return estimate_apc(X, r);
    FactorModel plain = estimate_apc(X, r);
    return soft_threshold_apc(X, r, rpc_gamma * plain.D(0));
}

}  // namespace

int auto_rank_cap(int rows, int cols) {
    return std::max(1, std::min(10, std::min(rows, cols) / 2));
}

std::pair<ImputedPanel, TwEstimate> impute_tw(const Panel& p, int r) {
    return impute_tw(p, r, partition_blocks(p));
}

std::pair<ImputedPanel, TwEstimate> impute_tw(const Panel& p, int r,
                                              const BlockPartition& bp,
                                              double rpc_gamma) {
    p.validate();
    const int T = bp.T, N = bp.N, To = bp.T_o, No = bp.N_o;
    const int Tm = bp.T_m(), Nm = bp.N_m();

    const MatrixXd Xp = permute_to_blocks(p.values, bp);
    const MaskMatrix Mp = permute_to_blocks(p.mask, bp);

    // Masked cells may hold NaN; the tall and wide blocks are complete by
    // construction of the partition.
    MatrixXd tall_block = Xp.leftCols(No);
    MatrixXd wide_block = Xp.topRows(To);

    TwEstimate est;
    if (r < 0) {
        est.r_tall = select_r(tall_block, auto_rank_cap(T, No));
        est.r_wide = select_r(wide_block, auto_rank_cap(To, N));
        est.r = std::max(est.r_tall, est.r_wide);
    } else {
        if (r < 1) throw RankError("impute_tw: r must be >= 1 or -1 for automatic");
        est.r_tall = est.r_wide = est.r = r;
    }

    const OrderCheck oc = check_order_conditions(bp, est.r);
    if (!oc.ok) throw OrderConditionError("impute_tw: " + oc.message);

    est.tall = block_apc(tall_block, est.r, rpc_gamma);
    est.wide = block_apc(wide_block, est.r, rpc_gamma);
    const int re = std::min(est.tall.r, est.wide.r);  // equal to est.r unless rpc shrank one
    est.r = re;

    // H_miss: regress tall loadings on the balanced rows of the wide loadings,
    // so that Lambda_tall,i ~ H_miss Lambda_wide,i over i in the balanced set.
    MatrixXd coef;
    try {
        coef = ols(est.tall.Lambda.leftCols(re), est.wide.Lambda.topRows(No).leftCols(re));
    } catch (const SingularDesign&) {
        throw CollinearLoadings("impute_tw: wide loadings collinear over the balanced units");
    }
    est.H_miss = coef.transpose();

    // Balanced cells use the block with the faster rate; ties go to wide.
    est.bal_from_tall = std::min(No, T) > std::min(N, To);

    MatrixXd Cp(T, N);
    if (est.bal_from_tall)
        Cp.topLeftCorner(To, No).noalias() =
            est.tall.F.topRows(To).leftCols(re) * est.tall.Lambda.leftCols(re).transpose();
    else
        Cp.topLeftCorner(To, No).noalias() =
            est.wide.F.leftCols(re) * est.wide.Lambda.topRows(No).leftCols(re).transpose();
    if (Tm > 0)
        Cp.bottomLeftCorner(Tm, No).noalias() =
            est.tall.F.bottomRows(Tm).leftCols(re) * est.tall.Lambda.leftCols(re).transpose();
    if (Nm > 0)
        Cp.topRightCorner(To, Nm).noalias() =
            est.wide.F.leftCols(re) * est.wide.Lambda.bottomRows(Nm).leftCols(re).transpose();
    if (Tm > 0 && Nm > 0)
        Cp.bottomRightCorner(Tm, Nm).noalias() = est.tall.F.bottomRows(Tm).leftCols(re) *
                                                 est.H_miss *
                                                 est.wide.Lambda.bottomRows(Nm).leftCols(re).transpose();

    MatrixXd Xt = Cp;
    for (int a = 0; a < T; ++a)
        for (int b = 0; b < N; ++b)
            if (Mp(a, b)) Xt(a, b) = Xp(a, b);

    ImputedPanel ip;
    ip.X_tilde = permute_from_blocks(Xt, bp);
    ip.C_tilde = permute_from_blocks(Cp, bp);
    ip.mask = p.mask;
    ip.part = bp;
    ip.series_ids = p.series_ids;
    ip.period_ids = p.period_ids;
    return {std::move(ip), std::move(est)};
}

std::pair<Block, double> classify_cell(const BlockPartition& bp, int i, int t) {
    if (i < 0 || i >= bp.N || t < 0 || t >= bp.T)
        throw InvalidInput("classify_cell: index out of range");
    const Block b = bp.label(t, i);
    const double sN = std::sqrt(static_cast<double>(bp.N));
    const double sT = std::sqrt(static_cast<double>(bp.T));
    const double sNo = std::sqrt(static_cast<double>(bp.N_o));
    const double sTo = std::sqrt(static_cast<double>(bp.T_o));
    double delta = 0.0;
    switch (b) {
        case Block::Tall: delta = std::min(sNo, sT); break;
        case Block::Wide: delta = std::min(sN, sTo); break;
        case Block::Bal: delta = std::max(std::min(sNo, sT), std::min(sN, sTo)); break;
        case Block::Miss: delta = std::min(sNo, sTo); break;
    }
    return {b, delta};
}

}  // namespace fbitw
