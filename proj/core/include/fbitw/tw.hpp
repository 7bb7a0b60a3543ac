#pragma once

#include <utility>

#include "fbitw/apc.hpp"
#include "fbitw/panel.hpp"

namespace fbitw {

// Output of the tall/wide two-block estimation. Factor and loading rows are
// ordered by the partition's permutations (balanced units/periods first).
struct TwEstimate {
    FactorModel tall;  // F: T x r over all periods, Lambda: N_o x r
    FactorModel wide;  // F: T_o x r, Lambda: N x r over all units
    MatrixXd H_miss;   // r x r re-rotation aligning tall factors with wide loadings
    int r_tall = 0;
    int r_wide = 0;
    int r = 0;
    bool bal_from_tall = false;  // which block's estimate fills the balanced cells
};

// Completed panel in the original row/column order. X_tilde keeps observed
// values bit-exactly and uses the estimated common component elsewhere.
struct ImputedPanel {
    MatrixXd X_tilde;
    MatrixXd C_tilde;
    MaskMatrix mask;
    BlockPartition part;
    std::vector<std::string> series_ids;
    std::vector<std::string> period_ids;

    int T() const { return static_cast<int>(X_tilde.rows()); }
    int N() const { return static_cast<int>(X_tilde.cols()); }
};

// Tall/wide imputation:
//  1. principal components on the tall block (all T periods, N_o complete series),
//  2. principal components on the wide block (T_o complete periods, all N series),
//  3. re-rotation H_miss from regressing tall loadings on the balanced rows of
//     the wide loadings; missing-block component F_tall,m H_miss Lambda_wide,m',
//  4. X_tilde = observed values + estimated component elsewhere.
// r = -1 selects the rank per block by select_r and uses the larger one.
// rpc_gamma > 0 replaces each block's principal components step by its
// soft-thresholded variant with threshold rpc_gamma * (top singular value).
std::pair<ImputedPanel, TwEstimate> impute_tw(const Panel& p, int r,
                                              const BlockPartition& bp,
                                              double rpc_gamma = 0.0);

// Convenience overload that computes the partition itself.
std::pair<ImputedPanel, TwEstimate> impute_tw(const Panel& p, int r = -1);

// Block label and convergence-rate scale delta for the original cell (t, i):
// tall -> min(sqrt(N_o), sqrt(T)), wide -> min(sqrt(N), sqrt(T_o)),
// bal -> the faster of the two, miss -> min(sqrt(N_o), sqrt(T_o)).
std::pair<Block, double> classify_cell(const BlockPartition& bp, int i, int t);

// Largest admissible rank for automatic selection on a block of given size.
int auto_rank_cap(int rows, int cols);

}  // namespace fbitw
