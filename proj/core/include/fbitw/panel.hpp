#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbitw/errors.hpp"

namespace fbitw {

using Eigen::MatrixXd;
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct ScaleStats {
    double mean = 0.0;
    double sd = 1.0;
};

// T x N panel: rows are periods, columns are series. Unobserved cells hold
// NaN so accidental use surfaces immediately.
struct Panel {
    MatrixXd values;
    MaskMatrix mask;  // 1 = observed
    std::vector<std::string> series_ids;
    std::vector<std::string> period_ids;
    int scale_mode = 0;  // 0 raw, 1 demeaned, 2 standardized
    std::vector<ScaleStats> scale_stats;

    int T() const { return static_cast<int>(values.rows()); }
    int N() const { return static_cast<int>(values.cols()); }
    bool observed(int t, int i) const { return mask(t, i) != 0; }
    int observed_count() const;

    // Dimension agreement, at least one observation per series, finite
    // observed values. Throws on violation.
    void validate() const;

    static Panel complete(const MatrixXd& values);
};

// CSV layout: header row = series ids, first column = period ids. Cells equal
// to the sentinel (or empty) are unobserved.
Panel load_csv(const std::string& path, const std::string& missing_sentinel = "NA");
void save_csv(const Panel& p, const std::string& path,
              const std::string& missing_sentinel = "NA");
void save_matrix_csv(const MatrixXd& values, const std::vector<std::string>& series_ids,
                     const std::vector<std::string>& period_ids, const std::string& path);

// Per-series affine rescaling computed from observed entries only.
// mode 0: identity; 1: subtract mean; 2: (x - mean)/sd with sd over n-1.
Panel rescale(const Panel& p, int mode);

// Exact inverse of rescale applied entry-wise to a full matrix (imputed
// entries included).
MatrixXd unscale_matrix(const MatrixXd& values, const std::vector<ScaleStats>& stats,
                        int scale_mode);
Panel unscale(const Panel& p);

enum class Block { Bal, Tall, Wide, Miss };
const char* block_name(Block b);

// Row/column rearrangement: fully observed columns first, then fully observed
// rows first (stable within groups). After permutation, columns < N_o are
// observed at every t and rows < T_o at every i, both maximal.
struct BlockPartition {
    std::vector<int> col_perm;  // col_perm[k] = original series index at position k
    std::vector<int> row_perm;  // row_perm[k] = original period index at position k
    std::vector<int> col_pos;   // col_pos[original index] = position
    std::vector<int> row_pos;
    int N = 0, T = 0;
    int N_o = 0, T_o = 0;

    int N_m() const { return N - N_o; }
    int T_m() const { return T - T_o; }

    // Block label of the original cell (t, i).
    Block label(int t, int i) const {
        const bool in_o_cols = col_pos[i] < N_o;
        const bool in_o_rows = row_pos[t] < T_o;
        if (in_o_cols && in_o_rows) return Block::Bal;
        if (in_o_cols) return Block::Tall;
        if (in_o_rows) return Block::Wide;
        return Block::Miss;
    }
};

BlockPartition partition_blocks(const Panel& p);

// Apply / invert the partition's permutations.
MatrixXd permute_to_blocks(const MatrixXd& m, const BlockPartition& bp);
MaskMatrix permute_to_blocks(const MaskMatrix& m, const BlockPartition& bp);
MatrixXd permute_from_blocks(const MatrixXd& m, const BlockPartition& bp);

struct OrderCheck {
    bool ok = false;
    bool tall_ok = false;  // T * N_o > r (T + N_o)
    bool wide_ok = false;  // T_o * N > r (T_o + N)
    std::string message;
};

OrderCheck check_order_conditions(const BlockPartition& bp, int r);

}  // namespace fbitw
