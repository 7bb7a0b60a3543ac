#include "fbitw/panel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace fbitw {

namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

int Panel::observed_count() const {
    int n = 0;
    for (int i = 0; i < N(); ++i)
        for (int t = 0; t < T(); ++t)
            if (mask(t, i)) ++n;
    return n;
}

void Panel::validate() const {
    if (values.rows() != mask.rows() || values.cols() != mask.cols())
        throw InvalidInput("panel: mask and values dimensions differ");
    if (!series_ids.empty() && static_cast<int>(series_ids.size()) != N())
        throw InvalidInput("panel: series id count differs from column count");
    if (!period_ids.empty() && static_cast<int>(period_ids.size()) != T())
        throw InvalidInput("panel: period id count differs from row count");
    for (int i = 0; i < N(); ++i) {
        int obs = 0;
        for (int t = 0; t < T(); ++t) {
            if (mask(t, i)) {
                ++obs;
                if (!std::isfinite(values(t, i)))
                    throw InvalidInput("panel: non-finite observed value");
            }
        }
        if (obs == 0) throw EmptySeries("panel: series with no observations");
    }
}

Panel Panel::complete(const MatrixXd& values) {
    Panel p;
    p.values = values;
    p.mask = MaskMatrix::Ones(values.rows(), values.cols());
    p.series_ids.resize(values.cols());
    p.period_ids.resize(values.rows());
    for (int i = 0; i < values.cols(); ++i) p.series_ids[i] = "s" + std::to_string(i + 1);
    for (int t = 0; t < values.rows(); ++t) p.period_ids[t] = "t" + std::to_string(t + 1);
    return p;
}

Panel load_csv(const std::string& path, const std::string& missing_sentinel) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path);
    auto header = split_line(line);
    if (header.size() < 2) throw ParseError("header needs at least one series column");

    Panel p;
    for (std::size_t j = 1; j < header.size(); ++j) p.series_ids.push_back(trim(header[j]));
    const std::size_t ncols = header.size();

    std::vector<std::vector<double>> rows;
    std::vector<std::vector<std::uint8_t>> obs;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != ncols)
            throw ParseError("ragged row in " + path + ": expected " +
                             std::to_string(ncols) + " fields, got " +
                             std::to_string(fields.size()));
        p.period_ids.push_back(trim(fields[0]));
        std::vector<double> vals(ncols - 1, kNan);
        std::vector<std::uint8_t> o(ncols - 1, 0);
        for (std::size_t j = 1; j < ncols; ++j) {
            const std::string cell = trim(fields[j]);
            if (cell.empty() || cell == missing_sentinel) continue;
            try {
                std::size_t used = 0;
                vals[j - 1] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError("unparseable cell '" + cell + "' in " + path);
            }
            o[j - 1] = 1;
        }
        rows.push_back(std::move(vals));
        obs.push_back(std::move(o));
    }
    if (rows.empty()) throw ParseError("no data rows in " + path);

    const int T = static_cast<int>(rows.size());
    const int N = static_cast<int>(ncols - 1);
    p.values.resize(T, N);
    p.mask.resize(T, N);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i) {
            p.values(t, i) = rows[t][i];
            p.mask(t, i) = obs[t][i];
        }
    p.validate();
    return p;
}

void save_csv(const Panel& p, const std::string& path, const std::string& missing_sentinel) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "period";
    for (const auto& id : p.series_ids) out << ',' << id;
    out << '\n';
    for (int t = 0; t < p.T(); ++t) {
        out << p.period_ids[t];
        for (int i = 0; i < p.N(); ++i) {
            out << ',';
            if (p.observed(t, i))
                out << format_value(p.values(t, i));
            else
                out << missing_sentinel;
        }
        out << '\n';
    }
}

void save_matrix_csv(const MatrixXd& values, const std::vector<std::string>& series_ids,
                     const std::vector<std::string>& period_ids, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "period";
    for (const auto& id : series_ids) out << ',' << id;
    out << '\n';
    for (int t = 0; t < values.rows(); ++t) {
        out << period_ids[t];
        for (int i = 0; i < values.cols(); ++i) out << ',' << format_value(values(t, i));
        out << '\n';
    }
}

Panel rescale(const Panel& p, int mode) {
    if (mode < 0 || mode > 2) throw InvalidInput("rescale: mode must be 0, 1 or 2");
    Panel out = p;
    out.scale_mode = mode;
    out.scale_stats.assign(p.N(), ScaleStats{});
    if (mode == 0) return out;

    for (int i = 0; i < p.N(); ++i) {
        double sum = 0.0;
        int n = 0;
        for (int t = 0; t < p.T(); ++t)
            if (p.observed(t, i)) {
                sum += p.values(t, i);
                ++n;
            }
        const double mean = sum / n;
        double sd = 1.0;
        if (mode == 2) {
            if (n < 2) throw DegenerateSeries("rescale: standardizing needs >= 2 observations");
            double ss = 0.0;
            for (int t = 0; t < p.T(); ++t)
                if (p.observed(t, i)) {
                    const double d = p.values(t, i) - mean;
                    ss += d * d;
                }
            sd = std::sqrt(ss / (n - 1));
            if (!(sd > 0.0)) throw DegenerateSeries("rescale: constant series cannot be standardized");
        }
        out.scale_stats[i] = {mean, sd};
        for (int t = 0; t < p.T(); ++t)
            if (p.observed(t, i)) out.values(t, i) = (p.values(t, i) - mean) / sd;
    }
    return out;
}

MatrixXd unscale_matrix(const MatrixXd& values, const std::vector<ScaleStats>& stats,
                        int scale_mode) {
    if (scale_mode == 0) return values;
    if (stats.size() != static_cast<std::size_t>(values.cols()))
        throw StateError("unscale: missing scale stats");
    MatrixXd out = values;
    for (int i = 0; i < values.cols(); ++i)
        out.col(i) = values.col(i) * stats[i].sd + MatrixXd::Constant(values.rows(), 1, stats[i].mean);
    return out;
}

Panel unscale(const Panel& p) {
    if (p.scale_mode == 0) return p;
    Panel out = p;
    out.values = unscale_matrix(p.values, p.scale_stats, p.scale_mode);
    out.scale_mode = 0;
    out.scale_stats.clear();
    // NaN cells stay NaN through the affine map; restore them explicitly anyway.
    for (int i = 0; i < p.N(); ++i)
        for (int t = 0; t < p.T(); ++t)
            if (!p.observed(t, i)) out.values(t, i) = p.values(t, i);
    return out;
}

const char* block_name(Block b) {
    switch (b) {
        case Block::Bal: return "bal";
        case Block::Tall: return "tall";
        case Block::Wide: return "wide";
        case Block::Miss: return "miss";
    }
    return "?";
}

BlockPartition partition_blocks(const Panel& p) {
    BlockPartition bp;
    bp.T = p.T();
    bp.N = p.N();

    std::vector<int> full_cols, part_cols, full_rows, part_rows;
    for (int i = 0; i < p.N(); ++i) {
        bool full = true;
        for (int t = 0; t < p.T(); ++t)
            if (!p.observed(t, i)) {
                full = false;
                break;
            }
        (full ? full_cols : part_cols).push_back(i);
    }
    for (int t = 0; t < p.T(); ++t) {
        bool full = true;
        for (int i = 0; i < p.N(); ++i)
            if (!p.observed(t, i)) {
                full = false;
                break;
            }
        (full ? full_rows : part_rows).push_back(t);
    }

    bp.N_o = static_cast<int>(full_cols.size());
    bp.T_o = static_cast<int>(full_rows.size());
    if (bp.N_o == 0 || bp.T_o == 0)
        throw NoBalancedBlock("partition_blocks: no fully observed " +
                              std::string(bp.N_o == 0 ? "series" : "periods"));

    bp.col_perm = full_cols;
    bp.col_perm.insert(bp.col_perm.end(), part_cols.begin(), part_cols.end());
    bp.row_perm = full_rows;
    bp.row_perm.insert(bp.row_perm.end(), part_rows.begin(), part_rows.end());

    bp.col_pos.assign(bp.N, 0);
    for (int k = 0; k < bp.N; ++k) bp.col_pos[bp.col_perm[k]] = k;
    bp.row_pos.assign(bp.T, 0);
    for (int k = 0; k < bp.T; ++k) bp.row_pos[bp.row_perm[k]] = k;
    return bp;
}

MatrixXd permute_to_blocks(const MatrixXd& m, const BlockPartition& bp) {
    MatrixXd out(m.rows(), m.cols());
    for (int a = 0; a < m.rows(); ++a)
        for (int b = 0; b < m.cols(); ++b) out(a, b) = m(bp.row_perm[a], bp.col_perm[b]);
    return out;
}

MaskMatrix permute_to_blocks(const MaskMatrix& m, const BlockPartition& bp) {
    MaskMatrix out(m.rows(), m.cols());
    for (int a = 0; a < m.rows(); ++a)
        for (int b = 0; b < m.cols(); ++b) out(a, b) = m(bp.row_perm[a], bp.col_perm[b]);
    return out;
}

MatrixXd permute_from_blocks(const MatrixXd& m, const BlockPartition& bp) {
    MatrixXd out(m.rows(), m.cols());
    for (int a = 0; a < m.rows(); ++a)
        for (int b = 0; b < m.cols(); ++b) out(bp.row_perm[a], bp.col_perm[b]) = m(a, b);
    return out;
}

OrderCheck check_order_conditions(const BlockPartition& bp, int r) {
    if (r < 1) throw InvalidInput("check_order_conditions: r must be >= 1");
    OrderCheck c;
    const long long T = bp.T, N = bp.N, To = bp.T_o, No = bp.N_o;
    c.tall_ok = T * No > static_cast<long long>(r) * (T + No);
    c.wide_ok = To * N > static_cast<long long>(r) * (To + N);
    c.ok = c.tall_ok && c.wide_ok;
    if (!c.tall_ok)
        c.message += "tall block too thin: T*N_o <= r*(T+N_o); ";
    if (!c.wide_ok)
        c.message += "wide block too short: T_o*N <= r*(T_o+N); ";
    if (c.ok) c.message = "ok";
    return c;
}

}  // namespace fbitw
