#include "fbitw/mc.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

namespace fbitw {

namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct MidCells {
    // 0-based (t, i) evaluation points, one per block in bal/tall/wide/miss order.
    int t[4], i[4];
};

// Midpoint (lo+hi)/2 of each exclusive block's 1-based index range.
MidCells midpoint_cells(int N, int T, int N_o, int T_o) {
    MidCells m{};
    const int i_o = (1 + N_o) / 2 - 1, i_m = (N_o + 1 + N) / 2 - 1;
    const int t_o = (1 + T_o) / 2 - 1, t_m = (T_o + 1 + T) / 2 - 1;
    m.t[0] = t_o; m.i[0] = i_o;  // bal
    m.t[1] = t_m; m.i[1] = i_o;  // tall
    m.t[2] = t_o; m.i[2] = i_m;  // wide
    m.t[3] = t_m; m.i[3] = i_m;  // miss
    return m;
}

const char* kBlockNames[4] = {"bal", "tall", "wide", "miss"};

// Common component of one method in original units.
MatrixXd method_common(const std::string& method, const McConfig& cfg, const Dgp& dgp,
                       const Panel& masked, const BlockPartition& bp, int mode) {
    if (method == "full") {
        const Panel ps = rescale(Panel::complete(dgp.X), mode);
        const MatrixXd C = estimate_apc(ps.values, cfg.r).common();
        return unscale_matrix(C, ps.scale_stats, mode);
    }
    const Panel ps = rescale(masked, mode);
    if (method == "tw") {
        return unscale_matrix(impute_tw(ps, cfg.r, bp).first.C_tilde, ps.scale_stats, mode);
    }
    if (method == "tw_updated") {
        const ImputedPanel ip = impute_tw(ps, cfg.r, bp).first;
        return unscale_matrix(reestimate(ip, cfg.r).common(), ps.scale_stats, mode);
    }
    if (method == "em") {
        return unscale_matrix(impute_em(ps, cfg.r).imputed.C_tilde, ps.scale_stats, mode);
    }
    if (method == "rpc") {
        return unscale_matrix(impute_tw(ps, cfg.r, bp, cfg.rpc_gamma).first.C_tilde,
                              ps.scale_stats, mode);
    }
    throw InvalidInput("unknown method: " + method);
}

}  // namespace

void McConfig::resolve_case() {
    switch (case_id) {
        case 0: break;  // custom N_o/T_o
        case 1: N_o = 120; T_o = 120; break;
        case 2: N_o = 120; T_o = 60; break;
        case 3: N_o = 60; T_o = 120; break;
        case 4: N_o = 60; T_o = 60; break;
        default: throw InvalidInput("case must be 0..4");
    }
    if (N_o < 1 || N_o >= N || T_o < 1 || T_o >= T)
        throw InvalidInput("missing-data case needs 0 < N_o < N and 0 < T_o < T");
}

Dgp generate_dgp(const McConfig& cfg, int rep) {
    if (static_cast<int>(cfg.diag_D.size()) != cfg.r)
        throw InvalidInput("generate_dgp: diag_D must have r entries");

    Dgp d;
    d.F0.resize(cfg.T, cfg.r);
    d.L0.resize(cfg.N, cfg.r);

    RngStream fs(cfg.seed, rep, StreamTag::Factors);
    for (int t = 0; t < cfg.T; ++t)
        for (int k = 0; k < cfg.r; ++k) d.F0(t, k) = fs.next_normal() * std::sqrt(cfg.diag_D[k]);

    RngStream ls(cfg.seed, rep, StreamTag::Loadings);
    for (int i = 0; i < cfg.N; ++i)
        for (int k = 0; k < cfg.r; ++k) d.L0(i, k) = ls.next_normal() * std::sqrt(cfg.diag_D[k]);

    d.C0 = d.F0 * d.L0.transpose();
    d.X = d.C0;
    if (cfg.noise_var > 0.0) {
        RngStream es(cfg.seed, rep, StreamTag::Noise);
        const double sd = std::sqrt(cfg.noise_var);
        for (int t = 0; t < cfg.T; ++t)
            for (int i = 0; i < cfg.N; ++i) d.X(t, i) += es.next_normal() * sd;
    }
    return d;
}

Panel apply_missing_case(const MatrixXd& X, int N_o, int T_o) {
    Panel p = Panel::complete(X);
    for (int i = N_o; i < X.cols(); ++i)
        for (int t = T_o; t < X.rows(); ++t) {
            p.mask(t, i) = 0;
            p.values(t, i) = kNan;
        }
    return p;
}

double median(std::vector<double> v) {
    if (v.empty()) return kNan;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FBI_TW_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for_reps(int reps, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, reps));
    if (threads == 1) {
        for (int rep = 0; rep < reps; ++rep) fn(rep);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int rep = next.fetch_add(1);
                if (rep >= reps) return;
                try {
                    fn(rep);
                } catch (...) {
                    std::scoped_lock lk(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<Table1Row> run_table1(const McConfig& cfg_in, RunStats* stats) {
    McConfig cfg = cfg_in;
    cfg.resolve_case();
    if (cfg.reps < 1) throw InvalidInput("run_table1: reps must be >= 1");

    const auto t_start = std::chrono::steady_clock::now();
    const int n_modes = static_cast<int>(cfg.scale_modes.size());
    const int n_methods = static_cast<int>(cfg.methods.size());

    // errors[rep][(mode, method)] = {overall, tall, wide, bal, miss}; NaN slot 0 marks failure.
    std::vector<std::vector<std::array<double, 5>>> errors(
        cfg.reps, std::vector<std::array<double, 5>>(n_modes * n_methods,
                                                     {kNan, kNan, kNan, kNan, kNan}));
    std::atomic<int> failed{0};

    parallel_for_reps(cfg.reps, resolve_threads(cfg.threads), [&](int rep) {
        const Dgp dgp = generate_dgp(cfg, rep);
        const Panel masked = apply_missing_case(dgp.X, cfg.N_o, cfg.T_o);
        const BlockPartition bp = partition_blocks(masked);
        for (int m = 0; m < n_modes; ++m) {
            for (int q = 0; q < n_methods; ++q) {
                try {
                    const MatrixXd C =
                        method_common(cfg.methods[q], cfg, dgp, masked, bp, cfg.scale_modes[m]);
                    const BlockErrors be = block_error_summary(C, dgp.C0, bp);
                    errors[rep][m * n_methods + q] = {be.overall, be.tall, be.wide, be.bal,
                                                      be.miss};
                } catch (const Error&) {
                    failed.fetch_add(1);
                }
            }
        }
    });

    std::vector<Table1Row> rows;
    const char* row_blocks[5] = {"full", "tall", "wide", "bal", "miss"};
    for (int m = 0; m < n_modes; ++m)
        for (int q = 0; q < n_methods; ++q)
            for (int b = 0; b < 5; ++b) {
                std::vector<double> vals;
                vals.reserve(cfg.reps);
                for (int rep = 0; rep < cfg.reps; ++rep) {
                    const double v = errors[rep][m * n_methods + q][b];
                    if (std::isfinite(v)) vals.push_back(v);
                }
                rows.push_back({cfg.case_id, row_blocks[b], cfg.methods[q],
                                cfg.scale_modes[m], median(std::move(vals))});
            }

    if (stats) {
        stats->reps_done = cfg.reps;
        stats->reps_failed = failed.load();
        stats->wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    }
    return rows;
}

std::vector<Table2Row> run_table2(const McConfig& cfg_in, RunStats* stats) {
    McConfig cfg = cfg_in;
    cfg.resolve_case();
    if (cfg.reps < 1) throw InvalidInput("run_table2: reps must be >= 1");

    const auto t_start = std::chrono::steady_clock::now();
    const int n_modes = static_cast<int>(cfg.scale_modes.size());
    const int n_methods = static_cast<int>(cfg.methods.size());
    const MidCells cells = midpoint_cells(cfg.N, cfg.T, cfg.N_o, cfg.T_o);

    std::vector<std::vector<std::array<double, 4>>> errs(
        cfg.reps,
        std::vector<std::array<double, 4>>(n_modes * n_methods, {kNan, kNan, kNan, kNan}));
    std::atomic<int> failed{0};

    parallel_for_reps(cfg.reps, resolve_threads(cfg.threads), [&](int rep) {
        const Dgp dgp = generate_dgp(cfg, rep);
        const Panel masked = apply_missing_case(dgp.X, cfg.N_o, cfg.T_o);
        const BlockPartition bp = partition_blocks(masked);
        for (int m = 0; m < n_modes; ++m)
            for (int q = 0; q < n_methods; ++q) {
                try {
                    const MatrixXd C =
                        method_common(cfg.methods[q], cfg, dgp, masked, bp, cfg.scale_modes[m]);
                    for (int b = 0; b < 4; ++b)
                        errs[rep][m * n_methods + q][b] =
                            C(cells.t[b], cells.i[b]) - dgp.C0(cells.t[b], cells.i[b]);
                } catch (const Error&) {
                    failed.fetch_add(1);
                }
            }
    });

    std::vector<Table2Row> rows;
    for (int m = 0; m < n_modes; ++m)
        for (int q = 0; q < n_methods; ++q)
            for (int b = 0; b < 4; ++b) {
                double ss = 0.0;
                int n = 0;
                for (int rep = 0; rep < cfg.reps; ++rep) {
                    const double v = errs[rep][m * n_methods + q][b];
                    if (std::isfinite(v)) {
                        ss += v * v;
                        ++n;
                    }
                }
                rows.push_back({cfg.case_id, kBlockNames[b], cfg.methods[q], cfg.scale_modes[m],
                                n > 0 ? std::sqrt(ss / n) : kNan, cells.i[b] + 1,
                                cells.t[b] + 1});
            }

    if (stats) {
        stats->reps_done = cfg.reps;
        stats->reps_failed = failed.load();
        stats->wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    }
    return rows;
}

std::vector<Table3Row> run_table3(const std::vector<AttDesign>& grid, int reps,
                                  std::uint64_t seed, int r, int threads, RunStats* stats) {
    if (reps < 1) throw InvalidInput("run_table3: reps must be >= 1");
    const auto t_start = std::chrono::steady_clock::now();
    const int T = 200;
    const double theta_true = 1.0;

    std::vector<Table3Row> rows;
    int failed_total = 0;
    for (const AttDesign& gd : grid) {
        if (gd.T0 + 5 > T) throw InvalidInput("run_table3: T0 too close to T");

        McConfig dcfg;
        dcfg.N = gd.N0 + gd.N1;
        dcfg.T = T;
        dcfg.r = r;
        dcfg.diag_D.assign(r, 1.0);
        for (int k = 0; k < r; ++k)
            dcfg.diag_D[k] = 1.0 - k * (1.0 - 1.0 / r) / std::max(1, r - 1);
        dcfg.noise_var = 1.0;
        dcfg.seed = seed + 1000003ULL * static_cast<std::uint64_t>(gd.N1 * 100000 + gd.N0 * 100 + gd.T0);

        struct RepOut {
            double th_it = kNan, th_t = kNan;
            bool cov_it = false, cov_t = false;
            bool ok = false;
        };
        std::vector<RepOut> out(reps);
        std::atomic<int> failed{0};

        parallel_for_reps(reps, resolve_threads(threads), [&](int rep) {
            try {
                const Dgp dgp = generate_dgp(dcfg, rep);
                TreatmentPanel tp;
                tp.N0 = gd.N0;
                tp.N1 = gd.N1;
                tp.T0 = gd.T0;
                tp.Y = dgp.X;
                for (int j = gd.N0; j < dcfg.N; ++j)
                    for (int t = gd.T0; t < T; ++t) tp.Y(t, j) += theta_true;

                const TreatmentResult res = att_tw(tp, r, /*use_refit=*/true, 0.95);
                const int s = 4;  // period T0+5, 1-based
                RepOut& o = out[rep];
                o.th_it = res.theta_it(s, 0);
                o.cov_it = res.ci_low_it(s, 0) <= theta_true && theta_true <= res.ci_high_it(s, 0);
                o.th_t = res.theta_t(s);
                o.cov_t = res.ci_low_t(s) <= theta_true && theta_true <= res.ci_high_t(s);
                o.ok = true;
            } catch (const Error&) {
                failed.fetch_add(1);
            }
        });

        double b_it = 0, b_t = 0, ss_it = 0, ss_t = 0, cov_it = 0, cov_t = 0;
        int n = 0;
        for (const RepOut& o : out) {
            if (!o.ok) continue;
            ++n;
            b_it += o.th_it - theta_true;
            b_t += o.th_t - theta_true;
            ss_it += (o.th_it - theta_true) * (o.th_it - theta_true);
            ss_t += (o.th_t - theta_true) * (o.th_t - theta_true);
            cov_it += o.cov_it ? 1.0 : 0.0;
            cov_t += o.cov_t ? 1.0 : 0.0;
        }
        failed_total += failed.load();
        if (n == 0) throw EstimationError("run_table3: all replications failed");
        rows.push_back({gd.N1, gd.N0, gd.T0, "theta_it", b_it / n, std::sqrt(ss_it / n),
                        cov_it / n});
        rows.push_back({gd.N1, gd.N0, gd.T0, "theta_t", b_t / n, std::sqrt(ss_t / n),
                        cov_t / n});
    }

    if (stats) {
        stats->reps_done = reps * static_cast<int>(grid.size());
        stats->reps_failed = failed_total;
        stats->wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    }
    return rows;
}

void write_table1_csv(const std::vector<Table1Row>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "case,block,method,scale,median_error\n";
    for (const auto& r : rows)
        out << r.case_id << ',' << r.block << ',' << r.method << ',' << r.scale_mode << ','
            << format_value(r.median_error) << '\n';
}

void write_table2_csv(const std::vector<Table2Row>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "case,block,method,scale,rmse,unit,period\n";
    for (const auto& r : rows)
        out << r.case_id << ',' << r.block << ',' << r.method << ',' << r.scale_mode << ','
            << format_value(r.rmse) << ',' << r.unit_index << ',' << r.period_index << '\n';
}

void write_table3_csv(const std::vector<Table3Row>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "n1,n0,t0,estimand,bias,rmse,coverage\n";
    for (const auto& r : rows)
        out << r.N1 << ',' << r.N0 << ',' << r.T0 << ',' << r.estimand << ','
            << format_value(r.bias) << ',' << format_value(r.rmse) << ','
            << format_value(r.coverage) << '\n';
}

}  // namespace fbitw
