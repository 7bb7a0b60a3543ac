// Command-line front end: impute / att / simulate.
//
// Exit codes: 0 success, 2 input error, 3 estimation error, 64 usage error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fbitw/em.hpp"
#include "fbitw/mc.hpp"
#include "fbitw/refit.hpp"
#include "fbitw/treatment.hpp"

// Automatic rank choice for the EM route: the information criterion applied
// to the zero-filled matrix.
namespace fbitw {
static int select_r_zero_filled(const Panel& p) {
    MatrixXd filled = p.values;
    for (int i = 0; i < p.N(); ++i)
        for (int t = 0; t < p.T(); ++t)
            if (!p.observed(t, i)) filled(t, i) = 0.0;
    return select_r(filled, auto_rank_cap(p.T(), p.N()));
}
}  // namespace fbitw

namespace {

using namespace fbitw;
using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

int parse_rank(const std::string& s) {
    if (s == "auto") return -1;
    try {
        std::size_t used = 0;
        const int r = std::stoi(s, &used);
        if (used != s.size() || r < 1) throw std::invalid_argument(s);
        return r;
    } catch (const std::exception&) {
        throw CLI::ValidationError("--r must be a positive integer or 'auto'");
    }
}

// ---------------------------------------------------------------- impute ---

struct ImputeOpts {
    std::string input, out, method = "tw";
    std::string rank = "auto";
    int scale = 0;
    double ci = 0.95;
    int hac_lags = 0;
    bool stationary = false;
    std::string sentinel = "NA";
};

int run_impute(const ImputeOpts& o) {
    const Panel raw = load_csv(o.input, o.sentinel);
    const Panel ps = rescale(raw, o.scale);
    const BlockPartition bp = partition_blocks(ps);

    int r = parse_rank(o.rank);
    ImputedPanel ip;
    if (o.method == "tw" || o.method == "tw-updated" || o.method == "rpc") {
        auto [ipp, est] = impute_tw(ps, r, bp, o.method == "rpc" ? 0.1 : 0.0);
        ip = std::move(ipp);
        r = est.r;
    } else if (o.method == "em") {
        if (r < 0) r = select_r_zero_filled(ps);
        ip = impute_em(ps, r).imputed;
    } else {
        throw CLI::ValidationError("--method must be tw, tw-updated, em or rpc");
    }

    const FactorModel fm = reestimate(ip, r);
    const MatrixXd C_scaled = (o.method == "tw-updated") ? fm.common() : ip.C_tilde;
    const MatrixXd C_raw = unscale_matrix(C_scaled, ps.scale_stats, o.scale);

    // Completed panel in original units; observed cells stay bit-exact.
    MatrixXd Xt_raw = C_raw;
    for (int i = 0; i < raw.N(); ++i)
        for (int t = 0; t < raw.T(); ++t)
            if (raw.observed(t, i)) Xt_raw(t, i) = raw.values(t, i);

    save_matrix_csv(Xt_raw, raw.series_ids, raw.period_ids, o.out + "_xtilde.csv");
    save_matrix_csv(C_raw, raw.series_ids, raw.period_ids, o.out + "_chat.csv");

    const VarianceComponents vc = estimate_variance_components(fm, ip, bp, o.hac_lags);
    std::ofstream inf(o.out + "_inference.csv");
    if (!inf) throw ParseError("cannot write " + o.out + "_inference.csv");
    inf << "i,t,block,delta,C_hat,se,ci_low,ci_high\n";
    for (int i = 0; i < raw.N(); ++i) {
        const double sd = o.scale == 0 ? 1.0 : ps.scale_stats[i].sd;
        const double mu = o.scale == 0 ? 0.0 : ps.scale_stats[i].mean;
        for (int t = 0; t < raw.T(); ++t) {
            const CellInference cell = cell_inference(fm, vc, bp, i, t, o.ci, o.stationary);
            inf << raw.series_ids[i] << ',' << raw.period_ids[t] << ','
                << block_name(cell.block) << ',' << fmt(cell.delta) << ','
                << fmt(sd * cell.C_hat + mu) << ',' << fmt(sd * cell.se) << ','
                << fmt(sd * cell.ci_low + mu) << ',' << fmt(sd * cell.ci_high + mu) << '\n';
        }
    }
    return 0;
}

// ------------------------------------------------------------------- att ---

struct AttOpts {
    std::string outcomes, assign, out;
    std::vector<std::string> covariates;
    int t0 = 0;
    std::string rank = "auto";
    bool refit = true;
    double ci = 0.95;
    std::string sentinel = "NA";
};

int run_att(const AttOpts& o) {
    const Panel yp = load_csv(o.outcomes, o.sentinel);
    if (yp.observed_count() != yp.T() * yp.N())
        throw InvalidInput("att: outcome panel must be fully observed");
    if (o.t0 < 1 || o.t0 >= yp.T()) throw InvalidInput("att: --t0 out of range");

    // Assignment file: unit_id,treated with treated in {0,1}.
    std::ifstream af(o.assign);
    if (!af) throw ParseError("cannot open " + o.assign);
    std::map<std::string, int> treated;
    std::string line;
    std::getline(af, line);  // header
    while (std::getline(af, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, flag;
        if (!std::getline(ss, id, ',') || !std::getline(ss, flag, ','))
            throw ParseError("att: malformed assignment row: " + line);
        while (!flag.empty() && (flag.back() == '\r' || flag.back() == ' ')) flag.pop_back();
        if (flag != "0" && flag != "1")
            throw ParseError("att: treated flag must be 0 or 1, got: " + flag);
        treated[id] = flag == "1";
    }
    std::set<std::string> panel_ids(yp.series_ids.begin(), yp.series_ids.end());
    if (treated.size() != panel_ids.size())
        throw InvalidInput("att: assignment and outcome files list different unit counts");
    for (const auto& id : yp.series_ids)
        if (!treated.count(id)) throw InvalidInput("att: unit " + id + " missing from assignment");

    std::vector<int> controls, treats;
    for (int i = 0; i < yp.N(); ++i)
        (treated[yp.series_ids[i]] ? treats : controls).push_back(i);
    if (controls.empty() || treats.empty())
        throw InvalidInput("att: need at least one control and one treated unit");

    TreatmentPanel tp;
    tp.N0 = static_cast<int>(controls.size());
    tp.N1 = static_cast<int>(treats.size());
    tp.T0 = o.t0;
    tp.Y.resize(yp.T(), yp.N());
    tp.period_ids = yp.period_ids;
    std::vector<int> order = controls;
    order.insert(order.end(), treats.begin(), treats.end());
    for (int k = 0; k < yp.N(); ++k) {
        tp.Y.col(k) = yp.values.col(order[k]);
        tp.unit_ids.push_back(yp.series_ids[order[k]]);
    }
    for (const auto& path : o.covariates) {
        const Panel xp = load_csv(path, o.sentinel);
        if (xp.T() != yp.T() || xp.N() != yp.N())
            throw InvalidInput("att: covariate panel dimensions differ from outcomes");
        MatrixXd x(yp.T(), yp.N());
        for (int k = 0; k < yp.N(); ++k) x.col(k) = xp.values.col(order[k]);
        tp.X_cov.push_back(std::move(x));
    }

    int r = parse_rank(o.rank);
    if (r < 0) r = select_r(tp.Y.leftCols(tp.N0), auto_rank_cap(tp.T(), tp.N0));

    const TreatmentResult res = att_tw(tp, r, o.refit, o.ci);

    std::ofstream et(o.out + "_att_t.csv");
    if (!et) throw ParseError("cannot write " + o.out + "_att_t.csv");
    et << "t,theta_t,se,ci_low,ci_high\n";
    for (int s = 0; s < tp.T1(); ++s)
        et << tp.period_ids[tp.T0 + s] << ',' << fmt(res.theta_t(s)) << ','
           << fmt(res.se_theta_t(s)) << ',' << fmt(res.ci_low_t(s)) << ','
           << fmt(res.ci_high_t(s)) << '\n';

    std::ofstream eu(o.out + "_att_units.csv");
    if (!eu) throw ParseError("cannot write " + o.out + "_att_units.csv");
    eu << "unit,theta_j,se,ci_low,ci_high\n";
    for (int j = 0; j < tp.N1; ++j)
        eu << tp.unit_ids[tp.N0 + j] << ',' << fmt(res.theta_j(j)) << ','
           << fmt(res.se_theta_j(j)) << ',' << fmt(res.ci_low_j(j)) << ','
           << fmt(res.ci_high_j(j)) << '\n';
    return 0;
}

// -------------------------------------------------------------- simulate ---

struct SimOpts {
    int table = 1;
    std::string case_sel = "1";
    int reps = 500;
    std::uint64_t seed = 0;
    std::string out;
    std::string scales = "0";
    std::string methods = "full,tw,tw_updated,em";
    std::string grid = "5,40,15;20,200,100";
    double rpc_gamma = 0.1;
    int r = 2;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

int run_simulate(const SimOpts& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<int> cases;
    if (o.case_sel == "all")
        cases = {1, 2, 3, 4};
    else
        cases = {std::stoi(o.case_sel)};

    json manifest;
    manifest["version"] = FBITW_VERSION;
    manifest["table"] = o.table;
    manifest["reps"] = o.reps;
    manifest["seed"] = o.seed;
    manifest["cases"] = cases;
    manifest["methods"] = o.methods;
    manifest["scales"] = o.scales;
    manifest["threads_env"] = std::getenv("FBI_TW_THREADS") ? std::getenv("FBI_TW_THREADS") : "";

    McConfig base;
    base.reps = o.reps;
    base.seed = o.seed;
    base.r = o.r;
    base.rpc_gamma = o.rpc_gamma;
    base.methods = split(o.methods, ',');
    base.scale_modes.clear();
    for (const auto& s : split(o.scales, ',')) base.scale_modes.push_back(std::stoi(s));

    int failures = 0;
    if (o.table == 1 || o.table == 2) {
        std::vector<Table1Row> rows1;
        std::vector<Table2Row> rows2;
        for (int c : cases) {
            McConfig cfg = base;
            cfg.case_id = c;
            RunStats st;
            if (o.table == 1) {
                auto rows = run_table1(cfg, &st);
                rows1.insert(rows1.end(), rows.begin(), rows.end());
            } else {
                auto rows = run_table2(cfg, &st);
                rows2.insert(rows2.end(), rows.begin(), rows.end());
            }
            failures += st.reps_failed;
        }
        if (o.table == 1)
            write_table1_csv(rows1, o.out + "_table1.csv");
        else
            write_table2_csv(rows2, o.out + "_table2.csv");
    } else if (o.table == 3) {
        std::vector<AttDesign> grid;
        for (const auto& row : split(o.grid, ';')) {
            const auto parts = split(row, ',');
            if (parts.size() != 3) throw InvalidInput("simulate: --grid rows need N1,N0,T0");
            grid.push_back({std::stoi(parts[0]), std::stoi(parts[1]), std::stoi(parts[2])});
        }
        RunStats st;
        auto rows = run_table3(grid, o.reps, o.seed, o.r, 0, &st);
        failures += st.reps_failed;
        write_table3_csv(rows, o.out + "_table3.csv");
    } else {
        throw CLI::ValidationError("--table must be 1, 2 or 3");
    }

    manifest["replication_failures"] = failures;
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream mf(o.out + "_manifest.json");
    mf << manifest.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tall-wide factor imputation toolkit"};
    app.require_subcommand(1);

    ImputeOpts io;
    auto* imp = app.add_subcommand("impute", "Impute missing panel values");
    imp->add_option("--input", io.input, "Input panel CSV")->required();
    imp->add_option("--method", io.method, "tw | tw-updated | em | rpc");
    imp->add_option("--r", io.rank, "Number of factors or 'auto'");
    imp->add_option("--scale", io.scale, "0 raw, 1 demeaned, 2 standardized")
        ->check(CLI::Range(0, 2));
    imp->add_option("--ci", io.ci, "Confidence level");
    imp->add_option("--hac-lags", io.hac_lags, "Bartlett lags for Phi");
    imp->add_option("--stationary", io.stationary, "Use full-sample variance plug-ins");
    imp->add_option("--sentinel", io.sentinel, "Missing-value sentinel");
    imp->add_option("--out", io.out, "Output file prefix")->required();

    AttOpts ao;
    auto* att = app.add_subcommand("att", "Treatment effects on the treated");
    att->add_option("--outcomes", ao.outcomes, "Outcome panel CSV")->required();
    att->add_option("--assign", ao.assign, "Assignment CSV (unit_id,treated)")->required();
    att->add_option("--t0", ao.t0, "Pre-treatment length")->required();
    att->add_option("--r", ao.rank, "Number of factors or 'auto'");
    att->add_option("--covariates", ao.covariates, "Covariate panel CSVs");
    att->add_option("--refit", ao.refit, "Re-estimate on the completed matrix");
    att->add_option("--ci", ao.ci, "Confidence level");
    att->add_option("--sentinel", ao.sentinel, "Missing-value sentinel");
    att->add_option("--out", ao.out, "Output file prefix")->required();

    SimOpts so;
    auto* sim = app.add_subcommand("simulate", "Simulation studies");
    sim->add_option("--table", so.table, "1, 2 or 3")->required();
    sim->add_option("--case", so.case_sel, "1..4 or all");
    sim->add_option("--reps", so.reps, "Replications");
    sim->add_option("--seed", so.seed, "Base seed");
    sim->add_option("--scales", so.scales, "Comma-separated scale modes");
    sim->add_option("--methods", so.methods, "Comma-separated methods");
    sim->add_option("--grid", so.grid, "Table-3 designs N1,N0,T0 joined by ';'");
    sim->add_option("--rpc-gamma", so.rpc_gamma, "Soft-threshold fraction for rpc");
    sim->add_option("--r", so.r, "Number of factors");
    sim->add_option("--out", so.out, "Output file prefix")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 64;
    }

    try {
        if (*imp) return run_impute(io);
        if (*att) return run_att(ao);
        if (*sim) return run_simulate(so);
    } catch (const fbitw::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const fbitw::EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
