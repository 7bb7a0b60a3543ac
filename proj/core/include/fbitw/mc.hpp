#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fbitw/em.hpp"
#include "fbitw/refit.hpp"
#include "fbitw/rng.hpp"
#include "fbitw/treatment.hpp"

namespace fbitw {

// Simulation design. The four missing-data cases share N = T = 200:
// case 1 (N_o,T_o) = (120,120), case 2 (120,60), case 3 (60,120),
// case 4 (60,60); case 0 uses the custom (N_o,T_o) fields.
struct McConfig {
    int N = 200;
    int T = 200;
    int r = 2;
    std::vector<double> diag_D = {1.0, 0.5};
    double noise_var = 2.5;
    int reps = 500;
    std::uint64_t seed = 0;
    int case_id = 1;
    int N_o = -1;
    int T_o = -1;
    std::vector<std::string> methods = {"full", "tw", "tw_updated", "em"};
    std::vector<int> scale_modes = {0};
    double rpc_gamma = 0.1;  // threshold as a fraction of the top singular value
    int threads = 0;         // 0 = FBI_TW_THREADS, else hardware

    void resolve_case();  // fills N_o/T_o from case_id
};

struct Dgp {
    MatrixXd X, C0, F0, L0;
};

// X = F0 L0' + e with F0 and L0 rows drawn N(0, diag(diag_D)) and e
// N(0, noise_var), all on streams keyed by (seed, rep, purpose).
Dgp generate_dgp(const McConfig& cfg, int rep);

// Mask exactly the (i > N_o, t > T_o) rectangle.
Panel apply_missing_case(const MatrixXd& X, int N_o, int T_o);

struct Table1Row {
    int case_id;
    std::string block;  // full | tall | wide | bal | miss
    std::string method;
    int scale_mode;
    double median_error;
};

struct Table2Row {
    int case_id;
    std::string block;
    std::string method;
    int scale_mode;
    double rmse;
    int unit_index;    // 1-based evaluation cell
    int period_index;
};

struct Table3Row {
    int N1, N0, T0;
    std::string estimand;  // theta_it | theta_t
    double bias;
    double rmse;
    double coverage;
};

struct RunStats {
    int reps_done = 0;
    int reps_failed = 0;
    double wall_seconds = 0.0;
};

std::vector<Table1Row> run_table1(const McConfig& cfg, RunStats* stats = nullptr);
std::vector<Table2Row> run_table2(const McConfig& cfg, RunStats* stats = nullptr);

struct AttDesign {
    int N1, N0, T0;
};

// Treatment-effect study: unit effect theta = 1, idiosyncratic noise N(0,1),
// no covariates, T = 200 periods, factors as in the error-matrix design.
// Evaluates theta_it at (N0+1, T0+5) and theta_t at T0+5.
std::vector<Table3Row> run_table3(const std::vector<AttDesign>& grid, int reps,
                                  std::uint64_t seed, int r = 2, int threads = 0,
                                  RunStats* stats = nullptr);

void write_table1_csv(const std::vector<Table1Row>& rows, const std::string& path);
void write_table2_csv(const std::vector<Table2Row>& rows, const std::string& path);
void write_table3_csv(const std::vector<Table3Row>& rows, const std::string& path);

// Median with the usual midpoint convention for even sizes.
double median(std::vector<double> v);

// Worker count: explicit > 0 wins, else FBI_TW_THREADS, else hardware.
int resolve_threads(int requested);

// Deterministic parallel map: runs fn(rep) for rep in [0, reps) and keeps
// results ordered by rep regardless of scheduling.
void parallel_for_reps(int reps, int threads, const std::function<void(int)>& fn);

}  // namespace fbitw
