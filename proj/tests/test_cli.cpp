#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "fbitw/panel.hpp"

using namespace fbitw;

namespace {

int run(const std::string& args) {
    const int rc = std::system((std::string(FBITW_BIN) + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// Rank-1 panel on the 8x5 hole pattern: value(t,i) = t * i.
void write_rank1_example(const std::string& path) {
    std::string csv = "period,s1,s2,s3,s4,s5\n";
    for (int t = 1; t <= 8; ++t) {
        csv += "t" + std::to_string(t);
        for (int i = 1; i <= 5; ++i) {
            const bool missing = (t == 2 && i == 2) || (t == 6 && i == 4) || (t == 7 && i == 1);
            csv += missing ? ",NA" : "," + std::to_string(static_cast<double>(t * i));
        }
        csv += "\n";
    }
    write(path, csv);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("impute on complete data returns the input panel") {
    Panel p = Panel::complete(Eigen::MatrixXd::Random(8, 6));
    save_csv(p, "cliout_complete.csv");
    REQUIRE(run("impute --input cliout_complete.csv --method tw --r 2 --out cliout_c") == 0);
    const Panel out = load_csv("cliout_c_xtilde.csv");
    for (int i = 0; i < p.N(); ++i)
        for (int t = 0; t < p.T(); ++t)
            CHECK(out.values(t, i) == doctest::Approx(p.values(t, i)).epsilon(1e-10));
}

TEST_CASE("impute fills the rank-1 example holes with the exact values") {
    write_rank1_example("cliout_rank1.csv");
    REQUIRE(run("impute --input cliout_rank1.csv --method tw --r 1 --out cliout_r1") == 0);
    const Panel out = load_csv("cliout_r1_xtilde.csv");
    CHECK(out.values(1, 1) == doctest::Approx(2.0 * 2.0).epsilon(1e-8));
    CHECK(out.values(5, 3) == doctest::Approx(6.0 * 4.0).epsilon(1e-8));
    CHECK(out.values(6, 0) == doctest::Approx(7.0 * 1.0).epsilon(1e-8));

    // Inference file exists with one row per cell plus header.
    const std::string inf = slurp("cliout_r1_inference.csv");
    CHECK(std::count(inf.begin(), inf.end(), '\n') == 8 * 5 + 1);
}

TEST_CASE("impute without a balanced block exits with the input-error code") {
    write("cliout_nobal.csv",
          "period,a,b,c\n"
          "t1,NA,1,2\n"
          "t2,3,NA,4\n"
          "t3,5,6,NA\n");
    CHECK(run("impute --input cliout_nobal.csv --method tw --r 1 --out cliout_nb") == 2);
}

TEST_CASE("missing required flags exit with the usage code") {
    CHECK(run("att --outcomes x.csv --assign y.csv --out z") == 64);
    CHECK(run("impute --method tw") == 64);
}

TEST_CASE("att on a noiseless rank-1 toy recovers the effect") {
    // f_t = t, lambda_i = i, theta = 2 from period 7 on for the last unit.
    std::string csv = "period,u1,u2,u3,u4\n";
    for (int t = 1; t <= 10; ++t) {
        csv += "t" + std::to_string(t);
        for (int i = 1; i <= 4; ++i) {
            double v = static_cast<double>(t * i);
            if (i == 4 && t > 6) v += 2.0;
            csv += "," + std::to_string(v);
        }
        csv += "\n";
    }
    write("cliout_att_y.csv", csv);
    write("cliout_att_a.csv", "unit_id,treated\nu1,0\nu2,0\nu3,0\nu4,1\n");

    REQUIRE(run("att --outcomes cliout_att_y.csv --assign cliout_att_a.csv --t0 6 --r 1 "
                "--out cliout_a") == 0);
    const std::string et = slurp("cliout_a_att_t.csv");
    std::stringstream ss(et);
    std::string line;
    std::getline(ss, line);  // header
    int rows = 0;
    while (std::getline(ss, line)) {
        ++rows;
        const auto c1 = line.find(','), c2 = line.find(',', line.find(',') + 1);
        const double theta = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        CHECK(theta == doctest::Approx(2.0).epsilon(1e-6));
    }
    CHECK(rows == 4);

    // Unknown unit in the assignment file is an input error.
    write("cliout_att_bad.csv", "unit_id,treated\nu1,0\nu2,0\nu3,0\nu9,1\n");
    CHECK(run("att --outcomes cliout_att_y.csv --assign cliout_att_bad.csv --t0 6 --r 1 "
              "--out cliout_ab") == 2);
}

TEST_CASE("simulate emits identical bytes on repeated runs") {
    REQUIRE(run("simulate --table 2 --case 1 --reps 2 --seed 7 --methods tw "
                "--out cliout_s1") == 0);
    REQUIRE(run("simulate --table 2 --case 1 --reps 2 --seed 7 --methods tw "
                "--out cliout_s2") == 0);
    CHECK(slurp("cliout_s1_table2.csv") == slurp("cliout_s2_table2.csv"));
    CHECK(slurp("cliout_s1_table2.csv").find("case,block,method") == 0);
}

}  // TEST_SUITE
