#include "doctest.h"

#include "fbitw/apc.hpp"
#include "fbitw/mc.hpp"

#include "test_util.hpp"

using namespace fbitw;
using testutil::random_matrix;

TEST_SUITE("apc") {

TEST_CASE("exact rank-1 data is recovered exactly") {
    Eigen::VectorXd f(2), l(2);
    f << 1, -1;
    l << 2, 2;
    const MatrixXd X = f * l.transpose();
    const FactorModel fm = estimate_apc(X, 1);
    CHECK((fm.common() - X).norm() < 1e-12);
    CHECK(fm.F.squaredNorm() / 2.0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(fm.rank_deficient);
}

TEST_CASE("the zero matrix flags rank deficiency with a zero component") {
    const FactorModel fm = estimate_apc(MatrixXd::Zero(4, 3), 2);
    CHECK(fm.rank_deficient);
    CHECK(fm.common().norm() == 0.0);
}

TEST_CASE("noiseless rank-2 factors reproduce the panel") {
    const MatrixXd F0 = random_matrix(6, 2, 21);
    const MatrixXd L0 = random_matrix(4, 2, 22);
    const MatrixXd X = F0 * L0.transpose();
    const FactorModel fm = estimate_apc(X, 2);
    CHECK((fm.common() - X).norm() / X.norm() < 1e-10);
}

TEST_CASE("normalization invariants hold on noisy data") {
    const MatrixXd X = random_matrix(30, 20, 23);
    const FactorModel fm = estimate_apc(X, 3);

    CHECK((fm.F.transpose() * fm.F / fm.T - MatrixXd::Identity(3, 3)).norm() < 1e-8);

    const MatrixXd LL = fm.Lambda.transpose() * fm.Lambda;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (a != b) CHECK(std::abs(LL(a, b)) < 1e-8 * std::abs(LL(a, a)));

    // Common component equals the rank-r truncated reconstruction.
    const double scale = std::sqrt(30.0 * 20.0);
    const SvdResult s = thin_svd(X / scale, 3);
    const MatrixXd trunc = scale * s.U * s.D.asDiagonal() * s.V.transpose();
    CHECK((fm.common() - trunc).norm() / trunc.norm() < 1e-8);
}

TEST_CASE("the common component does not depend on the factor rotation") {
    const MatrixXd F0 = random_matrix(8, 2, 31);
    const MatrixXd L0 = random_matrix(6, 2, 32);
    MatrixXd A(2, 2);
    A << 2, 1, -0.5, 1.5;  // invertible
    const MatrixXd X1 = F0 * L0.transpose();
    const MatrixXd X2 = (F0 * A) * (L0 * A.inverse().transpose()).transpose();
    REQUIRE((X1 - X2).norm() < 1e-10);
    const FactorModel m1 = estimate_apc(X1, 2);
    const FactorModel m2 = estimate_apc(X2, 2);
    CHECK((m1.common() - m2.common()).norm() < 1e-8);
    CHECK((m1.common() - X1).norm() / X1.norm() < 1e-8);
}

TEST_CASE("select_r finds the exact rank of noiseless data") {
    const MatrixXd F0 = random_matrix(24, 2, 41);
    const MatrixXd L0 = random_matrix(16, 2, 42);
    CHECK(select_r(F0 * L0.transpose(), 6) == 2);
}

TEST_CASE("select_r is consistent on the r=2 error-matrix design") {
    McConfig cfg;
    cfg.seed = 99;
    int hits = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        const Dgp d = generate_dgp(cfg, rep);
        if (select_r(d.X, 6) == 2) ++hits;
    }
    CHECK(hits >= static_cast<int>(0.95 * reps));
}

TEST_CASE("all penalty variants agree on a clear two-factor panel") {
    McConfig cfg;
    cfg.seed = 98;
    const Dgp d = generate_dgp(cfg, 0);
    CHECK(select_r(d.X, 6, IcVariant::ICp1) == 2);
    CHECK(select_r(d.X, 6, IcVariant::ICp2) == 2);
    CHECK(select_r(d.X, 6, IcVariant::ICp3) == 2);
}

TEST_CASE("select_r on pure noise stays in range") {
    McConfig cfg;
    cfg.N = 100;
    cfg.T = 100;
    cfg.r = 1;
    cfg.diag_D = {0.0};
    cfg.noise_var = 1.0;
    cfg.seed = 7;
    const Dgp d = generate_dgp(cfg, 0);
    const int k = select_r(d.X, 6);
    MESSAGE("pure-noise selection picked k=", k);
    CHECK(k >= 1);
    CHECK(k <= 6);
}

TEST_CASE("select_r validates r_max") {
    const MatrixXd X = random_matrix(10, 10, 43);
    CHECK_THROWS_AS(select_r(X, 6), RankError);  // 2 * 6 > 10
}

TEST_CASE("soft threshold with gamma 0 reproduces plain principal components") {
    const MatrixXd X = random_matrix(12, 9, 51);
    const FactorModel a = estimate_apc(X, 3);
    const FactorModel b = soft_threshold_apc(X, 3, 0.0);
    CHECK(a.F == b.F);
    CHECK(a.Lambda == b.Lambda);
    CHECK(a.D == b.D);
}

TEST_CASE("soft threshold halves a rank-1 component at gamma = d/2") {
    Eigen::VectorXd f(3), l(2);
    f << 1, 2, -1;
    l << 1, 3;
    const MatrixXd X = f * l.transpose();
    const FactorModel plain = estimate_apc(X, 1);
    const FactorModel shrunk = soft_threshold_apc(X, 1, plain.D(0) / 2.0);
    CHECK((shrunk.common() - 0.5 * X).norm() < 1e-10);
}

TEST_CASE("soft threshold reduces rank when gamma clears a singular value") {
    const MatrixXd F0 = random_matrix(10, 2, 61);
    MatrixXd L0 = random_matrix(7, 2, 62);
    L0.col(1) *= 0.01;  // second factor nearly gone
    const MatrixXd X = F0 * L0.transpose();
    const FactorModel plain = estimate_apc(X, 2);
    const FactorModel shrunk = soft_threshold_apc(X, 2, plain.D(1) * 1.5);
    CHECK(shrunk.r == 1);
    CHECK(shrunk.rank_deficient);
}

TEST_CASE("soft-threshold component is biased on noisy factor data") {
    McConfig cfg;
    cfg.seed = 4242;
    const Dgp d = generate_dgp(cfg, 0);
    const FactorModel plain = estimate_apc(d.X, 2);
    const FactorModel rpc = soft_threshold_apc(d.X, 2, 0.1 * plain.D(0));
    CHECK((rpc.common() - d.C0).norm() > (plain.common() - d.C0).norm());
}

TEST_CASE("estimate_apc rejects masked input") {
    MatrixXd X = MatrixXd::Ones(4, 4);
    X(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(estimate_apc(X, 1), MaskedInput);
}

}  // TEST_SUITE
