#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "levykin/dms.hpp"

using namespace levykin;
using namespace levykin::dms;

TEST_CASE("rate constants: closed-form substitutions") {
    const auto r = rate_bound(1.0, 1.0, 1.0, 1.0);
    REQUIRE(r.eps0 == 0.25);
    REQUIRE(r.lambda0 == 0.05);
    REQUIRE(r.bigC == 5.0 / 3.0);

    const auto r2 = rate_bound(1.0, 1.0, 1.0, 4.0);
    REQUIRE(r2.eps0 == Catch::Approx(0.1).margin(1e-15));
    REQUIRE(r2.lambda0 == Catch::Approx(0.1 / (2.0 * 1.05 * 5.0)).epsilon(1e-12));
    REQUIRE(r2.bigC == Catch::Approx(2.1 / 1.9).epsilon(1e-12));

    REQUIRE_THROWS_AS(rate_bound(0.0, 1.0, 1.0, 1.0), ValidationError);

    // C > 1 and lambda0 > 0 for arbitrary positive inputs
    RngStream rng(8);
    for (int i = 0; i < 50; ++i) {
        const auto rr = rate_bound(0.1 + 5.0 * rng.uniform(), 0.1 + 5.0 * rng.uniform(),
                                   0.1 + 5.0 * rng.uniform(), 0.1 + 10.0 * rng.uniform());
        REQUIRE(rr.bigC > 1.0);
        REQUIRE(rr.lambda0 > 0.0);
        REQUIRE(rr.eps0 < std::sqrt(rr.lambda));
    }
}

TEST_CASE("rate bound is monotone in alpha1") {
    double prev = rate_bound(0.5, 1.3, 0.8, 2.0).lambda0;
    for (double a1 : {0.8, 1.2, 2.0, 4.0, 8.0}) {
        const double cur = rate_bound(a1, 1.3, 0.8, 2.0).lambda0;
        REQUIRE(cur <= prev + 1e-15);
        prev = cur;
    }
}

TEST_CASE("lambda optimization against a grid oracle") {
    const double a1 = 1.0, a2 = 1.0, a3 = 1.0;
    auto [lam, rates] = optimize_lambda(a1, a2, a3, 0.01, 100.0);

    double best = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double l = 0.01 * std::pow(100.0 / 0.01, i / 10000.0);
        best = std::max(best, rate_bound(a1, a2, a3, l).lambda0);
    }
    REQUIRE(rates.lambda0 == Catch::Approx(best).epsilon(1e-3));
    REQUIRE(rates.lambda0 >= rate_bound(a1, a2, a3, 1.0).lambda0 - 1e-14);

    auto [lam2, rates2] = optimize_lambda(a1, a2, a3, 0.005, 200.0);
    REQUIRE(rates2.lambda0 >= rates.lambda0 - 1e-12);
}

TEST_CASE("matrix models satisfy the structural hypotheses by construction") {
    for (uint64_t seed : {1ull, 7ull, 23ull}) {
        const auto md = build_matrix_model(8, 3, seed);
        REQUIRE((md.L0 + md.L0.transpose()).norm() < 1e-12);
        REQUIRE((md.pi * md.L0 * md.pi).norm() < 1e-12);
        REQUIRE((md.L1 * md.pi).norm() < 1e-12);
        REQUIRE((md.pi * md.L1).norm() < 1e-12);
    }
    // seeded builds are reproducible bit-exactly
    const auto a = build_matrix_model(10, 4, 99);
    const auto b = build_matrix_model(10, 4, 99);
    REQUIRE((a.L0 - b.L0).norm() == 0.0);
    REQUIRE((a.L1 - b.L1).norm() == 0.0);

    REQUIRE_THROWS_AS(build_matrix_model(4, 3, 1), ValidationError);  // k > n - k
}

TEST_CASE("alpha estimation on the explicit 2x2 model") {
    MatrixXd A(1, 1), J(1, 1), K(1, 1);
    A << 1.0;
    J << 0.0;
    K << -1.0;
    const auto md = build_matrix_model_blocks(A, J, K);
    const auto est = estimate_alphas(md, 1.0);
    REQUIRE(est.h3_feasible);
    REQUIRE(est.alpha1 == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(est.alpha2 == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(est.alpha3 > 0.0);

    // (H4) holds with the computed alpha3 on random vectors, and the bilinear
    // bound is attained under exhaustive random maximization
    const MatrixXd b = b_lambda_matrix(md, 1.0);
    const MatrixXd l = md.L0 + md.L1;
    RngStream rng(5);
    double worst_ratio = 0.0;
    for (int i = 0; i < 100; ++i) {
        VectorXd f(2);
        f << rng.normal(), rng.normal();
        const VectorXd pif = md.pi * f, co = f - pif;
        const double lhs = std::fabs(f.dot(b * l * co));
        REQUIRE(lhs <= est.alpha3 * pif.norm() * co.norm() + 1e-12);
        if (pif.norm() > 1e-9 && co.norm() > 1e-9)
            worst_ratio = std::max(worst_ratio, lhs / (pif.norm() * co.norm()));
    }
    REQUIRE(worst_ratio == Catch::Approx(est.alpha3).epsilon(1e-2));
}

TEST_CASE("alpha scalings") {
    const auto md = build_matrix_model(8, 3, 17);
    const auto est = estimate_alphas(md, 1.0);

    auto md2 = md;
    md2.L1 *= 2.0;
    REQUIRE(estimate_alphas(md2, 1.0).alpha1 == Catch::Approx(0.5 * est.alpha1).epsilon(1e-10));

    auto md3 = md;
    md3.L0.block(0, md.k, md.k, md.n - md.k) *= 2.0;
    md3.L0.block(md.k, 0, md.n - md.k, md.k) *= 2.0;
    REQUIRE(estimate_alphas(md3, 1.0).alpha2 == Catch::Approx(0.25 * est.alpha2).epsilon(1e-10));
}

TEST_CASE("degenerate dissipation is reported as infeasible") {
    auto md = build_matrix_model(6, 2, 3);
    md.L1.setZero();
    const auto est = estimate_alphas(md, 1.0);
    REQUIRE_FALSE(est.h3_feasible);
}

TEST_CASE("decay certification over seeded models") {
    std::vector<double> t_grid;
    for (int i = 0; i <= 50; ++i) t_grid.push_back(50.0 * i / 50.0);

    RngStream model_rng(2024);
    int certified = 0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        const int n = 4 + (int)(seed % 7);  // n <= 10
        const int k = std::max(1, (int)(seed % (n / 2 + 1)));
        const auto md = build_matrix_model(n, std::min(k, n - k), seed);
        const auto est = estimate_alphas(md, 1.0);
        REQUIRE(est.h3_feasible);
        const auto rates = rate_bound(est.alpha1, est.alpha2, est.alpha3, 1.0);

        std::vector<VectorXd> fs;
        for (int i = 0; i < 20; ++i) {
            VectorXd f(md.n);
            for (int j = 0; j < md.n; ++j) f(j) = model_rng.normal();
            fs.push_back(f);
        }
        const auto rep = verify_decay(md, rates, t_grid, fs, 1e-9);
        REQUIRE(rep.pass);
        ++certified;

        // bound is trivially true at t = 0 because C > 1
        REQUIRE(rep.rows.front().bound >= 1.0);
    }
    REQUIRE(certified == 20);
}

TEST_CASE("matrix exponential against the eigendecomposition oracle") {
    const auto md = build_matrix_model(9, 4, 5);
    const MatrixXd l = md.L0 + md.L1;
    RngStream rng(6);
    VectorXd f(md.n);
    for (int j = 0; j < md.n; ++j) f(j) = rng.normal();
    for (double t : {0.0, 0.7, 3.0, 17.0, 50.0}) {
        const VectorXd via_expm = (t * l).exp() * f;
        const VectorXd via_eig = expm_apply_eig(l, t, f);
        REQUIRE((via_expm - via_eig).norm() <= 1e-9 * std::max(1.0, via_eig.norm()));
    }
}

TEST_CASE("modified entropy equivalence") {
    RngStream rng(77);
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        const auto md = build_matrix_model(8, 3, 1000 + seed);
        const double lambda = 0.5 + 2.0 * rng.uniform();
        const auto est = estimate_alphas(md, lambda);
        const auto rates = rate_bound(est.alpha1, est.alpha2, est.alpha3, lambda);
        std::vector<VectorXd> fs;
        for (int i = 0; i < 200; ++i) {
            VectorXd f(md.n);
            for (int j = 0; j < md.n; ++j) f(j) = rng.normal();
            fs.push_back(f);
        }
        const auto rep = entropy_equivalence_check(md, lambda, rates.eps0, fs);
        REQUIRE(rep.equivalence_valid);
        REQUIRE(rep.max_lower_violation <= 1e-12);
        REQUIRE(rep.max_upper_violation <= 1e-12);
    }

    // eps0 beyond sqrt(lambda) voids the equivalence band
    const auto md = build_matrix_model(6, 2, 4);
    std::vector<VectorXd> fs = {VectorXd::Ones(md.n)};
    const auto bad = entropy_equivalence_check(md, 1.0, 2.0, fs);
    REQUIRE_FALSE(bad.equivalence_valid);
}

TEST_CASE("auxiliary operator bounds") {
    const auto md = build_matrix_model(8, 3, 42);
    for (double lambda : {0.5, 1.0, 3.0}) {
        const MatrixXd b = b_lambda_matrix(md, lambda);
        // pi B = B
        REQUIRE((md.pi * b - b).norm() < 1e-12 * std::max(1.0, b.norm()));
        RngStream rng(11);
        for (int i = 0; i < 100; ++i) {
            VectorXd f(md.n);
            for (int j = 0; j < md.n; ++j) f(j) = rng.normal();
            const double bf = (b * f).norm();
            const double co = (f - md.pi * f).norm();
            REQUIRE(bf <= 0.5 / std::sqrt(lambda) * co + 1e-12);
            REQUIRE(std::fabs(f.dot(b * f)) <= 0.5 / std::sqrt(lambda) * f.norm() * co + 1e-12);
        }
    }
}

TEST_CASE("gaussian poincare constant from the discretized generator") {
    const double c1 = poincare_mu1_1d([](double x) { return 0.5 * x * x; }, 8.0, 801);
    REQUIRE(c1 >= 0.95);
    REQUIRE(c1 <= 1.05);

    // doubling the curvature scales U = 2 x^2: the gap becomes 4
    const double c1b = poincare_mu1_1d([](double x) { return 2.0 * x * x; }, 5.0, 801);
    REQUIRE(c1b == Catch::Approx(0.25 * c1).epsilon(0.03));

    // grid refinement stability within 1%
    const double c1f = poincare_mu1_1d([](double x) { return 0.5 * x * x; }, 8.0, 1601);
    REQUIRE(std::fabs(c1f - c1) / c1f <= 0.01);
}

TEST_CASE("nonlocal poincare constant of the heavy-tailed marginal") {
    ModelSpec s;
    s.d = 1;
    s.alpha = 1.5;
    s.beta = 1.5;
    const auto pair = build_model<1>(s);
    const auto np = poincare_mu2_nonlocal_1d(pair, 1.5, 60.0, 301);
    REQUIRE(np.c2 > 0.0);
    REQUIRE(std::isfinite(np.c2));
    REQUIRE(np.rel_change <= 0.05);

    // observation: the gap grows (c2 shrinks) when beta increases at fixed alpha
    s.beta = 2.25;
    const auto pair2 = build_model<1>(s);
    const auto np2 = poincare_mu2_nonlocal_1d(pair2, 1.5, 60.0, 301);
    REQUIRE(np2.c2 < np.c2);
}
