#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "levykin/model.hpp"
#include "levykin/rng.hpp"

using namespace levykin;

static ModelSpec base_spec() {
    ModelSpec s;
    s.d = 1;
    s.alpha = 1.5;
    s.beta = 1.5;
    return s;
}

TEST_CASE("log radial family closed forms") {
    auto pair = build_model<1>(base_spec());
    REQUIRE(pair.Phi(Vec<1>{0.0}) == 0.0);  // log 1 = 0
    // grad Phi(v) = (d+beta) v / (1+v^2): at v=1 with d=1, beta=1.5 -> 1.25
    REQUIRE(pair.grad_Phi(Vec<1>{1.0})[0] == Catch::Approx(1.25).margin(1e-14));
    // psi'(u) = (d+beta)/(2(1+u)): psi'(0) = 1.25
    REQUIRE(pair.dpsi(0.0) == Catch::Approx(1.25).margin(1e-14));
}

TEST_CASE("spec validation rejects out-of-domain parameters") {
    ModelSpec s = base_spec();
    s.alpha = 0.0;
    REQUIRE_THROWS_AS(s.validate(), ValidationError);
    s = base_spec();
    s.alpha = 2.0;
    REQUIRE_THROWS_AS(s.validate(), ValidationError);
    s = base_spec();
    s.alpha = 0.9;  // d = 1 <= 2 - 0.9
    REQUIRE_THROWS_AS(s.validate(), ValidationError);
    s = base_spec();
    s.beta = 1.2;  // < alpha
    REQUIRE_THROWS_AS(s.validate(), ValidationError);
    s = base_spec();
    s.beta = 3.0;  // >= 2 alpha
    REQUIRE_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("gradient consistency with finite differences") {
    RngStream rng(42);
    auto pair1 = build_model<1>(base_spec());
    for (int i = 0; i < 30; ++i) {
        Vec<1> x{4.0 * (rng.uniform() - 0.5)};
        const auto g = pair1.grad_U(x);
        const auto fg = fd_gradient<1>([&](const Vec<1>& p) { return pair1.U(p); }, x);
        REQUIRE(std::fabs(g[0] - fg[0]) <= 1e-6 * (1.0 + std::fabs(g[0])));
        const auto gp = pair1.grad_Phi(x);
        const auto fgp = fd_gradient<1>([&](const Vec<1>& p) { return pair1.Phi(p); }, x);
        REQUIRE(std::fabs(gp[0] - fgp[0]) <= 1e-6 * (1.0 + std::fabs(gp[0])));
        // hessian of Phi against FD of grad Phi
        const auto h = pair1.hess_Phi(x);
        const auto fh = fd_gradient<1>([&](const Vec<1>& p) { return pair1.grad_Phi(p)[0]; }, x);
        REQUIRE(std::fabs(h[0][0] - fh[0]) <= 1e-6 * (1.0 + std::fabs(h[0][0])));
    }

    ModelSpec s2;
    s2.d = 2;
    s2.alpha = 1.5;
    s2.beta = 2.0;
    s2.u_family = UFamily::QuadraticPlusBump;
    s2.bump_amp = 0.7;
    s2.bump_width = 1.3;
    auto pair2 = build_model<2>(s2);
    for (int i = 0; i < 20; ++i) {
        Vec<2> x{3.0 * (rng.uniform() - 0.5), 3.0 * (rng.uniform() - 0.5)};
        const auto g = pair2.grad_U(x);
        const auto fg = fd_gradient<2>([&](const Vec<2>& p) { return pair2.U(p); }, x);
        REQUIRE(norm(sub(g, fg)) <= 1e-6 * (1.0 + norm(g)));
        // hessian row consistency
        for (int r = 0; r < 2; ++r) {
            const auto hr = fd_gradient<2>([&](const Vec<2>& p) { return pair2.grad_U(p)[r]; }, x);
            for (int c = 0; c < 2; ++c)
                REQUIRE(std::fabs(pair2.hess_U(x)[r][c] - hr[c]) <= 1e-5 * (1.0 + std::fabs(hr[c])));
        }
    }
}

TEST_CASE("radiality under rotations in d=2") {
    ModelSpec s2;
    s2.d = 2;
    s2.alpha = 1.5;
    s2.beta = 1.8;
    auto pair = build_model<2>(s2);
    RngStream rng(5);
    for (int i = 0; i < 20; ++i) {
        Vec<2> v{3.0 * (rng.uniform() - 0.5), 3.0 * (rng.uniform() - 0.5)};
        const double th = 2.0 * special::pi * rng.uniform();
        Vec<2> vr{std::cos(th) * v[0] - std::sin(th) * v[1],
                  std::sin(th) * v[0] + std::cos(th) * v[1]};
        REQUIRE(pair.Phi(vr) == Catch::Approx(pair.Phi(v)).epsilon(1e-13));
    }
}

TEST_CASE("radial profile is non-decreasing") {
    auto pair = build_model<1>(base_spec());
    double prev = pair.psi(0.0);
    for (int i = 1; i <= 200; ++i) {
        const double r = 0.2 * i;
        const double cur = pair.psi(r * r);
        REQUIRE(cur >= prev - 1e-14);
        prev = cur;
    }
}

TEST_CASE("assumption checker on the built-in pair") {
    auto pair = build_model<1>(base_spec());
    SamplingGrid grid;
    auto rep = check_assumptions(pair, grid);

    // <grad U, x>/|x| = |x| for U = x^2/2: minimum over rings is the smallest radius
    REQUIRE(rep.au2_radial_drift.verdict == Verdict::Pass);
    REQUIRE(rep.au2_radial_drift.value == Catch::Approx(10.0).epsilon(1e-12));

    // beta < 2 alpha: the A_Phi3 integrand has radial exponent beta - 2 alpha - 1 < -1
    REQUIRE(rep.aphi3_integral.verdict == Verdict::Pass);
    // beta >= alpha: e^{Phi}/|v|^{d+alpha} ~ |v|^{beta-alpha} stays bounded below
    REQUIRE(rep.aphi4_liminf.verdict == Verdict::Pass);
    REQUIRE(rep.aphi1_monotone.verdict == Verdict::Pass);
    REQUIRE(rep.au1_hessian_bound.verdict == Verdict::Pass);
    REQUIRE(rep.au1_integrability.verdict == Verdict::Pass);
}

TEST_CASE("assumption checker flags a divergent A_Phi3 configuration") {
    // beta = 2 alpha sits exactly at the divergence threshold; beta above it fails.
    const double d = 1.0, alpha = 1.5, beta = 3.4;
    const double c = 0.5 * (d + beta);
    auto pair = build_custom_model<1>(
        alpha, [](const Vec<1>& x) { return 0.5 * x[0] * x[0]; },
        [](const Vec<1>& x) { return x; }, [](const Vec<1>&) { return identity_mat<1>(); },
        [c](double u) { return c * std::log1p(u); }, [c](double u) { return c / (1.0 + u); },
        [c](double u) { const double t = 1.0 + u; return -c / (t * t); },
        [c](double u) { const double t = 1.0 + u; return 2.0 * c / (t * t * t); }, d + beta);
    pair.u_gaussian_scale = 1.0;
    SamplingGrid grid;
    auto rep = check_assumptions(pair, grid);
    REQUIRE(rep.aphi3_integral.verdict == Verdict::Fail);
    // beta > alpha keeps A_Phi4 fine
    REQUIRE(rep.aphi4_liminf.verdict == Verdict::Pass);
}
