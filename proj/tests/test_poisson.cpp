#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "levykin/poisson.hpp"

using namespace levykin;

namespace {

PotentialPair<1> ou_pair() {
    ModelSpec s;
    s.d = 1;
    s.alpha = 1.5;
    s.beta = 1.5;
    return build_model<1>(s);
}

}  // namespace

TEST_CASE("feynman-kac against the hermite eigenfunctions of L_OD") {
    const auto pair = ou_pair();

    // h = 1: (I - L_OD) 1 = 1, so f = 1 up to the e^{-horizon} truncation
    auto e1 = solve_poisson_fk<1>(pair, [](const Vec<1>&) { return 1.0; }, Vec<1>{0.3}, 2000,
                                  1e-3, 20.0, 11);
    REQUIRE(std::fabs(e1.value - 1.0) <= 3.0 * e1.std_error + 1e-7);

    // h = x is an eigenfunction with eigenvalue -1: f = x/2, so f(0.7) = 0.35
    auto e2 = solve_poisson_fk<1>(pair, [](const Vec<1>& x) { return x[0]; }, Vec<1>{0.7}, 20000,
                                  1e-3, 20.0, 12);
    REQUIRE(std::fabs(e2.value - 0.35) <= 3.0 * e2.std_error);

    // h = x^2 - 1 has eigenvalue -2: f = h/3, zero at x = 1
    auto e3 = solve_poisson_fk<1>(pair, [](const Vec<1>& x) { return x[0] * x[0] - 1.0; },
                                  Vec<1>{1.0}, 20000, 1e-3, 20.0, 13);
    REQUIRE(std::fabs(e3.value) <= 3.0 * e3.std_error);

    // dt-halving (weak-order) check: estimates agree within combined errors
    auto e4 = solve_poisson_fk<1>(pair, [](const Vec<1>& x) { return x[0]; }, Vec<1>{0.7}, 20000,
                                  5e-4, 20.0, 14);
    REQUIRE(std::fabs(e2.value - e4.value) <= 3.0 * (e2.std_error + e4.std_error));

    REQUIRE_THROWS_AS(solve_poisson_fk<1>(pair, [](const Vec<1>&) { return 1.0; }, Vec<1>{0.0},
                                          100, 1e-3, 10.0, 1),
                      ValidationError);  // horizon < 20
}

TEST_CASE("finite-difference resolvent solve") {
    const auto pair = ou_pair();

    auto s1 = solve_poisson_fd_1d(pair, [](double) { return 1.0; }, 8.0, 1601);
    for (size_t i = 0; i < s1.x.size(); ++i)
        REQUIRE(s1.f[i] == Catch::Approx(1.0).margin(1e-10));

    // h = x: exact solution x/2 on the interior
    auto s2 = solve_poisson_fd_1d(pair, [](double x) { return x; }, 8.0, 1601);
    for (double xq : {-3.0, -1.2, 0.0, 0.7, 2.9})
        REQUIRE(s2.eval(xq) == Catch::Approx(0.5 * xq).margin(1e-6));
    REQUIRE(s2.residual_inf < 1e-10);

    // second-order convergence measured on a quartic forcing, whose exact
    // solution (x^4 + 4x^2 + 8)/5 has a nonvanishing fourth derivative
    auto exact4 = [](double x) { return (std::pow(x, 4) + 4.0 * x * x + 8.0) / 5.0; };
    auto err_at = [&](int n) {
        auto s = solve_poisson_fd_1d(pair, [](double x) { return std::pow(x, 4); }, 8.0, n);
        double e = 0.0;
        for (size_t i = 0; i < s.x.size(); ++i)
            if (std::fabs(s.x[i]) <= 3.0) e = std::max(e, std::fabs(s.f[i] - exact4(s.x[i])));
        return e;
    };
    const double e_coarse = err_at(201), e_fine = err_at(401);  // nested grids
    const double slope = std::log2(e_coarse / e_fine);
    REQUIRE(slope >= 1.8);
    REQUIRE(slope <= 2.2);

    // maximum principle: ||f||_inf <= ||h||_inf for bounded h
    auto s3 = solve_poisson_fd_1d(pair, [](double x) { return std::sin(x); }, 8.0, 1201);
    double fmax = 0.0;
    for (double v : s3.f) fmax = std::max(fmax, std::fabs(v));
    REQUIRE(fmax <= 1.0 + 1e-8);

    REQUIRE_THROWS_AS(solve_poisson_fd_1d(pair, [](double) { return 1.0; }, 3.0, 100),
                      ValidationError);  // grid narrower than 6 sd
}

TEST_CASE("feynman-kac matches the finite-difference oracle") {
    const auto pair = ou_pair();
    const std::vector<std::function<double(double)>> hs = {
        [](double x) { return x; }, [](double x) { return x * x - 1.0; },
        [](double x) { return std::sin(x); }};
    const std::vector<double> pts = {-1.5, -0.5, 0.0, 0.8, 1.9};
    int k = 0;
    for (const auto& h : hs) {
        auto fd = solve_poisson_fd_1d(pair, h, 8.0, 1601);
        for (double xq : pts) {
            auto fk = solve_poisson_fk<1>(pair, [&](const Vec<1>& x) { return h(x[0]); },
                                          Vec<1>{xq}, 8000, 1e-3, 20.0, 100 + k++);
            REQUIRE(std::fabs(fk.value - fd.eval(xq)) <= 3.0 * fk.std_error + 2e-3);
        }
    }
}

TEST_CASE("c* and its trace-identity cross-check") {
    // both routes agree to 1e-6 for the log-radial family across (d, beta)
    {
        ModelSpec s;
        s.d = 1;
        s.alpha = 1.5;
        for (double beta : {1.5, 2.25}) {
            s.beta = beta;
            const auto r = c_star(build_model<1>(s));
            REQUIRE(r.rel_gap <= 1e-6);
            REQUIRE(r.value > 0.0);
        }
    }
    {
        ModelSpec s;
        s.d = 2;
        s.alpha = 1.5;
        for (double beta : {1.5, 2.25}) {
            s.beta = beta;
            const auto r = c_star(build_model<2>(s));
            REQUIRE(r.rel_gap <= 1e-6);
            REQUIRE(r.value > 0.0);
        }
    }
    {
        ModelSpec s;
        s.d = 3;
        s.alpha = 1.5;
        for (double beta : {1.5, 2.25}) {
            s.beta = beta;
            const auto r = c_star(build_model<3>(s));
            REQUIRE(r.rel_gap <= 1e-6);
            REQUIRE(r.value > 0.0);
        }
    }

    // d = 2, beta = 2.0: independent dense tan-substitution oracle
    ModelSpec s;
    s.d = 2;
    s.alpha = 1.5;
    s.beta = 2.0;
    const auto pair = build_model<2>(s);
    const auto r = c_star(pair);
    const double cphi = 2.0 * special::pi *
                        integrate_gl_composite(
                            [&](double th) {
                                const double rad = std::tan(th);
                                const double sec2 = 1.0 + rad * rad;
                                return rad * std::exp(-pair.psi(rad * rad)) * sec2;
                            },
                            0.0, 0.5 * special::pi - 1e-10, 16, 200);
    const double iu = integrate_gl_composite(
        [&](double th) {
            const double u = std::tan(th);
            const double sec2 = 1.0 + u * u;
            const double dp = pair.dpsi(u);
            return u * dp * dp * std::exp(-pair.psi(u)) * sec2;
        },
        0.0, 0.5 * special::pi - 1e-10, 16, 200);
    const double oracle = 2.0 * special::unit_ball_volume(2) / cphi * iu;
    REQUIRE(r.value == Catch::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("pi L0^2 pi = c* L_OD pi residual") {
    const auto pair = ou_pair();

    PositionFunction<1> cf;
    cf.value = [](const Vec<1>&) { return 2.0; };
    cf.grad = [](const Vec<1>&) { return Vec<1>{0.0}; };
    cf.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    REQUIRE(pi_L0sq_pi_residual(pair, cf, Vec<1>{0.4}) < 1e-14);

    PositionFunction<1> lin;
    lin.value = [](const Vec<1>& x) { return x[0]; };
    lin.grad = [](const Vec<1>&) { return Vec<1>{1.0}; };
    lin.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    REQUIRE(pi_L0sq_pi_residual(pair, lin, Vec<1>{1.3}) <= 1e-6);

    PositionFunction<1> sf;
    sf.value = [](const Vec<1>& x) { return std::sin(x[0]); };
    sf.grad = [](const Vec<1>& x) { return Vec<1>{std::cos(x[0])}; };
    sf.hess = [](const Vec<1>& x) {
        Mat<1> m;
        m[0][0] = -std::sin(x[0]);
        return m;
    };
    REQUIRE(pi_L0sq_pi_residual(pair, sf, Vec<1>{0.3}) <= 1e-4);

    // residual decreases under quadrature refinement
    MarginalGrid coarse;
    coarse.mu2_core_order = 8;
    coarse.mu2_order = 4;
    coarse.mu2_radius = 50.0;
    MarginalGrid mid;
    mid.mu2_core_order = 16;
    mid.mu2_order = 8;
    mid.mu2_radius = 1e3;
    const double r_coarse = pi_L0sq_pi_residual(pair, sf, Vec<1>{0.3}, coarse);
    const double r_mid = pi_L0sq_pi_residual(pair, sf, Vec<1>{0.3}, mid);
    const double r_fine = pi_L0sq_pi_residual(pair, sf, Vec<1>{0.3});
    REQUIRE(r_mid <= r_coarse);
    REQUIRE(r_fine <= r_mid);
}
