#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "levykin/generator.hpp"
#include "levykin/suites.hpp"

using namespace levykin;

namespace {

PotentialPair<1> standard_pair() {
    ModelSpec s;
    s.d = 1;
    s.alpha = 1.5;
    s.beta = 1.5;
    return build_model<1>(s);
}

// smooth bump supported on [c - w, c + w]
VelocityFunction<1> bump(double c, double w) {
    auto val = [c, w](const Vec<1>& v) {
        const double t = (v[0] - c) / w;
        if (std::fabs(t) >= 1.0) return 0.0;
        return std::exp(-1.0 / (1.0 - t * t));
    };
    auto grd = [c, w, val](const Vec<1>& v) {
        const double t = (v[0] - c) / w;
        if (std::fabs(t) >= 1.0) return Vec<1>{0.0};
        const double d = 1.0 - t * t;
        return Vec<1>{val(v) * (-2.0 * t / (d * d)) / w};
    };
    VelocityFunction<1> g;
    g.value = val;
    g.grad = grd;
    g.hess = [](const Vec<1>&) { return zero_mat<1>(); };  // unused
    g.tail_exponent = std::numeric_limits<double>::infinity();
    return g;
}

VelocityFunction<1> gaussian_vf() {
    VelocityFunction<1> g;
    g.value = [](const Vec<1>& v) { return std::exp(-v[0] * v[0]); };
    g.grad = [](const Vec<1>& v) { return Vec<1>{-2.0 * v[0] * std::exp(-v[0] * v[0])}; };
    g.hess = [](const Vec<1>& v) {
        Mat<1> h;
        h[0][0] = (4.0 * v[0] * v[0] - 2.0) * std::exp(-v[0] * v[0]);
        return h;
    };
    g.tail_exponent = std::numeric_limits<double>::infinity();
    return g;
}

// Fourier oracle for the gaussian fractional laplacian (see test_fracops)
double fourier_gaussian_oracle(double alpha, double x) {
    const double q = 1.0 / (1.0 + alpha);
    const double head = integrate_gl_composite(
        [&](double t) {
            const double u = std::pow(t, q);
            return q * std::exp(-0.25 * u * u) * std::cos(u * x);
        },
        0.0, 1.0, 24, 8);
    const double rest = integrate_gl_composite(
        [&](double u) { return std::pow(u, alpha) * std::exp(-0.25 * u * u) * std::cos(u * x); },
        1.0, 40.0, 16, 120);
    return (head + rest) / std::sqrt(special::pi);
}

template <typename H>
double kernel_gradient_oracle(H&& h, double v, double alpha) {
    const double q = 2.0 / (2.0 - alpha);
    const double smax = std::pow(600.0, 1.0 / q);
    const double integral = integrate_gl_composite(
        [&](double s) {
            const double u = std::pow(s, q);
            return q * std::pow(s, q - 1.0) * std::pow(u, -alpha) * (h(v - u) - h(v + u));
        },
        0.0, smax, 16, 400);
    const double cc = riesz_constant(1, 2.0 - alpha) * (1.0 + alpha - 2.0);
    return -cc * integral;
}

}  // namespace

TEST_CASE("transport term L0") {
    const auto pair = standard_pair();
    TestFunction<1> cf;
    cf.value = [](const Vec<1>&, const Vec<1>&) { return 2.0; };
    cf.grad_x = [](const Vec<1>&, const Vec<1>&) { return Vec<1>{0.0}; };
    cf.grad_v = [](const Vec<1>&, const Vec<1>&) { return Vec<1>{0.0}; };
    REQUIRE(apply_L0(pair, cf, Vec<1>{0.3}, Vec<1>{-0.4}) == 0.0);

    TestFunction<1> fx;
    fx.value = [](const Vec<1>& x, const Vec<1>&) { return x[0]; };
    fx.grad_x = [](const Vec<1>&, const Vec<1>&) { return Vec<1>{1.0}; };
    fx.grad_v = [](const Vec<1>&, const Vec<1>&) { return Vec<1>{0.0}; };
    // L0 x = grad Phi(v): equals 1.25 at v = 1 for the log-radial pair
    REQUIRE(apply_L0(pair, fx, Vec<1>{0.0}, Vec<1>{1.0}) == Catch::Approx(1.25).margin(1e-14));

    TestFunction<1> fv;
    fv.value = [](const Vec<1>&, const Vec<1>& v) { return v[0]; };
    fv.grad_x = [](const Vec<1>&, const Vec<1>&) { return Vec<1>{0.0}; };
    fv.grad_v = [](const Vec<1>&, const Vec<1>&) { return Vec<1>{1.0}; };
    // L0 v = -grad U(x) = -x
    REQUIRE(apply_L0(pair, fv, Vec<1>{2.0}, Vec<1>{0.0}) == Catch::Approx(-2.0).margin(1e-14));
}

TEST_CASE("velocity generator L1") {
    const auto pair = standard_pair();
    QuadratureSpec q;

    VelocityFunction<1> cf;
    cf.value = [](const Vec<1>&) { return 1.0; };
    cf.grad = [](const Vec<1>&) { return Vec<1>{0.0}; };
    cf.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    cf.tail_exponent = 0.0;
    REQUIRE(std::fabs(apply_L1(pair, cf, Vec<1>{0.7}, 1.5, q)) < 1e-10);

    // at v = 0 with even f the drift term vanishes: L1 f = -(-Delta)^{alpha/2} f(0)
    const auto g = gaussian_vf();
    const Field<1> gf{g.value, g.tail_exponent};
    const double lhs = apply_L1(pair, g, Vec<1>{0.0}, 1.5, q);
    REQUIRE(lhs == Catch::Approx(-frac_laplacian(gf, Vec<1>{0.0}, 1.5, q)).margin(1e-12));

    // dense-grid oracle at v = 0.5: b_Phi from the kernel-gradient reference,
    // the nonlocal term from the fourier oracle of the gaussian
    auto hval = [&](double w) { return pair.exp_neg_Phi(Vec<1>{w}); };
    const double b_ref = std::exp(pair.Phi(Vec<1>{0.5})) * kernel_gradient_oracle(hval, 0.5, 1.5);
    const double want = b_ref * g.grad(Vec<1>{0.5})[0] - fourier_gaussian_oracle(1.5, 0.5);
    const double got = apply_L1(pair, g, Vec<1>{0.5}, 1.5, q);
    REQUIRE(got == Catch::Approx(want).epsilon(1e-3));
}

TEST_CASE("adjoint L1*: annihilates constants via the kernel identity") {
    const auto pair = standard_pair();
    QuadratureSpec q;
    VelocityFunction<1> cf;
    cf.value = [](const Vec<1>&) { return 1.0; };
    cf.grad = [](const Vec<1>&) { return Vec<1>{0.0}; };
    cf.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    cf.tail_exponent = 0.0;
    for (double v : {0.0, 0.8, -1.7}) {
        const double r = apply_L1_star(pair, cf, Vec<1>{v}, 1.5, q);
        REQUIRE(std::fabs(r) < 2e-3);
    }
}

TEST_CASE("adjointness of L1 and L1* under mu2") {
    const auto pair = standard_pair();
    QuadratureSpec q;
    q.nodes_shell = 16;
    q.nodes_inner = 48;
    const auto f = bump(0.4, 1.2), g = bump(-0.6, 1.0);
    const auto nz = normalizations(pair);
    MarginalGrid grid;
    grid.mu2_radius = 100.0;  // integrands vanish outside the supports anyway
    grid.mu2_core_order = 64;
    grid.mu2_order = 24;
    const auto nodes = mu2_nodes<1>(pair, nz, grid);
    double lhs = 0.0, rhs = 0.0;
    for (size_t j = 0; j < nodes.pts.size(); ++j) {
        const auto vj = nodes.pts[j];
        if (g.value(vj) != 0.0) lhs += nodes.w[j] * apply_L1(pair, f, vj, 1.5, q) * g.value(vj);
        if (f.value(vj) != 0.0) rhs += nodes.w[j] * f.value(vj) * apply_L1_star(pair, g, vj, 1.5, q);
    }
    REQUIRE(lhs == Catch::Approx(rhs).epsilon(2e-3));
}

TEST_CASE("dissipativity of the symmetrized velocity generator") {
    const auto pair = standard_pair();
    QuadratureSpec q;
    for (auto& f : {bump(0.0, 1.5), bump(0.8, 0.9)}) {
        const double quad = quadratic_form_L1(pair, f, 1.5, q);  // = -mu2(f (L1+L1*) f)
        REQUIRE(quad > 0.0);
    }
}

TEST_CASE("overdamped generator L_OD") {
    const auto pair = standard_pair();
    PositionFunction<1> lin;
    lin.value = [](const Vec<1>& x) { return x[0]; };
    lin.grad = [](const Vec<1>&) { return Vec<1>{1.0}; };
    lin.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    REQUIRE(apply_L_OD(pair, lin, Vec<1>{3.0}) == Catch::Approx(-3.0).margin(1e-14));

    PositionFunction<1> herm2;
    herm2.value = [](const Vec<1>& x) { return x[0] * x[0] - 1.0; };
    herm2.grad = [](const Vec<1>& x) { return Vec<1>{2.0 * x[0]}; };
    herm2.hess = [](const Vec<1>&) { Mat<1> m; m[0][0] = 2.0; return m; };
    REQUIRE(apply_L_OD(pair, herm2, Vec<1>{1.0}) == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(apply_L_OD(pair, herm2, Vec<1>{0.5}) == Catch::Approx(2.0 - 2.0 * 0.25).margin(1e-14));

    PositionFunction<1> cf;
    cf.value = [](const Vec<1>&) { return 5.0; };
    cf.grad = [](const Vec<1>&) { return Vec<1>{0.0}; };
    cf.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    REQUIRE(apply_L_OD(pair, cf, Vec<1>{0.2}) == 0.0);
}

TEST_CASE("weak-form invariance of mu") {
    const auto pair = standard_pair();
    QuadratureSpec q;
    MarginalGrid grid;
    grid.mu2_radius = 1e4;

    auto mk = [](std::function<double(double, double)> val,
                 std::function<double(double, double)> dx,
                 std::function<double(double, double)> dv, double tail) {
        TestFunction<1> f;
        f.value = [val](const Vec<1>& x, const Vec<1>& v) { return val(x[0], v[0]); };
        f.grad_x = [dx](const Vec<1>& x, const Vec<1>& v) { return Vec<1>{dx(x[0], v[0])}; };
        f.grad_v = [dv](const Vec<1>& x, const Vec<1>& v) { return Vec<1>{dv(x[0], v[0])}; };
        f.tail_v = tail;
        return f;
    };

    // constants are annihilated identically
    auto cf = mk([](double, double) { return 1.0; }, [](double, double) { return 0.0; },
                 [](double, double) { return 0.0; }, 0.0);
    const auto r0 = invariance_residual(pair, cf, 1.5, q, grid);
    REQUIRE(std::fabs(r0.residual) < 1e-12);

    // position-only functions: the integrand is odd in v under the radial mu2
    auto ax = mk([](double x, double) { return std::sin(x); },
                 [](double x, double) { return std::cos(x); }, [](double, double) { return 0.0; },
                 0.0);
    const auto r1 = invariance_residual(pair, ax, 1.5, q, grid);
    REQUIRE(std::fabs(r1.residual) < 1e-10);

    // mixed test function
    auto fm = mk([](double x, double v) { return std::sin(x) * std::exp(-v * v); },
                 [](double x, double v) { return std::cos(x) * std::exp(-v * v); },
                 [](double x, double v) { return std::sin(x) * (-2.0 * v) * std::exp(-v * v); },
                 std::numeric_limits<double>::infinity());
    const auto r2 = invariance_residual(pair, fm, 1.5, q, grid, 5e-3);
    REQUIRE(r2.conclusive);
    REQUIRE(std::fabs(r2.residual) <= 5e-3);
}

TEST_CASE("L0 is antisymmetric in L2(mu) and pi L0 pi annihilates") {
    const auto pair = standard_pair();
    const auto mu = MuQuadrature<1>::make(pair);

    auto mk = [](std::function<double(double, double)> val,
                 std::function<double(double, double)> dx,
                 std::function<double(double, double)> dv) {
        TestFunction<1> f;
        f.value = [val](const Vec<1>& x, const Vec<1>& v) { return val(x[0], v[0]); };
        f.grad_x = [dx](const Vec<1>& x, const Vec<1>& v) { return Vec<1>{dx(x[0], v[0])}; };
        f.grad_v = [dv](const Vec<1>& x, const Vec<1>& v) { return Vec<1>{dv(x[0], v[0])}; };
        return f;
    };
    auto f = mk([](double x, double v) { return std::sin(x) * std::tanh(v); },
                [](double x, double v) { return std::cos(x) * std::tanh(v); },
                [](double x, double v) {
                    const double c = std::cosh(v);
                    return std::sin(x) / (c * c);
                });
    auto g = mk([](double x, double v) { return std::cos(x) * std::exp(-v * v); },
                [](double x, double v) { return -std::sin(x) * std::exp(-v * v); },
                [](double x, double v) { return std::cos(x) * (-2.0 * v) * std::exp(-v * v); });

    double cross = 0.0;
    for (size_t i = 0; i < mu.x_nodes.pts.size(); ++i)
        for (size_t j = 0; j < mu.v_nodes.pts.size(); ++j) {
            const double w = mu.x_nodes.w[i] * mu.v_nodes.w[j];
            const auto &x = mu.x_nodes.pts[i], &v = mu.v_nodes.pts[j];
            cross += w * (f.value(x, v) * apply_L0(pair, g, x, v) +
                          g.value(x, v) * apply_L0(pair, f, x, v));
        }
    REQUIRE(std::fabs(cross) < 1e-6);

    // (pi L0 pi a)(x) = int <grad Phi(v), a'(x)> mu2(dv) = 0 by odd symmetry
    double pi_l0_pi = 0.0;
    for (size_t j = 0; j < mu.v_nodes.pts.size(); ++j)
        pi_l0_pi += mu.v_nodes.w[j] * pair.grad_Phi(mu.v_nodes.pts[j])[0];
    REQUIRE(std::fabs(pi_l0_pi) < 1e-10);
}

TEST_CASE("nonlocal dirichlet form") {
    const auto pair = standard_pair();
    QuadratureSpec q;
    MarginalGrid grid;
    grid.mu2_radius = 1e4;

    VelocityFunction<1> cf;
    cf.value = [](const Vec<1>&) { return 4.0; };
    cf.grad = [](const Vec<1>&) { return Vec<1>{0.0}; };
    cf.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    cf.tail_exponent = 0.0;
    REQUIRE(std::fabs(dirichlet_form(pair, cf, 1.5, q, grid)) < 1e-12);

    VelocityFunction<1> th;
    th.value = [](const Vec<1>& v) { return std::tanh(v[0]); };
    th.grad = [](const Vec<1>& v) {
        const double c = std::cosh(v[0]);
        return Vec<1>{1.0 / (c * c)};
    };
    th.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    th.tail_exponent = 0.0;
    const double e1 = dirichlet_form(pair, th, 1.5, q, grid);

    VelocityFunction<1> th2 = th;
    th2.value = [](const Vec<1>& v) { return 2.0 * std::tanh(v[0]); };
    const double e2 = dirichlet_form(pair, th2, 1.5, q, grid);
    REQUIRE(e2 == Catch::Approx(4.0 * e1).epsilon(1e-9));

    // independent double-quadrature oracle: outer mu2 via tan substitution,
    // inner via the flattening substitution u = s^{2/(2-alpha)}
    const double alpha = 1.5, beta = 1.5;
    const double c_phi = std::sqrt(special::pi) * special::gamma_fn(0.5 * beta) /
                         special::gamma_fn(0.5 * (1.0 + beta));
    auto inner_int = [&](double vb) {
        const double qq = 2.0 / (2.0 - alpha);
        const double u_min = 1e-5, smax = std::pow(400.0, 1.0 / qq);
        auto sq = [&](double u) {
            const double a = std::tanh(vb + u) - std::tanh(vb);
            const double b = std::tanh(vb - u) - std::tanh(vb);
            return a * a + b * b;
        };
        const double head = sq(u_min) / (u_min * u_min) * std::pow(u_min, 2.0 - alpha) / (2.0 - alpha);
        return head + integrate_gl_composite(
                          [&](double s) {
                              const double u = std::pow(s, qq);
                              return qq * std::pow(s, qq - 1.0) * std::pow(u, -1.0 - alpha) * sq(u);
                          },
                          std::pow(u_min, 1.0 / qq), smax, 12, 300);
    };
    const double oracle = integrate_gl_composite(
        [&](double th_) {
            const double vb = std::tan(th_);
            const double sec2 = 1.0 + vb * vb;
            const double dens = std::pow(1.0 + vb * vb, -0.5 * (1.0 + beta)) / c_phi;
            return inner_int(vb) * dens * sec2;
        },
        -0.5 * special::pi + 1e-9, 0.5 * special::pi - 1e-9, 16, 60);
    REQUIRE(e1 == Catch::Approx(oracle).epsilon(1e-3));
}

TEST_CASE("carre-du-champ identity gap") {
    const auto pair = standard_pair();
    QuadratureSpec q_lhs;
    QuadratureSpec q_rhs;
    q_rhs.inner_split = 0.07;  // independent discretizations on the two sides
    q_rhs.nodes_inner = 40;
    q_rhs.nodes_shell = 16;

    const auto f = bump(0.0, 2.0);
    const double gap = carre_du_champ_gap(pair, f, 1.5, q_lhs, q_rhs);
    REQUIRE(gap <= 1e-3);

    // the gap is invariant under f -> -f (both sides are quadratic forms)
    auto neg = f;
    neg.value = [f](const Vec<1>& v) { return -f.value(v); };
    neg.grad = [f](const Vec<1>& v) { return scale(f.grad(v), -1.0); };
    const double gap_neg = carre_du_champ_gap(pair, neg, 1.5, q_lhs, q_rhs);
    REQUIRE(gap_neg == Catch::Approx(gap).margin(1e-12));

    // constants: both sides vanish; the raw quadratic form sits at numerical
    // noise and the 1e-8 relative floor dominates the (0/0) ratio
    VelocityFunction<1> cf;
    cf.value = [](const Vec<1>&) { return 3.0; };
    cf.grad = [](const Vec<1>&) { return Vec<1>{0.0}; };
    cf.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    cf.tail_exponent = 0.0;
    REQUIRE(std::fabs(quadratic_form_L1(pair, cf, 1.5, q_lhs)) <= 1e-9);
    REQUIRE(carre_du_champ_gap(pair, cf, 1.5, q_lhs, q_rhs) <= 0.05);
}

TEST_CASE("declared gradients of the reference suite match finite differences") {
    RngStream rng(5);
    for (auto& [name, f] : suites::invariance_suite()) {
        for (int i = 0; i < 8; ++i) {
            Vec<1> x{3.0 * (rng.uniform() - 0.5)}, v{3.0 * (rng.uniform() - 0.5)};
            INFO(name);
            REQUIRE(f.consistent_at(x, v));
        }
    }
}
