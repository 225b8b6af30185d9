#pragma once

// The resolvent equation (I - L_OD) f = h for the overdamped generator
// L_OD = Delta - <grad U, grad .>, solved two independent ways:
//   * Feynman-Kac: f(x) = int_0^inf e^{-s} E h(X_s^x) ds along Euler paths of
//     dX = -grad U dt + sqrt(2) dB
//   * 1-d second-order finite differences (tridiagonal)
// plus the constant c* and the pi L0^2 pi = c* L_OD pi residual check.

#include <cmath>
#include <functional>
#include <sstream>
#include <thread>
#include <vector>

#include "levykin/errors.hpp"
#include "levykin/generator.hpp"
#include "levykin/measures.hpp"
#include "levykin/model.hpp"
#include "levykin/rng.hpp"
#include "levykin/testfunction.hpp"

namespace levykin {

struct FkEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int n_paths = 0;
};

// Monte-Carlo estimate of int_0^horizon e^{-s} h(X_s) ds; the e^{-s} weight
// truncation error is <= e^{-horizon} ||h||_inf, so horizon >= 20 keeps it
// below 2e-9 ||h||_inf. Trapezoidal weights in s remove the O(dt) quadrature
// bias of the time integral; the remaining bias is the Euler weak error.
template <std::size_t D>
inline FkEstimate solve_poisson_fk(const PotentialPair<D>& pair,
                                   const std::function<double(const Vec<D>&)>& h, const Vec<D>& x0,
                                   int n_paths, double dt, double horizon, uint64_t seed,
                                   int workers = 0) {
    if (!(dt > 0.0) || !(horizon >= 20.0))
        throw ValidationError("solve_poisson_fk: dt > 0 and horizon >= 20 required");
    if (n_paths < 1) throw ValidationError("solve_poisson_fk: n_paths >= 1");
    if (workers <= 0) workers = std::max(1u, std::thread::hardware_concurrency());
    const int nsteps = (int)std::ceil(horizon / dt);
    const double sqrt2dt = std::sqrt(2.0 * dt);
    const double decay = std::exp(-dt);

    std::vector<double> sums(workers, 0.0), sums2(workers, 0.0);
    std::vector<std::thread> pool;
    const int per = (n_paths + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            const int lo = w * per, hi = std::min(n_paths, (w + 1) * per);
            double s = 0.0, s2 = 0.0;
            for (int pth = lo; pth < hi; ++pth) {
                RngStream rng = RngStream::substream(seed, (uint64_t)pth);
                Vec<D> x = x0;
                double weight = 1.0;
                double g_prev = h(x);  // e^{-0} h(X_0)
                double integral = 0.0;
                for (int k = 0; k < nsteps; ++k) {
                    Vec<D> gu = pair.grad_U(x);
                    for (std::size_t i = 0; i < D; ++i) x[i] += -gu[i] * dt + sqrt2dt * rng.normal();
                    weight *= decay;
                    const double g_cur = weight * h(x);
                    integral += 0.5 * (g_prev + g_cur) * dt;
                    g_prev = g_cur;
                }
                s += integral;
                s2 += integral * integral;
            }
            sums[w] = s;
            sums2[w] = s2;
        });
    }
    for (auto& t : pool) t.join();
    double s = 0.0, s2 = 0.0;
    for (int w = 0; w < workers; ++w) {
        s += sums[w];
        s2 += sums2[w];
    }
    FkEstimate e;
    e.n_paths = n_paths;
    e.value = s / n_paths;
    const double var = std::max(0.0, s2 / n_paths - e.value * e.value);
    e.std_error = std::sqrt(var / n_paths);
    return e;
}

// ---------------------------------------------------------------------------

enum class PoissonBoundary { Reflecting, FarFieldDecay };

struct PoissonSolution {
    std::vector<double> x;
    std::vector<double> f;
    std::vector<double> h;
    double residual_inf = 0.0;    // ||(I - L_OD) f - h||_inf on interior nodes
    double cond_estimate = 0.0;
    PoissonBoundary boundary = PoissonBoundary::Reflecting;

    double eval(double xq) const {
        const size_t n = x.size();
        if (xq <= x.front()) return f.front();
        if (xq >= x.back()) return f.back();
        const double hgrid = x[1] - x[0];
        size_t i = std::min(n - 2, (size_t)((xq - x.front()) / hgrid));
        const double t = (xq - x[i]) / (x[i + 1] - x[i]);
        return (1.0 - t) * f[i] + t * f[i + 1];
    }
};

// Second-order central differences for (I - L_OD) f = h on a uniform grid.
inline PoissonSolution solve_poisson_fd_1d(const PotentialPair<1>& pair,
                                           const std::function<double(double)>& h, double half_width,
                                           int n, PoissonBoundary bc = PoissonBoundary::Reflecting) {
    if (n < 16) throw ValidationError("solve_poisson_fd_1d: n >= 16 required");
    const double sd = pair.u_gaussian_scale > 0.0 ? 1.0 / std::sqrt(pair.u_gaussian_scale) : 1.0;
    if (half_width < 6.0 * sd)
        throw ValidationError("solve_poisson_fd_1d: grid must span >= 6 sd of mu1");

    PoissonSolution sol;
    sol.boundary = bc;
    sol.x.resize(n);
    sol.h.resize(n);
    const double dx = 2.0 * half_width / (n - 1);
    for (int i = 0; i < n; ++i) {
        sol.x[i] = -half_width + i * dx;
        sol.h[i] = h(sol.x[i]);
    }

    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), rhs = sol.h;
    const double ih2 = 1.0 / (dx * dx);
    for (int i = 1; i + 1 < n; ++i) {
        const double up = pair.grad_U(Vec<1>{sol.x[i]})[0];
        a[i] = -ih2 - up / (2.0 * dx);
        b[i] = 1.0 + 2.0 * ih2;
        c[i] = -ih2 + up / (2.0 * dx);
    }
    if (bc == PoissonBoundary::Reflecting) {
        // mirror ghost: f_{-1} = f_1 kills the advective term at the wall
        b[0] = 1.0 + 2.0 * ih2;
        c[0] = -2.0 * ih2;
        a[n - 1] = -2.0 * ih2;
        b[n - 1] = 1.0 + 2.0 * ih2;
    } else {
        b[0] = 1.0;
        c[0] = 0.0;
        rhs[0] = sol.h[0];
        a[n - 1] = 0.0;
        b[n - 1] = 1.0;
        rhs[n - 1] = sol.h[n - 1];
    }

    // Thomas solve
    std::vector<double> cp(n, 0.0), dp(n, 0.0);
    cp[0] = c[0] / b[0];
    dp[0] = rhs[0] / b[0];
    for (int i = 1; i < n; ++i) {
        const double m = b[i] - a[i] * cp[i - 1];
        if (std::fabs(m) < 1e-300) throw NumericsError("solve_poisson_fd_1d: singular pivot");
        cp[i] = c[i] / m;
        dp[i] = (rhs[i] - a[i] * dp[i - 1]) / m;
    }
    sol.f.resize(n);
    sol.f[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) sol.f[i] = dp[i] - cp[i] * sol.f[i + 1];

    // residual on interior nodes (the assembled stencil re-applied)
    double rmax = 0.0;
    for (int i = 1; i + 1 < n; ++i)
        rmax = std::max(rmax, std::fabs(a[i] * sol.f[i - 1] + b[i] * sol.f[i] + c[i] * sol.f[i + 1] -
                                        sol.h[i]));
    sol.residual_inf = rmax;

    // cheap conditioning probe: ||T||_inf * max_i ||T^{-1} r_i||_inf over a few
    // random +-1 vectors
    double tnorm = 0.0;
    for (int i = 0; i < n; ++i)
        tnorm = std::max(tnorm, std::fabs(a[i]) + std::fabs(b[i]) + std::fabs(c[i]));
    RngStream rng(1234);
    double inv_norm = 0.0;
    for (int probe = 0; probe < 5; ++probe) {
        std::vector<double> r(n), y(n);
        for (int i = 0; i < n; ++i) r[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
        std::vector<double> cp2(n), dp2(n);
        cp2[0] = c[0] / b[0];
        dp2[0] = r[0] / b[0];
        for (int i = 1; i < n; ++i) {
            const double m = b[i] - a[i] * cp2[i - 1];
            cp2[i] = c[i] / m;
            dp2[i] = (r[i] - a[i] * dp2[i - 1]) / m;
        }
        y[n - 1] = dp2[n - 1];
        for (int i = n - 2; i >= 0; --i) y[i] = dp2[i] - cp2[i] * y[i + 1];
        for (int i = 0; i < n; ++i) inv_norm = std::max(inv_norm, std::fabs(y[i]));
    }
    sol.cond_estimate = tnorm * inv_norm;
    if (sol.cond_estimate > 1e12)
        throw NumericsError("solve_poisson_fd_1d: conditioning estimate exceeds 1e12");
    return sol;
}

// ---------------------------------------------------------------------------
// c* = (2 omega_d / C_Phi) int_0^inf u^{d/2} psi'(u)^2 e^{-psi(u)} du, with the
// mandatory cross-check against the trace identity
//   2 int ((2/d) psi''(|v|^2)|v|^2 + psi'(|v|^2)) mu2(dv).

struct CStarResult {
    double value = 0.0;      // radial-integral route
    double alt_value = 0.0;  // trace-identity route
    double rel_gap = 0.0;
};

template <std::size_t D>
inline CStarResult c_star(const PotentialPair<D>& pair, double cross_check_tol = 1e-6) {
    const double omega = special::unit_ball_volume(D);
    const double sigma = special::sphere_area(D);
    const auto nz = normalizations(pair);

    // route 1: the u-integral, evaluated through u = r^2 so the u^{d/2}
    // endpoint is polynomial (plain nodes lose ~1e-5 on the sqrt(u) kink)
    const double p_tail = std::isfinite(pair.phi_tail_exponent)
                              ? 3.0 + (pair.phi_tail_exponent - D)
                              : pair.phi_tail_exponent;
    const double i1 = 2.0 * integrate_half_line(
        [&](double rad) {
            const double u = rad * rad;
            const double dp = pair.dpsi(u);
            return std::pow(rad, D + 1.0) * dp * dp * std::exp(-pair.psi(u));
        },
        150.0, p_tail, 16);
    CStarResult r;
    r.value = 2.0 * omega / nz.c_phi * i1;

    // route 2: the trace identity as a radial integral over v
    const double i2 = integrate_half_line(
        [&](double rad) {
            const double u = rad * rad;
            const double val = (2.0 / D) * pair.d2psi(u) * u + pair.dpsi(u);
            return 2.0 * val * std::pow(rad, D - 1) * std::exp(-pair.psi(u));
        },
        2e4, std::numeric_limits<double>::infinity(), 16);
    r.alt_value = sigma * i2 / nz.c_phi;

    r.rel_gap = std::fabs(r.value - r.alt_value) / std::max(std::fabs(r.value), 1e-300);
    if (r.rel_gap > cross_check_tol) {
        std::ostringstream os;
        os << "c_star cross-check failed: " << r.value << " vs " << r.alt_value;
        throw NumericsError(os.str());
    }
    if (!(r.value > 0.0)) throw NumericsError("c_star: non-positive value");
    return r;
}

// |int L0^2(pi f) dmu2 - c* (L_OD f)(x)| with the left side expanded to
//   <grad Phi, hess f grad Phi> - <grad U, hess Phi grad f>
// and integrated numerically over mu2.
template <std::size_t D>
inline double pi_L0sq_pi_residual(const PotentialPair<D>& pair, const PositionFunction<D>& f,
                                  const Vec<D>& x, const MarginalGrid& grid = {}) {
    const auto nz = normalizations(pair);
    const auto nodes = mu2_nodes<D>(pair, nz, grid);
    const Mat<D> hf = f.hess(x);
    const Vec<D> gf = f.grad(x);
    const Vec<D> gu = pair.grad_U(x);
    double lhs = 0.0;
    for (size_t j = 0; j < nodes.pts.size(); ++j) {
        const Vec<D> v = nodes.pts[j];
        const Vec<D> gp = pair.grad_Phi(v);
        lhs += nodes.w[j] * (quad_form(hf, gp, gp) - dot(gu, matvec(pair.hess_Phi(v), gf)));
    }
    const double cs = c_star(pair).value;
    const double rhs = cs * (trace(hf) - dot(gu, gf));
    return std::fabs(lhs - rhs);
}

}  // namespace levykin
