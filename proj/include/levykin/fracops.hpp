#pragma once

// Nonlocal operators: the fractional Laplacian as a compensated principal
// value, Riesz potentials, the friction force b_Phi = e^{Phi} grad of the
// order-(2-alpha) Riesz potential of e^{-Phi} (gradient taken on the kernel,
// never by finite differences), the Laplacian of that potential (kernel
// differentiated twice), a cached radial drift profile, and the two-integral
// functional Psi_{beta,gamma}.
//
// Conditioning note: symmetrized differences f(v+u)+f(v-u)-2f(v) lose all
// significant digits once |u| is below ~1e-8(1+|v|). Below a pivot radius h_c
// the difference is evaluated at h_c and scaled by the exact leading power
// (r/h_c)^2 (or (r/h_c) for the odd first-difference kernels); the truncation
// error of that replacement is O(h_c^2).

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "levykin/errors.hpp"
#include "levykin/model.hpp"
#include "levykin/quadrature.hpp"
#include "levykin/special.hpp"
#include "levykin/vec.hpp"

namespace levykin {

// A scalar field with a declared far-field decay |f| ~ |v|^{-tail_exponent}
// (infinity for compactly supported or super-polynomially decaying fields).
template <std::size_t D>
struct Field {
    std::function<double(const Vec<D>&)> f;
    double tail_exponent = std::numeric_limits<double>::infinity();

    double operator()(const Vec<D>& v) const { return f(v); }
};

struct KernelConstants {
    double c_frac = 0.0;   // c_{d,alpha}: fractional-Laplacian kernel constant
    double c_riesz = 0.0;  // C_{d,2-alpha}: Riesz constant at order 2-alpha
    double omega_d = 0.0;  // unit-ball volume
};

// C_{d,s} = Gamma((d-s)/2) / (2^s pi^{d/2} Gamma(s/2)), kernel C|z|^{-(d-s)}.
inline double riesz_constant(int d, double s) {
    if (d < 1) throw ValidationError("riesz_constant: d >= 1 required");
    if (!(s > 0.0 && s < double(d))) throw ValidationError("riesz_constant: order s in (0, d) required");
    return special::gamma_fn(0.5 * (d - s)) /
           (std::pow(2.0, s) * std::pow(special::pi, 0.5 * d) * special::gamma_fn(0.5 * s));
}

// c_{d,alpha} = 2^alpha Gamma((d+alpha)/2) / (pi^{d/2} |Gamma(-alpha/2)|).
inline double frac_laplacian_constant(int d, double alpha) {
    if (d < 1) throw ValidationError("frac_laplacian_constant: d >= 1 required");
    if (!(alpha > 0.0 && alpha < 2.0))
        throw ValidationError("frac_laplacian_constant: alpha in (0,2) required");
    const double g_neg = std::fabs(special::gamma_fn(-0.5 * alpha));
    return std::pow(2.0, alpha) * special::gamma_fn(0.5 * (d + alpha)) /
           (std::pow(special::pi, 0.5 * d) * g_neg);
}

// c_frac and omega_d exist for every alpha in (0,2); the order-(2-alpha)
// Riesz constant needs d > 2 - alpha and is NaN outside that range (the
// boundary case d = 2 - alpha hits the Gamma pole).
inline KernelConstants special_constants(int d, double alpha) {
    if (d < 1) throw ValidationError("special_constants: d >= 1 required");
    if (!(alpha > 0.0 && alpha < 2.0)) throw ValidationError("special_constants: alpha in (0,2) required");
    KernelConstants k;
    k.c_frac = frac_laplacian_constant(d, alpha);
    k.c_riesz = double(d) > 2.0 - alpha ? riesz_constant(d, 2.0 - alpha)
                                        : std::numeric_limits<double>::quiet_NaN();
    k.omega_d = special::unit_ball_volume(d);
    return k;
}

namespace detail {

inline double pivot_radius(double delta, double vnorm) {
    return std::min(1e-4 * (1.0 + vnorm), 0.25 * delta);
}

// For d >= 2 the mass feature subtends an angle ~ 1/|v|; the rule scales
// with the evaluation radius (roughly 16 nodes per unit radius keeps the
// quantization steps below 1e-6).
template <std::size_t D>
inline AngularRule<D> angular_rule_for(int base_nodes, double vnorm) {
    if constexpr (D == 1) {
        return angular_rule<1>(base_nodes);
    } else {
        int n = base_nodes * std::max(1, (int)std::ceil(vnorm));
        n = std::min(n, 4096);
        if (n % 2) ++n;
        return angular_rule<D>(n);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// (-Delta)^{alpha/2} f (v) = -(c_{d,alpha}/2) int D2f(v,u) |u|^{-d-alpha} du.

template <std::size_t D>
inline double frac_laplacian(const Field<D>& field, const Vec<D>& v, double alpha,
                             const QuadratureSpec& q) {
    q.validate();
    if (!(alpha > 0.0 && alpha < 2.0)) throw ValidationError("frac_laplacian: alpha in (0,2) required");
    const double vn = norm(v);
    const QuadratureSpec qe = q.with_outer_radius(2.0 * vn + 4.0);
    const auto ang = detail::angular_rule_for<D>(qe.nodes_angular, vn);
    const double fv = field(v);
    const double sigma = special::sphere_area(D);

    auto sym2 = [&](double r) {
        double s = 0.0;
        for (size_t i = 0; i < ang.dirs.size(); ++i) {
            const Vec<D> u = scale(ang.dirs[i], r);
            s += ang.weights[i] * (field(add(v, u)) + field(sub(v, u)) - 2.0 * fv);
        }
        return s;
    };
    auto plus_pair = [&](double r) {
        double s = 0.0;
        for (size_t i = 0; i < ang.dirs.size(); ++i) {
            const Vec<D> u = scale(ang.dirs[i], r);
            s += ang.weights[i] * (field(add(v, u)) + field(sub(v, u)));
        }
        return s;
    };

    const double hc = detail::pivot_radius(qe.inner_split, vn);
    const double s_hc = sym2(hc);
    const double nu = 2.0 - alpha;
    const double inner = integrate_inner_power(qe.inner_split, nu, qe.nodes_inner, [&](double r) {
        const double s2 = (r < hc) ? s_hc * (r * r) / (hc * hc) : sym2(r);
        return s2 / (r * r);
    });
    const double shell = integrate_shell(qe.inner_split, qe.outer_radius, qe.nodes_shell,
                                         [&](double r) { return std::pow(r, -1.0 - alpha) * sym2(r); },
                                         vn);

    const double R = qe.outer_radius;
    const double p = field.tail_exponent;
    double tail_pairs;
    if (qe.tail_rule == TailRule::PowerLawAnalytic && std::isfinite(p)) {
        tail_pairs = plus_pair(R) * std::pow(R, -alpha) / (alpha + p);
    } else {
        tail_pairs = integrate_tail_map(
            R, qe.nodes_shell, [&](double r) { return std::pow(r, -1.0 - alpha) * plus_pair(r); },
            std::isfinite(p) ? alpha + p : alpha);
    }
    const double tail = tail_pairs - 2.0 * fv * sigma * std::pow(R, -alpha) / alpha;

    const double c = frac_laplacian_constant(D, alpha);
    return -0.5 * c * (inner + shell + tail);
}

struct PvResult {
    double value = 0.0;
    double refined = 0.0;
    bool converged = true;
};

template <std::size_t D>
inline PvResult frac_laplacian_checked(const Field<D>& field, const Vec<D>& v, double alpha,
                                       const QuadratureSpec& q, double rel_tol = 1e-3) {
    PvResult r;
    r.value = frac_laplacian(field, v, alpha, q);
    r.refined = frac_laplacian(field, v, alpha, q.refined());
    const double scale = std::max({std::fabs(r.value), std::fabs(r.refined), 1e-12});
    r.converged = std::fabs(r.value - r.refined) <= rel_tol * scale;
    if (!r.converged) {
        std::ostringstream os;
        os << "frac_laplacian failed refinement check: " << r.value << " vs " << r.refined;
        throw NumericsError(os.str());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Riesz potential of order s in (0, d): C_{d,s} int f(w) |v-w|^{-(d-s)} dw.

template <std::size_t D>
inline double riesz_potential(const Field<D>& field, const Vec<D>& v, double s,
                              const QuadratureSpec& q) {
    q.validate();
    if (!(s > 0.0 && s < double(D))) throw ValidationError("riesz_potential: order s in (0, d) required");
    if (std::isfinite(field.tail_exponent) && field.tail_exponent <= s)
        throw ValidationError("riesz_potential: declared decay too slow for order s");
    const double vn = norm(v);
    const QuadratureSpec qe = q.with_outer_radius(2.0 * vn + 4.0);
    const auto ang = detail::angular_rule_for<D>(qe.nodes_angular, vn);

    auto favg = [&](double r) {
        double a = 0.0;
        for (size_t i = 0; i < ang.dirs.size(); ++i) a += ang.weights[i] * field(axpy(v, r, ang.dirs[i]));
        return a;
    };

    const double inner = integrate_inner_power(qe.inner_split, s, qe.nodes_inner, favg);
    const double shell = integrate_shell(qe.inner_split, qe.outer_radius, qe.nodes_shell,
                                         [&](double r) { return std::pow(r, s - 1.0) * favg(r); },
                                         vn);
    const double R = qe.outer_radius, p = field.tail_exponent;
    double tail;
    if (qe.tail_rule == TailRule::PowerLawAnalytic && std::isfinite(p)) {
        tail = favg(R) * std::pow(R, s) / (p - s);
    } else {
        tail = integrate_tail_map(R, qe.nodes_shell,
                                  [&](double r) { return std::pow(r, s - 1.0) * favg(r); },
                                  std::isfinite(p) ? p - s : 2.0);
    }
    return riesz_constant(D, s) * (inner + shell + tail);
}

// ---------------------------------------------------------------------------
// grad (-Delta)^{-(2-alpha)/2} h (v), kernel-differentiated:
//   -C_{d,2-alpha} (d+alpha-2) * (1/2) int_0^inf r^{-alpha} Tbar(r) dr,
//   Tbar(r) = sum_theta w_theta theta (h(v-r theta) - h(v+r theta)).

template <std::size_t D>
inline Vec<D> riesz_grad(const Field<D>& field, const Vec<D>& v, double alpha,
                         const QuadratureSpec& q) {
    q.validate();
    if (!(double(D) > 2.0 - alpha)) throw ValidationError("riesz_grad: d > 2 - alpha required");
    const double vn = norm(v);
    const QuadratureSpec qe = q.with_outer_radius(2.0 * vn + 4.0);
    const auto ang = detail::angular_rule_for<D>(qe.nodes_angular, vn);

    auto odd_avg = [&](double r) {
        Vec<D> t = zero_vec<D>();
        for (size_t i = 0; i < ang.dirs.size(); ++i) {
            const Vec<D> u = scale(ang.dirs[i], r);
            const double df = field(sub(v, u)) - field(add(v, u));
            t = axpy(t, ang.weights[i] * df, ang.dirs[i]);
        }
        return t;
    };

    const double hc = detail::pivot_radius(qe.inner_split, vn);
    const Vec<D> t_hc = odd_avg(hc);
    const double nu = 2.0 - alpha;
    const double p = field.tail_exponent;
    const double hint = std::isfinite(p) ? alpha + p - 1.0 : alpha;

    Vec<D> total = zero_vec<D>();
    for (std::size_t comp = 0; comp < D; ++comp) {
        const double inner = integrate_inner_power(qe.inner_split, nu, qe.nodes_inner, [&](double r) {
            const double tc = (r < hc) ? t_hc[comp] * (r / hc) : odd_avg(r)[comp];
            return tc / r;
        });
        const double shell =
            integrate_shell(qe.inner_split, qe.outer_radius, qe.nodes_shell,
                            [&](double r) { return std::pow(r, -alpha) * odd_avg(r)[comp]; }, vn);
        const double tail =
            integrate_tail_map(qe.outer_radius, qe.nodes_shell,
                               [&](double r) { return std::pow(r, -alpha) * odd_avg(r)[comp]; }, hint);
        total[comp] = inner + shell + tail;
    }
    const double cc = riesz_constant(D, 2.0 - alpha) * (D + alpha - 2.0);
    return scale(total, -0.5 * cc);
}

// Laplacian of the order-(2-alpha) Riesz potential of h, with the kernel
// differentiated twice. The excluded-ball boundary term at the split radius
// makes the expression exact for any split:
//   div grad R(v) = C (d+alpha-2) [ (alpha/2) int_0^delta r^{-1-alpha} S(r) dr
//                   - sigma_{d-1} delta^{-alpha} h(v)
//                   + alpha int_delta^inf r^{-1-alpha} Hbar(r) dr ].
template <std::size_t D>
inline double riesz_grad_divergence(const Field<D>& field, const Vec<D>& v, double alpha,
                                    const QuadratureSpec& q) {
    q.validate();
    if (!(double(D) > 2.0 - alpha)) throw ValidationError("riesz_grad_divergence: d > 2-alpha required");
    const double vn = norm(v);
    const QuadratureSpec qe = q.with_outer_radius(2.0 * vn + 4.0);
    const auto ang = detail::angular_rule_for<D>(qe.nodes_angular, vn);
    const double fv = field(v);
    const double sigma = special::sphere_area(D);

    auto sym2 = [&](double r) {
        double s = 0.0;
        for (size_t i = 0; i < ang.dirs.size(); ++i) {
            const Vec<D> u = scale(ang.dirs[i], r);
            s += ang.weights[i] * (field(add(v, u)) + field(sub(v, u)) - 2.0 * fv);
        }
        return s;
    };
    auto havg = [&](double r) {
        double s = 0.0;
        for (size_t i = 0; i < ang.dirs.size(); ++i) s += ang.weights[i] * field(axpy(v, r, ang.dirs[i]));
        return s;
    };

    const double delta = qe.inner_split;
    const double hc = detail::pivot_radius(delta, vn);
    const double s_hc = sym2(hc);
    const double inner = integrate_inner_power(delta, 2.0 - alpha, qe.nodes_inner, [&](double r) {
        const double s2 = (r < hc) ? s_hc * (r * r) / (hc * hc) : sym2(r);
        return s2 / (r * r);
    });
    const double shell = integrate_shell(delta, qe.outer_radius, qe.nodes_shell,
                                         [&](double r) { return std::pow(r, -1.0 - alpha) * havg(r); },
                                         vn);
    const double p = field.tail_exponent;
    double tail;
    if (qe.tail_rule == TailRule::PowerLawAnalytic && std::isfinite(p)) {
        tail = havg(qe.outer_radius) * std::pow(qe.outer_radius, -alpha) / (alpha + p);
    } else {
        tail = integrate_tail_map(qe.outer_radius, qe.nodes_shell,
                                  [&](double r) { return std::pow(r, -1.0 - alpha) * havg(r); },
                                  std::isfinite(p) ? alpha + p : alpha);
    }

    const double cc = riesz_constant(D, 2.0 - alpha) * (D + alpha - 2.0);
    return cc * (0.5 * alpha * inner - sigma * std::pow(delta, -alpha) * fv + alpha * (shell + tail));
}

// ---------------------------------------------------------------------------
// Friction force b_Phi(v) = e^{Phi(v)} grad (-Delta)^{-(2-alpha)/2} e^{-Phi}(v).
// The outer radius is extended to cover the equilibrium bulk when |v| is far
// outside it; without this the quadrature window would miss the mass of
// e^{-Phi} entirely at large |v|.

template <std::size_t D>
inline Field<D> equilibrium_field(const PotentialPair<D>& pair) {
    return Field<D>{[&pair](const Vec<D>& w) { return pair.exp_neg_Phi(w); }, pair.phi_tail_exponent};
}

template <std::size_t D>
inline Vec<D> drift_b_phi(const PotentialPair<D>& pair, const Vec<D>& v, double alpha,
                          const QuadratureSpec& q) {
    if (!(double(D) > 2.0 - alpha)) throw ValidationError("drift_b_phi: d > 2 - alpha required");
    const QuadratureSpec qe = q.with_outer_radius(2.0 * norm(v) + 4.0);
    const Field<D> h = equilibrium_field(pair);
    const Vec<D> g = riesz_grad(h, v, alpha, qe);
    return scale(g, std::exp(pair.Phi(v)));
}

// ---------------------------------------------------------------------------
// Cached radial profile rho with b_Phi(v) = rho(|v|) v/|v|. Values are stored
// on an asinh-spaced radial grid and interpolated by a monotone (Fritsch-
// Carlson) cubic in s = asinh(r).

struct DriftProfile {
    std::vector<double> radii;   // r_0 = 0 < ... < r_m
    std::vector<double> rho;     // rho(r_i), rho(0) = 0
    std::vector<double> s;       // asinh(r_i)
    std::vector<double> slope;   // pchip slopes d rho / d s
    double validity_radius = 0.0;
    double max_validation_error = 0.0;
    bool uniform_s = false;
    double s0 = 0.0, ds = 1.0;

    double eval_rho(double r) const {
        if (r <= 0.0) return 0.0;
        const double sr = std::asinh(r);
        size_t i;
        if (uniform_s) {
            i = std::min(s.size() - 2, (size_t)std::max(0.0, std::floor((sr - s0) / ds)));
        } else {
            i = std::upper_bound(s.begin(), s.end(), sr) - s.begin();
            i = std::min(std::max<size_t>(i, 1) - 1, s.size() - 2);
        }
        const double h = s[i + 1] - s[i];
        const double t = std::min(1.0, std::max(0.0, (sr - s[i]) / h));
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * rho[i] + h * h10 * slope[i] + h01 * rho[i + 1] + h * h11 * slope[i + 1];
    }

    template <std::size_t D>
    Vec<D> eval(const Vec<D>& v) const {
        const double r = norm(v);
        if (r <= 0.0) return zero_vec<D>();
        return scale(v, eval_rho(r) / r);
    }

    bool covers(double r) const { return r <= validity_radius; }
};

inline std::vector<double> make_drift_radii(double r_max, int n_nodes) {
    if (n_nodes < 8) throw ValidationError("make_drift_radii: need at least 8 nodes");
    std::vector<double> r(n_nodes);
    const double smax = std::asinh(r_max);
    for (int i = 0; i < n_nodes; ++i) r[i] = std::sinh(smax * i / (n_nodes - 1));
    r[0] = 0.0;
    return r;
}

namespace detail {

inline std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    std::vector<double> d(n - 1), m(n, 0.0);
    for (size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    for (size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m[i] = 0.0;
        } else {
            const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
            const double w1 = 2.0 * h1 + h0, w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) s = 0.0;
        else if (d0 * d1 <= 0.0 && std::fabs(s) > 3.0 * std::fabs(d0)) s = 3.0 * d0;
        return s;
    };
    m[0] = end_slope(x[1] - x[0], x[2] - x[1], d[0], d[1]);
    m[n - 1] = end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], d[n - 2], d[n - 3]);
    return m;
}

}  // namespace detail

template <std::size_t D>
inline DriftProfile build_drift_profile(const PotentialPair<D>& pair, double alpha,
                                        const QuadratureSpec& q, const std::vector<double>& radii,
                                        double validation_tol = 1e-3) {
    if (radii.size() < 8 || radii.front() != 0.0)
        throw ValidationError("build_drift_profile: radii must start at 0 with >= 8 nodes");
    DriftProfile prof;
    prof.radii = radii;
    prof.validity_radius = radii.back();
    prof.rho.resize(radii.size());
    prof.s.resize(radii.size());
    prof.rho[0] = 0.0;  // b_Phi(0) = 0 for radial Phi
    prof.s[0] = 0.0;
    for (size_t i = 1; i < radii.size(); ++i) {
        if (radii[i] <= radii[i - 1]) throw ValidationError("build_drift_profile: radii must increase");
        Vec<D> v = zero_vec<D>();
        v[0] = radii[i];
        prof.rho[i] = drift_b_phi(pair, v, alpha, q)[0];
        prof.s[i] = std::asinh(radii[i]);
    }
    prof.slope = detail::pchip_slopes(prof.s, prof.rho);
    prof.uniform_s = true;
    prof.s0 = prof.s[0];
    prof.ds = prof.s[1] - prof.s[0];
    for (size_t i = 1; i + 1 < prof.s.size(); ++i) {
        if (std::fabs(prof.s[i + 1] - prof.s[i] - prof.ds) > 1e-9 * std::max(1.0, prof.ds)) {
            prof.uniform_s = false;
            break;
        }
    }

    // Held-out validation at s-midpoints.
    double worst = 0.0, worst_r = 0.0;
    for (size_t i = 1; i + 1 < radii.size(); ++i) {
        const double rm = std::sinh(0.5 * (prof.s[i] + prof.s[i + 1]));
        Vec<D> v = zero_vec<D>();
        v[0] = rm;
        const double exact = drift_b_phi(pair, v, alpha, q)[0];
        const double approx = prof.eval_rho(rm);
        const double err = std::fabs(exact - approx) / std::max(std::fabs(exact), 1e-8);
        if (err > worst) {
            worst = err;
            worst_r = rm;
        }
    }
    prof.max_validation_error = worst;
    if (worst > validation_tol) {
        std::ostringstream os;
        os << "drift profile validation failed: rel err " << worst << " at r = " << worst_r;
        throw NumericsError(os.str());
    }
    return prof;
}

// ---------------------------------------------------------------------------
// Psi_{beta,gamma}(v, y), evaluated in the symmetrized two-integral form
//   (beta/2) e^{Psi(v)} I1(v,y) - (gamma/2) e^{Psi(v)} I2(v,y).

template <std::size_t D>
inline double eval_psi_bg(const PotentialPair<D>& pair, double beta_c, double gamma_c,
                          const Vec<D>& v, const Vec<D>& y, double alpha,
                          const QuadratureSpec& q) {
    q.validate();
    // pre: ||grad Psi||_inf < inf, declared by the family (holds for log_radial).
    const double vn = norm(v);
    const QuadratureSpec qe = q.with_outer_radius(2.0 * vn + 4.0);
    const auto ang = detail::angular_rule_for<D>(qe.nodes_angular, vn);

    auto h = [&](const Vec<D>& w) { return pair.exp_neg_Phi(w); };
    auto gradPsi = [&](const Vec<D>& w) { return pair.grad_Phi(w); };
    const Vec<D> My = matvec(pair.hess_Phi(v), y);
    const Vec<D> gv = gradPsi(v);

    // I1: odd first-difference kernel, O(r) integrand after angular averaging.
    auto t1 = [&](double r) {
        double s = 0.0;
        for (size_t i = 0; i < ang.dirs.size(); ++i) {
            const Vec<D> u = scale(ang.dirs[i], r);
            s += ang.weights[i] * dot(ang.dirs[i], My) * (h(sub(v, u)) - h(add(v, u)));
        }
        return s;
    };
    // I2: gradient-difference kernel, O(r^2) pointwise.
    auto w2 = [&](double r) {
        double s = 0.0;
        for (size_t i = 0; i < ang.dirs.size(); ++i) {
            const Vec<D> u = scale(ang.dirs[i], r);
            const Vec<D> vm = sub(v, u), vp = add(v, u);
            s += ang.weights[i] * (dot(sub(gv, gradPsi(vm)), y) * h(vm) +
                                   dot(sub(gv, gradPsi(vp)), y) * h(vp));
        }
        return s;
    };

    const double hc = detail::pivot_radius(qe.inner_split, vn);
    const double nu = 2.0 - alpha;
    const double p = pair.phi_tail_exponent;
    const double hint = std::isfinite(p) ? alpha + p - 1.0 : alpha;

    const double t1_hc = t1(hc);
    const double i1 =
        integrate_inner_power(qe.inner_split, nu, qe.nodes_inner,
                              [&](double r) { return ((r < hc) ? t1_hc * (r / hc) : t1(r)) / r; }) +
        integrate_shell(qe.inner_split, qe.outer_radius, qe.nodes_shell,
                        [&](double r) { return std::pow(r, -alpha) * t1(r); }, vn) +
        integrate_tail_map(qe.outer_radius, qe.nodes_shell,
                           [&](double r) { return std::pow(r, -alpha) * t1(r); }, hint);

    const double w2_hc = w2(hc);
    const double i2 =
        integrate_inner_power(qe.inner_split, nu, qe.nodes_inner,
                              [&](double r) {
                                  const double w = (r < hc) ? w2_hc * (r * r) / (hc * hc) : w2(r);
                                  return w / (r * r);
                              }) +
        integrate_shell(qe.inner_split, qe.outer_radius, qe.nodes_shell,
                        [&](double r) { return std::pow(r, -1.0 - alpha) * w2(r); }, vn) +
        integrate_tail_map(qe.outer_radius, qe.nodes_shell,
                           [&](double r) { return std::pow(r, -1.0 - alpha) * w2(r); }, hint);

    const double ePsi = std::exp(pair.Phi(v));
    return 0.5 * beta_c * ePsi * i1 - 0.5 * gamma_c * ePsi * i2;
}

}  // namespace levykin
