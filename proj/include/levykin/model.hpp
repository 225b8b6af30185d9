#pragma once

// Model space: dimension d, stability index alpha, the position potential U
// and the radial velocity potential Phi with all derivatives, plus sampling
// based checkers for the structural assumptions on (U, Phi).

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "levykin/errors.hpp"
#include "levykin/quadrature.hpp"
#include "levykin/rng.hpp"
#include "levykin/special.hpp"
#include "levykin/vec.hpp"

namespace levykin {

enum class UFamily { Quadratic, QuadraticPlusBump, Custom };
enum class PhiFamily { LogRadial, CustomRadial };

inline std::string to_string(UFamily f) {
    switch (f) {
        case UFamily::Quadratic: return "quadratic";
        case UFamily::QuadraticPlusBump: return "quadratic_plus_bump";
        default: return "custom";
    }
}

inline std::string to_string(PhiFamily f) {
    return f == PhiFamily::LogRadial ? "log_radial" : "custom_radial";
}

struct ModelSpec {
    int d = 1;
    double alpha = 1.5;
    UFamily u_family = UFamily::Quadratic;
    PhiFamily phi_family = PhiFamily::LogRadial;
    // family parameters
    double u_scale = 1.0;       // U = u_scale |x|^2 / 2
    double bump_amp = 0.0;      // quadratic_plus_bump: + amp * exp(-|x|^2/(2 w^2))
    double bump_width = 1.0;
    double beta = 1.5;          // log_radial: Phi = (d+beta)/2 log(1+|v|^2)

    void validate() const {
        if (d < 1) throw ValidationError("ModelSpec: d >= 1 required");
        if (!(alpha > 0.0 && alpha < 2.0)) throw ValidationError("ModelSpec: alpha in (0,2) required");
        if (!(double(d) > 2.0 - alpha)) throw ValidationError("ModelSpec: d > 2 - alpha required");
        if (phi_family == PhiFamily::LogRadial) {
            if (!(beta >= alpha && beta < 2.0 * alpha))
                throw ValidationError("ModelSpec: log_radial requires beta in [alpha, 2*alpha)");
        }
        if (u_family != UFamily::Custom && u_scale <= 0.0)
            throw ValidationError("ModelSpec: u_scale > 0 required");
        if (u_family == UFamily::QuadraticPlusBump && bump_width <= 0.0)
            throw ValidationError("ModelSpec: bump_width > 0 required");
    }
};

// The pair (U, Phi). Phi(v) = psi(|v|^2) exactly; evaluators are pure and
// immutable after construction, safe for concurrent use.
template <std::size_t D>
struct PotentialPair {
    int d = (int)D;
    double alpha = 1.5;

    std::function<double(const Vec<D>&)> U;
    std::function<Vec<D>(const Vec<D>&)> grad_U;
    std::function<Mat<D>(const Vec<D>&)> hess_U;

    std::function<double(double)> psi;    // Phi(v) = psi(|v|^2)
    std::function<double(double)> dpsi;
    std::function<double(double)> d2psi;
    std::function<double(double)> d3psi;

    // e^{-Phi} ~ |v|^{-phi_tail_exponent} at infinity (inf for faster decay)
    double phi_tail_exponent = std::numeric_limits<double>::infinity();
    // e^{-U} ~ exp(-poly): u_gaussian_scale > 0 marks the pure quadratic family
    double u_gaussian_scale = 0.0;
    double u_scale = 1.0;  // curvature parameter of the built-in U families

    UFamily u_family = UFamily::Custom;
    PhiFamily phi_family = PhiFamily::CustomRadial;
    double beta = 0.0;

    double Phi(const Vec<D>& v) const { return psi(norm2(v)); }

    Vec<D> grad_Phi(const Vec<D>& v) const { return scale(v, 2.0 * dpsi(norm2(v))); }

    Mat<D> hess_Phi(const Vec<D>& v) const {
        const double u = norm2(v);
        Mat<D> h = identity_mat<D>(2.0 * dpsi(u));
        const double c = 4.0 * d2psi(u);
        for (std::size_t i = 0; i < D; ++i)
            for (std::size_t j = 0; j < D; ++j) h[i][j] += c * v[i] * v[j];
        return h;
    }

    // grad^3 Phi contracted against nothing: component (i,j,k).
    double third_Phi(const Vec<D>& v, int i, int j, int k) const {
        const double u = norm2(v);
        const double a = 4.0 * d2psi(u), b = 8.0 * d3psi(u);
        double s = b * v[i] * v[j] * v[k];
        if (i == j) s += a * v[k];
        if (i == k) s += a * v[j];
        if (j == k) s += a * v[i];
        return s;
    }

    double exp_neg_Phi(const Vec<D>& v) const { return std::exp(-Phi(v)); }
};

template <std::size_t D>
inline PotentialPair<D> build_model(const ModelSpec& spec) {
    spec.validate();
    if (spec.d != (int)D) throw ValidationError("build_model: spec.d does not match template dimension");
    PotentialPair<D> p;
    p.alpha = spec.alpha;
    p.u_family = spec.u_family;
    p.phi_family = spec.phi_family;

    const double k = spec.u_scale;
    p.u_scale = k;
    switch (spec.u_family) {
        case UFamily::Quadratic:
            p.U = [k](const Vec<D>& x) { return 0.5 * k * norm2(x); };
            p.grad_U = [k](const Vec<D>& x) { return scale(x, k); };
            p.hess_U = [k](const Vec<D>&) { return identity_mat<D>(k); };
            p.u_gaussian_scale = k;
            break;
        case UFamily::QuadraticPlusBump: {
            const double a = spec.bump_amp, w2 = spec.bump_width * spec.bump_width;
            p.U = [k, a, w2](const Vec<D>& x) {
                return 0.5 * k * norm2(x) + a * std::exp(-0.5 * norm2(x) / w2);
            };
            p.grad_U = [k, a, w2](const Vec<D>& x) {
                const double e = a * std::exp(-0.5 * norm2(x) / w2);
                return axpy(scale(x, k), -e / w2, x);
            };
            p.hess_U = [k, a, w2](const Vec<D>& x) {
                const double e = a * std::exp(-0.5 * norm2(x) / w2);
                Mat<D> h = identity_mat<D>(k - e / w2);
                for (std::size_t i = 0; i < D; ++i)
                    for (std::size_t j = 0; j < D; ++j) h[i][j] += e / (w2 * w2) * x[i] * x[j];
                return h;
            };
            p.u_gaussian_scale = 0.0;
            break;
        }
        default:
            throw ValidationError("build_model: custom U requires the closure constructor");
    }

    if (spec.phi_family == PhiFamily::LogRadial) {
        const double c = 0.5 * (spec.d + spec.beta);
        p.psi = [c](double u) { return c * std::log1p(u); };
        p.dpsi = [c](double u) { return c / (1.0 + u); };
        p.d2psi = [c](double u) { const double t = 1.0 + u; return -c / (t * t); };
        p.d3psi = [c](double u) { const double t = 1.0 + u; return 2.0 * c / (t * t * t); };
        p.phi_tail_exponent = double(spec.d) + spec.beta;
        p.beta = spec.beta;
    } else {
        throw ValidationError("build_model: custom Phi requires the closure constructor");
    }
    return p;
}

// Custom closures are accepted unchecked beyond the sampling-based validators.
template <std::size_t D>
inline PotentialPair<D> build_custom_model(
    double alpha, std::function<double(const Vec<D>&)> U,
    std::function<Vec<D>(const Vec<D>&)> grad_U, std::function<Mat<D>(const Vec<D>&)> hess_U,
    std::function<double(double)> psi, std::function<double(double)> dpsi,
    std::function<double(double)> d2psi, std::function<double(double)> d3psi,
    double phi_tail_exponent) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw ValidationError("build_custom_model: alpha in (0,2)");
    if (!(double(D) > 2.0 - alpha)) throw ValidationError("build_custom_model: d > 2 - alpha");
    PotentialPair<D> p;
    p.alpha = alpha;
    p.U = std::move(U);
    p.grad_U = std::move(grad_U);
    p.hess_U = std::move(hess_U);
    p.psi = std::move(psi);
    p.dpsi = std::move(dpsi);
    p.d2psi = std::move(d2psi);
    p.d3psi = std::move(d3psi);
    p.phi_tail_exponent = phi_tail_exponent;
    return p;
}

// ---------------------------------------------------------------------------
// Assumption checking (sampling based; "unknown" when a liminf cannot be
// certified from finitely many samples).

enum class Verdict { Pass, Fail, Unknown };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        default: return "unknown";
    }
}

struct CheckResult {
    std::string name;
    Verdict verdict = Verdict::Unknown;
    double value = 0.0;          // the sampled extremum / estimate
    std::vector<double> witness; // point attaining it
    std::string note;
};

struct SamplingGrid {
    double ball_radius = 10.0;   // must cover a ball of radius >= 10
    int points_per_axis = 21;
    std::vector<double> ring_radii = {10.0, 20.0, 40.0, 80.0};
    int ring_points = 32;
    double tolerance = 1e-9;
    uint64_t seed = 2024;

    void validate() const {
        if (ball_radius < 10.0) throw ValidationError("SamplingGrid: ball radius >= 10 required");
        if (ring_radii.empty()) throw ValidationError("SamplingGrid: far-field ring required");
    }
};

struct AssumptionReport {
    CheckResult au1_hessian_bound;   // ||hess U|| <= c1 |grad U| + c2
    CheckResult au1_integrability;
    CheckResult au2_radial_drift;    // liminf <grad U, x>/|x| > 0
    CheckResult aphi1_monotone;
    CheckResult aphi2_sup_norms;     // grad/hess*|v|/third sup norms + shifted sup
    CheckResult aphi2_shell;         // sup over B_1(v) comparison on a finite shell
    CheckResult aphi3_integral;      // int e^{Phi} (1+|v|)^{-2(d+alpha)} < inf
    CheckResult aphi4_liminf;        // liminf e^{Phi}/|v|^{d+alpha} > 0
    double grid_tolerance = 0.0;
    std::string grid_description;

    std::vector<const CheckResult*> all() const {
        return {&au1_hessian_bound, &au1_integrability, &au2_radial_drift, &aphi1_monotone,
                &aphi2_sup_norms,   &aphi2_shell,       &aphi3_integral,   &aphi4_liminf};
    }
};

namespace detail {

template <std::size_t D>
inline std::vector<Vec<D>> ring_points(double radius, int n, RngStream& rng) {
    std::vector<Vec<D>> pts;
    if constexpr (D == 1) {
        pts.push_back(Vec<1>{radius});
        pts.push_back(Vec<1>{-radius});
    } else {
        for (int i = 0; i < n; ++i) {
            Vec<D> u;
            double r2 = 0.0;
            do {
                for (std::size_t j = 0; j < D; ++j) u[j] = rng.normal();
                r2 = norm2(u);
            } while (r2 < 1e-12);
            pts.push_back(scale(u, radius / std::sqrt(r2)));
        }
    }
    return pts;
}

template <std::size_t D>
inline std::vector<Vec<D>> ball_grid(double radius, int per_axis) {
    std::vector<Vec<D>> pts;
    const int n = per_axis;
    if constexpr (D == 1) {
        for (int i = 0; i < n; ++i) pts.push_back(Vec<1>{-radius + 2.0 * radius * i / (n - 1)});
    } else if constexpr (D == 2) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Vec<2> p{-radius + 2.0 * radius * i / (n - 1), -radius + 2.0 * radius * j / (n - 1)};
                if (norm2(p) <= radius * radius) pts.push_back(p);
            }
    } else {
        const int m = std::max(5, per_axis / 2);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k) {
                    Vec<3> p{-radius + 2.0 * radius * i / (m - 1), -radius + 2.0 * radius * j / (m - 1),
                             -radius + 2.0 * radius * k / (m - 1)};
                    if (norm2(p) <= radius * radius) pts.push_back(p);
                }
    }
    return pts;
}

}  // namespace detail

template <std::size_t D>
inline AssumptionReport check_assumptions(const PotentialPair<D>& pair, const SamplingGrid& grid) {
    grid.validate();
    RngStream rng(grid.seed);
    AssumptionReport rep;
    {
        std::ostringstream os;
        os << "ball r<=" << grid.ball_radius << " (" << grid.points_per_axis
           << "/axis), rings at";
        for (double r : grid.ring_radii) os << " " << r;
        rep.grid_description = os.str();
    }
    rep.grid_tolerance = grid.tolerance;

    const auto ball = detail::ball_grid<D>(grid.ball_radius, grid.points_per_axis);
    std::vector<Vec<D>> far;
    for (double r : grid.ring_radii) {
        auto pts = detail::ring_points<D>(r, grid.ring_points, rng);
        far.insert(far.end(), pts.begin(), pts.end());
    }

    // (A_U,1): fit c1 as the far-field ratio, then c2 as the residual sup.
    {
        double c1 = 0.0;
        for (const auto& x : far) {
            const double g = norm(pair.grad_U(x));
            if (g > 1e-8) c1 = std::max(c1, sym_op_norm(pair.hess_U(x)) / g);
        }
        c1 = std::max(c1, 1e-3);
        double c2 = 0.0;
        Vec<D> wit = zero_vec<D>();
        for (const auto& x : ball) {
            const double r = sym_op_norm(pair.hess_U(x)) - c1 * norm(pair.grad_U(x));
            if (r > c2) {
                c2 = r;
                wit = x;
            }
        }
        rep.au1_hessian_bound.name = "A_U1 hessian bound";
        rep.au1_hessian_bound.verdict = Verdict::Pass;
        rep.au1_hessian_bound.value = c2;
        rep.au1_hessian_bound.witness.assign(wit.begin(), wit.end());
        std::ostringstream os;
        os << "c1=" << c1 << ", c2=" << std::max(c2, 0.0) << " (sampled)";
        rep.au1_hessian_bound.note = os.str();
    }

    // (A_U,1) integrability of e^{-U}: U must outgrow (d + margin) log|x| far out.
    {
        double worst = std::numeric_limits<double>::infinity();
        Vec<D> wit = zero_vec<D>();
        for (const auto& x : far) {
            const double v = pair.U(x) / std::log(norm(x));
            if (v < worst) {
                worst = v;
                wit = x;
            }
        }
        rep.au1_integrability.name = "A_U1 e^{-U} integrable";
        rep.au1_integrability.value = worst;
        rep.au1_integrability.witness.assign(wit.begin(), wit.end());
        rep.au1_integrability.verdict = worst > double(D) + 0.5 ? Verdict::Pass
                                        : (worst < double(D) ? Verdict::Fail : Verdict::Unknown);
        rep.au1_integrability.note = "min U/log|x| on rings";
    }

    // (A_U,2): min over the far rings of <grad U, x>/|x|.
    {
        double worst = std::numeric_limits<double>::infinity();
        Vec<D> wit = zero_vec<D>();
        for (const auto& x : far) {
            const double v = dot(pair.grad_U(x), x) / norm(x);
            if (v < worst) {
                worst = v;
                wit = x;
            }
        }
        rep.au2_radial_drift.name = "A_U2 radial drift liminf";
        rep.au2_radial_drift.value = worst;
        rep.au2_radial_drift.witness.assign(wit.begin(), wit.end());
        rep.au2_radial_drift.verdict =
            worst > grid.tolerance ? Verdict::Pass : (worst <= 0.0 ? Verdict::Fail : Verdict::Unknown);
    }

    // (A_Phi,1): monotone radial profile on a ray grid.
    {
        double worst = 0.0, rworst = 0.0;
        double prev = pair.psi(0.0);
        const int n = 200;
        const double rmax = grid.ring_radii.back();
        Verdict v = Verdict::Pass;
        for (int i = 1; i <= n; ++i) {
            const double r = rmax * i / n;
            const double cur = pair.psi(r * r);
            if (cur < prev - grid.tolerance) {
                v = Verdict::Fail;
                if (prev - cur > worst) {
                    worst = prev - cur;
                    rworst = r;
                }
            }
            prev = cur;
        }
        rep.aphi1_monotone.name = "A_Phi1 radial monotonicity";
        rep.aphi1_monotone.verdict = v;
        rep.aphi1_monotone.value = worst;
        rep.aphi1_monotone.witness = {rworst};
    }

    // (A_Phi,2) sup norms: sampled suprema must not be growing on the rings.
    {
        double sup_g = 0.0, sup_h_scaled = 0.0, sup_t = 0.0, sup_shift = 0.0;
        double ring_first = 0.0, ring_last = 0.0;
        for (const auto& v : ball) {
            sup_g = std::max(sup_g, norm(pair.grad_Phi(v)));
            sup_h_scaled = std::max(sup_h_scaled, sym_op_norm(pair.hess_Phi(v)) * norm(v));
            double t2 = 0.0;
            for (std::size_t i = 0; i < D; ++i)
                for (std::size_t j = 0; j < D; ++j)
                    for (std::size_t k = 0; k < D; ++k) {
                        const double t = pair.third_Phi(v, i, j, k);
                        t2 += t * t;
                    }
            sup_t = std::max(sup_t, std::sqrt(t2));
            sup_shift = std::max(sup_shift, std::fabs(pair.psi(norm2(v)) - pair.psi(0.25 * norm2(v))));
        }
        for (size_t i = 0; i < far.size(); ++i) {
            const double g = norm(pair.grad_Phi(far[i]));
            sup_g = std::max(sup_g, g);
            sup_h_scaled = std::max(sup_h_scaled, sym_op_norm(pair.hess_Phi(far[i])) * norm(far[i]));
            sup_shift = std::max(sup_shift,
                                 std::fabs(pair.psi(norm2(far[i])) - pair.psi(0.25 * norm2(far[i]))));
            if (i < far.size() / 4) ring_first = std::max(ring_first, g);
            if (i >= 3 * far.size() / 4) ring_last = std::max(ring_last, g);
        }
        rep.aphi2_sup_norms.name = "A_Phi2 sup norms";
        rep.aphi2_sup_norms.value = std::max({sup_g, sup_h_scaled, sup_t, sup_shift});
        rep.aphi2_sup_norms.verdict = ring_last <= ring_first * 1.05 + grid.tolerance
                                          ? Verdict::Pass
                                          : Verdict::Unknown;
        std::ostringstream os;
        os << "sup|grad Phi|=" << sup_g << ", sup(|hess||v|)=" << sup_h_scaled
           << ", sup|grad^3|_F=" << sup_t << ", sup|Phi(v)-Phi(v/2)|=" << sup_shift;
        rep.aphi2_sup_norms.note = os.str();
    }

    // (A_Phi,2) B_1(v) shell comparison, checked on a finite shell of offsets.
    {
        double worst_ratio = 0.0;
        Vec<D> wit = zero_vec<D>();
        auto offsets = detail::ring_points<D>(1.0, 8, rng);
        for (const auto& v : far) {
            const double base = std::max(norm(pair.grad_Phi(v)), 1e-300);
            for (const auto& o : offsets) {
                const double q = norm(pair.grad_Phi(add(v, o))) / base;
                if (q > worst_ratio) {
                    worst_ratio = q;
                    wit = v;
                }
            }
        }
        rep.aphi2_shell.name = "A_Phi2 unit-shell comparison";
        rep.aphi2_shell.value = worst_ratio;
        rep.aphi2_shell.witness.assign(wit.begin(), wit.end());
        rep.aphi2_shell.verdict = worst_ratio < 50.0 ? Verdict::Pass : Verdict::Unknown;
        rep.aphi2_shell.note = "c* estimate from |grad Phi| over unit offsets (finite shell only)";
    }

    // (A_Phi,3): truncated integral + tail-exponent analysis. The integrand is
    // e^{Phi(v)} (1+|v|)^{-2(d+alpha)}; with e^{-Phi} ~ |v|^{-p} the radial
    // exponent is (p - d) - 2 alpha - d - 1 + (d-1) = p - d - 2 alpha - 2 ... we
    // use the measured log-slope on the rings instead of trusting p.
    {
        auto integrand_ray = [&](double r) {
            Vec<D> v = zero_vec<D>();
            v[0] = r;
            return std::exp(pair.psi(r * r)) * std::pow(1.0 + r, -2.0 * (D + pair.alpha));
        };
        double trunc = integrate_half_line(
            [&](double r) {
                return integrand_ray(r) * std::pow(r, D - 1) * special::sphere_area(D);
            },
            grid.ring_radii.back(), std::numeric_limits<double>::infinity(), 12);
        const double r1 = grid.ring_radii[grid.ring_radii.size() - 2], r2 = grid.ring_radii.back();
        const double slope = (std::log(integrand_ray(r2)) - std::log(integrand_ray(r1))) /
                             (std::log(r2) - std::log(r1));
        const double radial_exponent = slope + (D - 1);
        rep.aphi3_integral.name = "A_Phi3 integral";
        rep.aphi3_integral.value = trunc;
        rep.aphi3_integral.verdict = radial_exponent < -1.0 - 1e-6
                                         ? Verdict::Pass
                                         : (radial_exponent > -1.0 + 1e-6 ? Verdict::Fail : Verdict::Unknown);
        std::ostringstream os;
        os << "truncated integral=" << trunc << ", measured radial exponent=" << radial_exponent;
        rep.aphi3_integral.note = os.str();
    }

    // (A_Phi,4): ring sampling of e^{Phi}/|v|^{d+alpha}.
    {
        std::vector<double> mins;
        for (double r : grid.ring_radii)
            mins.push_back(std::exp(pair.psi(r * r)) / std::pow(r, D + pair.alpha));
        const double last = mins.back();
        Verdict v = Verdict::Unknown;
        if (last > grid.tolerance && mins.back() >= 0.9 * mins.front()) v = Verdict::Pass;
        if (mins.back() < 0.5 * mins.front()) v = Verdict::Fail;
        rep.aphi4_liminf.name = "A_Phi4 liminf e^{Phi}/|v|^{d+alpha}";
        rep.aphi4_liminf.value = last;
        rep.aphi4_liminf.verdict = v;
        rep.aphi4_liminf.note = "ring minima trend (sampling cannot prove a liminf)";
    }

    return rep;
}

// Central-difference gradient used by the consistency invariants; step
// h = 1e-5 (1 + |x|) balances truncation and round-off in double precision.
template <int D, typename F>
inline Vec<D> fd_gradient(F&& f, const Vec<D>& x) {
    const double h = 1e-5 * (1.0 + norm(x));
    Vec<D> g;
    for (std::size_t i = 0; i < D; ++i) {
        Vec<D> xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

}  // namespace levykin
