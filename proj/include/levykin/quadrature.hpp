#pragma once

// Quadrature for the principal-value and tail integrals behind the nonlocal
// operators. All radial integrals are split into three regions:
//
//   [0, delta]    near-singularity, integrand r^{nu-1} g(r) with g regular;
//                 handled by the power substitution r = delta * t^{1/nu}
//   [delta, R]    composite Gauss-Legendre on octave panels in log r
//   (R, inf)      either an exponential map r = R e^s with adaptive panel
//                 cutoff, or a closed-form power tail for integrands with a
//                 declared power-law decay
//
// Angular averages over S^{d-1}: exact two-point rule in d=1, the midpoint
// (trapezoid) rule on the circle in d=2 (spectrally accurate for smooth
// integrands), and a Gauss-Legendre x uniform-azimuth product rule in d=3.

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "levykin/errors.hpp"
#include "levykin/special.hpp"
#include "levykin/vec.hpp"

namespace levykin {

struct GaussLegendre {
    std::vector<double> nodes;    // on (-1, 1)
    std::vector<double> weights;  // sum to 2
};

// Nodes by Newton iteration on P_n; cached per order.
inline const GaussLegendre& gauss_legendre(int n) {
    if (n < 1) throw ValidationError("gauss_legendre: order >= 1 required");
    static std::map<int, GaussLegendre> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(special::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        gl.nodes[i] = -x;
        gl.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        gl.weights[i] = w;
        gl.weights[n - 1 - i] = w;
    }
    auto [pos, ok] = cache.emplace(n, std::move(gl));
    (void)ok;
    return pos->second;
}

template <typename F>
inline double integrate_gl(F&& f, double a, double b, int order) {
    const auto& gl = gauss_legendre(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * f(mid + half * gl.nodes[i]);
    return s * half;
}

// Composite GL over [a, b] split into npanels equal pieces.
template <typename F>
inline double integrate_gl_composite(F&& f, double a, double b, int order, int npanels) {
    double s = 0.0;
    for (int p = 0; p < npanels; ++p) {
        const double x0 = a + (b - a) * p / npanels;
        const double x1 = a + (b - a) * (p + 1) / npanels;
        s += integrate_gl(f, x0, x1, order);
    }
    return s;
}

enum class TailRule { PowerLawAnalytic, ExponentialMap };

inline TailRule tail_rule_from_string(const std::string& s) {
    if (s == "power-law-analytic") return TailRule::PowerLawAnalytic;
    if (s == "exponential-map") return TailRule::ExponentialMap;
    throw ValidationError("unknown tail_rule: " + s);
}

inline std::string to_string(TailRule t) {
    return t == TailRule::PowerLawAnalytic ? "power-law-analytic" : "exponential-map";
}

struct QuadratureSpec {
    double inner_split = 0.1;   // delta
    double outer_radius = 40.0; // R
    int nodes_inner = 32;
    int nodes_shell = 12;       // GL order per octave panel of [delta, R]
    int nodes_angular = 16;
    TailRule tail_rule = TailRule::ExponentialMap;

    void validate() const {
        if (!(inner_split > 0.0 && inner_split < 1.0))
            throw ValidationError("QuadratureSpec: 0 < inner_split < 1 required");
        if (!(outer_radius >= 1.0)) throw ValidationError("QuadratureSpec: outer_radius >= 1 required");
        if (nodes_inner < 4 || nodes_shell < 4 || nodes_angular < 4)
            throw ValidationError("QuadratureSpec: node counts >= 4 required");
    }

    QuadratureSpec refined() const {
        QuadratureSpec q = *this;
        q.inner_split *= 0.5;
        q.nodes_inner *= 2;
        q.nodes_shell *= 2;
        q.nodes_angular *= 2;
        return q;
    }

    QuadratureSpec with_outer_radius(double r) const {
        QuadratureSpec q = *this;
        q.outer_radius = std::max(q.outer_radius, r);
        return q;
    }
};

// ---------------------------------------------------------------------------
// Angular rules. Weights sum to the surface measure of S^{d-1}.

template <std::size_t D>
struct AngularRule {
    std::vector<Vec<D>> dirs;
    std::vector<double> weights;
};

template <std::size_t D>
inline AngularRule<D> angular_rule(int n);

template <>
inline AngularRule<1> angular_rule<1>(int) {
    AngularRule<1> r;
    r.dirs = {Vec<1>{1.0}, Vec<1>{-1.0}};
    r.weights = {1.0, 1.0};
    return r;
}

template <>
inline AngularRule<2> angular_rule<2>(int n) {
    AngularRule<2> r;
    r.dirs.reserve(n);
    r.weights.assign(n, 2.0 * special::pi / n);
    for (int i = 0; i < n; ++i) {
        const double th = 2.0 * special::pi * (i + 0.5) / n;
        r.dirs.push_back(Vec<2>{std::cos(th), std::sin(th)});
    }
    return r;
}

template <>
inline AngularRule<3> angular_rule<3>(int n) {
    // GL in cos(polar) x uniform azimuth.
    AngularRule<3> r;
    const int npol = std::max(4, n / 2), naz = std::max(4, n);
    const auto& gl = gauss_legendre(npol);
    for (int i = 0; i < npol; ++i) {
        const double c = gl.nodes[i], s = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (int j = 0; j < naz; ++j) {
            const double ph = 2.0 * special::pi * (j + 0.5) / naz;
            r.dirs.push_back(Vec<3>{s * std::cos(ph), s * std::sin(ph), c});
            r.weights.push_back(gl.weights[i] * 2.0 * special::pi / naz);
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Radial pieces.

// Inner region: I = int_0^delta r^{nu-1} g(r) dr with g regular at 0,
// computed via r = delta * t^{1/nu} so the weight becomes flat.
template <typename G>
inline double integrate_inner_power(double delta, double nu, int order, G&& g) {
    const auto& gl = gauss_legendre(order);
    const double inv_nu = 1.0 / nu;
    double s = 0.0;
    for (size_t i = 0; i < gl.nodes.size(); ++i) {
        const double t = 0.5 * (gl.nodes[i] + 1.0);
        const double r = delta * std::pow(t, inv_nu);
        s += 0.5 * gl.weights[i] * g(r);
    }
    return s * std::pow(delta, nu) / nu;
}

// Shell [delta, R]: composite GL on octave panels in log r of F(r) dr.
template <typename F>
inline double integrate_shell_plain(double delta, double R, int order, F&& f) {
    if (R <= delta) return 0.0;
    const int npanels = std::max(1, (int)std::ceil(std::log2(R / delta)));
    const double ls0 = std::log(delta), ls1 = std::log(R);
    double s = 0.0;
    for (int p = 0; p < npanels; ++p) {
        const double a = ls0 + (ls1 - ls0) * p / npanels;
        const double b = ls0 + (ls1 - ls0) * (p + 1) / npanels;
        s += integrate_gl([&](double u) { const double r = std::exp(u); return f(r) * r; }, a, b, order);
    }
    return s;
}

// Shell with a sinh-refined window around r = center. Integrands built from a
// decaying mass profile carry an O(1)-width feature where the kernel window
// sweeps that mass (r near the evaluation radius); octave panels in log r
// cannot resolve it once center >> 1.
template <typename F>
inline double integrate_shell(double delta, double R, int order, F&& f, double center = 0.0) {
    if (R <= delta) return 0.0;
    if (!(center > 4.0) || 0.5 * center <= 2.0 * delta || 0.5 * center >= R)
        return integrate_shell_plain(delta, R, order, f);
    const double a = 0.5 * center, b = std::min(R, 2.0 * center);
    double s = integrate_shell_plain(delta, a, order, f);
    const double t0 = std::asinh(a - center), t1 = std::asinh(b - center);
    const int npanels = std::max(2, (int)std::ceil(t1 - t0));
    for (int p = 0; p < npanels; ++p) {
        const double ta = t0 + (t1 - t0) * p / npanels;
        const double tb = t0 + (t1 - t0) * (p + 1) / npanels;
        s += integrate_gl(
            [&](double t) { return f(center + std::sinh(t)) * std::cosh(t); }, ta, tb, order);
    }
    if (b < R) s += integrate_shell_plain(b, R, order, f);
    return s;
}

// Tail (R, inf) via r = R e^s on unit s-panels, stopping when panels no
// longer contribute. decay_hint bounds how many panels can matter.
template <typename F>
inline double integrate_tail_map(double R, int order, F&& f, double decay_hint) {
    double s = 0.0;
    const int max_panels = std::isfinite(decay_hint) && decay_hint > 0.0
                               ? std::min(300, (int)std::ceil(60.0 / decay_hint) + 8)
                               : 60;
    for (int p = 0; p < max_panels; ++p) {
        const double contrib = integrate_gl(
            [&](double u) { const double r = R * std::exp(u); return f(r) * r; }, (double)p,
            (double)(p + 1), order);
        s += contrib;
        if (std::fabs(contrib) < 1e-16 * (std::fabs(s) + 1e-300)) break;
    }
    return s;
}

// Generic positive-axis integral int_0^inf g(r) dr for integrands that are
// regular at 0 and decay at a known power-law rate; used for normalizers and
// radial profile constants. [0, r0] GL + octave panels to R0 + measured
// single-term power tail.
template <typename G>
inline double integrate_half_line(G&& g, double R0, double tail_exponent, int order = 16) {
    double s = integrate_gl(g, 0.0, 1.0, 2 * order);
    s += integrate_shell(1.0, R0, order, g);
    if (std::isfinite(tail_exponent)) {
        if (tail_exponent <= 1.0)
            throw ValidationError("integrate_half_line: tail exponent must exceed 1");
        const double amp = g(R0) * std::pow(R0, tail_exponent);
        s += amp * std::pow(R0, 1.0 - tail_exponent) / (tail_exponent - 1.0);
    } else {
        s += integrate_tail_map(R0, order, g, 1.0);
    }
    return s;
}

}  // namespace levykin
