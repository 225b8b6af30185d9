#pragma once

// The invariant measure mu = mu1 x mu2: normalizing constants, quadrature node
// sets against both marginals, exact samplers for the built-in families, and
// expectations with moment pre-checks against the heavy velocity tail.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "levykin/errors.hpp"
#include "levykin/fracops.hpp"
#include "levykin/model.hpp"
#include "levykin/quadrature.hpp"
#include "levykin/rng.hpp"
#include "levykin/testfunction.hpp"

namespace levykin {

enum class Marginal { Mu1, Mu2 };

struct Normalizations {
    double c_u = 0.0;    // int e^{-U}
    double c_phi = 0.0;  // int e^{-Phi}
};

namespace detail {

// Radial integral sigma_{d-1} int_0^inf r^{d-1} w(r) dr for a radial density
// profile w; tail exponent is for w itself (w ~ r^{-p}).
template <std::size_t D>
inline double radial_density_integral(const std::function<double(double)>& w, double p_decay,
                                      double R0 = 1e3) {
    const double sigma = special::sphere_area(D);
    const double te = std::isfinite(p_decay) ? p_decay - (D - 1) : p_decay;
    return sigma *
           integrate_half_line([&](double r) { return std::pow(r, D - 1) * w(r); }, R0, te, 16);
}

}  // namespace detail

template <std::size_t D>
inline Normalizations normalizations(const PotentialPair<D>& pair) {
    if (std::isfinite(pair.phi_tail_exponent) && pair.phi_tail_exponent <= double(D))
        throw ValidationError("normalizations: e^{-Phi} not integrable (tail exponent <= d)");
    Normalizations n;
    Vec<D> e1 = unit_axis<D>(0);
    if (pair.u_family == UFamily::Quadratic || pair.u_family == UFamily::QuadraticPlusBump ||
        pair.u_gaussian_scale > 0.0) {
        n.c_u = detail::radial_density_integral<D>(
            [&](double r) { return std::exp(-pair.U(scale(e1, r))); },
            std::numeric_limits<double>::infinity(), 60.0);
    } else {
        n.c_u = detail::radial_density_integral<D>(
            [&](double r) { return std::exp(-pair.U(scale(e1, r))); },
            std::numeric_limits<double>::infinity(), 200.0);
    }
    n.c_phi = detail::radial_density_integral<D>(
        [&](double r) { return std::exp(-pair.psi(r * r)); }, pair.phi_tail_exponent);
    if (!(n.c_u > 0.0) || !std::isfinite(n.c_u) || !(n.c_phi > 0.0) || !std::isfinite(n.c_phi))
        throw NumericsError("normalizations: divergent or invalid normalizer");
    return n;
}

// ---------------------------------------------------------------------------
// Quadrature node sets against the marginals (d = 1 and 2; the product
// integrals needed by the generator checks are desk-scale only).

template <std::size_t D>
struct WeightedNodes {
    std::vector<Vec<D>> pts;
    std::vector<double> w;        // weights, renormalized to unit total mass
    double tail_mass = 0.0;       // estimated measure mass outside the node range
    double raw_mass_defect = 0.0; // |sum of raw weights - 1| before renormalization

    template <typename F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (size_t i = 0; i < pts.size(); ++i) s += w[i] * f(pts[i]);
        return s;
    }

    void renormalize() {
        double total = 0.0;
        for (double x : w) total += x;
        raw_mass_defect = std::fabs(total - 1.0);
        if (total > 0.0)
            for (double& x : w) x /= total;
    }
};

struct MarginalGrid {
    double mu1_halfwidth = 9.0;   // in units of the Gaussian sd when known
    int mu1_panels = 10;
    int mu1_order = 16;
    double mu2_radius = 1e5;      // leaves ~1e-8 of mu2 mass outside for beta >= 1
    int mu2_order = 12;
    int mu2_core_order = 32;
    int mu2_angular = 16;         // d = 2 only
};

namespace detail {

inline std::vector<std::pair<double, double>> line_panels_log(double r0, double r1, int order) {
    // GL nodes of int_{r0}^{r1} . dr on octave panels, returned as (r, w).
    std::vector<std::pair<double, double>> out;
    const int npanels = std::max(1, (int)std::ceil(std::log2(r1 / r0)));
    const auto& gl = gauss_legendre(order);
    const double l0 = std::log(r0), l1 = std::log(r1);
    for (int p = 0; p < npanels; ++p) {
        const double a = l0 + (l1 - l0) * p / npanels, b = l0 + (l1 - l0) * (p + 1) / npanels;
        for (size_t i = 0; i < gl.nodes.size(); ++i) {
            const double u = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
            const double r = std::exp(u);
            out.emplace_back(r, 0.5 * (b - a) * gl.weights[i] * r);
        }
    }
    return out;
}

}  // namespace detail

template <std::size_t D>
inline WeightedNodes<D> mu1_nodes(const PotentialPair<D>& pair, const Normalizations& nz,
                                  const MarginalGrid& g = {});

template <>
inline WeightedNodes<1> mu1_nodes<1>(const PotentialPair<1>& pair, const Normalizations& nz,
                                     const MarginalGrid& g) {
    WeightedNodes<1> out;
    const double sd = pair.u_gaussian_scale > 0.0 ? 1.0 / std::sqrt(pair.u_gaussian_scale) : 1.0;
    const double L = g.mu1_halfwidth * sd;
    const auto& gl = gauss_legendre(g.mu1_order);
    for (int p = 0; p < g.mu1_panels; ++p) {
        const double a = -L + 2.0 * L * p / g.mu1_panels, b = -L + 2.0 * L * (p + 1) / g.mu1_panels;
        for (size_t i = 0; i < gl.nodes.size(); ++i) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
            out.pts.push_back(Vec<1>{x});
            out.w.push_back(0.5 * (b - a) * gl.weights[i] * std::exp(-pair.U(Vec<1>{x})) / nz.c_u);
        }
    }
    out.tail_mass = std::exp(-pair.U(Vec<1>{L})) * 2.0 / nz.c_u;  // crude but conservative here
    out.renormalize();
    return out;
}

template <>
inline WeightedNodes<2> mu1_nodes<2>(const PotentialPair<2>& pair, const Normalizations& nz,
                                     const MarginalGrid& g) {
    WeightedNodes<2> out;
    const double sd = pair.u_gaussian_scale > 0.0 ? 1.0 / std::sqrt(pair.u_gaussian_scale) : 1.0;
    const double L = g.mu1_halfwidth * sd;
    const auto& gl = gauss_legendre(g.mu1_order);
    std::vector<double> xs, ws;
    for (int p = 0; p < g.mu1_panels; ++p) {
        const double a = -L + 2.0 * L * p / g.mu1_panels, b = -L + 2.0 * L * (p + 1) / g.mu1_panels;
        for (size_t i = 0; i < gl.nodes.size(); ++i) {
            xs.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i]);
            ws.push_back(0.5 * (b - a) * gl.weights[i]);
        }
    }
    for (size_t i = 0; i < xs.size(); ++i)
        for (size_t j = 0; j < xs.size(); ++j) {
            Vec<2> x{xs[i], xs[j]};
            out.pts.push_back(x);
            out.w.push_back(ws[i] * ws[j] * std::exp(-pair.U(x)) / nz.c_u);
        }
    out.tail_mass = 4.0 * L * std::exp(-pair.U(Vec<2>{L, 0.0})) / nz.c_u;
    out.renormalize();
    return out;
}

template <std::size_t D>
inline WeightedNodes<D> mu2_nodes(const PotentialPair<D>& pair, const Normalizations& nz,
                                  const MarginalGrid& g = {});

template <>
inline WeightedNodes<1> mu2_nodes<1>(const PotentialPair<1>& pair, const Normalizations& nz,
                                     const MarginalGrid& g) {
    WeightedNodes<1> out;
    auto push = [&](double v, double lw) {
        out.pts.push_back(Vec<1>{v});
        out.w.push_back(lw * std::exp(-pair.psi(v * v)) / nz.c_phi);
    };
    const auto& glc = gauss_legendre(g.mu2_core_order);
    for (size_t i = 0; i < glc.nodes.size(); ++i) {
        const double r = 0.5 * (glc.nodes[i] + 1.0);
        push(r, 0.5 * glc.weights[i]);
        push(-r, 0.5 * glc.weights[i]);
    }
    for (const auto& [r, w] : detail::line_panels_log(1.0, g.mu2_radius, g.mu2_order)) {
        push(r, w);
        push(-r, w);
    }
    const double p = pair.phi_tail_exponent;
    if (std::isfinite(p)) {
        const double dens = std::exp(-pair.psi(g.mu2_radius * g.mu2_radius)) / nz.c_phi;
        out.tail_mass = 2.0 * dens * g.mu2_radius / (p - 1.0);
    }
    out.renormalize();
    return out;
}

template <>
inline WeightedNodes<2> mu2_nodes<2>(const PotentialPair<2>& pair, const Normalizations& nz,
                                     const MarginalGrid& g) {
    WeightedNodes<2> out;
    const auto ang = angular_rule<2>(g.mu2_angular);
    auto push_ring = [&](double r, double lw) {
        const double dens = std::exp(-pair.psi(r * r)) / nz.c_phi;
        for (size_t a = 0; a < ang.dirs.size(); ++a) {
            out.pts.push_back(scale(ang.dirs[a], r));
            out.w.push_back(lw * r * ang.weights[a] * dens);
        }
    };
    const auto& glc = gauss_legendre(g.mu2_core_order);
    for (size_t i = 0; i < glc.nodes.size(); ++i)
        push_ring(0.5 * (glc.nodes[i] + 1.0), 0.5 * glc.weights[i]);
    for (const auto& [r, w] : detail::line_panels_log(1.0, g.mu2_radius, g.mu2_order)) push_ring(r, w);
    const double p = pair.phi_tail_exponent;
    if (std::isfinite(p)) {
        const double dens = std::exp(-pair.psi(g.mu2_radius * g.mu2_radius)) / nz.c_phi;
        out.tail_mass = 2.0 * special::pi * dens * g.mu2_radius * g.mu2_radius / (p - 2.0);
    }
    out.renormalize();
    return out;
}

// ---------------------------------------------------------------------------
// Exact samplers for the built-in families.

template <std::size_t D>
inline Vec<D> sample_mu1(const PotentialPair<D>& pair, RngStream& rng) {
    if (pair.u_family == UFamily::Quadratic) {
        const double sd = 1.0 / std::sqrt(pair.u_gaussian_scale);
        Vec<D> x;
        for (std::size_t i = 0; i < D; ++i) x[i] = sd * rng.normal();
        return x;
    }
    if (pair.u_family == UFamily::QuadraticPlusBump) {
        // Rejection against a widened Gaussian envelope: with k2 = u_scale/2,
        //   -U(x) + k2|x|^2/2 = -u_scale |x|^2/4 - bump(x) <= max(0, -amp) =: c.
        const double k2 = 0.5 * pair.u_scale;
        double c = 0.0;
        for (double r = 0.0; r <= 10.0; r += 0.125) {
            Vec<D> x = scale(unit_axis<D>(0), r);
            c = std::max(c, -pair.U(x) + 0.5 * k2 * r * r);
        }
        const double sd = 1.0 / std::sqrt(k2);
        int attempts = 0;
        for (;;) {
            Vec<D> x;
            for (std::size_t i = 0; i < D; ++i) x[i] = sd * rng.normal();
            ++attempts;
            const double log_ratio = -pair.U(x) + 0.5 * k2 * norm2(x) - c;
            if (std::log(rng.uniform_pos()) < log_ratio) return x;
            if (attempts > 10000)
                throw NumericsError("sample_mu1: envelope acceptance rate below 1e-3");
        }
    }
    throw ValidationError("sample_mu1: no exact sampler for custom U");
}

// mu2 for log_radial(beta): V = Z_d / sqrt(G), G ~ chi^2_beta, which has
// density proportional to (1+|v|^2)^{-(d+beta)/2}.
template <std::size_t D>
inline Vec<D> sample_mu2(const PotentialPair<D>& pair, RngStream& rng) {
    if (pair.phi_family != PhiFamily::LogRadial)
        throw ValidationError("sample_mu2: exact sampler exists for log_radial only");
    const double g = rng.chi_square(pair.beta);
    Vec<D> z;
    for (std::size_t i = 0; i < D; ++i) z[i] = rng.normal();
    return scale(z, 1.0 / std::sqrt(g));
}

template <std::size_t D>
inline std::vector<Vec<D>> sample_marginal(const PotentialPair<D>& pair, Marginal which, int n,
                                           RngStream& rng) {
    std::vector<Vec<D>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.push_back(which == Marginal::Mu1 ? sample_mu1(pair, rng) : sample_mu2(pair, rng));
    return out;
}

// ---------------------------------------------------------------------------
// Expectations under mu.

struct Expectation {
    double mean = 0.0;
    double variance = 0.0;
    double error_bar = 0.0;      // quadrature budget or Monte-Carlo s.e. of the mean
    bool variance_valid = true;  // false when the moment pre-check rejects it
};

enum class ExpectMethod { Quadrature, MonteCarlo };

template <std::size_t D>
inline Expectation expect_under_mu(const PotentialPair<D>& pair, const TestFunction<D>& f,
                                   ExpectMethod method, int n_mc = 100000, uint64_t seed = 1,
                                   const MarginalGrid& g = {}) {
    const double beta_eff =
        std::isfinite(pair.phi_tail_exponent) ? pair.phi_tail_exponent - D : std::numeric_limits<double>::infinity();
    if (f.growth_v >= beta_eff)
        throw ValidationError("expect_under_mu: f grows too fast in v for a mu-mean");
    const bool var_ok = 2.0 * f.growth_v < beta_eff;

    Expectation e;
    e.variance_valid = var_ok;
    if (method == ExpectMethod::Quadrature) {
        const auto nz = normalizations(pair);
        const auto n1 = mu1_nodes<D>(pair, nz, g);
        const auto n2 = mu2_nodes<D>(pair, nz, g);
        double m = 0.0, m2 = 0.0;
        for (size_t i = 0; i < n1.pts.size(); ++i) {
            double sv = 0.0, sv2 = 0.0;
            for (size_t j = 0; j < n2.pts.size(); ++j) {
                const double val = f(n1.pts[i], n2.pts[j]);
                sv += n2.w[j] * val;
                sv2 += n2.w[j] * val * val;
            }
            m += n1.w[i] * sv;
            m2 += n1.w[i] * sv2;
        }
        e.mean = m;
        e.variance = var_ok ? std::max(0.0, m2 - m * m) : std::numeric_limits<double>::quiet_NaN();
        e.error_bar = (n1.tail_mass + n2.tail_mass) * (1.0 + std::fabs(m));
    } else {
        RngStream rng(seed);
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n_mc; ++i) {
            const Vec<D> x = sample_mu1(pair, rng);
            const Vec<D> v = sample_mu2(pair, rng);
            const double val = f(x, v);
            s += val;
            s2 += val * val;
        }
        e.mean = s / n_mc;
        const double var_est = std::max(0.0, s2 / n_mc - e.mean * e.mean);
        e.variance = var_ok ? var_est : std::numeric_limits<double>::quiet_NaN();
        e.error_bar = std::sqrt(var_est / n_mc);
    }
    return e;
}

}  // namespace levykin
