#pragma once

// Pointwise application of the generator pieces
//   L0 f = <grad Phi(v), grad_x f> - <grad U(x), grad_v f>
//   L1 g = <b_Phi(v), grad g> - (-Delta)^{alpha/2} g
//   L1* g = -e^{Phi} div_v(g grad RieszPot) - e^{Phi} (-Delta)^{alpha/2}(g e^{-Phi})
//   L_OD a = Delta a - <grad U, grad a>
// plus the weak-form invariance residual, the nonlocal Dirichlet form, and the
// carre-du-champ identity gap with independently discretized sides.

#include <cmath>
#include <functional>
#include <limits>

#include "levykin/fracops.hpp"
#include "levykin/measures.hpp"
#include "levykin/model.hpp"
#include "levykin/testfunction.hpp"

namespace levykin {

template <std::size_t D>
inline double apply_L0(const PotentialPair<D>& pair, const TestFunction<D>& f, const Vec<D>& x,
                       const Vec<D>& v) {
    return dot(pair.grad_Phi(v), f.grad_x(x, v)) - dot(pair.grad_U(x), f.grad_v(x, v));
}

template <std::size_t D>
inline double apply_L1(const PotentialPair<D>& pair, const VelocityFunction<D>& g, const Vec<D>& v,
                       double alpha, const QuadratureSpec& q, const DriftProfile* profile = nullptr) {
    const Vec<D> b = (profile && profile->covers(norm(v))) ? profile->template eval<D>(v)
                                                           : drift_b_phi(pair, v, alpha, q);
    const Field<D> gf{g.value, g.tail_exponent};
    return dot(b, g.grad(v)) - frac_laplacian(gf, v, alpha, q);
}

template <std::size_t D>
inline double apply_L1_star(const PotentialPair<D>& pair, const VelocityFunction<D>& g,
                            const Vec<D>& v, double alpha, const QuadratureSpec& q) {
    const Vec<D> b = drift_b_phi(pair, v, alpha, q);
    const Field<D> h = equilibrium_field(pair);
    const double div_grad_pot = riesz_grad_divergence(h, v, alpha, q.with_outer_radius(2.0 * norm(v) + 4.0));
    // g e^{-Phi} decays with the summed exponents (inf + finite = inf).
    const double p_w = pair.phi_tail_exponent + std::max(g.tail_exponent, 0.0);
    const Field<D> w{[&pair, &g](const Vec<D>& u) { return g.value(u) * pair.exp_neg_Phi(u); }, p_w};
    const double ePhi = std::exp(pair.Phi(v));
    return -dot(b, g.grad(v)) - g.value(v) * ePhi * div_grad_pot -
           ePhi * frac_laplacian(w, v, alpha, q.with_outer_radius(2.0 * norm(v) + 4.0));
}

template <std::size_t D>
inline double apply_L_OD(const PotentialPair<D>& pair, const PositionFunction<D>& f, const Vec<D>& x) {
    return f.laplacian(x) - dot(pair.grad_U(x), f.grad(x));
}

// ---------------------------------------------------------------------------
// Weak-form invariance: int (L0 f + L1 f) dmu should vanish. The residual is
// computed on a product quadrature; the budget collects the tail-mass bounds
// and the sensitivity to one quadrature refinement.

struct InvarianceResult {
    double residual = 0.0;
    double budget = 0.0;     // numerical error estimate
    bool conclusive = true;  // false when the budget exceeds the requested tolerance
};

template <std::size_t D>
struct MuQuadrature {
    Normalizations nz;
    WeightedNodes<D> x_nodes;
    WeightedNodes<D> v_nodes;

    static MuQuadrature make(const PotentialPair<D>& pair, const MarginalGrid& g = {}) {
        MuQuadrature q;
        q.nz = normalizations(pair);
        q.x_nodes = mu1_nodes<D>(pair, q.nz, g);
        q.v_nodes = mu2_nodes<D>(pair, q.nz, g);
        return q;
    }
};

template <std::size_t D>
inline double integral_L_f(const PotentialPair<D>& pair, const TestFunction<D>& f, double alpha,
                           const QuadratureSpec& q, const MuQuadrature<D>& mu,
                           const DriftProfile* profile = nullptr) {
    // transport part: exact pointwise evaluations
    double s0 = 0.0;
    for (size_t i = 0; i < mu.x_nodes.pts.size(); ++i) {
        double sv = 0.0;
        for (size_t j = 0; j < mu.v_nodes.pts.size(); ++j)
            sv += mu.v_nodes.w[j] * apply_L0(pair, f, mu.x_nodes.pts[i], mu.v_nodes.pts[j]);
        s0 += mu.x_nodes.w[i] * sv;
    }
    // velocity part: cache the drift at the v nodes
    std::vector<Vec<D>> bcache(mu.v_nodes.pts.size());
    for (size_t j = 0; j < mu.v_nodes.pts.size(); ++j)
        bcache[j] = (profile && profile->covers(norm(mu.v_nodes.pts[j])))
                        ? profile->template eval<D>(mu.v_nodes.pts[j])
                        : drift_b_phi(pair, mu.v_nodes.pts[j], alpha, q);
    double s1 = 0.0;
    for (size_t i = 0; i < mu.x_nodes.pts.size(); ++i) {
        const Vec<D> x = mu.x_nodes.pts[i];
        Field<D> section{[&f, &x](const Vec<D>& v) { return f.value(x, v); }, f.tail_v};
        double sv = 0.0;
        for (size_t j = 0; j < mu.v_nodes.pts.size(); ++j) {
            const Vec<D> v = mu.v_nodes.pts[j];
            const double drift_term = dot(bcache[j], f.grad_v(x, v));
            const double nonlocal = frac_laplacian(section, v, alpha, q);
            sv += mu.v_nodes.w[j] * (drift_term - nonlocal);
        }
        s1 += mu.x_nodes.w[i] * sv;
    }
    return s0 + s1;
}

template <std::size_t D>
inline InvarianceResult invariance_residual(const PotentialPair<D>& pair, const TestFunction<D>& f,
                                            double alpha, const QuadratureSpec& q,
                                            const MarginalGrid& grid = {}, double tolerance = 5e-3,
                                            const DriftProfile* profile = nullptr) {
    const auto mu = MuQuadrature<D>::make(pair, grid);
    const double r1 = integral_L_f(pair, f, alpha, q, mu, profile);
    const double r2 = integral_L_f(pair, f, alpha, q.refined(), mu, profile);
    InvarianceResult out;
    out.residual = r2;
    out.budget = std::fabs(r2 - r1) + mu.x_nodes.tail_mass + mu.v_nodes.tail_mass;
    out.conclusive = out.budget <= tolerance;
    return out;
}

// ---------------------------------------------------------------------------
// Nonlocal Dirichlet form  E(g) = int int (g(v)-g(vbar))^2 |v-vbar|^{-d-alpha}
// dv mu2(dvbar), nonnegative by construction.

template <std::size_t D>
inline double dirichlet_form(const PotentialPair<D>& pair, const VelocityFunction<D>& g,
                             double alpha, const QuadratureSpec& q, const MarginalGrid& grid = {}) {
    static_assert(D <= 2, "dirichlet_form is desk-scale: d = 1 or 2");
    const auto nz = normalizations(pair);
    const auto outer = mu2_nodes<D>(pair, nz, grid);
    const auto ang = angular_rule<D>(q.nodes_angular);

    double total = 0.0;
    for (size_t j = 0; j < outer.pts.size(); ++j) {
        const Vec<D> vb = outer.pts[j];
        const double gvb = g.value(vb);
        auto sq = [&](double r) {
            double s = 0.0;
            for (size_t a = 0; a < ang.dirs.size(); ++a) {
                const double dgp = g.value(axpy(vb, r, ang.dirs[a])) - gvb;
                s += ang.weights[a] * dgp * dgp;
            }
            return s;
        };
        const double hc = detail::pivot_radius(q.inner_split, norm(vb));
        const double sq_hc = sq(hc);
        const QuadratureSpec qe = q.with_outer_radius(2.0 * norm(vb) + 4.0);
        const double inner =
            integrate_inner_power(qe.inner_split, 2.0 - alpha, qe.nodes_inner, [&](double r) {
                const double s2 = (r < hc) ? sq_hc * (r * r) / (hc * hc) : sq(r);
                return s2 / (r * r);
            });
        const double shell = integrate_shell(qe.inner_split, qe.outer_radius, qe.nodes_shell,
                                             [&](double r) { return std::pow(r, -1.0 - alpha) * sq(r); },
                                             norm(vb));
        const double tail = integrate_tail_map(
            qe.outer_radius, qe.nodes_shell,
            [&](double r) { return std::pow(r, -1.0 - alpha) * sq(r); }, alpha);
        total += outer.w[j] * (inner + shell + tail);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Carre-du-champ gap: the two sides are computed through disjoint
// pipelines on independently parameterized grids.
//   LHS = -mu2( g (L1 + L1*) g ),  RHS = c_{d,alpha} E(g).

template <std::size_t D>
inline double quadratic_form_L1(const PotentialPair<D>& pair, const VelocityFunction<D>& g,
                                double alpha, const QuadratureSpec& q, const MarginalGrid& grid = {}) {
    const auto nz = normalizations(pair);
    const auto nodes = mu2_nodes<D>(pair, nz, grid);
    double s = 0.0;
    for (size_t j = 0; j < nodes.pts.size(); ++j) {
        const double gv = g.value(nodes.pts[j]);
        if (gv == 0.0) continue;
        const double l1 = apply_L1(pair, g, nodes.pts[j], alpha, q);
        const double l1s = apply_L1_star(pair, g, nodes.pts[j], alpha, q);
        s += nodes.w[j] * gv * (l1 + l1s);
    }
    return -s;
}

template <std::size_t D>
inline double carre_du_champ_gap(const PotentialPair<D>& pair, const VelocityFunction<D>& g,
                                 double alpha, const QuadratureSpec& q_lhs,
                                 const QuadratureSpec& q_rhs, double rel_floor = 1e-8) {
    MarginalGrid grid_lhs;
    MarginalGrid grid_rhs;
    grid_rhs.mu2_core_order = grid_lhs.mu2_core_order + 9;  // independent node layouts
    grid_rhs.mu2_order = grid_lhs.mu2_order + 5;
    const double lhs = quadratic_form_L1(pair, g, alpha, q_lhs, grid_lhs);
    const double rhs = frac_laplacian_constant(D, alpha) * dirichlet_form(pair, g, alpha, q_rhs, grid_rhs);
    return std::fabs(lhs - rhs) / std::max(std::fabs(rhs), rel_floor);
}

}  // namespace levykin
