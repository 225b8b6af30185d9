#pragma once

// Special-function utilities: gamma-based geometric constants, the regularized
// incomplete beta function (for Student-t tails), and the distribution CDFs
// used by the statistical tests.

#include <cmath>
#include <limits>

#include "levykin/errors.hpp"

namespace levykin::special {

inline constexpr double pi = 3.14159265358979323846264338327950288;

// std::tgamma/std::lgamma are accurate to ~1 ulp over the ranges used here,
// including negative non-integer arguments; the reflection-identity test in
// the suite guards the negative-argument path.
inline double gamma_fn(double x) {
    if (x <= 0.0 && x == std::floor(x)) throw ValidationError("gamma_fn: pole at non-positive integer");
    return std::tgamma(x);
}

inline double log_gamma(double x) {
    if (x <= 0.0) throw ValidationError("log_gamma: requires x > 0");
    return std::lgamma(x);
}

// Volume of the unit ball in R^d: pi^{d/2} / Gamma(d/2 + 1).
inline double unit_ball_volume(int d) {
    if (d < 1) throw ValidationError("unit_ball_volume: d >= 1 required");
    return std::pow(pi, 0.5 * d) / gamma_fn(0.5 * d + 1.0);
}

// Surface measure of S^{d-1}: 2 pi^{d/2} / Gamma(d/2)  (= d * omega_d).
inline double sphere_area(int d) {
    if (d < 1) throw ValidationError("sphere_area: d >= 1 required");
    return 2.0 * std::pow(pi, 0.5 * d) / gamma_fn(0.5 * d);
}

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
inline double reg_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw ValidationError("reg_incomplete_beta: a,b > 0 required");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // Use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) to keep the fraction fast.
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - reg_incomplete_beta(b, a, 1.0 - x);

    const double ln_front = a * std::log(x) + b * std::log1p(-x) -
                            (log_gamma(a) + log_gamma(b) - log_gamma(a + b));
    const double tiny = 1e-300;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 400; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(ln_front) * h / a;
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

inline double cauchy_cdf(double x) { return 0.5 + std::atan(x) / pi; }

// CDF of the standard Student-t with nu > 0 degrees of freedom.
inline double student_t_cdf(double t, double nu) {
    if (nu <= 0.0) throw ValidationError("student_t_cdf: nu > 0 required");
    if (t == 0.0) return 0.5;
    const double x = nu / (nu + t * t);
    const double tail = 0.5 * reg_incomplete_beta(0.5 * nu, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

// P(K > lam) for the Kolmogorov distribution.
inline double kolmogorov_sf(double lam) {
    if (lam <= 0.0) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
        s += term;
        if (std::fabs(term) < 1e-16) break;
    }
    return std::min(1.0, std::max(0.0, s));
}

// Asymptotic one-sample KS p-value with the usual finite-n correction.
inline double ks_p_value(double d_stat, double n_eff) {
    if (n_eff <= 0.0) return 1.0;
    const double sq = std::sqrt(n_eff);
    return kolmogorov_sf(d_stat * (sq + 0.12 + 0.11 / sq));
}

}  // namespace levykin::special
