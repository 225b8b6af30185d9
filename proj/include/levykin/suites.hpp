#pragma once

// Reference test-function suites shared by the CLI and the verification
// drivers: a five-function family for the weak-form invariance check and
// compactly supported bumps for the quadratic-form identities.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "levykin/testfunction.hpp"

namespace levykin::suites {

inline VelocityFunction<1> bump(double center, double width) {
    auto val = [center, width](const Vec<1>& v) {
        const double t = (v[0] - center) / width;
        if (std::fabs(t) >= 1.0) return 0.0;
        return std::exp(-1.0 / (1.0 - t * t));
    };
    auto grd = [center, width, val](const Vec<1>& v) {
        const double t = (v[0] - center) / width;
        if (std::fabs(t) >= 1.0) return Vec<1>{0.0};
        const double d = 1.0 - t * t;
        return Vec<1>{val(v) * (-2.0 * t / (d * d)) / width};
    };
    VelocityFunction<1> g;
    g.value = val;
    g.grad = grd;
    g.hess = [](const Vec<1>&) { return zero_mat<1>(); };
    g.tail_exponent = std::numeric_limits<double>::infinity();
    return g;
}

inline std::vector<std::pair<std::string, TestFunction<1>>> invariance_suite() {
    std::vector<std::pair<std::string, TestFunction<1>>> out;
    auto add = [&](const std::string& name, std::function<double(double, double)> val,
                   std::function<double(double, double)> dx,
                   std::function<double(double, double)> dv, double tail) {
        TestFunction<1> f;
        f.value = [val](const Vec<1>& x, const Vec<1>& v) { return val(x[0], v[0]); };
        f.grad_x = [dx](const Vec<1>& x, const Vec<1>& v) { return Vec<1>{dx(x[0], v[0])}; };
        f.grad_v = [dv](const Vec<1>& x, const Vec<1>& v) { return Vec<1>{dv(x[0], v[0])}; };
        f.growth_v = 0.0;
        f.tail_v = tail;
        out.emplace_back(name, std::move(f));
    };
    // Functions that are even in v have mu2-integrals of L1 that vanish only
    // through the drift/jump balance, not through node symmetry; they carry
    // the detection power of the check (a 1% drift mis-scale shows up at the
    // 4e-3 level). One odd case keeps the symmetric cancellation covered.
    const double inf = std::numeric_limits<double>::infinity();
    add("gauss_v", [](double, double v) { return std::exp(-v * v); },
        [](double, double) { return 0.0; },
        [](double, double v) { return -2.0 * v * std::exp(-v * v); }, inf);
    add("cos_x_gauss_v", [](double x, double v) { return std::cos(x) * std::exp(-v * v); },
        [](double x, double v) { return -std::sin(x) * std::exp(-v * v); },
        [](double x, double v) { return std::cos(x) * (-2.0 * v) * std::exp(-v * v); }, inf);
    add("lorentz_v", [](double, double v) { return 1.0 / (1.0 + v * v); },
        [](double, double) { return 0.0; },
        [](double, double v) {
            const double d = 1.0 + v * v;
            return -2.0 * v / (d * d);
        },
        2.0);
    add("gauss_x_lorentz_v", [](double x, double v) { return std::exp(-x * x) / (1.0 + v * v); },
        [](double x, double v) { return -2.0 * x * std::exp(-x * x) / (1.0 + v * v); },
        [](double x, double v) {
            const double d = 1.0 + v * v;
            return std::exp(-x * x) * (-2.0 * v) / (d * d);
        },
        2.0);
    add("tanh_v", [](double, double v) { return std::tanh(v); },
        [](double, double) { return 0.0; },
        [](double, double v) {
            const double c = std::cosh(v);
            return 1.0 / (c * c);
        },
        0.0);
    return out;
}

}  // namespace levykin::suites
