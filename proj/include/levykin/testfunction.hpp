#pragma once

// Test-function types shared by the generator, measure, and Poisson modules.
// Evaluators carry their own derivatives; a finite-difference consistency
// check is provided as the structural invariant.

#include <cmath>
#include <functional>
#include <limits>

#include "levykin/model.hpp"
#include "levykin/vec.hpp"

namespace levykin {

// f(x, v) on R^{2d} with first derivatives in x and v and the v-Hessian.
// growth_v declares |f| ≲ (1+|v|)^{growth_v} for the moment pre-checks;
// tail_v is the decay exponent of the v-sections (inf for bounded support
// or super-polynomial decay).
template <std::size_t D>
struct TestFunction {
    std::function<double(const Vec<D>&, const Vec<D>&)> value;
    std::function<Vec<D>(const Vec<D>&, const Vec<D>&)> grad_x;
    std::function<Vec<D>(const Vec<D>&, const Vec<D>&)> grad_v;
    std::function<Mat<D>(const Vec<D>&, const Vec<D>&)> hess_v;
    double growth_v = 0.0;
    double tail_v = std::numeric_limits<double>::infinity();

    double operator()(const Vec<D>& x, const Vec<D>& v) const { return value(x, v); }

    // gradient consistency against central differences, relative tolerance.
    bool consistent_at(const Vec<D>& x, const Vec<D>& v, double rel_tol = 1e-6) const {
        const auto gx = grad_x(x, v), gv = grad_v(x, v);
        const auto fgx = fd_gradient<D>([&](const Vec<D>& xx) { return value(xx, v); }, x);
        const auto fgv = fd_gradient<D>([&](const Vec<D>& vv) { return value(x, vv); }, v);
        const double sx = 1.0 + norm(gx), sv = 1.0 + norm(gv);
        return norm(sub(gx, fgx)) <= rel_tol * sx && norm(sub(gv, fgv)) <= rel_tol * sv;
    }
};

// g(v) on R^d (velocity-only) with gradient and Hessian.
template <std::size_t D>
struct VelocityFunction {
    std::function<double(const Vec<D>&)> value;
    std::function<Vec<D>(const Vec<D>&)> grad;
    std::function<Mat<D>(const Vec<D>&)> hess;
    double tail_exponent = std::numeric_limits<double>::infinity();

    double operator()(const Vec<D>& v) const { return value(v); }
};

// a(x) on R^d (position-only) with gradient and Laplacian (and Hessian where
// the pi L0^2 pi check needs it).
template <std::size_t D>
struct PositionFunction {
    std::function<double(const Vec<D>&)> value;
    std::function<Vec<D>(const Vec<D>&)> grad;
    std::function<Mat<D>(const Vec<D>&)> hess;

    double operator()(const Vec<D>& x) const { return value(x); }
    double laplacian(const Vec<D>& x) const { return trace(hess(x)); }
};

}  // namespace levykin
