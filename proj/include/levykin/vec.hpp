#pragma once

// Small fixed-dimension vector/matrix helpers for the d <= 3 desk-scale core.
// Everything is value-semantic; no dynamic allocation in hot paths.

#include <array>
#include <cmath>
#include <cstddef>

namespace levykin {

template <std::size_t D>
using Vec = std::array<double, D>;

template <std::size_t D>
using Mat = std::array<std::array<double, D>, D>;

template <std::size_t D>
inline Vec<D> zero_vec() {
    Vec<D> v{};
    v.fill(0.0);
    return v;
}

template <std::size_t D>
inline Mat<D> zero_mat() {
    Mat<D> m{};
    for (auto& row : m) row.fill(0.0);
    return m;
}

template <std::size_t D>
inline Mat<D> identity_mat(double s = 1.0) {
    Mat<D> m = zero_mat<D>();
    for (std::size_t i = 0; i < D; ++i) m[i][i] = s;
    return m;
}

template <std::size_t D>
inline double dot(const Vec<D>& a, const Vec<D>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t D>
inline double norm2(const Vec<D>& a) {
    return dot(a, a);
}

template <std::size_t D>
inline double norm(const Vec<D>& a) {
    return std::sqrt(norm2(a));
}

template <std::size_t D>
inline Vec<D> add(const Vec<D>& a, const Vec<D>& b) {
    Vec<D> r;
    for (std::size_t i = 0; i < D; ++i) r[i] = a[i] + b[i];
    return r;
}

template <std::size_t D>
inline Vec<D> sub(const Vec<D>& a, const Vec<D>& b) {
    Vec<D> r;
    for (std::size_t i = 0; i < D; ++i) r[i] = a[i] - b[i];
    return r;
}

template <std::size_t D>
inline Vec<D> scale(const Vec<D>& a, double c) {
    Vec<D> r;
    for (std::size_t i = 0; i < D; ++i) r[i] = c * a[i];
    return r;
}

// a + c*b
template <std::size_t D>
inline Vec<D> axpy(const Vec<D>& a, double c, const Vec<D>& b) {
    Vec<D> r;
    for (std::size_t i = 0; i < D; ++i) r[i] = a[i] + c * b[i];
    return r;
}

template <std::size_t D>
inline Vec<D> matvec(const Mat<D>& m, const Vec<D>& v) {
    Vec<D> r;
    for (std::size_t i = 0; i < D; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < D; ++j) s += m[i][j] * v[j];
        r[i] = s;
    }
    return r;
}

// <u, M v>
template <std::size_t D>
inline double quad_form(const Mat<D>& m, const Vec<D>& u, const Vec<D>& v) {
    return dot(u, matvec(m, v));
}

template <std::size_t D>
inline double trace(const Mat<D>& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i) s += m[i][i];
    return s;
}

// Frobenius norm; upper-bounds the spectral norm.
template <std::size_t D>
inline double frobenius(const Mat<D>& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) s += m[i][j] * m[i][j];
    return std::sqrt(s);
}

// Spectral norm of a symmetric D x D matrix (closed forms for D <= 3 via
// eigenvalue bounds would be overkill; power iteration is exact enough here).
template <std::size_t D>
inline double sym_op_norm(const Mat<D>& m) {
    Vec<D> x;
    for (std::size_t i = 0; i < D; ++i) x[i] = 1.0 / std::sqrt(double(D) + i);
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
        Vec<D> y = matvec(m, x);
        double ny = norm(y);
        if (ny == 0.0) return 0.0;
        x = scale(y, 1.0 / ny);
        lam = ny;
    }
    return lam;
}

template <std::size_t D>
inline bool all_finite(const Vec<D>& v) {
    for (std::size_t i = 0; i < D; ++i)
        if (!std::isfinite(v[i])) return false;
    return true;
}

template <std::size_t D>
inline Vec<D> unit_axis(std::size_t i) {
    Vec<D> v = zero_vec<D>();
    v[i] = 1.0;
    return v;
}

}  // namespace levykin
