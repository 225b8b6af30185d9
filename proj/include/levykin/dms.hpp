#pragma once

// The abstract decay framework: closed-form rate constants, finite-dimensional
// matrix instantiations of the hypotheses, exact alpha estimation by spectral
// computations, semigroup decay certification via matrix exponentials, the
// modified-entropy equivalence check, and the two Poincare-constant
// estimators that feed alpha_1 and alpha_2 for the continuum system.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>
#include <vector>

#include "levykin/errors.hpp"
#include "levykin/model.hpp"
#include "levykin/quadrature.hpp"
#include "levykin/rng.hpp"

namespace levykin::dms {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DmsRates {
    double alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0;
    double lambda = 0.0;
    double eps0 = 0.0, lambda0 = 0.0, bigC = 0.0;
};

// eps0 = (1/2) min( sqrt(lambda), (1+lambda a2)/a1, 1/(a1 (1+lambda a2) a3^2) )
// lambda0 = eps0 / (2 (1 + eps0/sqrt(lambda)) (1 + lambda a2))
// C = (sqrt(lambda) + eps0) / (sqrt(lambda) - eps0)
inline DmsRates rate_bound(double a1, double a2, double a3, double lambda) {
    if (!(a1 > 0.0 && a2 > 0.0 && a3 > 0.0 && lambda > 0.0))
        throw ValidationError("rate_bound: all inputs must be positive");
    DmsRates r;
    r.alpha1 = a1;
    r.alpha2 = a2;
    r.alpha3 = a3;
    r.lambda = lambda;
    const double sl = std::sqrt(lambda);
    const double one_la2 = 1.0 + lambda * a2;
    r.eps0 = 0.5 * std::min({sl, one_la2 / a1, 1.0 / (a1 * one_la2 * a3 * a3)});
    r.lambda0 = r.eps0 / (2.0 * (1.0 + r.eps0 / sl) * one_la2);
    r.bigC = (sl + r.eps0) / (sl - r.eps0);
    return r;
}

// Maximizes lambda0 over [lo, hi]: log-grid bracketing then golden section.
inline std::pair<double, DmsRates> optimize_lambda(double a1, double a2, double a3, double lo,
                                                   double hi) {
    if (!(lo > 0.0 && hi > lo)) throw ValidationError("optimize_lambda: need 0 < lo < hi");
    auto l0 = [&](double lam) { return rate_bound(a1, a2, a3, lam).lambda0; };
    const int ngrid = 256;
    double best = lo, best_val = l0(lo);
    for (int i = 0; i <= ngrid; ++i) {
        const double lam = lo * std::pow(hi / lo, double(i) / ngrid);
        const double v = l0(lam);
        if (v > best_val) {
            best_val = v;
            best = lam;
        }
    }
    double a = std::max(lo, best / std::pow(hi / lo, 1.5 / ngrid));
    double b = std::min(hi, best * std::pow(hi / lo, 1.5 / ngrid));
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = l0(x1), f2 = l0(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * b; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = l0(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = l0(x1);
        }
    }
    const double lam_star = 0.5 * (a + b);
    DmsRates best_rates = rate_bound(a1, a2, a3, lam_star);
    // the returned point must dominate both endpoints
    if (best_rates.lambda0 < l0(lo)) best_rates = rate_bound(a1, a2, a3, lo);
    if (best_rates.lambda0 < l0(hi)) best_rates = rate_bound(a1, a2, a3, hi);
    return {best_rates.lambda, best_rates};
}

// ---------------------------------------------------------------------------
// Finite-dimensional surrogate: L0 = [[0, A], [-A^T, J]] (antisymmetric),
// L1 = [[0, 0], [0, K]] with sym(-K) positive definite, pi projects onto the
// first k coordinates.

struct MatrixModel {
    int n = 0, k = 0;
    MatrixXd L0, L1, pi;

    void validate(double tol = 1e-12) const {
        if ((L0 + L0.transpose()).norm() > tol * std::max(1.0, L0.norm()))
            throw ValidationError("MatrixModel: L0 not antisymmetric");
        if ((pi * pi - pi).norm() > tol || (pi - pi.transpose()).norm() > tol)
            throw ValidationError("MatrixModel: pi is not an orthogonal projection");
        if ((pi * L0 * pi).norm() > tol * std::max(1.0, L0.norm()))
            throw ValidationError("MatrixModel: pi L0 pi != 0");
        if ((L1 * pi).norm() > tol * std::max(1.0, L1.norm()) ||
            (pi * L1).norm() > tol * std::max(1.0, L1.norm()))
            throw ValidationError("MatrixModel: L1 does not vanish on H0");
        const MatrixXd s = -0.5 * (L1 + L1.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw ValidationError("MatrixModel: sym(-L1) is not positive semidefinite");
    }
};

inline MatrixModel build_matrix_model_blocks(const MatrixXd& A, const MatrixXd& J,
                                             const MatrixXd& K) {
    const int k = (int)A.rows(), m = (int)A.cols();
    if (J.rows() != m || J.cols() != m || K.rows() != m || K.cols() != m)
        throw ValidationError("build_matrix_model_blocks: block size mismatch");
    MatrixModel md;
    md.n = k + m;
    md.k = k;
    md.L0 = MatrixXd::Zero(md.n, md.n);
    md.L0.block(0, k, k, m) = A;
    md.L0.block(k, 0, m, k) = -A.transpose();
    md.L0.block(k, k, m, m) = 0.5 * (J - J.transpose());
    md.L1 = MatrixXd::Zero(md.n, md.n);
    md.L1.block(k, k, m, m) = K;
    md.pi = MatrixXd::Zero(md.n, md.n);
    md.pi.topLeftCorner(k, k).setIdentity();
    md.validate();
    return md;
}

inline MatrixModel build_matrix_model(int n, int k, uint64_t seed) {
    if (!(1 <= k && k < n)) throw ValidationError("build_matrix_model: need 1 <= k < n");
    if (k > n - k)
        throw ValidationError("build_matrix_model: need k <= n-k so that A can have rank k");
    RngStream rng(seed);
    const int m = n - k;
    for (int attempt = 0; attempt < 16; ++attempt) {
        MatrixXd A(k, m), J(m, m), B(m, m);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < m; ++j) A(i, j) = rng.normal();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                J(i, j) = rng.normal();
                B(i, j) = rng.normal();
            }
        const MatrixXd spd = B * B.transpose() / m + 0.3 * MatrixXd::Identity(m, m);
        const MatrixXd K = -(spd + 0.5 * (J - J.transpose()));
        Eigen::JacobiSVD<MatrixXd> svd(A);
        if (svd.singularValues().minCoeff() > 0.05) {
            MatrixXd J2(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) J2(i, j) = rng.normal();
            return build_matrix_model_blocks(A, J2, K);
        }
    }
    throw NumericsError("build_matrix_model: could not draw a full-rank A within the retry budget");
}

// B_lambda = (lambda I + G)^{-1} (L0 pi)^T with G = (L0 pi)^T (L0 pi).
inline MatrixXd b_lambda_matrix(const MatrixModel& md, double lambda) {
    const MatrixXd l0pi = md.L0 * md.pi;
    const MatrixXd g = l0pi.transpose() * l0pi;
    const MatrixXd lhs = lambda * MatrixXd::Identity(md.n, md.n) + g;
    return lhs.ldlt().solve(l0pi.transpose());
}

struct AlphaEstimates {
    double alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0;
    bool h3_feasible = true;
    std::string message;
};

inline AlphaEstimates estimate_alphas(const MatrixModel& md, double lambda) {
    md.validate();
    AlphaEstimates out;
    const int k = md.k, m = md.n - md.k;

    const MatrixXd symK = -0.5 * (md.L1 + md.L1.transpose()).block(k, k, m, m);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symK);
    const double lam_min = es.eigenvalues().minCoeff();
    if (lam_min <= 1e-12) {
        out.h3_feasible = false;
        out.message = "sym(-L1) singular on the complement of H0: (H3) infeasible";
        return out;
    }
    out.alpha1 = 1.0 / lam_min;

    const MatrixXd At = md.L0.block(0, k, k, m).transpose();  // A^T, m x k
    Eigen::JacobiSVD<MatrixXd> svd(At);
    const double smin = svd.singularValues().minCoeff();
    if (smin <= 1e-12) {
        out.h3_feasible = false;
        out.message = "A rank-deficient: macroscopic coercivity fails";
        return out;
    }
    out.alpha2 = 1.0 / (smin * smin);

    const MatrixXd b = b_lambda_matrix(md, lambda);
    const MatrixXd form = b * (md.L0 + md.L1);       // <B L (I-pi) f, f> couples
    const MatrixXd block = form.block(0, k, k, m);   // H0 rows x complement cols
    Eigen::JacobiSVD<MatrixXd> svd2(block);
    out.alpha3 = svd2.singularValues().maxCoeff();
    return out;
}

// ---------------------------------------------------------------------------
// Decay certification: ||e^{tL} f||^2 <= C e^{-lambda0 t} ||f||^2.

struct DecayRow {
    double t = 0.0;
    double worst_norm2 = 0.0;  // max over f of ||e^{tL} f||^2 at unit ||f||
    double bound = 0.0;        // C e^{-lambda0 t}
};

struct DecayReport {
    double max_violation = -std::numeric_limits<double>::infinity();
    std::vector<DecayRow> rows;
    bool pass = false;
};

inline DecayReport verify_decay(const MatrixModel& md, const DmsRates& rates,
                                const std::vector<double>& t_grid,
                                const std::vector<VectorXd>& f_samples, double slack = 1e-9) {
    DecayReport rep;
    const MatrixXd l = md.L0 + md.L1;
    for (double t : t_grid) {
        const MatrixXd et = (t * l).exp();
        double worst = 0.0;
        for (const auto& f : f_samples) {
            const double n2 = f.squaredNorm();
            if (n2 == 0.0) continue;
            const double decayed = (et * f).squaredNorm() / n2;
            worst = std::max(worst, decayed);
            rep.max_violation =
                std::max(rep.max_violation, decayed - rates.bigC * std::exp(-rates.lambda0 * t));
        }
        rep.rows.push_back({t, worst, rates.bigC * std::exp(-rates.lambda0 * t)});
    }
    rep.pass = rep.max_violation <= slack;
    return rep;
}

// Reference route for cross-checks: e^{tL} f via the complex eigendecomposition.
inline VectorXd expm_apply_eig(const MatrixXd& l, double t, const VectorXd& f) {
    Eigen::ComplexEigenSolver<MatrixXd> ces(l);
    const auto& v = ces.eigenvectors();
    const auto& lam = ces.eigenvalues();
    Eigen::VectorXcd coeff = v.partialPivLu().solve(f.cast<std::complex<double>>());
    for (int i = 0; i < lam.size(); ++i) coeff(i) *= std::exp(t * lam(i));
    return (v * coeff).real();
}

// ---------------------------------------------------------------------------
// Modified entropy I_lambda(f) = 1/2 ||f||^2 + eps0 <B_lambda f, f> and its
// equivalence band (1/2)(1 -+ eps0/sqrt(lambda)) ||f||^2.

struct EntropyReport {
    bool equivalence_valid = false;  // requires eps0 < sqrt(lambda)
    double max_lower_violation = 0.0;
    double max_upper_violation = 0.0;
    int n_checked = 0;
};

inline EntropyReport entropy_equivalence_check(const MatrixModel& md, double lambda, double eps0,
                                               const std::vector<VectorXd>& f_samples) {
    EntropyReport rep;
    rep.equivalence_valid = eps0 < std::sqrt(lambda);
    const MatrixXd b = b_lambda_matrix(md, lambda);
    const double lo = 0.5 * (1.0 - eps0 / std::sqrt(lambda));
    const double hi = 0.5 * (1.0 + eps0 / std::sqrt(lambda));
    for (const auto& f : f_samples) {
        const double n2 = f.squaredNorm();
        if (n2 == 0.0) continue;
        const double i_lam = 0.5 * n2 + eps0 * f.dot(b * f);
        rep.max_lower_violation = std::max(rep.max_lower_violation, lo * n2 - i_lam);
        rep.max_upper_violation = std::max(rep.max_upper_violation, i_lam - hi * n2);
        ++rep.n_checked;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Poincare constant of mu1 in 1-d: c1 = 1/lambda_1 where lambda_1 is the
// spectral gap of -L_OD, discretized as the P1 stiffness/lumped-mass pencil
// in the mu1-weighted inner product (keeps the spectrum real and variational).

template <typename UDensity>
inline double poincare_mu1_1d(UDensity&& u_of_x, double half_width, int n) {
    if (n < 32) throw ValidationError("poincare_mu1_1d: n >= 32 required");
    const double h = 2.0 * half_width / (n - 1);
    VectorXd dens(n), dens_mid(n - 1);
    for (int i = 0; i < n; ++i) dens(i) = std::exp(-u_of_x(-half_width + i * h));
    for (int i = 0; i + 1 < n; ++i)
        dens_mid(i) = std::exp(-u_of_x(-half_width + (i + 0.5) * h));

    MatrixXd s = MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        const double q = dens_mid(i) / h;
        s(i, i) += q;
        s(i + 1, i + 1) += q;
        s(i, i + 1) -= q;
        s(i + 1, i) -= q;
    }
    VectorXd mdiag(n);
    for (int i = 0; i < n; ++i) mdiag(i) = dens(i) * h;
    // symmetric whitened pencil
    MatrixXd t = s;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) /= std::sqrt(mdiag(i) * mdiag(j));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(t);
    if (es.info() != Eigen::Success) throw NumericsError("poincare_mu1_1d: eigensolver failed");
    return 1.0 / es.eigenvalues()(1);
}

// Poincare constant of mu2 against the nonlocal form: reciprocal of the
// smallest nonzero generalized eigenvalue of (E, M) on a truncated grid. The
// self-cell of the kernel uses the same compensated slope treatment as the
// continuum quadrature, restricted to grid differences.
struct NonlocalPoincare {
    double c2 = 0.0;
    double c2_refined = 0.0;
    double rel_change = 0.0;      // one grid refinement sensitivity
    double truncation_radius = 0.0;
};

namespace detail {

template <std::size_t D>
inline double mu2_gap_on_grid(const PotentialPair<D>& pair, double alpha, double box, int n) {
    static_assert(D == 1, "nonlocal Poincare estimator is 1-d");
    const double h = 2.0 * box / (n - 1);
    VectorXd x(n), w(n);
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
        x(i) = -box + i * h;
        w(i) = std::exp(-pair.psi(x(i) * x(i))) * h;
        wsum += w(i);
    }
    w /= wsum;

    std::vector<double> kern(n, 0.0);
    for (int m = 1; m < n; ++m) kern[m] = std::pow(m * h, -1.0 - alpha) * h;

    MatrixXd e = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double q = (w(i) + w(j)) * kern[j - i];
            e(i, i) += q;
            e(j, j) += q;
            e(i, j) -= q;
            e(j, i) -= q;
        }
    // self-cell compensation: int_{|u|<h/2} (u f')^2 |u|^{-1-alpha} du
    const double c_loc = 2.0 * std::pow(0.5 * h, 2.0 - alpha) / (2.0 - alpha);
    for (int i = 1; i + 1 < n; ++i) {
        const double q = w(i) * c_loc / (4.0 * h * h);
        e(i + 1, i + 1) += q;
        e(i - 1, i - 1) += q;
        e(i + 1, i - 1) -= q;
        e(i - 1, i + 1) -= q;
    }

    MatrixXd t = e;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) /= std::sqrt(w(i) * w(j));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(t);
    if (es.info() != Eigen::Success) throw NumericsError("poincare_mu2: eigensolver failed");
    return es.eigenvalues()(1);
}

}  // namespace detail

template <std::size_t D>
inline NonlocalPoincare poincare_mu2_nonlocal_1d(const PotentialPair<D>& pair, double alpha,
                                                 double box = 60.0, int n = 401) {
    NonlocalPoincare out;
    out.truncation_radius = box;
    const double gap = detail::mu2_gap_on_grid(pair, alpha, box, n);
    const double gap_fine = detail::mu2_gap_on_grid(pair, alpha, box, 2 * n - 1);
    out.c2 = 1.0 / gap;
    out.c2_refined = 1.0 / gap_fine;
    out.rel_change = std::fabs(out.c2_refined - out.c2) / out.c2_refined;
    return out;
}

}  // namespace levykin::dms
