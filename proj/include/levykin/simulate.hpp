#pragma once

// Euler-Maruyama integration of
//   dX = grad Phi(V) dt,   dV = (-grad U(X) + b_Phi(V)) dt + dL
// with exactly sampled alpha-stable increments added after the drift, ensemble
// statistics over independent particles (per-particle RNG substreams, fixed
// reduction order), autocovariance decay fitting, and KS stationarity tests
// with an effective-sample-size correction.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "levykin/errors.hpp"
#include "levykin/fracops.hpp"
#include "levykin/measures.hpp"
#include "levykin/model.hpp"
#include "levykin/rng.hpp"
#include "levykin/special.hpp"
#include "levykin/stable.hpp"
#include "levykin/stats.hpp"

namespace levykin::sim {

template <std::size_t D>
struct PhaseState {
    Vec<D> x = zero_vec<D>();
    Vec<D> v = zero_vec<D>();

    bool finite() const { return all_finite(x) && all_finite(v); }
};

enum class InitialLaw { Stationary, PointMass, PerturbedStationary };

inline InitialLaw initial_law_from_string(const std::string& s) {
    if (s == "stationary") return InitialLaw::Stationary;
    if (s == "point") return InitialLaw::PointMass;
    if (s == "perturbed") return InitialLaw::PerturbedStationary;
    throw ValidationError("unknown initial law: " + s);
}

struct EnsembleConfig {
    int n_particles = 2000;
    double dt = 1e-3;
    double t_end = 50.0;
    int thin_stride = 100;          // store every thin_stride-th step
    InitialLaw initial_law = InitialLaw::Stationary;
    std::array<double, 4> point{};  // (x, v) for point-mass starts, d <= 2
    double perturbation = 1.0;      // offset added to stationary draws
    double burn_in_fraction = 0.1;
    uint64_t seed = 1;
    int workers = 0;

    void validate() const {
        if (!(dt > 0.0)) throw ValidationError("EnsembleConfig: dt > 0");
        if (n_particles < 100) throw ValidationError("EnsembleConfig: n_particles >= 100");
        if (t_end <= 0.0 || thin_stride < 1) throw ValidationError("EnsembleConfig: bad horizon");
        if (burn_in_fraction < 0.0 || burn_in_fraction >= 1.0)
            throw ValidationError("EnsembleConfig: burn_in_fraction in [0,1)");
    }
};

// One Euler step; the jump is added after the drift. The drift profile is used
// inside its validity radius with direct quadrature (logged) outside it.
template <std::size_t D>
struct StepContext {
    const PotentialPair<D>* pair = nullptr;
    const DriftProfile* profile = nullptr;
    QuadratureSpec quad;
    double alpha = 1.5;
    mutable std::atomic<long> profile_fallbacks{0};

    Vec<D> drift_v(const Vec<D>& v) const {
        const double r = norm(v);
        if (profile && profile->covers(r)) return profile->template eval<D>(v);
        profile_fallbacks.fetch_add(1, std::memory_order_relaxed);
        return drift_b_phi(*pair, v, alpha, quad);
    }
};

template <std::size_t D>
inline PhaseState<D> step(const PhaseState<D>& s, const StepContext<D>& ctx, double dt,
                          RngStream& rng, bool noise_on = true) {
    PhaseState<D> out;
    const Vec<D> gphi = ctx.pair->grad_Phi(s.v);
    out.x = axpy(s.x, dt, gphi);
    const Vec<D> gu = ctx.pair->grad_U(s.x);
    const Vec<D> b = ctx.drift_v(s.v);
    out.v = s.v;
    for (std::size_t i = 0; i < D; ++i) out.v[i] += (-gu[i] + b[i]) * dt;
    if (noise_on) {
        const Vec<D> dl =
            noise::sample_increment<D>(noise::StableParams{ctx.alpha, D}, dt, rng);
        out.v = add(out.v, dl);
    }
    if (!out.finite()) throw NumericsError("step: non-finite state");
    return out;
}

// Thinned snapshots (x, v) per particle per kept slice, burn-in removed.
template <std::size_t D>
struct EnsembleResult {
    int n_particles = 0;
    int n_slices = 0;            // post burn-in
    double slice_dt = 0.0;       // dt * thin_stride
    std::vector<double> xs;      // [particle * n_slices + slice], first coordinate
    std::vector<double> vs;
    long profile_fallbacks = 0;
    int n_failed = 0;

    double x_at(int p, int s) const { return xs[(size_t)p * n_slices + s]; }
    double v_at(int p, int s) const { return vs[(size_t)p * n_slices + s]; }
};

template <std::size_t D>
inline EnsembleResult<D> run_ensemble(const EnsembleConfig& cfg, const PotentialPair<D>& pair,
                                      double alpha, const DriftProfile* profile,
                                      const QuadratureSpec& quad) {
    cfg.validate();
    const int nsteps = (int)std::llround(cfg.t_end / cfg.dt);
    const int total_slices = nsteps / cfg.thin_stride;
    const int burn_slices = (int)(cfg.burn_in_fraction * total_slices);
    const int kept = total_slices - burn_slices;
    if (kept < 4) throw ValidationError("run_ensemble: too few kept slices");

    StepContext<D> ctx;
    ctx.pair = &pair;
    ctx.profile = profile;
    ctx.quad = quad;
    ctx.alpha = alpha;

    EnsembleResult<D> res;
    res.n_particles = cfg.n_particles;
    res.n_slices = kept;
    res.slice_dt = cfg.dt * cfg.thin_stride;
    res.xs.assign((size_t)cfg.n_particles * kept, 0.0);
    res.vs.assign((size_t)cfg.n_particles * kept, 0.0);

    int workers = cfg.workers > 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<int> failed{0};
    std::vector<std::thread> pool;
    const int per = (cfg.n_particles + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int p = w * per; p < std::min(cfg.n_particles, (w + 1) * per); ++p) {
                RngStream rng = RngStream::substream(cfg.seed, (uint64_t)p);
                PhaseState<D> st;
                switch (cfg.initial_law) {
                    case InitialLaw::Stationary:
                        st.x = sample_mu1(pair, rng);
                        st.v = sample_mu2(pair, rng);
                        break;
                    case InitialLaw::PointMass:
                        for (std::size_t i = 0; i < D; ++i) {
                            st.x[i] = cfg.point[i];
                            st.v[i] = cfg.point[2 + i];
                        }
                        break;
                    case InitialLaw::PerturbedStationary:
                        st.x = sample_mu1(pair, rng);
                        st.v = sample_mu2(pair, rng);
                        st.x[0] += cfg.perturbation;
                        break;
                }
                try {
                    int slice = 0;
                    for (int k = 1; k <= nsteps; ++k) {
                        st = step(st, ctx, cfg.dt, rng);
                        if (k % cfg.thin_stride == 0) {
                            if (slice >= burn_slices) {
                                const int s = slice - burn_slices;
                                res.xs[(size_t)p * kept + s] = st.x[0];
                                res.vs[(size_t)p * kept + s] = st.v[0];
                            }
                            ++slice;
                        }
                    }
                } catch (const NumericsError&) {
                    failed.fetch_add(1);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    res.n_failed = failed.load();
    res.profile_fallbacks = ctx.profile_fallbacks.load();
    if (res.n_failed > 0.001 * cfg.n_particles)
        throw NumericsError("run_ensemble: more than 0.1% of trajectories went non-finite");
    return res;
}

// ---------------------------------------------------------------------------
// Autocovariance decay fit over lags, with per-particle replication providing
// the error bars. The fit window keeps lags whose estimate exceeds 3 standard
// errors (the noise floor).

struct DecayFit {
    std::vector<int> lags;
    std::vector<double> autocov;
    std::vector<double> se;
    double rate = 0.0;       // fitted exponential rate per unit time
    double rate_se = 0.0;
    double rate_ci_lo = 0.0; // 95% interval
    double rate_ci_hi = 0.0;
    int window = 0;          // number of lags used
    bool degenerate = false;
    double slice_dt = 0.0;
};

template <std::size_t D>
inline DecayFit autocov_fit(const EnsembleResult<D>& ens,
                            const std::function<double(double, double)>& observable,
                            const std::vector<int>& lags) {
    DecayFit fit;
    fit.slice_dt = ens.slice_dt;
    fit.lags = lags;
    const int P = ens.n_particles, T = ens.n_slices;
    // global mean over all samples
    double mean = 0.0;
    for (int p = 0; p < P; ++p)
        for (int s = 0; s < T; ++s) mean += observable(ens.x_at(p, s), ens.v_at(p, s));
    mean /= double(P) * T;

    for (int lag : lags) {
        if (lag >= T - 1) throw ValidationError("autocov_fit: lag exceeds series length");
        double acc = 0.0, acc2 = 0.0;
        for (int p = 0; p < P; ++p) {
            double c = 0.0;
            for (int s = 0; s + lag < T; ++s)
                c += (observable(ens.x_at(p, s), ens.v_at(p, s)) - mean) *
                     (observable(ens.x_at(p, s + lag), ens.v_at(p, s + lag)) - mean);
            c /= (T - lag);
            acc += c;
            acc2 += c * c;
        }
        const double m = acc / P;
        const double var = std::max(0.0, acc2 / P - m * m);
        fit.autocov.push_back(m);
        fit.se.push_back(std::sqrt(var / P));
    }

    // fit window: positive estimates above the 3 se noise floor, skipping lag 0
    std::vector<double> xs, ys, ws;
    for (size_t i = 0; i < fit.lags.size(); ++i) {
        if (fit.lags[i] == 0) continue;
        if (fit.autocov[i] <= 0.0 || fit.autocov[i] < 3.0 * fit.se[i]) continue;
        xs.push_back(fit.lags[i] * ens.slice_dt);
        ys.push_back(std::log(fit.autocov[i]));
        const double rel = fit.se[i] / fit.autocov[i];
        ws.push_back(1.0 / (rel * rel));
    }
    fit.window = (int)xs.size();
    if (fit.window < 3) {
        fit.degenerate = true;
        return fit;
    }
    const auto lf = stats::weighted_linear_fit(xs, ys, ws);
    fit.rate = -lf.slope;
    fit.rate_se = lf.slope_se;
    fit.rate_ci_lo = fit.rate - 1.96 * lf.slope_se;
    fit.rate_ci_hi = fit.rate + 1.96 * lf.slope_se;
    return fit;
}

// ---------------------------------------------------------------------------
// Marginal stationarity tests with effective sample sizes N_eff = P T / tau.

struct KsReport {
    double d_x = 0.0, p_x = 0.0, n_eff_x = 0.0;
    double d_v = 0.0, p_v = 0.0, n_eff_v = 0.0;
};

template <std::size_t D>
inline KsReport stationarity_test(const EnsembleResult<D>& ens, const PotentialPair<D>& pair) {
    KsReport rep;
    const int P = ens.n_particles, T = ens.n_slices;
    std::vector<double> xs, vs;
    xs.reserve((size_t)P * T);
    vs.reserve((size_t)P * T);
    for (int p = 0; p < P; ++p)
        for (int s = 0; s < T; ++s) {
            xs.push_back(ens.x_at(p, s));
            vs.push_back(ens.v_at(p, s));
        }

    // integrated autocorrelation from a subset of particle series
    double tau_x = 0.0, tau_v = 0.0;
    const int probe = std::min(P, 64);
    for (int p = 0; p < probe; ++p) {
        std::vector<double> sx(T), sv(T);
        for (int s = 0; s < T; ++s) {
            sx[s] = ens.x_at(p, s);
            sv[s] = ens.v_at(p, s);
        }
        tau_x += stats::integrated_autocorr_time(sx);
        tau_v += stats::integrated_autocorr_time(sv);
    }
    tau_x /= probe;
    tau_v /= probe;
    rep.n_eff_x = double(P) * T / std::max(1.0, tau_x);
    rep.n_eff_v = double(P) * T / std::max(1.0, tau_v);

    std::function<double(double)> cdf_x, cdf_v;
    if (pair.u_family == UFamily::Quadratic) {
        const double sd = 1.0 / std::sqrt(pair.u_gaussian_scale);
        cdf_x = [sd](double t) { return special::normal_cdf(t, 0.0, sd); };
    } else {
        throw ValidationError("stationarity_test: closed-form mu1 CDF known for quadratic U only");
    }
    if (pair.phi_family == PhiFamily::LogRadial && D == 1) {
        const double nu = pair.beta;
        cdf_v = [nu](double t) { return special::student_t_cdf(t * std::sqrt(nu), nu); };
    } else {
        throw ValidationError("stationarity_test: v-marginal CDF implemented for 1-d log_radial");
    }

    rep.d_x = stats::ks_statistic(xs, cdf_x);
    rep.d_v = stats::ks_statistic(vs, cdf_v);
    rep.p_x = special::ks_p_value(rep.d_x, rep.n_eff_x);
    rep.p_v = special::ks_p_value(rep.d_v, rep.n_eff_v);
    return rep;
}

}  // namespace levykin::sim
