#pragma once

// Statistical helpers: one- and two-sample Kolmogorov-Smirnov, weighted least
// squares for log-linear decay fits, and integrated autocorrelation times for
// effective-sample-size corrections.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "levykin/errors.hpp"
#include "levykin/special.hpp"

namespace levykin::stats {

inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw ValidationError("ks_statistic: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = (double)sample.size();
    double d = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::fabs(f - i / n));
        d = std::max(d, std::fabs((i + 1) / n - f));
    }
    return d;
}

inline double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ValidationError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

inline double ks_two_sample_p(double d, size_t na, size_t nb) {
    const double ne = double(na) * nb / double(na + nb);
    return special::kolmogorov_sf(d * (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)));
}

struct LinearFit {
    double slope = 0.0, intercept = 0.0;
    double slope_se = 0.0;
    int n = 0;
};

// Weighted least squares y ~ a + b x; weights are inverse variances.
inline LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                                     const std::vector<double>& wts) {
    if (x.size() != y.size() || x.size() != wts.size() || x.size() < 3)
        throw ValidationError("weighted_linear_fit: need >= 3 matched points");
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sw += wts[i];
        swx += wts[i] * x[i];
        swy += wts[i] * y[i];
        swxx += wts[i] * x[i] * x[i];
        swxy += wts[i] * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    if (std::fabs(det) < 1e-300) throw NumericsError("weighted_linear_fit: degenerate design");
    LinearFit f;
    f.n = (int)x.size();
    f.slope = (sw * swxy - swx * swy) / det;
    f.intercept = (swxx * swy - swx * swxy) / det;
    f.slope_se = std::sqrt(sw / det);
    return f;
}

// Integrated autocorrelation time via the initial-positive-sequence rule:
// tau = 1 + 2 sum rho_k, truncated at the first non-positive autocorrelation.
inline double integrated_autocorr_time(const std::vector<double>& series, int max_lag = -1) {
    const int n = (int)series.size();
    if (n < 8) return 1.0;
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : series) var += (v - mean) * (v - mean);
    var /= n;
    if (var <= 0.0) return 1.0;
    if (max_lag < 0) max_lag = n / 4;
    double tau = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
        double c = 0.0;
        for (int t = 0; t + k < n; ++t) c += (series[t] - mean) * (series[t + k] - mean);
        c /= (n - k) * var;
        if (c <= 0.0) break;
        tau += 2.0 * c;
    }
    return tau;
}

}  // namespace levykin::stats
