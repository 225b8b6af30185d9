#pragma once

// Seeded random streams. A stream is owned by one worker at a time; substreams
// for workers/particles are derived by mixing the base seed with the worker
// index, so ensembles are reproducible for any worker count.

#include <cmath>
#include <cstdint>
#include <random>

#include "levykin/special.hpp"

namespace levykin {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngStream {
  public:
    explicit RngStream(uint64_t seed) : eng_(splitmix64(seed)) {}

    static RngStream substream(uint64_t seed, uint64_t index) {
        return RngStream(splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
    }

    uint64_t raw() { return eng_(); }

    // Uniform on [0, 1).
    double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1).
    double uniform_pos() {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return u;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double exponential() { return -std::log(uniform_pos()); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * special::pi * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    // Gamma(shape, scale 1), Marsaglia-Tsang with the shape < 1 boost.
    double gamma(double shape) {
        if (shape <= 0.0) throw ValidationError("RngStream::gamma: shape > 0 required");
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_square(double nu) { return 2.0 * gamma(0.5 * nu); }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace levykin
