// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qrng {

// SplitMix64 (Vigna). One 64-bit word of state, passes BigCrush, and is
// trivially reproducible across platforms. Every random choice in this
// project bottoms out here so that a run is fully determined by its seeds.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

/// Seed of the k-th derived stream: the (k+1)-th output of SplitMix64(seed).
inline std::uint64_t substream_seed(std::uint64_t seed, unsigned k) {
    SplitMix64 g(seed);
    std::uint64_t s = g();
    for (unsigned i = 0; i < k; ++i) s = g();
    return s;
}

/// Uniform double in the open interval (0,1), 53-bit resolution.
inline double uniform_unit(SplitMix64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Standard normal deviates via the Marsaglia polar method.
// The method produces pairs; the second value is cached.
class NormalSampler {
  public:
    double operator()(SplitMix64& g) {
        if (have_) {
            have_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform_unit(g) - 1.0;
            v = 2.0 * uniform_unit(g) - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        have_ = true;
        return u * f;
    }

  private:
    double cached_ = 0.0;
    bool have_ = false;
};

// Gamma(shape, scale) for shape >= 1, Marsaglia-Tsang squeeze method.
// Rejection constants depend only on the shape, so they are set up once.
class GammaSampler {
  public:
    GammaSampler(double shape, double scale)
        : scale_(scale), d_(shape - 1.0 / 3.0), c_(1.0 / std::sqrt(9.0 * d_)) {
        if (shape < 1.0) throw std::invalid_argument("GammaSampler: shape must be >= 1");
        if (scale < 0.0) throw std::invalid_argument("GammaSampler: scale must be >= 0");
    }

    double operator()(SplitMix64& g, NormalSampler& normal) const {
        for (;;) {
            double x, v;
            do {
                x = normal(g);
                v = 1.0 + c_ * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_unit(g);
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d_ * v * scale_;
            if (std::log(u) < 0.5 * x2 + d_ * (1.0 - v + std::log(v))) return d_ * v * scale_;
        }
    }

  private:
    double scale_;
    double d_;
    double c_;
};

// Poisson(mu). Knuth's product method below mu = 10, Hormann's PTRD
// transformed rejection above. Both are exact; PTRD accepts ~99% of
// candidates and most of those through a log-free squeeze.
inline std::uint64_t poisson(SplitMix64& g, double mu) {
    if (!(mu >= 0.0)) throw std::invalid_argument("poisson: mu must be >= 0");
    if (mu == 0.0) return 0;
    if (mu < 10.0) {
        const double limit = std::exp(-mu);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform_unit(g);
        } while (p > limit);
        return k - 1;
    }
    const double smu = std::sqrt(mu);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mu = std::log(mu);
    for (;;) {
        const double u = uniform_unit(g) - 0.5;
        const double v = uniform_unit(g);
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            kf * log_mu - mu - std::lgamma(kf + 1.0)) {
            return static_cast<std::uint64_t>(kf);
        }
    }
}

}  // namespace qrng
