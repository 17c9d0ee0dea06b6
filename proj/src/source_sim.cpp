// SPDX-License-Identifier: Apache-2.0
#include "qrng/source_sim.hpp"

#include <cmath>
#include <stdexcept>

namespace qrng {

namespace {

// substream tags so that photon statistics and detector noise come from
// independent, individually reproducible generators
constexpr unsigned kPhotonStream = 0;
constexpr unsigned kNoiseStream = 1;

// probabilities below this are rounded to zero
constexpr double kMinLogProb = -690.77552789821371;  // ln(1e-300)

double exp_or_zero(double logp) { return logp < kMinLogProb ? 0.0 : std::exp(logp); }

}  // namespace

void SourceParams::validate() const {
    if (!(n_bar >= 0.0) || !std::isfinite(n_bar))
        throw std::invalid_argument("SourceParams: n_bar must be >= 0");
    if (modes_m < 1) throw std::invalid_argument("SourceParams: modes_m must be >= 1");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw std::invalid_argument("SourceParams: noise_sigma must be >= 0");
    if (!(filter_beta >= 0.0) || !(filter_beta < 1.0))
        throw std::invalid_argument("SourceParams: filter_beta must be in [0,1)");
    if (!(threshold_tau >= 1.0))
        throw std::invalid_argument("SourceParams: threshold_tau must be >= 1");
    if (!std::isfinite(threshold_offset))
        throw std::invalid_argument("SourceParams: threshold_offset must be finite");
}

double pmf_single_mode(double n_bar, std::uint64_t n) {
    if (!(n_bar >= 0.0)) throw std::domain_error("pmf_single_mode: n_bar must be >= 0");
    if (n_bar == 0.0) return n == 0 ? 1.0 : 0.0;
    const double nd = static_cast<double>(n);
    return exp_or_zero(nd * std::log(n_bar) - (1.0 + nd) * std::log1p(n_bar));
}

double pmf_multimode(double n_bar, std::uint64_t n, std::uint32_t m) {
    if (!(n_bar >= 0.0)) throw std::domain_error("pmf_multimode: n_bar must be >= 0");
    if (m < 1) throw std::domain_error("pmf_multimode: m must be >= 1");
    if (n_bar == 0.0) return n == 0 ? 1.0 : 0.0;  // vacuum limit
    const double nd = static_cast<double>(n);
    const double md = static_cast<double>(m);
    const double logp = std::lgamma(nd + md) - std::lgamma(nd + 1.0) - std::lgamma(md) -
                        nd * std::log1p(1.0 / n_bar) - md * std::log1p(n_bar);
    return exp_or_zero(logp);
}

Moments moments(double n_bar, std::uint32_t m) {
    if (!(n_bar >= 0.0)) throw std::domain_error("moments: n_bar must be >= 0");
    if (m < 1) throw std::domain_error("moments: m must be >= 1");
    const double md = static_cast<double>(m);
    return {md * n_bar, md * n_bar * (1.0 + n_bar)};
}

PhotonSampler::PhotonSampler(const SourceParams& params)
    : rng_(substream_seed(params.rng_seed, kPhotonStream)),
      gamma_(static_cast<double>(params.modes_m), params.n_bar) {
    params.validate();
}

std::uint64_t PhotonSampler::next() {
    const double intensity = gamma_(rng_, normal_);
    return poisson(rng_, intensity);
}

DetectorChain::DetectorChain(const SourceParams& params)
    : rng_(substream_seed(params.rng_seed, kNoiseStream)),
      beta_(params.filter_beta),
      sigma_(params.noise_sigma) {
    params.validate();
}

AnalogSample DetectorChain::step(double x) {
    const double noisy = sigma_ > 0.0 ? x + sigma_ * normal_(rng_) : x;
    if (!primed_) {
        primed_ = true;
        y_ = noisy;
    } else {
        y_ = (1.0 - beta_) * noisy + beta_ * y_;
    }
    return y_;
}

Discriminator::Discriminator(const SourceParams& params)
    : tau_(params.threshold_tau), offset_(params.threshold_offset) {
    params.validate();
}

bool Discriminator::step(AnalogSample y) {
    if (!primed_) {
        primed_ = true;
        theta_ = y;
    }
    const bool bit = y > theta_ + offset_;
    theta_ += (y - theta_) / tau_;
    return bit;
}

std::vector<std::uint64_t> sample_photon_counts(const SourceParams& params, std::size_t count) {
    if (count < 1) throw std::invalid_argument("sample_photon_counts: count must be >= 1");
    PhotonSampler sampler(params);
    std::vector<std::uint64_t> out(count);
    for (auto& x : out) x = sampler.next();
    return out;
}

std::vector<AnalogSample> detector_chain(std::span<const std::uint64_t> counts,
                                         const SourceParams& params) {
    if (counts.empty()) throw std::invalid_argument("detector_chain: empty input");
    DetectorChain chain(params);
    std::vector<AnalogSample> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        out[i] = chain.step(static_cast<double>(counts[i]));
    return out;
}

BitStream discriminate(std::span<const AnalogSample> analog, const SourceParams& params) {
    if (analog.empty()) throw std::invalid_argument("discriminate: empty input");
    Discriminator disc(params);
    BitStream bits;
    bits.reserve_bits(analog.size());
    for (const AnalogSample y : analog) bits.push_back(disc.step(y));
    return bits;
}

BitStream generate_raw_stream(const SourceParams& params, std::uint64_t bit_count) {
    if (bit_count < 1) throw std::invalid_argument("generate_raw_stream: bit_count must be >= 1");
    PhotonSampler sampler(params);
    DetectorChain chain(params);
    Discriminator disc(params);
    BitStream bits;
    bits.reserve_bits(bit_count);
    std::uint64_t word = 0;
    unsigned filled = 0;
    for (std::uint64_t i = 0; i < bit_count; ++i) {
        const double y = chain.step(static_cast<double>(sampler.next()));
        word |= static_cast<std::uint64_t>(disc.step(y)) << filled;
        if (++filled == 64) {
            bits.append_low_bits(word, 64);
            word = 0;
            filled = 0;
        }
    }
    if (filled > 0) bits.append_low_bits(word, filled);
    return bits;
}

RawStreamStats measure_raw(const SourceParams& params, std::uint64_t bit_count) {
    const BitStream bits = generate_raw_stream(params, bit_count);
    const std::uint64_t n = bits.size();
    const double p1 = static_cast<double>(bits.ones()) / static_cast<double>(n);

    const std::uint64_t overlap = n - 1;
    const double ones_a = static_cast<double>(popcount_range(bits, 0, overlap));
    const double ones_b = static_cast<double>(popcount_range(bits, 1, n));
    const double cross = static_cast<double>(popcount_and_shifted(bits, 1));
    const double pa = ones_a / static_cast<double>(overlap);
    const double pb = ones_b / static_cast<double>(overlap);
    const double cov = cross / static_cast<double>(overlap) - pa * pb;
    const double denom = std::sqrt(pa * (1.0 - pa) * pb * (1.0 - pb));
    return {1.0 - p1, denom > 0.0 ? cov / denom : 0.0};
}

double calibrate_filter_beta(SourceParams params, double target_r1, double tolerance,
                             std::uint64_t bit_count) {
    double lo = 0.0, hi = 0.5;
    double beta = 0.25;
    for (int iter = 0; iter < 24; ++iter) {
        beta = 0.5 * (lo + hi);
        params.filter_beta = beta;
        const double r1 = measure_raw(params, bit_count).r1;
        if (std::fabs(r1 - target_r1) <= tolerance) break;
        if (r1 < target_r1)
            lo = beta;
        else
            hi = beta;
    }
    return beta;
}

double calibrate_threshold_offset(SourceParams params, double target_p0, double tolerance,
                                  std::uint64_t bit_count) {
    const double sigma = std::sqrt(moments(params.n_bar, params.modes_m).variance +
                                   params.noise_sigma * params.noise_sigma);
    double lo = -sigma, hi = sigma;
    double offset = 0.0;
    for (int iter = 0; iter < 30; ++iter) {
        offset = 0.5 * (lo + hi);
        params.threshold_offset = offset;
        const double p0 = measure_raw(params, bit_count).p0;
        if (std::fabs(p0 - target_p0) <= tolerance) break;
        if (p0 < target_p0)
            lo = offset;
        else
            hi = offset;
    }
    return offset;
}

CalibrationResult calibrate_source(SourceParams params, double target_p0, double target_r1,
                                   std::uint64_t bit_count) {
    for (int round = 0; round < 2; ++round) {
        params.filter_beta = calibrate_filter_beta(params, target_r1, 1e-4, bit_count);
        params.threshold_offset =
            calibrate_threshold_offset(params, target_p0, 1e-5, bit_count);
    }
    const RawStreamStats final_stats = measure_raw(params, bit_count);
    return {params.filter_beta, params.threshold_offset, final_stats.r1, final_stats.p0};
}

}  // namespace qrng
