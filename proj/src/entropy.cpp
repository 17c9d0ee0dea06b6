// SPDX-License-Identifier: Apache-2.0
#include "qrng/entropy.hpp"

#include <cmath>
#include <thread>

namespace qrng {

BlockHistogram zero_block_histogram(const BitStream& bits, std::uint32_t block_size) {
    if (block_size < 1) throw std::invalid_argument("zero_block_histogram: block_size must be >= 1");
    if (bits.size() < block_size)
        throw std::invalid_argument("zero_block_histogram: stream shorter than one block");

    BlockHistogram h;
    h.block_size = block_size;
    h.total_blocks = bits.size() / block_size;
    h.counts.assign(block_size + 1, 0);

    double sum_k = 0.0, sum_k2 = 0.0;
    for (std::uint64_t b = 0; b < h.total_blocks; ++b) {
        const std::uint64_t begin = b * static_cast<std::uint64_t>(block_size);
        const std::uint64_t k =
            block_size - popcount_range(bits, begin, begin + block_size);
        ++h.counts[k];
        const double kd = static_cast<double>(k);
        sum_k += kd;
        sum_k2 += kd * kd;
    }
    const double nb = static_cast<double>(h.total_blocks);
    const double mean_k = sum_k / nb;
    h.p0 = mean_k / static_cast<double>(block_size);
    h.sigma_m = std::sqrt(std::max(0.0, sum_k2 / nb - mean_k * mean_k));
    return h;
}

double binomial_pmf(std::uint32_t n, std::uint32_t k, double p0) {
    if (k > n) throw std::domain_error("binomial_pmf: k > n");
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::domain_error("binomial_pmf: p0 outside [0,1]");
    if (p0 == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p0 == 1.0) return k == n ? 1.0 : 0.0;
    const double nd = n, kd = k;
    const double logp = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) -
                        std::lgamma(nd - kd + 1.0) + kd * std::log(p0) +
                        (nd - kd) * std::log1p(-p0);
    return logp < -690.7755 ? 0.0 : std::exp(logp);
}

double binomial_sigma(std::uint32_t n, double p0) {
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::domain_error("binomial_sigma: p0 outside [0,1]");
    return std::sqrt(static_cast<double>(n) * p0 * (1.0 - p0));
}

AutocorrResult autocorrelation(const BitStream& bits, std::uint32_t max_lag, unsigned workers) {
    if (max_lag < 1) throw std::invalid_argument("autocorrelation: max_lag must be >= 1");
    if (bits.size() <= static_cast<std::uint64_t>(max_lag) + 1)
        throw std::invalid_argument("autocorrelation: stream too short for max_lag");

    const std::uint64_t n = bits.size();
    AutocorrResult result;
    result.max_lag = max_lag;
    result.sample_size = n;
    result.finite_size_sigma = 1.0 / std::sqrt(static_cast<double>(n));
    result.coefficients.assign(max_lag, 0.0);

    // prefix counts make the per-lag window popcounts O(1)
    const std::uint64_t total_ones = bits.ones();

    bool degenerate = false;
    auto compute_lag = [&](std::uint32_t lag) {
        const std::uint64_t overlap = n - lag;
        const std::uint64_t ones_head = popcount_range(bits, 0, overlap);
        const std::uint64_t ones_tail = total_ones - popcount_range(bits, 0, lag);
        const std::uint64_t cross = popcount_and_shifted(bits, lag);
        const double len = static_cast<double>(overlap);
        const double pa = static_cast<double>(ones_head) / len;
        const double pb = static_cast<double>(ones_tail) / len;
        const double va = pa * (1.0 - pa);
        const double vb = pb * (1.0 - pb);
        if (va <= 0.0 || vb <= 0.0) {
            degenerate = true;
            return;
        }
        const double cov = static_cast<double>(cross) / len - pa * pb;
        result.coefficients[lag - 1] = cov / std::sqrt(va * vb);
    };

    if (workers <= 1 || max_lag < 4) {
        for (std::uint32_t lag = 1; lag <= max_lag; ++lag) compute_lag(lag);
    } else {
        const unsigned nthreads = std::min<unsigned>(workers, max_lag);
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (unsigned t = 0; t < nthreads; ++t) {
            pool.emplace_back([&, t] {
                for (std::uint32_t lag = 1 + t; lag <= max_lag; lag += nthreads) compute_lag(lag);
            });
        }
        for (auto& th : pool) th.join();
    }
    if (degenerate) throw DegenerateStreamError("autocorrelation: degenerate stream");
    return result;
}

double mutual_info_from_corr(double r1) {
    if (!(std::fabs(r1) < 1.0)) throw std::domain_error("mutual_info_from_corr: |r1| must be < 1");
    return -0.5 * std::log2(1.0 - r1 * r1) + 0.0;
}

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binary_entropy: p outside [0,1]");
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

SvEstimate delta_from_cond_entropy(double h) {
    if (!(h >= 0.0 && h <= 1.0)) throw std::domain_error("delta_from_cond_entropy: h outside [0,1]");
    // H is strictly decreasing on [1/2, 1]; bisect to 1e-10
    double p;
    if (h == 1.0) {
        p = 0.5;
    } else if (h == 0.0) {
        p = 1.0;
    } else {
        double lo = 0.5, hi = 1.0;
        while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            if (binary_entropy(mid) > h)
                lo = mid;
            else
                hi = mid;
        }
        p = 0.5 * (lo + hi);
    }
    SvEstimate e;
    e.order = 1;
    e.max_cond_prob = p;
    e.delta = 1.0 - p;
    e.min_history_count = 1;
    e.sample_size = 0;
    e.excluded_histories = 0;
    return e;
}

SvEstimate max_conditional_probability(const BitStream& bits, std::uint32_t order,
                                       std::uint64_t min_history_count) {
    if (order < 1 || order > 24)
        throw std::invalid_argument("max_conditional_probability: order must be in [1,24]");
    if (min_history_count < 1)
        throw std::invalid_argument("max_conditional_probability: count floor must be >= 1");
    const std::uint64_t n = bits.size();
    if (n < static_cast<std::uint64_t>(order) + 1)
        throw std::invalid_argument("max_conditional_probability: stream shorter than order+1");

    // tally (history, next) over overlapping windows of order+1 bits;
    // window value keeps the newest bit in its lowest position
    const std::uint32_t wbits = order + 1;
    const std::uint64_t mask = (1ULL << wbits) - 1;
    std::vector<std::uint64_t> counts(1ULL << wbits, 0);

    std::uint64_t window = 0;
    std::uint64_t filled = 0;
    const auto words = bits.words();
    for (std::uint64_t q = 0; q < words.size(); ++q) {
        std::uint64_t w = words[q];
        const unsigned valid = q + 1 < words.size() ? 64u : static_cast<unsigned>(((n - 1) & 63) + 1);
        for (unsigned b = 0; b < valid; ++b) {
            window = ((window << 1) | (w & 1)) & mask;
            w >>= 1;
            if (++filled >= wbits) ++counts[window];
        }
    }

    // compare candidate fractions without dividing: a/b > c/d iff ad > cb
    std::uint64_t best_num = 0, best_den = 1;
    std::uint64_t excluded = 0;
    const std::uint64_t histories = 1ULL << order;
    for (std::uint64_t hist = 0; hist < histories; ++hist) {
        const std::uint64_t c0 = counts[hist << 1];
        const std::uint64_t c1 = counts[(hist << 1) | 1];
        const std::uint64_t total = c0 + c1;
        if (total < min_history_count) {
            ++excluded;
            continue;
        }
        const std::uint64_t top = std::max(c0, c1);
        if (static_cast<unsigned __int128>(top) * best_den >
            static_cast<unsigned __int128>(best_num) * total) {
            best_num = top;
            best_den = total;
        }
    }
    if (best_num == 0)
        throw InsufficientSampleError("max_conditional_probability: insufficient sample");

    SvEstimate e;
    e.order = order;
    e.max_cond_prob = static_cast<double>(best_num) / static_cast<double>(best_den);
    e.delta = 1.0 - e.max_cond_prob;
    e.min_history_count = min_history_count;
    e.sample_size = n;
    e.excluded_histories = excluded;
    return e;
}

MinEntropyEstimate min_entropy_blocks(const BitStream& bits, std::uint32_t n) {
    if (n < 1 || n > 24) throw std::invalid_argument("min_entropy_blocks: n must be in [1,24]");
    if (bits.empty()) throw std::invalid_argument("min_entropy_blocks: empty stream");
    const std::uint64_t blocks = bits.size() / n;
    if (blocks == 0) throw std::invalid_argument("min_entropy_blocks: stream shorter than one block");

    std::vector<std::uint64_t> counts(1ULL << n, 0);
    for (std::uint64_t b = 0; b < blocks; ++b)
        ++counts[bits.peek_bits(b * static_cast<std::uint64_t>(n), n)];

    std::uint64_t best = 0;
    for (const std::uint64_t c : counts) best = std::max(best, c);

    MinEntropyEstimate est;
    est.blocks = blocks;
    est.h_min = -std::log2(static_cast<double>(best) / static_cast<double>(blocks)) + 0.0;
    est.low_confidence = blocks < 100 * (1ULL << n);
    return est;
}

MinEntropyCurve min_entropy_curve(const BitStream& bits, std::uint32_t n_max) {
    MinEntropyCurve curve;
    curve.points.reserve(n_max);
    for (std::uint32_t n = 1; n <= n_max; ++n) {
        const MinEntropyEstimate est = min_entropy_blocks(bits, n);
        curve.points.push_back({n, est.h_min, est.low_confidence});
    }
    return curve;
}

double sv_min_entropy_bound(double delta, std::uint32_t n) {
    if (!(delta >= 0.0 && delta <= 0.5))
        throw std::domain_error("sv_min_entropy_bound: delta outside [0, 1/2]");
    return -static_cast<double>(n) * std::log2(1.0 - delta) + 0.0;
}

}  // namespace qrng
