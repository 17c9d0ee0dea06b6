// SPDX-License-Identifier: Apache-2.0
#include "qrng/stat_battery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace qrng {

namespace {

constexpr std::uint64_t kMinBits = 100;

void require_length(const BitStream& bits, const char* who) {
    if (bits.size() < kMinBits)
        throw std::invalid_argument(std::string(who) + ": need at least 100 bits");
}

TestOutcome make_outcome(std::string name, double p) {
    TestOutcome o;
    o.test_name = std::move(name);
    o.p_value = p;
    o.pass = p_value_passes(p);
    return o;
}

}  // namespace

TestOutcome monobit_test(const BitStream& bits) {
    require_length(bits, "monobit_test");
    const double n = static_cast<double>(bits.size());
    const double ones = static_cast<double>(bits.ones());
    const double s = (2.0 * ones - n) / std::sqrt(n);
    return make_outcome("monobit", std::erfc(std::fabs(s) / std::sqrt(2.0)));
}

TestOutcome runs_test(const BitStream& bits) {
    require_length(bits, "runs_test");
    const double n = static_cast<double>(bits.size());
    const double pi = static_cast<double>(bits.ones()) / n;
    if (std::fabs(pi - 0.5) >= 2.0 / std::sqrt(n)) return make_outcome("runs", 0.0);

    // number of runs = transitions + 1; transitions via |x XOR shift(x)|
    const std::uint64_t overlap = bits.size() - 1;
    const std::uint64_t cross = popcount_and_shifted(bits, 1);
    const std::uint64_t transitions =
        popcount_range(bits, 0, overlap) + popcount_range(bits, 1, bits.size()) - 2 * cross;
    const double v = static_cast<double>(transitions) + 1.0;
    const double p = std::erfc(std::fabs(v - 2.0 * n * pi * (1.0 - pi)) /
                               (2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi)));
    return make_outcome("runs", p);
}

TestOutcome block_frequency_test(const BitStream& bits, std::uint32_t block_bits) {
    require_length(bits, "block_frequency_test");
    if (block_bits < 1) throw std::invalid_argument("block_frequency_test: block_bits must be >= 1");
    const std::uint64_t blocks = bits.size() / block_bits;
    if (blocks == 0)
        throw std::invalid_argument("block_frequency_test: stream shorter than one block");
    double chi2 = 0.0;
    for (std::uint64_t b = 0; b < blocks; ++b) {
        const std::uint64_t begin = b * static_cast<std::uint64_t>(block_bits);
        const double pi =
            static_cast<double>(popcount_range(bits, begin, begin + block_bits)) / block_bits;
        chi2 += (pi - 0.5) * (pi - 0.5);
    }
    chi2 *= 4.0 * static_cast<double>(block_bits);
    const double p = boost::math::gamma_q(static_cast<double>(blocks) / 2.0, chi2 / 2.0);
    return make_outcome("block_frequency", p);
}

double kolmogorov_sf(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 0.2) return 1.0;  // series is for the upper tail; below this p = 1 to 1e-13
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sum += (k & 1) ? term : -term;
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestOutcome ks_aggregate(const std::string& test_name, std::vector<double> sub_p_values) {
    if (sub_p_values.size() < 10)
        throw std::invalid_argument("ks_aggregate: need at least 10 sub-p-values");
    for (const double p : sub_p_values)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::domain_error("ks_aggregate: sub-p-value outside [0,1]");
    std::sort(sub_p_values.begin(), sub_p_values.end());
    const double n = static_cast<double>(sub_p_values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sub_p_values.size(); ++i) {
        const double x = sub_p_values[i];  // uniform CDF
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - x);
        d = std::max(d, x - static_cast<double>(i) / n);
    }
    TestOutcome o = make_outcome(test_name + "_ks", kolmogorov_sf(std::sqrt(n) * d));
    o.sub_p_values = std::move(sub_p_values);
    return o;
}

std::vector<TestOutcome> run_battery(const BitStream& bits, std::uint64_t segment_bits,
                                     std::size_t max_segments) {
    require_length(bits, "run_battery");
    std::vector<TestOutcome> results;
    results.push_back(monobit_test(bits));
    results.push_back(runs_test(bits));
    results.push_back(block_frequency_test(bits));

    const std::size_t segments =
        std::min<std::uint64_t>(max_segments, bits.size() / segment_bits);
    if (segments >= 10) {
        std::vector<double> mono, runs, blockf;
        mono.reserve(segments);
        runs.reserve(segments);
        blockf.reserve(segments);
        for (std::size_t s = 0; s < segments; ++s) {
            BitStream seg;
            std::uint64_t* w = seg.resize_for_overwrite(segment_bits);
            const std::uint64_t base = s * segment_bits;
            const std::uint64_t nwords = (segment_bits + 63) / 64;
            for (std::uint64_t q = 0; q < nwords; ++q) w[q] = bits.word_at(base + 64 * q);
            if (segment_bits & 63) w[nwords - 1] &= (1ULL << (segment_bits & 63)) - 1;
            mono.push_back(monobit_test(seg).p_value);
            runs.push_back(runs_test(seg).p_value);
            blockf.push_back(block_frequency_test(seg).p_value);
        }
        results.push_back(ks_aggregate("monobit", std::move(mono)));
        results.push_back(ks_aggregate("runs", std::move(runs)));
        results.push_back(ks_aggregate("block_frequency", std::move(blockf)));
    }
    return results;
}

}  // namespace qrng
