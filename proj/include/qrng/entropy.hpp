// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrng/bitstream.hpp"

namespace qrng {

// Raised when a statistic is undefined on the given stream
// (constant input, zero variance).
class DegenerateStreamError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when no conditioning pattern reaches the occurrence floor.
class InsufficientSampleError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Zero counts of consecutive disjoint blocks. counts[k] is the number of
// blocks containing exactly k zeros.
struct BlockHistogram {
    std::uint32_t block_size = 0;
    std::vector<std::uint64_t> counts;  // size block_size + 1
    std::uint64_t total_blocks = 0;
    double p0 = 0.0;       // mean zeros per bit
    double sigma_m = 0.0;  // empirical std-dev of k
};

/// Histogram of zeros per disjoint block; a trailing partial block is dropped.
BlockHistogram zero_block_histogram(const BitStream& bits, std::uint32_t block_size);

/// C(n,k) p0^k (1-p0)^(n-k), evaluated through log-gamma.
double binomial_pmf(std::uint32_t n, std::uint32_t k, double p0);

/// Predicted spread of the zero count: sqrt(n p0 (1-p0)).
double binomial_sigma(std::uint32_t n, double p0);

// Serial correlation coefficients R(1..max_lag) over overlapping windows.
struct AutocorrResult {
    std::uint32_t max_lag = 0;
    std::vector<double> coefficients;  // coefficients[j-1] = R(j)
    std::uint64_t sample_size = 0;
    double finite_size_sigma = 0.0;  // 1/sqrt(N)
};

AutocorrResult autocorrelation(const BitStream& bits, std::uint32_t max_lag,
                               unsigned workers = 1);

/// Mutual information (bits) between successive samples of a Gaussian pair
/// with correlation r1: -0.5 log2(1 - r1^2).
double mutual_info_from_corr(double r1);

/// Binary entropy in bits, with 0 log 0 = 0.
double binary_entropy(double p);

// Bound on the conditional bit distribution: every bit, given its history,
// has probability within [delta, 1-delta].
struct SvEstimate {
    std::uint32_t order = 0;          // history length in bits
    double max_cond_prob = 0.5;      // in [1/2, 1]
    double delta = 0.5;              // 1 - max_cond_prob
    std::uint64_t min_history_count = 0;  // occurrence floor applied
    std::uint64_t sample_size = 0;        // bits consumed
    std::uint64_t excluded_histories = 0; // patterns under the floor
};

/// Invert the binary entropy on [1/2, 1]: the largest p with H(p) = h.
SvEstimate delta_from_cond_entropy(double h);

/// Empirical max over histories of P(next bit | previous `order` bits),
/// overlapping windows; histories seen fewer than min_history_count times
/// are excluded from the maximum.
SvEstimate max_conditional_probability(const BitStream& bits, std::uint32_t order,
                                       std::uint64_t min_history_count);

struct MinEntropyEstimate {
    double h_min = 0.0;
    std::uint64_t blocks = 0;
    bool low_confidence = false;  // fewer than 100 * 2^n blocks
};

/// -log2 of the highest empirical frequency among disjoint n-bit blocks.
MinEntropyEstimate min_entropy_blocks(const BitStream& bits, std::uint32_t n);

struct MinEntropyPoint {
    std::uint32_t n;
    double h_min;
    bool low_confidence;
};

struct MinEntropyCurve {
    std::vector<MinEntropyPoint> points;
};

/// min_entropy_blocks swept over n = 1..n_max.
MinEntropyCurve min_entropy_curve(const BitStream& bits, std::uint32_t n_max);

/// Min-entropy guaranteed by a conditional-probability bound delta over an
/// n-bit string: -n log2(1-delta).
double sv_min_entropy_bound(double delta, std::uint32_t n);

}  // namespace qrng
