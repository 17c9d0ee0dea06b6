// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrng/bitstream.hpp"

namespace qrng {

// Result of one statistical test. A test passes when its p-value lies in
// the two-sided acceptance band [0.01, 0.99].
struct TestOutcome {
    std::string test_name;
    double p_value = 0.0;
    bool pass = false;
    std::vector<double> sub_p_values;  // only for aggregated outcomes
};

inline bool p_value_passes(double p) { return p >= 0.01 && p <= 0.99; }

/// Frequency test: S = (#ones - #zeros)/sqrt(N), p = erfc(|S|/sqrt(2)).
TestOutcome monobit_test(const BitStream& bits);

/// Runs test (normal approximation of the run count). Fails with p = 0 when
/// the ones proportion is farther than 2/sqrt(N) from 1/2.
TestOutcome runs_test(const BitStream& bits);

/// Ones proportion per disjoint block, chi-square against 1/2.
TestOutcome block_frequency_test(const BitStream& bits, std::uint32_t block_bits = 2048);

/// One-sample Kolmogorov-Smirnov test of sub-p-values against uniform[0,1],
/// p-value from the asymptotic Kolmogorov distribution.
TestOutcome ks_aggregate(const std::string& test_name, std::vector<double> sub_p_values);

/// Survival function of the Kolmogorov distribution at t.
double kolmogorov_sf(double t);

// Full battery: the three stream tests on the whole input plus, when at
// least ten segments fit, a KS aggregation of each test over disjoint
// segments (Dieharder-style two-sided rule).
std::vector<TestOutcome> run_battery(const BitStream& bits,
                                     std::uint64_t segment_bits = 1'000'000,
                                     std::size_t max_segments = 100);

}  // namespace qrng
