// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "qrng/stat_battery.hpp"

using namespace qrng;

namespace {

BitStream complement_of(const BitStream& s) {
    BitStream out;
    for (std::uint64_t i = 0; i < s.size(); ++i) out.push_back(!s.bit(i));
    return out;
}

BitStream alternating(std::uint64_t n) {
    BitStream s;
    for (std::uint64_t i = 0; i < n; ++i) s.push_back(i % 2 == 1);
    return s;
}

}  // namespace

TEST_CASE("monobit") {
    SUBCASE("a balanced stream scores p = 1 and fails the two-sided band") {
        const TestOutcome o = monobit_test(alternating(10'000));
        CHECK(o.p_value == 1.0);
        CHECK_FALSE(o.pass);  // too perfect: the band is 0.01 <= p <= 0.99
    }
    SUBCASE("all ones fails hard") {
        const TestOutcome o = monobit_test(BitStream::filled(10'000, true));
        CHECK(o.p_value < 1e-10);
        CHECK_FALSE(o.pass);
    }
    SUBCASE("random streams pass") {
        CHECK(monobit_test(random_bitstream(0xAB, 1'000'000)).pass);
    }
    SUBCASE("invariant under global complement") {
        const BitStream s = random_bitstream(0xCD, 100'000);
        CHECK(monobit_test(s).p_value == monobit_test(complement_of(s)).p_value);
    }
    SUBCASE("too short is an error") {
        CHECK_THROWS_AS(monobit_test(BitStream(99)), std::invalid_argument);
    }
}

TEST_CASE("runs") {
    SUBCASE("alternating stream has far too many runs") {
        const TestOutcome o = runs_test(alternating(10'000));
        CHECK_FALSE(o.pass);
        CHECK(o.p_value < 1e-10);
    }
    SUBCASE("all zeros fails through the proportion prerequisite") {
        const TestOutcome o = runs_test(BitStream(10'000));
        CHECK(o.p_value == 0.0);
        CHECK_FALSE(o.pass);
    }
    SUBCASE("random streams pass") {
        CHECK(runs_test(random_bitstream(0xEF, 1'000'000)).pass);
    }
}

TEST_CASE("block frequency") {
    CHECK(block_frequency_test(random_bitstream(0x11, 1'000'000)).pass);
    CHECK_FALSE(block_frequency_test(BitStream::filled(100'000, true)).pass);
    // a stream fair overall but biased block-by-block must fail
    BitStream lumpy;
    for (int b = 0; b < 100; ++b)
        for (int i = 0; i < 2048; ++i) lumpy.push_back(b % 2 == 0 ? (i % 4 != 0) : (i % 4 == 0));
    CHECK_FALSE(block_frequency_test(lumpy).pass);
    CHECK_THROWS_AS(block_frequency_test(BitStream(500), 2048), std::invalid_argument);
}

TEST_CASE("Kolmogorov-Smirnov aggregation") {
    SUBCASE("one hundred copies of 0.5 fail with the closed-form distance") {
        const TestOutcome o = ks_aggregate("degenerate", std::vector<double>(100, 0.5));
        CHECK(o.p_value < 1e-20);  // asymptotic Q(5) ~ 3.9e-22
        CHECK_FALSE(o.pass);
        CHECK(o.sub_p_values.size() == 100);
    }
    SUBCASE("uniform draws pass") {
        SplitMix64 g(0xABCDEF);
        std::vector<double> ps(100);
        for (auto& p : ps) p = uniform_unit(g);
        CHECK(ks_aggregate("uniform", ps).pass);
    }
    SUBCASE("invariant under permutation of inputs") {
        SplitMix64 g(0x4321);
        std::vector<double> ps(50);
        for (auto& p : ps) p = uniform_unit(g);
        const double before = ks_aggregate("perm", ps).p_value;
        std::reverse(ps.begin(), ps.end());
        std::swap(ps[3], ps[31]);
        CHECK(ks_aggregate("perm", ps).p_value == before);
    }
    SUBCASE("domain checks") {
        CHECK_THROWS_AS(ks_aggregate("few", std::vector<double>(9, 0.5)), std::invalid_argument);
        std::vector<double> bad(20, 0.5);
        bad[7] = 1.5;
        CHECK_THROWS_AS(ks_aggregate("range", bad), std::domain_error);
    }
}

TEST_CASE("kolmogorov survival function") {
    CHECK(kolmogorov_sf(0.0) == 1.0);
    CHECK(kolmogorov_sf(5.0) == doctest::Approx(3.8575e-22).epsilon(1e-3));
    CHECK(kolmogorov_sf(0.8) == doctest::Approx(0.5441).epsilon(1e-3));
    CHECK(kolmogorov_sf(1.36) == doctest::Approx(0.0505).epsilon(2e-2));  // classic 5% point
}

TEST_CASE("battery on a good stream") {
    const BitStream s = random_bitstream(0x600D, 2'000'000);
    const auto outcomes = run_battery(s, 10'000, 100);
    REQUIRE(outcomes.size() == 6);  // three whole-stream tests + three KS aggregates
    for (const auto& o : outcomes) {
        CAPTURE(o.test_name);
        CHECK(o.pass);
        CHECK(o.pass == p_value_passes(o.p_value));
    }
    const auto& ks = outcomes[3];
    CHECK(ks.test_name == "monobit_ks");
    CHECK(ks.sub_p_values.size() == 100);
}

TEST_CASE("battery without enough segments skips aggregation") {
    const auto outcomes = run_battery(random_bitstream(1, 50'000), 10'000, 100);
    CHECK(outcomes.size() == 3);
}
