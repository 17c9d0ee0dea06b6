// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qrng/entropy.hpp"
#include "qrng/source_sim.hpp"

using namespace qrng;

namespace {

BitStream complement_of(const BitStream& s) {
    BitStream out;
    out.reserve_bits(s.size());
    for (std::uint64_t i = 0; i < s.size(); ++i) out.push_back(!s.bit(i));
    return out;
}

BitStream alternating(std::uint64_t n) {
    BitStream s;
    for (std::uint64_t i = 0; i < n; ++i) s.push_back(i % 2 == 1);
    return s;
}

}  // namespace

TEST_CASE("zero block histogram on degenerate and random streams") {
    SUBCASE("all zeros puts every block at k = block_size") {
        const BitStream s(512 * 10);
        const BlockHistogram h = zero_block_histogram(s, 512);
        CHECK(h.total_blocks == 10);
        CHECK(h.counts[512] == 10);
        CHECK(h.p0 == 1.0);
        CHECK(h.sigma_m == 0.0);
    }
    SUBCASE("trailing partial block is dropped") {
        const BitStream s(512 + 100);
        CHECK(zero_block_histogram(s, 512).total_blocks == 1);
    }
    SUBCASE("stream shorter than a block is an error") {
        CHECK_THROWS_AS(zero_block_histogram(BitStream(100), 512), std::invalid_argument);
    }
    SUBCASE("i.i.d. stream spread matches the binomial prediction") {
        // 4e6 blocks of 512
        const BitStream s = random_bitstream(0xB10C, 4'000'000ULL * 512ULL);
        const BlockHistogram h = zero_block_histogram(s, 512);
        CHECK(h.p0 == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(h.sigma_m == doctest::Approx(std::sqrt(512.0 * 0.25)).epsilon(0.02));
        std::uint64_t total = 0;
        for (const auto c : h.counts) total += c;
        CHECK(total == h.total_blocks);
    }
    SUBCASE("serial correlation widens the spread past the binomial sigma") {
        SourceParams p;
        p.rng_seed = 424344;
        const BitStream s = generate_raw_stream(p, 10'000'000);
        const BlockHistogram h = zero_block_histogram(s, 512);
        CHECK(h.sigma_m > binomial_sigma(512, h.p0));
    }
}

TEST_CASE("binomial pmf and sigma") {
    CHECK(binomial_pmf(512, 512, 1.0) == 1.0);
    CHECK(binomial_pmf(512, 0, 0.0) == 1.0);
    CHECK(binomial_sigma(512, 0.4920) == doctest::Approx(11.31226).epsilon(1e-5));
    CHECK_THROWS_AS(binomial_pmf(10, 11, 0.5), std::domain_error);
    for (std::uint32_t k = 0; k <= 512; ++k)
        REQUIRE(binomial_pmf(512, k, 0.5) ==
                doctest::Approx(binomial_pmf(512, 512 - k, 0.5)).epsilon(1e-14));
    // pmf sums to one
    double sum = 0.0;
    for (std::uint32_t k = 0; k <= 512; ++k) sum += binomial_pmf(512, k, 0.4920);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("autocorrelation of simple streams") {
    SUBCASE("alternating stream has R(1) = -1") {
        const AutocorrResult r = autocorrelation(alternating(1001), 5);
        CHECK(r.coefficients[0] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(r.coefficients[1] == doctest::Approx(1.0).epsilon(1e-3));  // lag 2 realigned
        CHECK(r.finite_size_sigma == doctest::Approx(1.0 / std::sqrt(1001.0)));
    }
    SUBCASE("constant stream raises a degenerate-stream error") {
        CHECK_THROWS_AS(autocorrelation(BitStream(5000), 3), DegenerateStreamError);
        CHECK_THROWS_AS(autocorrelation(BitStream::filled(5000, true), 3), DegenerateStreamError);
    }
    SUBCASE("too-short stream is rejected") {
        CHECK_THROWS_AS(autocorrelation(BitStream(10), 10), std::invalid_argument);
    }
}

TEST_CASE("autocorrelation of an i.i.d. stream stays inside 4 sigma") {
    const std::uint64_t n = 1'250'000'000ULL;
    const BitStream s = random_bitstream(0xACAC, n);
    const AutocorrResult r = autocorrelation(s, 100, 2);
    const double bound = 4.0 / std::sqrt(static_cast<double>(n));
    for (const double c : r.coefficients) REQUIRE(std::fabs(c) < bound);
}

TEST_CASE("autocorrelation is invariant under global complement") {
    const BitStream s = random_bitstream(0xF00D, 50'000);
    const AutocorrResult a = autocorrelation(s, 20);
    const AutocorrResult b = autocorrelation(complement_of(s), 20);
    for (std::uint32_t j = 0; j < 20; ++j)
        REQUIRE(a.coefficients[j] == doctest::Approx(b.coefficients[j]).epsilon(1e-10));
}

TEST_CASE("autocorrelation worker count does not change results") {
    const BitStream s = random_bitstream(0xBEE, 200'000);
    const AutocorrResult a = autocorrelation(s, 50, 1);
    const AutocorrResult b = autocorrelation(s, 50, 4);
    for (std::uint32_t j = 0; j < 50; ++j) REQUIRE(a.coefficients[j] == b.coefficients[j]);
}

TEST_CASE("mutual information from correlation") {
    CHECK(mutual_info_from_corr(0.0) == 0.0);
    CHECK(mutual_info_from_corr(0.13078) == doctest::Approx(0.01244422656).epsilon(1e-8));
    CHECK(mutual_info_from_corr(-0.13078) == doctest::Approx(0.01244422656).epsilon(1e-8));
    CHECK(mutual_info_from_corr(0.5) > 0.0);
    CHECK_THROWS_AS(mutual_info_from_corr(1.0), std::domain_error);
    CHECK_THROWS_AS(mutual_info_from_corr(-1.5), std::domain_error);
}

TEST_CASE("binary entropy inversion") {
    SUBCASE("endpoints") {
        const SvEstimate top = delta_from_cond_entropy(1.0);
        CHECK(top.max_cond_prob == 0.5);
        CHECK(top.delta == 0.5);
        const SvEstimate bottom = delta_from_cond_entropy(0.0);
        CHECK(bottom.max_cond_prob == 1.0);
        CHECK(bottom.delta == 0.0);
    }
    SUBCASE("reference point") {
        const SvEstimate e = delta_from_cond_entropy(0.98262);
        CHECK(e.max_cond_prob == doctest::Approx(0.5775).epsilon(2e-4));
        // forward check against the entropy itself
        CHECK(binary_entropy(e.max_cond_prob) == doctest::Approx(0.98262).epsilon(1e-9));
    }
    SUBCASE("inversion composed with the entropy is the identity") {
        for (double p = 0.5; p <= 1.0; p += 0.003) {
            const SvEstimate e = delta_from_cond_entropy(binary_entropy(p));
            REQUIRE(e.max_cond_prob == doctest::Approx(p).epsilon(1e-9));
            REQUIRE(e.delta == 1.0 - e.max_cond_prob);  // exact by construction
        }
    }
    SUBCASE("domain") {
        CHECK_THROWS_AS(delta_from_cond_entropy(1.5), std::domain_error);
        CHECK_THROWS_AS(delta_from_cond_entropy(-0.1), std::domain_error);
    }
}

TEST_CASE("max conditional probability") {
    SUBCASE("alternating stream is fully predictable") {
        const SvEstimate e = max_conditional_probability(alternating(10'000), 2, 100);
        CHECK(e.max_cond_prob == 1.0);
        CHECK(e.delta == 0.0);
        CHECK(e.order == 2);
    }
    SUBCASE("i.i.d. stream sits at one half") {
        const BitStream s = random_bitstream(0xD1CE, 1'000'000'000ULL);
        const SvEstimate e = max_conditional_probability(s, 4, 100);
        CHECK(e.max_cond_prob == doctest::Approx(0.5).epsilon(0.01));  // +-0.005 absolute
        CHECK(e.excluded_histories == 0);
    }
    SUBCASE("count floor excludes rare histories and can exhaust the table") {
        const BitStream s = random_bitstream(0xFADE, 300);
        CHECK_THROWS_AS(max_conditional_probability(s, 12, 100), InsufficientSampleError);
        // alternating stream with one spliced run: the alternating histories
        // dominate, everything introduced by the splice stays under the floor
        BitStream spliced;
        for (int i = 0; i < 20'000; ++i) {
            spliced.push_back(i % 2 == 1);
            if (i == 10'000)
                for (int j = 0; j < 4; ++j) spliced.push_back(true);
        }
        const SvEstimate e = max_conditional_probability(spliced, 4, 100);
        CHECK(e.excluded_histories >= 10);
        CHECK(e.excluded_histories <= 14);  // 16 histories, 2 alternating ones stay
        CHECK(e.max_cond_prob > 0.99);
    }
    SUBCASE("order bounds") {
        const BitStream s = random_bitstream(1, 1000);
        CHECK_THROWS_AS(max_conditional_probability(s, 0, 10), std::invalid_argument);
        CHECK_THROWS_AS(max_conditional_probability(s, 25, 10), std::invalid_argument);
    }
}

TEST_CASE("conditional probability grows with the order on a correlated stream") {
    SourceParams p;
    p.rng_seed = 2468;
    const BitStream s = generate_raw_stream(p, 10'000'000);
    double last = 0.0;
    for (std::uint32_t order = 1; order <= 8; ++order) {
        const SvEstimate e = max_conditional_probability(s, order, 100);
        REQUIRE(e.max_cond_prob >= last);
        last = e.max_cond_prob;
    }
}

TEST_CASE("block min-entropy") {
    SUBCASE("constant stream carries none") {
        CHECK(min_entropy_blocks(BitStream(10'000), 8).h_min == 0.0);
        CHECK(min_entropy_blocks(BitStream::filled(10'000, true), 3).h_min == 0.0);
    }
    SUBCASE("i.i.d. stream carries n bits per n-bit block") {
        const BitStream s = random_bitstream(0xE57, 100'000'000);
        const MinEntropyEstimate e = min_entropy_blocks(s, 8);
        CHECK(e.h_min == doctest::Approx(8.0).epsilon(0.00625));  // +-0.05 absolute
        CHECK_FALSE(e.low_confidence);
    }
    SUBCASE("low-confidence flag below 100 blocks per pattern") {
        const BitStream s = random_bitstream(2, 10'000);
        CHECK(min_entropy_blocks(s, 12).low_confidence);
        CHECK_FALSE(min_entropy_blocks(s, 1).low_confidence);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(min_entropy_blocks(BitStream(), 4), std::invalid_argument);
        CHECK_THROWS_AS(min_entropy_blocks(BitStream(3), 4), std::invalid_argument);
    }
}

TEST_CASE("min-entropy curve properties") {
    SourceParams p;
    p.rng_seed = 1357;
    const BitStream sim = generate_raw_stream(p, 4'000'000);
    const BitStream iid = random_bitstream(0xC0DE, 4'000'000);
    for (const BitStream* s : {&sim, &iid}) {
        const MinEntropyCurve curve = min_entropy_curve(*s, 12);
        REQUIRE(curve.points.size() == 12);
        for (const auto& pt : curve.points) {
            REQUIRE(pt.h_min >= 0.0);
            REQUIRE(pt.h_min <= static_cast<double>(pt.n));
        }
        // subadditive consistency at doubled block length
        for (const std::uint32_t n : {1u, 2u, 3u, 4u, 5u, 6u}) {
            const double h1 = min_entropy_blocks(*s, n).h_min;
            const double h2 = min_entropy_blocks(*s, 2 * n).h_min;
            REQUIRE(h2 <= 2.0 * h1 + 1e-6);
        }
    }
}

TEST_CASE("calibrated-stream min-entropy curve stays above its delta bounds") {
    SourceParams p;
    p.rng_seed = 86420;
    const BitStream s = generate_raw_stream(p, 100'000'000);
    const MinEntropyCurve curve = min_entropy_curve(s, 12);
    for (const auto& pt : curve.points) {
        REQUIRE_FALSE(pt.low_confidence);
        // never dips under the bound from the order-10 style estimate
        REQUIRE(pt.h_min > sv_min_entropy_bound(0.4114, pt.n));
        // clears the steeper pairwise-estimate line once n grows
        if (pt.n >= 8) REQUIRE(pt.h_min > sv_min_entropy_bound(0.4225, pt.n));
    }
}

TEST_CASE("min-entropy bound from delta") {
    CHECK(sv_min_entropy_bound(0.5, 512) == 512.0);
    CHECK(sv_min_entropy_bound(0.5, 1) == 1.0);
    CHECK(sv_min_entropy_bound(0.5, 4096) == 4096.0);
    CHECK(sv_min_entropy_bound(0.0, 512) == 0.0);
    CHECK(sv_min_entropy_bound(0.4114, 512) == doctest::Approx(391.4959629).epsilon(1e-8));
    CHECK_THROWS_AS(sv_min_entropy_bound(0.6, 10), std::domain_error);
}
