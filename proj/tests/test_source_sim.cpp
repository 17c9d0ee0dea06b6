// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qrng/source_sim.hpp"

using namespace qrng;

namespace {

// independent route to the m-mode pmf: the term ratio
// P(n+1)/P(n) = (n+m)/(n+1) * n_bar/(1+n_bar), P(0) = (1+n_bar)^-m.
// Used as the oracle for normalization, moments and pointwise values.
struct PmfRecurrence {
    double value;
    double n_bar, ratio;
    std::uint64_t n = 0;
    double m;
    PmfRecurrence(double n_bar_, std::uint32_t m_)
        : value(std::exp(-static_cast<double>(m_) * std::log1p(n_bar_))),
          n_bar(n_bar_),
          ratio(n_bar_ / (1.0 + n_bar_)),
          m(m_) {}
    void advance() {
        value *= (static_cast<double>(n) + m) / (static_cast<double>(n) + 1.0) * ratio;
        ++n;
    }
};

struct SampleStats {
    double mean, var, skew;
};

SampleStats stats_of(const std::vector<std::uint64_t>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0;
    for (const auto x : xs) mean += static_cast<double>(x);
    mean /= n;
    double m2 = 0, m3 = 0;
    for (const auto x : xs) {
        const double d = static_cast<double>(x) - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    return {mean, m2, m3 / std::pow(m2, 1.5)};
}

double lag1_autocorr(const std::vector<double>& y) {
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - mean;
        den += d * d;
        if (i + 1 < y.size()) num += d * (y[i + 1] - mean);
    }
    return num / den;
}

}  // namespace

TEST_CASE("single-mode pmf values") {
    CHECK(pmf_single_mode(0.0, 0) == 1.0);
    CHECK(pmf_single_mode(0.0, 5) == 0.0);
    CHECK(pmf_single_mode(1000.0, 0) == doctest::Approx(0.000999000999001).epsilon(1e-12));
    // arbitrary-precision evaluation of (1/1001)*(1000/1001)^1000
    CHECK(pmf_single_mode(1000.0, 1000) == doctest::Approx(3.6769560868e-4).epsilon(1e-10));
    CHECK_THROWS_AS(pmf_single_mode(-1.0, 0), std::domain_error);
}

TEST_CASE("multimode pmf reduces to single mode at m=1") {
    for (const double n_bar : {0.25, 1.0, 42.0, 1000.0}) {
        for (const std::uint64_t n : {0ull, 1ull, 7ull, 100ull, 1000ull, 5000ull}) {
            const double a = pmf_multimode(n_bar, n, 1);
            const double b = pmf_single_mode(n_bar, n);
            REQUIRE(a == doctest::Approx(b).epsilon(1e-12));
        }
    }
}

TEST_CASE("multimode pmf agrees with the term recurrence") {
    for (const auto& [n_bar, m] : std::vector<std::pair<double, std::uint32_t>>{
             {1.0, 1}, {1000.0, 10}, {1000.0, 40}}) {
        PmfRecurrence rec(n_bar, m);
        for (std::uint64_t n = 0; n <= 2000; ++n) {
            if (rec.value > 1e-290)
                REQUIRE(pmf_multimode(n_bar, n, m) == doctest::Approx(rec.value).epsilon(1e-9));
            rec.advance();
        }
    }
    CHECK(pmf_multimode(1000.0, 0, 1) == doctest::Approx(1.0 / 1001.0).epsilon(1e-12));
    CHECK(pmf_multimode(0.0, 3, 40) == 0.0);
    CHECK(pmf_multimode(0.0, 0, 40) == 1.0);
}

TEST_CASE("multimode pmf normalizes over mean + 20 sigma") {
    for (const auto& [n_bar, m] : std::vector<std::pair<double, std::uint32_t>>{
             {1.0, 1}, {1000.0, 1}, {1000.0, 10}, {1000.0, 40}}) {
        const Moments mm = moments(n_bar, m);
        const double sigma = std::sqrt(mm.variance);
        const std::uint64_t hi = static_cast<std::uint64_t>(mm.mean + 20.0 * sigma) + 1;
        double sum = 0.0;
        for (std::uint64_t n = 0; n <= hi; ++n) sum += pmf_multimode(n_bar, n, m);
        REQUIRE(std::fabs(sum - 1.0) <= 1e-9);

        // numeric-summation oracle for the closed-form moments; the wider
        // range keeps the truncated tail far below the tolerances
        const std::uint64_t hi_moments = static_cast<std::uint64_t>(mm.mean + 60.0 * sigma) + 1;
        double mean = 0.0, second = 0.0;
        for (std::uint64_t n = 0; n <= hi_moments; ++n) {
            const double p = pmf_multimode(n_bar, n, m);
            mean += static_cast<double>(n) * p;
            second += static_cast<double>(n) * static_cast<double>(n) * p;
        }
        REQUIRE(mean == doctest::Approx(mm.mean).epsilon(1e-9));
        REQUIRE(second - mean * mean == doctest::Approx(mm.variance).epsilon(1e-6));
    }
}

TEST_CASE("moment formulas") {
    const Moments single = moments(1000.0, 1);
    CHECK(single.mean == 1000.0);
    CHECK(single.variance == 1000.0 * 1001.0);

    const Moments multi = moments(1000.0, 40);
    CHECK(multi.mean == 40000.0);
    CHECK(std::sqrt(multi.variance) == doctest::Approx(6327.7168).epsilon(1e-6));

    const Moments vacuum = moments(0.0, 40);
    CHECK(vacuum.mean == 0.0);
    CHECK(vacuum.variance == 0.0);
}

TEST_CASE("photon sampling matches the analytic moments") {
    SourceParams p;
    p.rng_seed = 0xFEED5EED;
    const auto xs = sample_photon_counts(p, 1'000'000);
    const SampleStats s = stats_of(xs);
    const Moments mm = moments(p.n_bar, p.modes_m);

    CHECK(std::fabs(s.mean - mm.mean) / mm.mean < 0.01);
    CHECK(std::fabs(s.var - mm.variance) / mm.variance < 0.03);
    // z-score bound for the mean at one million samples
    CHECK(std::fabs(s.mean - mm.mean) / std::sqrt(mm.variance / 1e6) < 4.0);
}

TEST_CASE("sampling is deterministic and seed-sensitive") {
    SourceParams p;
    p.rng_seed = 77;
    CHECK(sample_photon_counts(p, 2000) == sample_photon_counts(p, 2000));
    SourceParams q = p;
    q.rng_seed = 78;
    CHECK(sample_photon_counts(p, 2000) != sample_photon_counts(q, 2000));

    SourceParams vacuum = p;
    vacuum.n_bar = 0.0;
    for (const auto x : sample_photon_counts(vacuum, 100)) REQUIRE(x == 0);
}

TEST_CASE("more modes make the count distribution more symmetric") {
    SourceParams p1;
    p1.modes_m = 1;
    p1.rng_seed = 31337;
    SourceParams p40;
    p40.modes_m = 40;
    p40.rng_seed = 31337;
    const double skew1 = stats_of(sample_photon_counts(p1, 1'000'000)).skew;
    const double skew40 = stats_of(sample_photon_counts(p40, 1'000'000)).skew;
    CHECK(skew40 < skew1);
    CHECK(skew40 > 0.0);  // still right-tailed, just less so
}

TEST_CASE("mixture sampling reproduces the pmf (chi-square)") {
    SourceParams p;
    p.n_bar = 3.0;
    p.modes_m = 2;
    p.rng_seed = 2024;
    constexpr std::size_t kDraws = 200'000;
    const auto xs = sample_photon_counts(p, kDraws);
    std::vector<std::uint64_t> hist(40, 0);
    for (const auto x : xs) ++hist[std::min<std::uint64_t>(x, hist.size() - 1)];
    double chi2 = 0.0;
    double tail_p = 1.0;
    for (std::size_t k = 0; k + 1 < hist.size(); ++k) {
        const double pk = pmf_multimode(p.n_bar, k, p.modes_m);
        tail_p -= pk;
        const double expect = pk * kDraws;
        if (expect < 5.0) continue;
        chi2 += (hist[k] - expect) * (hist[k] - expect) / expect;
    }
    const double expect_tail = tail_p * kDraws;
    if (expect_tail >= 5.0)
        chi2 += (hist.back() - expect_tail) * (hist.back() - expect_tail) / expect_tail;
    // ~30 effective bins; 5 sigma would be ~70
    CHECK(chi2 < 70.0);
}

TEST_CASE("detector chain identity and noise configurations") {
    SourceParams p;
    p.filter_beta = 0.0;
    p.noise_sigma = 0.0;
    const std::vector<std::uint64_t> counts = {5, 17, 3, 900, 0, 42};
    const auto y = detector_chain(counts, p);
    REQUIRE(y.size() == counts.size());
    for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(y[i] == static_cast<double>(counts[i]));

    SourceParams noisy = p;
    noisy.noise_sigma = 610.0;
    noisy.rng_seed = 5150;
    const std::vector<std::uint64_t> zeros(200'000, 0);
    const auto yn = detector_chain(zeros, noisy);
    double var = 0.0;
    for (const double v : yn) var += v * v;
    var /= static_cast<double>(yn.size());
    CHECK(std::sqrt(var) == doctest::Approx(610.0).epsilon(0.01));

    CHECK_THROWS_AS(detector_chain(std::vector<std::uint64_t>{}, p), std::invalid_argument);
}

TEST_CASE("one-pole filter gives lag-1 correlation equal to beta") {
    SourceParams p;
    p.filter_beta = 0.15;
    p.noise_sigma = 610.0;
    p.rng_seed = 909;
    const std::vector<std::uint64_t> zeros(1'000'000, 0);
    const auto y = detector_chain(zeros, p);
    CHECK(lag1_autocorr(y) == doctest::Approx(0.15).epsilon(0.07));  // +-0.01 absolute
}

TEST_CASE("discriminator basics") {
    SourceParams p;
    p.threshold_tau = 1e9;
    p.threshold_offset = 0.0;

    SUBCASE("alternating input starting low alternates") {
        std::vector<AnalogSample> y;
        for (int i = 0; i < 64; ++i) y.push_back(i % 2 == 0 ? 0.0 : 100.0);
        const BitStream bits = discriminate(y, p);
        for (int i = 0; i < 64; ++i) REQUIRE(bits.bit(i) == (i % 2 == 1));
    }
    SUBCASE("constant input is all zeros by the tie rule") {
        const std::vector<AnalogSample> y(100, 3.25);
        CHECK(discriminate(y, p).ones() == 0);
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(discriminate(std::vector<AnalogSample>{}, p), std::invalid_argument);
    }
}

TEST_CASE("pipeline composition equals the fused generator") {
    SourceParams p;
    p.rng_seed = 1234;
    const auto counts = sample_photon_counts(p, 5000);
    const auto analog = detector_chain(counts, p);
    const BitStream composed = discriminate(analog, p);
    CHECK(composed == generate_raw_stream(p, 5000));
}

TEST_CASE("full pipeline is deterministic per seed") {
    SourceParams p;
    p.rng_seed = 555;
    CHECK(generate_raw_stream(p, 20'000) == generate_raw_stream(p, 20'000));
    SourceParams q = p;
    q.rng_seed = 556;
    CHECK(generate_raw_stream(p, 20'000) != generate_raw_stream(q, 20'000));
}

TEST_CASE("calibrated defaults land on the reference operating point") {
    SourceParams p;  // shipped defaults
    p.rng_seed = 97531;
    const RawStreamStats stats = measure_raw(p, 10'000'000);
    CHECK(stats.p0 == doctest::Approx(0.4920).epsilon(0.011));  // +-0.005 absolute
    CHECK(stats.r1 > 0.11);
    CHECK(stats.r1 < 0.15);
}

TEST_CASE("parameter validation") {
    SourceParams p;
    p.n_bar = -1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.modes_m = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.filter_beta = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.threshold_tau = 0.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    CHECK_NOTHROW(p.validate());
}
