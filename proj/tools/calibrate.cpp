// SPDX-License-Identifier: Apache-2.0
//
// Finds the shipped (filter_beta, threshold_offset) defaults: coordinate
// bisection against the raw-stream targets P0 and R(1), then a longer
// verification run. Prints the constants to paste into source_sim.hpp.

#include <iostream>

#include <CLI11.hpp>

#include "qrng/source_sim.hpp"

int main(int argc, char** argv) {
    CLI::App app{"calibrate source defaults against raw-stream targets"};
    std::uint64_t search_bits = 10'000'000;
    std::uint64_t verify_bits = 100'000'000;
    double target_p0 = 0.4920;
    double target_r1 = 0.13078;
    std::uint64_t seed = 424242;
    app.add_option("--search-bits", search_bits, "bits per bisection probe");
    app.add_option("--verify-bits", verify_bits, "bits for the final verification run");
    app.add_option("--target-p0", target_p0, "zero-probability target");
    app.add_option("--target-r1", target_r1, "lag-1 autocorrelation target");
    app.add_option("--seed", seed, "probe RNG seed");
    CLI11_PARSE(app, argc, argv);

    qrng::SourceParams params;
    params.filter_beta = 0.0;
    params.threshold_offset = 0.0;
    params.rng_seed = seed;

    std::cout << "searching with " << search_bits << "-bit probes...\n";
    const qrng::CalibrationResult result =
        qrng::calibrate_source(params, target_p0, target_r1, search_bits);
    std::cout << "calibrated filter_beta       = " << std::setprecision(17) << result.filter_beta
              << "\ncalibrated threshold_offset = " << result.threshold_offset << '\n';
    std::cout << "search-run stats: P0 = " << result.achieved_p0 << ", R(1) = "
              << result.achieved_r1 << '\n';

    params.filter_beta = result.filter_beta;
    params.threshold_offset = result.threshold_offset;
    params.rng_seed = seed + 1;
    const qrng::RawStreamStats verify = qrng::measure_raw(params, verify_bits);
    std::cout << "verification (" << verify_bits << " bits, fresh seed): P0 = " << verify.p0
              << ", R(1) = " << verify.r1 << '\n';
    return 0;
}
