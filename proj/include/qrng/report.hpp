// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qrng/bitstream.hpp"
#include "qrng/entropy.hpp"
#include "qrng/stat_battery.hpp"

namespace qrng {

struct AnalysisParams {
    std::uint32_t block_size = 512;
    std::uint32_t max_lag = 100;
    std::uint32_t sv_order_max = 10;
    std::uint64_t min_history_count = 100;
    std::uint32_t hmin_max_n = 16;
};

// Everything the characterization pipeline measured on one stream.
// Sections that could not be computed are absent and explained in errors.
struct AnalysisReport {
    std::uint64_t sample_size = 0;
    std::optional<BlockHistogram> histogram;
    double sigma_t = 0.0;  // binomial prediction at the measured p0
    std::optional<AutocorrResult> autocorr;
    std::vector<SvEstimate> sv_estimates;           // one per conditioning order
    std::vector<double> sv_bounds_block;            // -block_size*log2(1-delta) per estimate
    MinEntropyCurve curve;
    std::vector<TestOutcome> battery;
    std::vector<std::string> errors;

    bool complete() const { return errors.empty(); }
};

/// Run the full characterization; individual section failures are recorded
/// in .errors instead of propagating.
AnalysisReport analyze_stream(const BitStream& bits, const AnalysisParams& params,
                              unsigned workers = 1, bool with_battery = true);

/// report.json plus the four per-figure CSV files (block_histogram.csv,
/// autocorrelation.csv, max_cond_prob.csv, min_entropy.csv) and, when the
/// battery ran, battery.json and battery.csv.
void write_analysis_outputs(const AnalysisReport& report, const std::filesystem::path& dir);

std::string report_to_json_string(const AnalysisReport& report);
std::string battery_to_json_string(const std::vector<TestOutcome>& battery);

}  // namespace qrng
