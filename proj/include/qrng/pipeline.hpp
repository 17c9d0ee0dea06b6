// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "qrng/report.hpp"
#include "qrng/source_sim.hpp"

namespace qrng {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitAnalysisFailure = 1;  // checks failed / partial report
inline constexpr int kExitUsage = 2;            // bad config, flags or inputs

// One flat bag of knobs for the whole pipeline; loaded from key=value
// config files with command-line overrides, and written back fully
// resolved next to every run's outputs.
struct PipelineConfig {
    SourceParams source;

    std::uint64_t matrix_seed = 0x243F6A8885A308D3ULL;
    std::uint32_t rows = 256;
    std::uint32_t cols = 512;
    std::optional<std::filesystem::path> matrix_file;  // overrides matrix_seed
    double sv_delta = 0.4114;  // conditional-probability bound for budget advisories

    AnalysisParams analysis;

    std::uint64_t bits = 1'000'000;
    unsigned workers = 1;
    std::filesystem::path out_dir = "qrng-out";
    bool raw_export = false;

    void validate() const;
};

/// Parse a key=value config file ('#' starts a comment). Unknown keys are
/// rejected.
PipelineConfig load_config_file(const std::filesystem::path& path);

/// Apply one key=value override; throws std::invalid_argument on unknown
/// keys or unparseable values.
void apply_config_entry(PipelineConfig& config, const std::string& key, const std::string& value);

/// Render the fully resolved key=value form.
std::string config_to_string(const PipelineConfig& config);

// Subcommand bodies. Each prints human-readable progress to stdout and
// returns one of the exit codes above; unexpected usage errors are thrown.
int cmd_generate(const PipelineConfig& config);
int cmd_analyze(const PipelineConfig& config, const std::filesystem::path& input);
int cmd_extract(const PipelineConfig& config, const std::filesystem::path& input);
int cmd_bench(const PipelineConfig& config, double duration_seconds);
int cmd_selftest(const PipelineConfig& config);

}  // namespace qrng
