// SPDX-License-Identifier: Apache-2.0
//
// Operator-facing front end: generate raw streams, characterize them,
// run the extractor, benchmark it, or self-check the build.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qrng/pipeline.hpp"

namespace {

struct FlagOverrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> bits;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> matrix;
    std::optional<std::uint32_t> rows;
    std::optional<std::uint32_t> cols;
    std::optional<unsigned> workers;
    std::optional<std::string> out_dir;
    bool raw_export = false;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& flags) {
    cmd->add_option("--config", flags.config_path, "key=value config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--bits", flags.bits, "run length in bits");
    cmd->add_option("--seed", flags.seed, "source RNG seed");
    cmd->add_option("--matrix", flags.matrix, "extraction matrix file (QRXMAT01)");
    cmd->add_option("--rows", flags.rows, "extractor output bits per cycle");
    cmd->add_option("--cols", flags.cols, "extractor input bits per cycle");
    cmd->add_option("--workers", flags.workers, "parallel workers");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_flag("--raw-export", flags.raw_export, "also write headerless .bits payloads");
}

qrng::PipelineConfig resolve_config(const FlagOverrides& flags) {
    qrng::PipelineConfig config =
        flags.config_path ? qrng::load_config_file(*flags.config_path) : qrng::PipelineConfig{};
    if (flags.bits) config.bits = *flags.bits;
    if (flags.seed) config.source.rng_seed = *flags.seed;
    if (flags.matrix) config.matrix_file = *flags.matrix;
    if (flags.rows) config.rows = *flags.rows;
    if (flags.cols) config.cols = *flags.cols;
    if (flags.workers) config.workers = *flags.workers;
    if (flags.out_dir) config.out_dir = *flags.out_dir;
    if (flags.raw_export) config.raw_export = true;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"amplified-spontaneous-emission RNG twin: simulate, analyze, extract"};
    app.require_subcommand(1);

    FlagOverrides flags;
    std::string input_path;
    double bench_duration = 2.0;

    CLI::App* generate = app.add_subcommand("generate", "simulate a raw bitstream");
    add_common_flags(generate, flags);

    CLI::App* analyze = app.add_subcommand("analyze", "characterize a bitstream file");
    analyze->add_option("input", input_path, "QRBS0001 stream file")
        ->required()
        ->check(CLI::ExistingFile);
    add_common_flags(analyze, flags);

    CLI::App* extract = app.add_subcommand("extract", "run the randomness extractor");
    extract->add_option("input", input_path, "QRBS0001 stream file")
        ->required()
        ->check(CLI::ExistingFile);
    add_common_flags(extract, flags);

    CLI::App* bench = app.add_subcommand("bench", "measure extractor throughput");
    bench->add_option("duration", bench_duration, "seconds per worker count (default 2)");
    add_common_flags(bench, flags);

    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in property suite");
    add_common_flags(selftest, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qrng::kExitUsage;
    }

    try {
        const qrng::PipelineConfig config = resolve_config(flags);
        if (generate->parsed()) return qrng::cmd_generate(config);
        if (analyze->parsed()) return qrng::cmd_analyze(config, input_path);
        if (extract->parsed()) return qrng::cmd_extract(config, input_path);
        if (bench->parsed()) return qrng::cmd_bench(config, bench_duration);
        if (selftest->parsed()) return qrng::cmd_selftest(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return qrng::kExitUsage;
    }
    return qrng::kExitUsage;
}
