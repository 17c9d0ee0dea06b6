// SPDX-License-Identifier: Apache-2.0
#include "qrng/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "qrng/extractor.hpp"

namespace qrng {

namespace {

using nlohmann::json;

// frozen self-check identities; see tests/test_extractor.cpp for the
// independently computed golden values
constexpr std::uint64_t kGoldenMatrixSeed = 0x243F6A8885A308D3ULL;
constexpr std::uint64_t kGoldenInputSeed = 0x13198A2E03707344ULL;
constexpr std::uint64_t kGoldenMatrixDigest = 0x35ab9f40cc5cd96cULL;
constexpr std::uint64_t kGoldenExtractDigest = 0xd27c686307749198ULL;
constexpr std::uint64_t kSelftestSeed = 0xA409382229F31D0EULL;

std::uint64_t parse_u64(const std::string& v) {
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
    return x;
}

double parse_double(const std::string& v) {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
    return x;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("not a boolean: " + v);
}

json config_to_json(const PipelineConfig& c) {
    json j;
    j["n_bar"] = c.source.n_bar;
    j["modes_m"] = c.source.modes_m;
    j["noise_sigma"] = c.source.noise_sigma;
    j["filter_beta"] = c.source.filter_beta;
    j["threshold_tau"] = c.source.threshold_tau;
    j["threshold_offset"] = c.source.threshold_offset;
    j["seed"] = c.source.rng_seed;
    j["matrix_seed"] = c.matrix_seed;
    j["rows"] = c.rows;
    j["cols"] = c.cols;
    if (c.matrix_file) j["matrix_file"] = c.matrix_file->string();
    j["sv_delta"] = c.sv_delta;
    j["block_size"] = c.analysis.block_size;
    j["max_lag"] = c.analysis.max_lag;
    j["sv_order_max"] = c.analysis.sv_order_max;
    j["min_history_count"] = c.analysis.min_history_count;
    j["hmin_max_n"] = c.analysis.hmin_max_n;
    j["bits"] = c.bits;
    j["workers"] = c.workers;
    j["out_dir"] = c.out_dir.string();
    j["raw_export"] = c.raw_export;
    return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    f << text;
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

void write_resolved_config(const PipelineConfig& config) {
    write_text(config.out_dir / "resolved.config", config_to_string(config));
}

ExtractionMatrix load_or_build_matrix(const PipelineConfig& config) {
    if (config.matrix_file) return read_matrix(*config.matrix_file);
    return matrix_from_seed(config.matrix_seed, config.rows, config.cols);
}

}  // namespace

void PipelineConfig::validate() const {
    source.validate();
    if (rows < 1 || cols < 1 || rows > cols)
        throw std::invalid_argument("config: need 1 <= rows <= cols");
    if (!(sv_delta >= 0.0 && sv_delta <= 0.5))
        throw std::invalid_argument("config: sv_delta outside [0, 1/2]");
    if (analysis.block_size < 1) throw std::invalid_argument("config: block_size must be >= 1");
    if (analysis.max_lag < 1) throw std::invalid_argument("config: max_lag must be >= 1");
    if (analysis.sv_order_max < 1 || analysis.sv_order_max > 24)
        throw std::invalid_argument("config: sv_order_max must be in [1,24]");
    if (analysis.min_history_count < 1)
        throw std::invalid_argument("config: min_history_count must be >= 1");
    if (analysis.hmin_max_n < 1 || analysis.hmin_max_n > 24)
        throw std::invalid_argument("config: hmin_max_n must be in [1,24]");
    if (bits < 1) throw std::invalid_argument("config: bits must be >= 1");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
}

void apply_config_entry(PipelineConfig& c, const std::string& key, const std::string& value) {
    if (key == "n_bar") c.source.n_bar = parse_double(value);
    else if (key == "modes_m") c.source.modes_m = static_cast<std::uint32_t>(parse_u64(value));
    else if (key == "noise_sigma") c.source.noise_sigma = parse_double(value);
    else if (key == "filter_beta") c.source.filter_beta = parse_double(value);
    else if (key == "threshold_tau") c.source.threshold_tau = parse_double(value);
    else if (key == "threshold_offset") c.source.threshold_offset = parse_double(value);
    else if (key == "seed") c.source.rng_seed = parse_u64(value);
    else if (key == "matrix_seed") c.matrix_seed = parse_u64(value);
    else if (key == "rows") c.rows = static_cast<std::uint32_t>(parse_u64(value));
    else if (key == "cols") c.cols = static_cast<std::uint32_t>(parse_u64(value));
    else if (key == "matrix_file") c.matrix_file = value;
    else if (key == "sv_delta") c.sv_delta = parse_double(value);
    else if (key == "block_size") c.analysis.block_size = static_cast<std::uint32_t>(parse_u64(value));
    else if (key == "max_lag") c.analysis.max_lag = static_cast<std::uint32_t>(parse_u64(value));
    else if (key == "sv_order_max") c.analysis.sv_order_max = static_cast<std::uint32_t>(parse_u64(value));
    else if (key == "min_history_count") c.analysis.min_history_count = parse_u64(value);
    else if (key == "hmin_max_n") c.analysis.hmin_max_n = static_cast<std::uint32_t>(parse_u64(value));
    else if (key == "bits") c.bits = parse_u64(value);
    else if (key == "workers") c.workers = static_cast<unsigned>(parse_u64(value));
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "raw_export") c.raw_export = parse_bool(value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path.string());
    PipelineConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string stripped = strip(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not key=value");
        try {
            apply_config_entry(c, strip(stripped.substr(0, eq)), strip(stripped.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::invalid_argument("config: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

std::string config_to_string(const PipelineConfig& c) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "n_bar=" << c.source.n_bar << '\n';
    out << "modes_m=" << c.source.modes_m << '\n';
    out << "noise_sigma=" << c.source.noise_sigma << '\n';
    out << "filter_beta=" << c.source.filter_beta << '\n';
    out << "threshold_tau=" << c.source.threshold_tau << '\n';
    out << "threshold_offset=" << c.source.threshold_offset << '\n';
    out << "seed=" << c.source.rng_seed << '\n';
    out << "matrix_seed=" << c.matrix_seed << '\n';
    out << "rows=" << c.rows << '\n';
    out << "cols=" << c.cols << '\n';
    if (c.matrix_file) out << "matrix_file=" << c.matrix_file->string() << '\n';
    out << "sv_delta=" << c.sv_delta << '\n';
    out << "block_size=" << c.analysis.block_size << '\n';
    out << "max_lag=" << c.analysis.max_lag << '\n';
    out << "sv_order_max=" << c.analysis.sv_order_max << '\n';
    out << "min_history_count=" << c.analysis.min_history_count << '\n';
    out << "hmin_max_n=" << c.analysis.hmin_max_n << '\n';
    out << "bits=" << c.bits << '\n';
    out << "workers=" << c.workers << '\n';
    out << "out_dir=" << c.out_dir.string() << '\n';
    out << "raw_export=" << (c.raw_export ? "true" : "false") << '\n';
    return out.str();
}

int cmd_generate(const PipelineConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    write_resolved_config(config);

    const BitStream raw = generate_raw_stream(config.source, config.bits);
    const std::uint64_t bytes = write_stream(raw, config.out_dir / "raw.qrbs");
    if (config.raw_export) write_raw(raw, config.out_dir / "raw.bits");

    const double p0 = static_cast<double>(raw.zeros()) / static_cast<double>(raw.size());
    json j;
    j["command"] = "generate";
    j["bits"] = raw.size();
    j["file_bytes"] = bytes;
    j["p0"] = p0;
    j["config"] = config_to_json(config);
    write_text(config.out_dir / "generate.json", j.dump(2) + "\n");

    std::cout << "generate: " << raw.size() << " bits -> " << (config.out_dir / "raw.qrbs").string()
              << " (" << bytes << " bytes), p0 = " << p0 << '\n';
    return kExitOk;
}

int cmd_analyze(const PipelineConfig& config, const std::filesystem::path& input) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    write_resolved_config(config);

    const BitStream bits = read_stream(input);
    const AnalysisReport report = analyze_stream(bits, config.analysis, config.workers);
    write_analysis_outputs(report, config.out_dir);

    if (report.histogram)
        std::cout << "analyze: p0 = " << report.histogram->p0 << ", sigma_m = "
                  << report.histogram->sigma_m << ", sigma_t = " << report.sigma_t << '\n';
    if (report.autocorr && !report.autocorr->coefficients.empty())
        std::cout << "analyze: R(1) = " << report.autocorr->coefficients[0] << '\n';
    for (const auto& e : report.sv_estimates)
        std::cout << "analyze: order " << e.order << " max_cond_prob = " << e.max_cond_prob
                  << ", delta = " << e.delta << '\n';
    for (const auto& err : report.errors) std::cout << "analyze: error: " << err << '\n';
    std::cout << "analyze: report written to " << config.out_dir.string() << '\n';
    return report.complete() ? kExitOk : kExitAnalysisFailure;
}

int cmd_extract(const PipelineConfig& config, const std::filesystem::path& input) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    write_resolved_config(config);

    const ExtractionMatrix matrix = load_or_build_matrix(config);
    const BitStream source = read_stream(input);

    std::uint64_t discarded = 0;
    const auto t0 = std::chrono::steady_clock::now();
    const BitStream out = extract_stream(matrix, source, config.workers, &discarded);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_stream(out, config.out_dir / "extracted.qrbs");
    if (config.raw_export) write_raw(out, config.out_dir / "extracted.bits");

    const std::uint64_t budget = max_extractable(config.sv_delta, matrix.cols);
    const bool within_budget = matrix.rows <= budget;

    json j;
    j["command"] = "extract";
    j["input_bits"] = source.size();
    j["output_bits"] = out.size();
    j["discarded_bits"] = discarded;
    j["seconds"] = seconds;
    j["output_gbps"] = out.size() / seconds / 1e9;
    j["matrix"] = {{"rows", matrix.rows}, {"cols", matrix.cols}, {"seed", matrix.seed}};
    j["budget"] = {{"sv_delta", config.sv_delta},
                   {"max_extractable", budget},
                   {"within_budget", within_budget}};
    j["config"] = config_to_json(config);
    write_text(config.out_dir / "extract.json", j.dump(2) + "\n");

    std::cout << "extract: " << source.size() << " -> " << out.size() << " bits, " << discarded
              << " trailing bits discarded, " << out.size() / seconds / 1e9 << " Gbps\n";
    if (!within_budget)
        std::cout << "extract: warning: rows = " << matrix.rows
                  << " exceeds the extractable budget " << budget << " (delta = "
                  << config.sv_delta << ")\n";
    return kExitOk;
}

int cmd_bench(const PipelineConfig& config, double duration_seconds) {
    if (!(duration_seconds > 0.0)) throw std::invalid_argument("duration must be positive");
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    write_resolved_config(config);

    const ExtractionMatrix matrix = load_or_build_matrix(config);
    json results = json::array();
    for (const unsigned workers : {1u, 2u, 4u, 8u}) {
        const ThroughputSample s = measure_throughput(matrix, duration_seconds, workers);
        std::cout << "bench: workers=" << s.workers << "  in=" << s.input_gbps()
                  << " Gbps  out=" << s.output_gbps() << " Gbps\n";
        results.push_back({{"workers", s.workers},
                           {"seconds", s.seconds},
                           {"input_bits", s.input_bits},
                           {"output_bits", s.output_bits},
                           {"input_gbps", s.input_gbps()},
                           {"output_gbps", s.output_gbps()}});
    }
    json j;
    j["command"] = "bench";
    j["matrix"] = {{"rows", matrix.rows}, {"cols", matrix.cols}, {"seed", matrix.seed}};
    j["results"] = std::move(results);
    write_text(config.out_dir / "bench.json", j.dump(2) + "\n");
    return kExitOk;
}

namespace {

// naive double-loop GF(2) multiply, the oracle the kernels are checked against
BitStream reference_extract(const ExtractionMatrix& m, const BitStream& x) {
    BitStream out;
    for (std::uint32_t r = 0; r < m.rows; ++r) {
        unsigned acc = 0;
        for (std::uint32_t c = 0; c < m.cols; ++c) acc ^= (m.bit(r, c) & x.bit(c)) ? 1u : 0u;
        out.push_back(acc != 0);
    }
    return out;
}

bool check_pmf_normalization() {
    const Moments mm = moments(1000.0, 40);
    const std::uint64_t hi =
        static_cast<std::uint64_t>(mm.mean + 20.0 * std::sqrt(mm.variance));
    double sum = 0.0;
    for (std::uint64_t n = 0; n <= hi; ++n) sum += pmf_multimode(1000.0, n, 40);
    return std::fabs(sum - 1.0) <= 1e-9;
}

bool check_single_mode_reduction() {
    for (const double n_bar : {0.5, 1.0, 1000.0}) {
        for (const std::uint64_t n : {0ULL, 1ULL, 10ULL, 1000ULL}) {
            const double a = pmf_multimode(n_bar, n, 1);
            const double b = pmf_single_mode(n_bar, n);
            if (std::fabs(a - b) > 1e-12 * std::max(a, b)) return false;
        }
    }
    return true;
}

bool check_sampled_moments() {
    SourceParams p;
    p.rng_seed = kSelftestSeed;
    constexpr std::size_t kCount = 200'000;
    const auto counts = sample_photon_counts(p, kCount);
    double sum = 0.0, sum2 = 0.0;
    for (const std::uint64_t c : counts) {
        sum += static_cast<double>(c);
        sum2 += static_cast<double>(c) * static_cast<double>(c);
    }
    const double mean = sum / kCount;
    const double var = sum2 / kCount - mean * mean;
    const Moments mm = moments(p.n_bar, p.modes_m);
    const double mean_sigma = std::sqrt(mm.variance / kCount);
    if (std::fabs(mean - mm.mean) > 6.0 * mean_sigma) return false;
    return std::fabs(var - mm.variance) < 0.1 * mm.variance;
}

bool check_gf2_oracle() {
    SplitMix64 g(kSelftestSeed);
    for (int i = 0; i < 200; ++i) {
        const std::uint32_t cols = 1 + static_cast<std::uint32_t>(g() % 96);
        const std::uint32_t rows = 1 + static_cast<std::uint32_t>(g() % cols);
        const ExtractionMatrix m = matrix_from_seed(g(), rows, cols);
        const BitStream x = random_bitstream(g(), cols);
        if (extract_block(m, x) != reference_extract(m, x)) return false;
    }
    return true;
}

bool check_golden_matrix() {
    const ExtractionMatrix m = matrix_from_seed(kGoldenMatrixSeed, 256, 512);
    return matrix_digest(m) == kGoldenMatrixDigest;
}

bool check_golden_extract() {
    const ExtractionMatrix m = matrix_from_seed(kGoldenMatrixSeed, 256, 512);
    const BitStream input = random_bitstream(kGoldenInputSeed, 1'000'000);
    const BitStream out = extract_stream(m, input, 2);
    return stream_digest(out) == kGoldenExtractDigest;
}

bool check_stream_roundtrip(const std::filesystem::path& dir) {
    SplitMix64 g(kSelftestSeed + 1);
    for (int i = 0; i < 20; ++i) {
        const BitStream s = random_bitstream(g(), g() % 5000);
        const auto path = dir / "roundtrip.qrbs";
        write_stream(s, path);
        if (read_stream(path) != s) return false;
    }
    // chunked writes must be byte-identical to a one-shot write
    const BitStream whole = random_bitstream(kSelftestSeed + 2, 100'003);
    const auto single_path = dir / "single.qrbs";
    const auto chunked_path = dir / "chunked.qrbs";
    write_stream(whole, single_path);
    StreamFileWriter w(chunked_path);
    std::uint64_t pos = 0;
    SplitMix64 g2(kSelftestSeed + 3);
    while (pos < whole.size()) {
        const std::uint64_t len = std::min<std::uint64_t>(1 + g2() % 997, whole.size() - pos);
        BitStream chunk;
        for (std::uint64_t i = 0; i < len; ++i) chunk.push_back(whole.bit(pos + i));
        w.append(chunk);
        pos += len;
    }
    w.finish();
    std::ifstream a(single_path, std::ios::binary), b(chunked_path, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    return !sa.empty() && sa == sb;
}

bool check_pipeline_battery() {
    SourceParams p;
    p.rng_seed = kSelftestSeed + 4;
    const BitStream raw = generate_raw_stream(p, 2'000'000);
    const ExtractionMatrix m = matrix_from_seed(kGoldenMatrixSeed, 256, 512);
    const BitStream extracted = extract_stream(m, raw, 2);
    const auto outcomes = run_battery(extracted, 10'000, 100);
    for (const auto& o : outcomes)
        if (!o.pass) return false;
    return true;
}

}  // namespace

int cmd_selftest(const PipelineConfig& config) {
    // scratch space first; an unwritable environment is a setup error, not
    // a test failure
    std::filesystem::path dir;
    try {
        dir = std::filesystem::temp_directory_path() /
              ("qrng-selftest-" + std::to_string(SplitMix64(std::random_device{}())() & 0xFFFFFF));
        std::filesystem::create_directories(dir);
        write_text(dir / "probe", "ok\n");
    } catch (const std::exception& e) {
        std::cout << "selftest: setup error: " << e.what() << '\n';
        return kExitUsage;
    }

    bool all_ok = true;
    const auto run = [&](const std::string& name, auto&& fn) {
        bool ok = false;
        std::string note;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            note = std::string(" (") + e.what() + ")";
        }
        std::cout << (ok ? "ok   " : "FAIL ") << name << note << '\n';
        all_ok = all_ok && ok;
    };

    run("pmf_normalization", check_pmf_normalization);
    run("single_mode_reduction", check_single_mode_reduction);
    run("sampled_moments", check_sampled_moments);
    run("gf2_oracle", check_gf2_oracle);
    run("golden_matrix", check_golden_matrix);
    run("golden_extract", check_golden_extract);
    run("stream_roundtrip", [&] { return check_stream_roundtrip(dir); });
    run("pipeline_battery", check_pipeline_battery);
    if (config.matrix_file) {
        run("matrix_file", [&] {
            const ExtractionMatrix m = read_matrix(*config.matrix_file);
            if (m.seed == 0) return true;  // externally supplied, nothing to regenerate
            const ExtractionMatrix regen = matrix_from_seed(m.seed, m.rows, m.cols);
            return regen.row_words == m.row_words;
        });
    }

    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    std::cout << (all_ok ? "selftest: all checks passed\n" : "selftest: FAILURES\n");
    return all_ok ? kExitOk : kExitAnalysisFailure;
}

}  // namespace qrng
