// SPDX-License-Identifier: Apache-2.0
#include "qrng/report.hpp"

#include <fstream>

#include <json.hpp>

namespace qrng {

namespace {

using nlohmann::json;

json histogram_to_json(const BlockHistogram& h, double sigma_t) {
    json counts = json::array();
    for (std::uint32_t k = 0; k < h.counts.size(); ++k)
        if (h.counts[k] > 0) counts.push_back({k, h.counts[k]});
    return {{"block_size", h.block_size}, {"total_blocks", h.total_blocks},
            {"p0", h.p0},                 {"sigma_m", h.sigma_m},
            {"sigma_t", sigma_t},         {"counts", std::move(counts)}};
}

json sv_to_json(const SvEstimate& e, double bound) {
    return {{"order", e.order},
            {"max_cond_prob", e.max_cond_prob},
            {"delta", e.delta},
            {"min_history_count", e.min_history_count},
            {"sample_size", e.sample_size},
            {"excluded_histories", e.excluded_histories},
            {"min_entropy_bound_block", bound}};
}

json outcome_to_json(const TestOutcome& o) {
    json j = {{"test_name", o.test_name}, {"p_value", o.p_value}, {"pass", o.pass}};
    if (!o.sub_p_values.empty()) j["sub_p_values"] = o.sub_p_values;
    return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    return f;
}

}  // namespace

AnalysisReport analyze_stream(const BitStream& bits, const AnalysisParams& params,
                              unsigned workers, bool with_battery) {
    AnalysisReport report;
    report.sample_size = bits.size();

    try {
        report.histogram = zero_block_histogram(bits, params.block_size);
        report.sigma_t = binomial_sigma(params.block_size, report.histogram->p0);
    } catch (const std::exception& e) {
        report.errors.emplace_back(std::string("block_histogram: ") + e.what());
    }

    try {
        report.autocorr = autocorrelation(bits, params.max_lag, workers);
    } catch (const std::exception& e) {
        report.errors.emplace_back(std::string("autocorrelation: ") + e.what());
    }

    for (std::uint32_t order = 1; order <= params.sv_order_max; ++order) {
        try {
            const SvEstimate e = max_conditional_probability(bits, order, params.min_history_count);
            report.sv_bounds_block.push_back(sv_min_entropy_bound(e.delta, params.block_size));
            report.sv_estimates.push_back(e);
        } catch (const std::exception& e) {
            report.errors.emplace_back("max_conditional_probability(order " +
                                       std::to_string(order) + "): " + e.what());
            break;  // higher orders only get thinner statistics
        }
    }

    try {
        const std::uint32_t n_max =
            static_cast<std::uint32_t>(std::min<std::uint64_t>(params.hmin_max_n, bits.size()));
        report.curve = min_entropy_curve(bits, n_max);
    } catch (const std::exception& e) {
        report.errors.emplace_back(std::string("min_entropy_curve: ") + e.what());
    }

    if (with_battery) {
        try {
            report.battery = run_battery(bits);
        } catch (const std::exception& e) {
            report.errors.emplace_back(std::string("battery: ") + e.what());
        }
    }
    return report;
}

std::string report_to_json_string(const AnalysisReport& report) {
    json j;
    j["sample_size"] = report.sample_size;
    if (report.histogram) j["block_histogram"] = histogram_to_json(*report.histogram, report.sigma_t);
    if (report.autocorr) {
        j["autocorrelation"] = {{"max_lag", report.autocorr->max_lag},
                                {"sample_size", report.autocorr->sample_size},
                                {"finite_size_sigma", report.autocorr->finite_size_sigma},
                                {"coefficients", report.autocorr->coefficients}};
    }
    json sv = json::array();
    for (std::size_t i = 0; i < report.sv_estimates.size(); ++i)
        sv.push_back(sv_to_json(report.sv_estimates[i], report.sv_bounds_block[i]));
    j["sv_estimates"] = std::move(sv);
    json curve = json::array();
    for (const auto& pt : report.curve.points)
        curve.push_back({{"n", pt.n}, {"h_min", pt.h_min}, {"low_confidence", pt.low_confidence}});
    j["min_entropy_curve"] = std::move(curve);
    if (!report.battery.empty()) {
        json battery = json::array();
        for (const auto& o : report.battery) battery.push_back(outcome_to_json(o));
        j["battery"] = std::move(battery);
    }
    j["errors"] = report.errors;
    return j.dump(2);
}

std::string battery_to_json_string(const std::vector<TestOutcome>& battery) {
    json arr = json::array();
    for (const auto& o : battery) arr.push_back(outcome_to_json(o));
    return arr.dump(2);
}

void write_analysis_outputs(const AnalysisReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    open_out(dir / "report.json") << report_to_json_string(report) << '\n';

    if (report.histogram) {
        auto f = open_out(dir / "block_histogram.csv");
        f << "k,count,predicted\n";
        const auto& h = *report.histogram;
        for (std::uint32_t k = 0; k < h.counts.size(); ++k) {
            const double predicted =
                static_cast<double>(h.total_blocks) * binomial_pmf(h.block_size, k, h.p0);
            if (h.counts[k] > 0 || predicted >= 1e-3)
                f << k << ',' << h.counts[k] << ',' << predicted << '\n';
        }
    }
    if (report.autocorr) {
        auto f = open_out(dir / "autocorrelation.csv");
        f << "lag,r,finite_size_sigma\n";
        for (std::uint32_t lag = 1; lag <= report.autocorr->max_lag; ++lag)
            f << lag << ',' << report.autocorr->coefficients[lag - 1] << ','
              << report.autocorr->finite_size_sigma << '\n';
    }
    {
        auto f = open_out(dir / "max_cond_prob.csv");
        f << "order,max_cond_prob,delta,excluded_histories\n";
        for (const auto& e : report.sv_estimates)
            f << e.order << ',' << e.max_cond_prob << ',' << e.delta << ','
              << e.excluded_histories << '\n';
    }
    {
        auto f = open_out(dir / "min_entropy.csv");
        f << "n,h_min,low_confidence\n";
        for (const auto& pt : report.curve.points)
            f << pt.n << ',' << pt.h_min << ',' << (pt.low_confidence ? 1 : 0) << '\n';
    }
    if (!report.battery.empty()) {
        open_out(dir / "battery.json") << battery_to_json_string(report.battery) << '\n';
        auto f = open_out(dir / "battery.csv");
        f << "test_name,p_value\n";
        for (const auto& o : report.battery) f << o.test_name << ',' << o.p_value << '\n';
    }
}

}  // namespace qrng
