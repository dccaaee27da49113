#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "quint/estimators.hpp"
#include "quint/oracle.hpp"
#include "quint/registry.hpp"
#include "quint/rng.hpp"

namespace quint {

struct EstimatorEntry {
    std::string text;  // canonical spec, e.g. "qc_fft(Q=64;reps=5)"
    EstimatorSpec spec;
};

// Estimator vocabulary: qm_sampling, qm_iterated(delta), qm_fft(A,reps),
// qc_sampling(Q), qc_fft(Q,A,reps), sqrt_sampling, sqrt_fft(A,reps),
// classical_mc(n), classical_exact.
inline EstimatorEntry parse_estimator_entry(const std::string& text) {
    const CallableSpec spec = parse_callable_spec(text);
    EstimatorEntry entry;
    entry.text = detail::canonical_name(text);
    if (!spec.headline.empty()) throw std::invalid_argument("estimator '" + text + "' takes no headline value");

    struct TagInfo {
        Method method;
        const char* allowed_keys;  // the vocabulary each tag accepts
    };
    static const std::map<std::string, TagInfo> kMethods = {
        {"qm_sampling", {Method::kQmSampling, ""}},
        {"qm_iterated", {Method::kQmIterated, "delta"}},
        {"qm_fft", {Method::kQmGroverFft, "A reps"}},
        {"qc_sampling", {Method::kQcSampling, "Q"}},
        {"qc_fft", {Method::kQcFft, "Q A reps"}},
        {"sqrt_sampling", {Method::kSqrtSampling, ""}},
        {"sqrt_fft", {Method::kSqrtFft, "A reps"}},
        {"classical_mc", {Method::kClassicalMc, "n"}},
        {"classical_exact", {Method::kClassicalExact, ""}},
    };
    const auto it = kMethods.find(spec.name);
    if (it == kMethods.end()) throw std::invalid_argument("unknown estimator tag '" + spec.name + "'");
    entry.spec.method = it->second.method;

    const std::string allowed = it->second.allowed_keys;
    for (const auto& [key, value] : spec.params) {
        if (allowed.find(key) == std::string::npos)
            throw std::invalid_argument("estimator '" + spec.name + "' does not take parameter '" + key + "'");
        if (key == "delta") {
            entry.spec.delta = detail::parse_double(value, "delta");
        } else if (key == "A") {
            entry.spec.counting.fft_size = detail::parse_uint(value, "A");
        } else if (key == "reps") {
            entry.spec.counting.repetitions = static_cast<int>(detail::parse_uint(value, "reps"));
        } else if (key == "Q") {
            entry.spec.boolean_resolution = detail::parse_uint(value, "Q");
        } else if (key == "n") {
            entry.spec.mc_samples = detail::parse_uint(value, "n");
        }
    }
    return entry;
}

struct SweepConfig {
    std::vector<std::string> integrands;
    std::vector<EstimatorEntry> estimators;
    std::vector<double> epsilons;
    std::vector<std::uint64_t> seeds;
    std::string output_path = "sweep.csv";
    bool exact_readout = false;
    std::uint64_t seed_base = 0;
    bool record_timing = false;
};

namespace detail {

inline std::vector<std::string> split_top_level(const std::string& text) {
    std::vector<std::string> out;
    int depth = 0;
    std::string current;
    for (char c : text) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            const std::string item = strip(current);
            if (!item.empty()) out.push_back(item);
            current.clear();
        } else {
            current += c;
        }
    }
    const std::string item = strip(current);
    if (!item.empty()) out.push_back(item);
    return out;
}

// Accepts plain decimals and the shorthand 2^-k.
inline double parse_accuracy(const std::string& text) {
    const std::string t = strip(text);
    if (t.rfind("2^", 0) == 0) {
        const double e = parse_double(t.substr(2), "accuracy exponent");
        return std::pow(2.0, e);
    }
    return parse_double(t, "accuracy");
}

inline bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw std::invalid_argument("cannot parse " + what + " from '" + text + "'");
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace detail

// Flat key=value format with [section] headers; lists are comma-separated and
// '#' starts a comment. Sections: [integrand] (key: spec) and [sweep] (keys:
// estimators, eps, seeds, out, exact_readout, seed_base, record_timing).
inline SweepConfig parse_sweep_config(std::istream& in) {
    SweepConfig config;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw std::invalid_argument("config line " + std::to_string(line_no) +
                                                                ": unterminated section header");
            section = detail::strip(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::strip(line.substr(0, eq));
        const std::string value = detail::strip(line.substr(eq + 1));

        if (section == "integrand") {
            if (key == "spec") {
                for (const std::string& item : detail::split_top_level(value)) config.integrands.push_back(item);
            } else {
                throw std::invalid_argument("config: unknown key '" + key + "' in [integrand]");
            }
        } else if (section == "sweep") {
            if (key == "estimators") {
                for (const std::string& item : detail::split_top_level(value))
                    config.estimators.push_back(parse_estimator_entry(item));
            } else if (key == "eps") {
                for (const std::string& item : detail::split_top_level(value)) {
                    const double eps = detail::parse_accuracy(item);
                    if (!(eps > 0.0 && eps < 0.5))
                        throw std::invalid_argument("config: accuracy " + item + " outside (0, 1/2)");
                    config.epsilons.push_back(eps);
                }
            } else if (key == "seeds") {
                for (const std::string& item : detail::split_top_level(value))
                    config.seeds.push_back(detail::parse_uint(item, "seed"));
            } else if (key == "out") {
                config.output_path = value;
            } else if (key == "exact_readout") {
                config.exact_readout = detail::parse_bool(value, "exact_readout");
            } else if (key == "seed_base") {
                config.seed_base = detail::parse_uint(value, "seed_base");
            } else if (key == "record_timing") {
                config.record_timing = detail::parse_bool(value, "record_timing");
            } else {
                throw std::invalid_argument("config: unknown key '" + key + "' in [sweep]");
            }
        } else {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": key outside a known section");
        }
    }
    if (config.seeds.empty()) config.seeds.push_back(1);
    return config;
}

inline SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    return parse_sweep_config(in);
}

struct SweepRecord {
    std::string method;
    std::string integrand;
    int dimensions = 0;
    std::uint64_t grid_points = 0;  // M
    double eps_target = 0.0;
    double value = 0.0;
    double true_value = 0.0;
    double abs_error = 0.0;
    std::uint64_t oracle_queries = 0;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    double wall_time_ms = 0.0;
};

struct SweepFailure {
    std::string cell;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<SweepFailure> failures;
};

// One record per (integrand, estimator, accuracy, seed). A failing cell is
// recorded in `failures` and never aborts the sweep. Deterministic for a
// given config: cell seeds mix the seed base with the cell coordinates, and
// records are sorted before return.
inline SweepResult run_sweep(const SweepConfig& config) {
    SweepResult result;
    for (const std::string& integrand_text : config.integrands) {
        NamedIntegrand integrand;
        double true_value = 0.0;
        try {
            integrand = make_named_integrand(integrand_text);
            true_value = true_mean(integrand.oracle);
        } catch (const std::exception& e) {
            result.failures.push_back({integrand_text, e.what()});
            continue;
        }
        for (const EstimatorEntry& entry : config.estimators) {
            for (double eps : config.epsilons) {
                for (std::uint64_t seed : config.seeds) {
                    const std::string cell = entry.text + "|" + integrand.name + "|" +
                                             detail::format_double(eps) + "|" + std::to_string(seed);
                    const std::uint64_t cell_seed =
                        splitmix64(splitmix64(config.seed_base ^ fnv1a64(cell)) + seed);
                    EstimatorOptions opts;
                    opts.exact_readout = config.exact_readout;
                    try {
                        const auto start = std::chrono::steady_clock::now();
                        const Estimate est = run_estimator(integrand.oracle, eps, entry.spec, cell_seed, opts);
                        const auto stop = std::chrono::steady_clock::now();
                        SweepRecord rec;
                        rec.method = method_name(est.method);
                        rec.integrand = integrand.name;
                        rec.dimensions = integrand.oracle.domain().dimensions;
                        rec.grid_points = integrand.oracle.domain().points_per_axis;
                        rec.eps_target = eps;
                        rec.value = est.value;
                        rec.true_value = true_value;
                        rec.abs_error = std::abs(est.value - true_value);
                        rec.oracle_queries = est.oracle_queries;
                        rec.shots = est.shots;
                        rec.seed = seed;
                        rec.wall_time_ms =
                            config.record_timing
                                ? std::chrono::duration<double, std::milli>(stop - start).count()
                                : 0.0;
                        result.records.push_back(rec);
                    } catch (const std::exception& e) {
                        result.failures.push_back({cell, e.what()});
                    }
                }
            }
        }
    }
    std::sort(result.records.begin(), result.records.end(), [](const SweepRecord& a, const SweepRecord& b) {
        return std::tie(a.method, a.integrand, a.eps_target, a.seed) <
               std::tie(b.method, b.integrand, b.eps_target, b.seed);
    });
    return result;
}

inline constexpr const char* kCsvHeader =
    "method,integrand,d,M,eps_target,value,true_value,abs_error,oracle_queries,shots,seed,wall_time_ms";

inline void emit_csv(const std::vector<SweepRecord>& records, std::ostream& out) {
    out << kCsvHeader << "\n";
    for (const SweepRecord& r : records) {
        out << r.method << ',' << r.integrand << ',' << r.dimensions << ',' << r.grid_points << ','
            << detail::format_double(r.eps_target) << ',' << detail::format_double(r.value) << ','
            << detail::format_double(r.true_value) << ',' << detail::format_double(r.abs_error) << ','
            << r.oracle_queries << ',' << r.shots << ',' << r.seed << ','
            << detail::format_double(r.wall_time_ms) << "\n";
    }
}

inline void emit_csv_file(const std::vector<SweepRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    emit_csv(records, out);
    if (!out) throw std::runtime_error("write failure on '" + path + "'");
}

inline std::vector<SweepRecord> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("CSV: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw std::invalid_argument("CSV: unexpected header '" + line + "'");
    std::vector<SweepRecord> records;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 12) throw std::invalid_argument("CSV: malformed row '" + line + "'");
        SweepRecord r;
        r.method = fields[0];
        r.integrand = fields[1];
        r.dimensions = static_cast<int>(detail::parse_uint(fields[2], "d"));
        r.grid_points = detail::parse_uint(fields[3], "M");
        r.eps_target = detail::parse_double(fields[4], "eps_target");
        r.value = detail::parse_double(fields[5], "value");
        r.true_value = detail::parse_double(fields[6], "true_value");
        r.abs_error = detail::parse_double(fields[7], "abs_error");
        r.oracle_queries = detail::parse_uint(fields[8], "oracle_queries");
        r.shots = detail::parse_uint(fields[9], "shots");
        r.seed = detail::parse_uint(fields[10], "seed");
        r.wall_time_ms = detail::parse_double(fields[11], "wall_time_ms");
        records.push_back(r);
    }
    return records;
}

inline std::vector<SweepRecord> parse_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open CSV file '" + path + "'");
    return parse_csv(in);
}

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

// Least-squares fit of log2(queries) against log2(1 / achieved error) for one
// method tag. Records are grouped per target accuracy; queries and errors are
// aggregated by median within each group before fitting, which isolates the
// bounded-error success case from the failure tail.
inline ScalingFit fit_scaling(const std::vector<SweepRecord>& records, const std::string& method_tag) {
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;  // eps -> (errors, queries)
    for (const SweepRecord& r : records) {
        if (r.method != method_tag) continue;
        groups[r.eps_target].first.push_back(r.abs_error);
        groups[r.eps_target].second.push_back(static_cast<double>(r.oracle_queries));
    }
    if (groups.size() < 4)
        throw std::invalid_argument("fit_scaling: need records at >= 4 distinct accuracies for '" + method_tag +
                                    "', have " + std::to_string(groups.size()));
    std::vector<double> xs, ys;
    for (auto& [eps, data] : groups) {
        const double med_err = std::max(detail::median(data.first), 1e-15);
        const double med_queries = std::max(detail::median(data.second), 1.0);
        xs.push_back(std::log2(1.0 / med_err));
        ys.push_back(std::log2(med_queries));
    }
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_scaling: degenerate abscissa for '" + method_tag + "'");
    ScalingFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    fit.points = static_cast<int>(n);
    return fit;
}

}  // namespace quint
