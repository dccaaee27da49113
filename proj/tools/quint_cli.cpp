// Benchmark CLI: run estimator sweeps from a config file, fit query-count
// scaling exponents from the emitted CSV, and print a summary table of all
// estimator variants on the built-in integrand set.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "quint/harness.hpp"

namespace {

int write_sidecar_log(const quint::SweepResult& result, const std::string& csv_path) {
    if (result.failures.empty()) return 0;
    const std::string log_path = csv_path + ".errors.log";
    std::ofstream log(log_path, std::ios::binary);
    for (const quint::SweepFailure& f : result.failures) log << f.cell << ": " << f.error << "\n";
    std::cerr << result.failures.size() << " cell(s) failed; see " << log_path << "\n";
    return 2;
}

int run_sweep_command(const std::string& config_path, const std::string& out_override,
                      std::uint64_t seed_base, bool seed_base_set, bool exact) {
    quint::SweepConfig config;
    try {
        config = quint::load_sweep_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    if (!out_override.empty()) config.output_path = out_override;
    if (seed_base_set) config.seed_base = seed_base;
    if (exact) config.exact_readout = true;

    const quint::SweepResult result = quint::run_sweep(config);
    try {
        quint::emit_csv_file(result.records, config.output_path);
    } catch (const std::exception& e) {
        std::cerr << "output error: " << e.what() << "\n";
        return 1;
    }
    std::cout << result.records.size() << " records -> " << config.output_path << "\n";
    return write_sidecar_log(result, config.output_path);
}

int run_fit_command(const std::string& csv_path, const std::string& method) {
    try {
        const auto records = quint::parse_csv_file(csv_path);
        const quint::ScalingFit fit = quint::fit_scaling(records, method);
        std::printf("method %s: slope %.4f  intercept %.4f  r^2 %.4f  (%d accuracy levels)\n",
                    method.c_str(), fit.slope, fit.intercept, fit.r_squared, fit.points);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return 1;
    }
}

struct ChartRow {
    const char* method;
    const char* unitary;
    const char* target;
    const char* readout;
    const char* complexity;
};

// Rows in the order of the six estimator variants, then the plain readout
// primitive and the classical baselines.
constexpr ChartRow kChartRows[] = {
    {"qm_iterated", "W^-1 R W", "|1>|0..0>", "sampling, iterated estimates", "O(1/eps)"},
    {"qm_fft", "W^-1 R W", "|1>|0..0>", "FFT", "O(1/eps)"},
    {"qc_sampling", "W", "b(x) = 1", "sampling", "O(1/eps^2)"},
    {"qc_fft", "W", "b(x) = 1", "FFT", "O(1/eps)"},
    {"sqrt_sampling", "R^ W", "ancilla |1>", "sampling", "O(1/eps^2)"},
    {"sqrt_fft", "R^ W", "ancilla |1>", "FFT", "O(1/eps)"},
    {"qm_sampling", "W^-1 R W", "|1>|0..0>", "sampling, single pass", "O(1/eps^2)"},
    {"classical_mc", "-", "-", "random samples", "O(1/eps^2)"},
    {"classical_exact", "-", "-", "exhaustive sweep", "O(M^d)"},
};

int run_demo_command(double eps, bool exact, std::uint64_t seed_base, const std::string& out_path) {
    quint::SweepConfig config;
    config.integrands = quint::builtin_sweep_set();
    for (const ChartRow& row : kChartRows) {
        std::string spec{row.method};
        if (spec == "qc_sampling" || spec == "qc_fft") spec += "(Q=64)";
        config.estimators.push_back(quint::parse_estimator_entry(spec));
    }
    config.epsilons = {eps};
    config.seeds = {1, 2, 3};
    config.exact_readout = exact;
    config.seed_base = seed_base;

    const quint::SweepResult result = quint::run_sweep(config);
    if (!out_path.empty()) quint::emit_csv_file(result.records, out_path);

    std::map<std::string, std::vector<double>> errors, queries;
    for (const quint::SweepRecord& r : result.records) {
        errors[r.method].push_back(r.abs_error);
        queries[r.method].push_back(static_cast<double>(r.oracle_queries));
    }
    std::printf("built-in integrand set (%zu members), eps = %g, %s readout\n\n",
                config.integrands.size(), eps, exact ? "exact" : "sampled");
    std::printf("%-16s %-10s %-12s %-29s %-11s %12s %14s\n", "method", "U", "target", "readout", "scaling",
                "median |err|", "median queries");
    for (const ChartRow& row : kChartRows) {
        const auto it = errors.find(row.method);
        if (it == errors.end()) continue;
        const double med_err = quint::detail::median(it->second);
        const double med_q = quint::detail::median(queries[row.method]);
        std::printf("%-16s %-10s %-12s %-29s %-11s %12.3e %14.0f\n", row.method, row.unitary, row.target,
                    row.readout, row.complexity, med_err, med_q);
    }
    for (const quint::SweepFailure& f : result.failures)
        std::cerr << "failed: " << f.cell << ": " << f.error << "\n";
    return result.failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum mean-estimation and counting benchmark"};
    app.require_subcommand(1);

    std::string config_path, out_override, csv_path, method, demo_out;
    std::uint64_t seed_base = 0;
    bool exact = false;
    double demo_eps = 0.015625;

    CLI::App* sweep = app.add_subcommand("sweep", "run an estimator sweep from a config file");
    sweep->add_option("config", config_path, "config file")->required();
    sweep->add_option("--out", out_override, "override the CSV output path");
    CLI::Option* seed_opt = sweep->add_option("--seed-base", seed_base, "base value mixed into cell seeds");
    sweep->add_flag("--exact", exact, "exact probability readout instead of sampling");

    CLI::App* fit = app.add_subcommand("fit", "fit the query-scaling exponent of one method from a sweep CSV");
    fit->add_option("csv", csv_path, "CSV produced by sweep")->required();
    fit->add_option("--method", method, "estimator tag to fit")->required();

    CLI::App* demo = app.add_subcommand("demo", "run the built-in integrand set and print a summary table");
    demo->add_option("--eps", demo_eps, "target accuracy");
    demo->add_flag("--exact", exact, "exact probability readout instead of sampling");
    demo->add_option("--seed-base", seed_base, "base value mixed into cell seeds");
    demo->add_option("--out", demo_out, "also write the demo records as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sweep->parsed())
            return run_sweep_command(config_path, out_override, seed_base, seed_opt->count() > 0, exact);
        if (fit->parsed()) return run_fit_command(csv_path, method);
        if (demo->parsed()) return run_demo_command(demo_eps, exact, seed_base, demo_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
