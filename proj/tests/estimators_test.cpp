#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "quint/estimators.hpp"
#include "quint/registry.hpp"

using namespace quint;

namespace {

IntegrandOracle ramp_oracle_m4() {
    return make_grid_oracle([](const std::vector<double>& x) { return x[0]; }, GridDomain{1, 4});
}

IntegrandOracle constant_oracle(double c) {
    return make_grid_oracle([c](const std::vector<double>&) { return c; }, GridDomain{1, 4});
}

EstimatorOptions exact_mode() {
    EstimatorOptions opts;
    opts.exact_readout = true;
    return opts;
}

// Error budget of the Fourier readout of sin(theta): one bin of slack on the
// folded peak plus the second-order term.
double fft_budget_sin(double fft_size) {
    return std::numbers::pi / fft_size + std::pow(std::numbers::pi / fft_size, 2);
}

// Same for a sin^2 readout of the value s.
double fft_budget_sin2(double s, double fft_size) {
    return 2.0 * std::sqrt(s * (1.0 - s)) * std::numbers::pi / fft_size +
           std::pow(std::numbers::pi / fft_size, 2);
}

}  // namespace

TEST_CASE("invert_amplification inverts the rotation law on the monotone branch") {
    CHECK(invert_amplification(0.0, 0) == 0.0);
    CHECK(invert_amplification(0.0, 7) == 0.0);
    CHECK(invert_amplification(0.49, 0) == doctest::Approx(0.7));
    CHECK(invert_amplification(1.0, 1) == doctest::Approx(0.5));  // (2n+1) theta = pi/2
    for (std::uint64_t n : {0ull, 1ull, 3ull, 9ull}) {
        for (double d : {0.01, 0.05, 0.08}) {
            // stays on the monotone branch: (2n+1) asin(d) <= 19 * asin(0.08) < pi/2
            const double p = std::pow(std::sin((2.0 * n + 1.0) * std::asin(d)), 2);
            CHECK(invert_amplification(p, n) == doctest::Approx(d).epsilon(1e-12));
        }
    }
    bool clamped = false;
    CHECK(invert_amplification(1.5, 0, &clamped) == doctest::Approx(1.0));
    CHECK(clamped);
    invert_amplification(0.5, 0, &clamped);
    CHECK_FALSE(clamped);
}

TEST_CASE("qm_sampling endpoints are exact and the exact readout returns the mean") {
    CHECK(estimate_mean_sampling(constant_oracle(0.0), 0.1, 1).value == 0.0);
    CHECK(estimate_mean_sampling(constant_oracle(1.0), 0.1, 1).value == 1.0);
    const Estimate exact = estimate_mean_sampling(ramp_oracle_m4(), 0.1, 1, exact_mode());
    CHECK(std::abs(exact.value - 0.375) < 1e-10);
}

TEST_CASE("qm_sampling meets its bounded-error contract on the ramp") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Estimate est = estimate_mean_sampling(ramp_oracle_m4(), 0.05, seed);
        if (std::abs(est.value - 0.375) <= 0.05) ++hits;
    }
    CHECK(hits >= 67);
}

TEST_CASE("qm_sampling accounts one preparation per shot") {
    IntegrandOracle oracle = ramp_oracle_m4();
    const Estimate est = estimate_mean_sampling(oracle, 0.25, 3);
    CHECK(est.shots == 256);  // ceil(16 / 0.25^2)
    CHECK(est.oracle_queries == 256 * 4);
    CHECK(est.oracle_queries == oracle.queries());
}

TEST_CASE("iterated estimator is exact in exact-readout mode") {
    for (double s : {0.05, 0.375, 0.9, 1.0}) {
        IntegrandOracle oracle = constant_oracle(s);
        EstimatorOptions opts = exact_mode();
        opts.true_value_hint = s;  // enables the monotone-branch assertion
        const IteratedResult res =
            estimate_mean_grover_iterated_detailed(oracle, 1.0 / 256.0, 0.25, 1, opts);
        CHECK(std::abs(res.estimate.value - s) < 1e-9);
        CHECK(res.rounds.size() == 4);
        // geometric bracket: the composite sits delta^k/2 under the truth
        for (const IterationState& round : res.rounds) {
            const double bracket = 0.5 * std::pow(0.25, round.round_index);
            CHECK(std::abs(s - round.composite - bracket) < 1e-9);
        }
    }
}

TEST_CASE("iterated estimator amplification schedule and query accounting") {
    IntegrandOracle oracle = ramp_oracle_m4();
    const IteratedResult res =
        estimate_mean_grover_iterated_detailed(oracle, 1.0 / 256.0, 0.25, 1, exact_mode());
    REQUIRE(res.rounds.size() == 4);
    CHECK(res.rounds[0].amp_iterations == 0);
    CHECK(res.rounds[1].amp_iterations == 1);
    CHECK(res.rounds[2].amp_iterations == 4);
    CHECK(res.rounds[3].amp_iterations == 16);
    std::uint64_t expected = 0;
    for (const IterationState& round : res.rounds)
        expected += round.shots_per_round * (2 * round.amp_iterations + 1) * 4;
    CHECK(res.estimate.oracle_queries == expected);
    CHECK(res.estimate.shots == 4 * 256);
}

TEST_CASE("iterated estimator converges at delta = 1/4 on the ramp with sampling") {
    int hits = 0;
    const double eps = 1.0 / 256.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Estimate est = estimate_mean_grover_iterated(ramp_oracle_m4(), eps, 0.25, seed);
        if (std::abs(est.value - 0.375) <= eps) ++hits;
    }
    CHECK(hits >= 14);  // 2/3 contract with a small-sample margin
}

TEST_CASE("iterated estimator is exact across the delta range in exact mode") {
    for (double delta : {0.125, 0.25, 0.5}) {
        const Estimate est =
            estimate_mean_grover_iterated(ramp_oracle_m4(), 1.0 / 512.0, delta, 1, exact_mode());
        CHECK(std::abs(est.value - 0.375) < 1e-9);
    }
}

TEST_CASE("iterated estimator validates delta") {
    CHECK_THROWS_AS(estimate_mean_grover_iterated(ramp_oracle_m4(), 0.01, 0.6, 1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_mean_grover_iterated(ramp_oracle_m4(), 0.01, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_mean_grover_iterated(ramp_oracle_m4(), 0.7, 0.25, 1), std::invalid_argument);
}

TEST_CASE("qm_fft reads the mean off the rotation frequency") {
    SUBCASE("zero integrand peaks at zero") {
        CountingConfig config{256, 1};
        const Estimate est = estimate_mean_grover_fft(constant_oracle(0.0), 0.05, config, 1, exact_mode());
        CHECK(est.value == 0.0);
    }
    SUBCASE("ramp at A = 256 lands within the one-bin budget") {
        CountingConfig config{256, 5};
        const Estimate est = estimate_mean_grover_fft(ramp_oracle_m4(), 0.05, config, 1, exact_mode());
        CHECK(std::abs(est.value - 0.375) <= fft_budget_sin(256));
    }
    SUBCASE("doubling A keeps every built-in member within a halving budget") {
        for (std::uint64_t fft_size : {64ull, 128ull, 256ull}) {
            for (const std::string& name : builtin_sweep_set()) {
                NamedIntegrand ni = make_named_integrand(name);
                const double s = reference_mean(ni.oracle);
                CountingConfig config{fft_size, 1};
                const Estimate est = estimate_mean_grover_fft(ni.oracle, 0.05, config, 1, exact_mode());
                CHECK(std::abs(est.value - s) <= fft_budget_sin(static_cast<double>(fft_size)));
            }
        }
    }
    SUBCASE("query accounting: reps * (A-1) * 2 * M^d") {
        IntegrandOracle oracle = ramp_oracle_m4();
        CountingConfig config{16, 5};
        const Estimate est = estimate_mean_grover_fft(oracle, 0.25, config, 1);
        CHECK(est.oracle_queries == 5ull * 15ull * 2ull * 4ull);
    }
    SUBCASE("auto fft size honours the pi/eps floor") {
        const Estimate est = estimate_mean_grover_fft(ramp_oracle_m4(), 1.0 / 64.0, CountingConfig{}, 1, exact_mode());
        // A = next power of two >= pi * 64 -> 256; budget follows
        CHECK(std::abs(est.value - 0.375) <= fft_budget_sin(256));
    }
}

TEST_CASE("qc_sampling estimates the marked fraction") {
    IntegrandOracle ramp = ramp_oracle_m4();
    SUBCASE("all-zero and all-one booleans are exact") {
        BooleanOracle zero = make_boolean_extension(constant_oracle(0.0), 4);
        BooleanOracle one = make_boolean_extension(constant_oracle(1.0), 4);
        CHECK(estimate_count_sampling(zero, 0.1, 1).value == 0.0);
        CHECK(estimate_count_sampling(one, 0.1, 1).value == 1.0);
    }
    SUBCASE("the M=4 Q=4 r=6 example concentrates around 0.375") {
        BooleanOracle b = make_boolean_extension(ramp, 4);
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed)
            if (std::abs(estimate_count_sampling(b, 0.05, seed).value - 0.375) <= 0.05) ++hits;
        CHECK(hits >= 67);
    }
    SUBCASE("one query per shot") {
        BooleanOracle b = make_boolean_extension(ramp, 4);
        const std::uint64_t before = b.queries();
        const Estimate est = estimate_count_sampling(b, 0.25, 9);
        CHECK(est.oracle_queries == 256);
        CHECK(b.queries() - before == 256);
    }
}

TEST_CASE("qc_fft counts marked items through the folded peak") {
    SUBCASE("empty marked set") {
        BooleanOracle b = BooleanOracle::from_predicate(GridDomain{1, 16}, 1,
                                                        [](std::uint64_t, std::uint64_t) { return false; });
        const CountingEstimate res = estimate_count_fft(b, 0.05, CountingConfig{128, 1}, 1, exact_mode());
        CHECK(res.estimate.value == 0.0);
        CHECK(res.count_estimate == 0);
    }
    SUBCASE("r = 4 of N = 16 at A = 128: theta is exactly pi/6") {
        BooleanOracle b = BooleanOracle::from_predicate(GridDomain{1, 16}, 1,
                                                        [](std::uint64_t a, std::uint64_t) { return a < 4; });
        const CountingEstimate res = estimate_count_fft(b, 0.05, CountingConfig{128, 5}, 1, exact_mode());
        CHECK(std::abs(res.estimate.value - 0.25) <= fft_budget_sin2(0.25, 128));
        CHECK(res.count_estimate == 4);
    }
    SUBCASE("the M=4 Q=4 r=6 example recovers r within 1 across 20 sampled runs") {
        BooleanOracle b = make_boolean_extension(ramp_oracle_m4(), 4);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const CountingEstimate res = estimate_count_fft(b, 0.05, CountingConfig{256, 5}, seed);
            const long long r_hat = static_cast<long long>(res.count_estimate);
            CHECK(std::abs(r_hat - 6) <= 1);
        }
    }
    SUBCASE("query accounting: reps * (A-1) * M^d * Q") {
        BooleanOracle b = make_boolean_extension(ramp_oracle_m4(), 4);
        const CountingEstimate res = estimate_count_fft(b, 0.25, CountingConfig{16, 5}, 1);
        CHECK(res.estimate.oracle_queries == 5ull * 15ull * 16ull);
    }
}

TEST_CASE("sqrt_sampling reads the mean directly off the ancilla frequency") {
    CHECK(estimate_mean_sqrt_sampling(constant_oracle(0.0), 0.1, 1).value == 0.0);
    CHECK(estimate_mean_sqrt_sampling(constant_oracle(1.0), 0.1, 1).value == 1.0);
    const Estimate exact = estimate_mean_sqrt_sampling(ramp_oracle_m4(), 0.1, 1, exact_mode());
    CHECK(exact.value == doctest::Approx(0.375).epsilon(1e-12));
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        if (std::abs(estimate_mean_sqrt_sampling(ramp_oracle_m4(), 0.05, seed).value - 0.375) <= 0.05) ++hits;
    CHECK(hits >= 67);
}

TEST_CASE("sqrt_fft estimates the mean as sin^2 of the peak angle") {
    SUBCASE("zero integrand") {
        const Estimate est = estimate_mean_sqrt_fft(constant_oracle(0.0), 0.05, CountingConfig{256, 1}, 1, exact_mode());
        CHECK(est.value == 0.0);
    }
    SUBCASE("ramp at A = 256") {
        const Estimate est = estimate_mean_sqrt_fft(ramp_oracle_m4(), 0.05, CountingConfig{256, 5}, 1, exact_mode());
        CHECK(std::abs(est.value - 0.375) <= fft_budget_sin2(0.375, 256));
    }
    SUBCASE("rows 2, 4 and 6 agree pairwise within summed budgets") {
        IntegrandOracle ramp = ramp_oracle_m4();
        const double s = 0.375;
        const std::uint64_t fft_size = 256;
        const double b_qm = fft_budget_sin(static_cast<double>(fft_size));
        const double b_sin2 = fft_budget_sin2(s, static_cast<double>(fft_size));
        const double b_bool = 1.0 / (2.0 * 64.0);
        const double v_qm =
            estimate_mean_grover_fft(ramp, 0.01, CountingConfig{fft_size, 1}, 1, exact_mode()).value;
        const double v_qc = estimate_count_fft(make_boolean_extension(ramp, 64), 0.01,
                                               CountingConfig{fft_size, 1}, 1, exact_mode())
                                .estimate.value;
        const double v_sqrt =
            estimate_mean_sqrt_fft(ramp, 0.01, CountingConfig{fft_size, 1}, 1, exact_mode()).value;
        CHECK(std::abs(v_qm - v_qc) <= b_qm + b_sin2 + b_bool);
        CHECK(std::abs(v_qm - v_sqrt) <= b_qm + b_sin2);
        CHECK(std::abs(v_qc - v_sqrt) <= 2.0 * b_sin2 + b_bool);
    }
}

TEST_CASE("estimate_moment dispatches the walk through any estimator") {
    SUBCASE("deterministic process is exact under every method") {
        StochasticProcessSpec spec;
        spec.steps = 2;
        spec.branch = 2;
        spec.transition = [](int, const std::vector<double>&, double) { return 3.0; };
        spec.statistic = [](const std::vector<double>& w) { return w.back(); };
        spec.stat_min = 0.0;
        spec.stat_max = 4.0;
        spec.moment_power = 2;  // scaled value 0.75^2 = 0.5625
        EstimatorSpec est_spec;
        est_spec.method = Method::kClassicalExact;
        CHECK(estimate_moment(spec, 0.1, est_spec, 1).value == doctest::Approx(0.5625));
        est_spec.method = Method::kQmSampling;
        CHECK(estimate_moment(spec, 0.1, est_spec, 1, exact_mode()).value == doctest::Approx(0.5625).epsilon(1e-9));
    }
    SUBCASE("six-step walk first moment via quantum counting") {
        EstimatorSpec est_spec;
        est_spec.method = Method::kQcFft;
        est_spec.boolean_resolution = 64;
        est_spec.counting = CountingConfig{256, 5};
        const Estimate est = estimate_moment(make_plus_minus_walk(6, 1), 0.05, est_spec, 1, exact_mode());
        CHECK(std::abs(est.value - 0.5) <= fft_budget_sin2(0.5, 256) + 1.0 / 128.0);
    }
}

TEST_CASE("run_estimator covers the full vocabulary with honest accounting") {
    IntegrandOracle oracle = ramp_oracle_m4();
    const double eps = 0.25;
    const std::uint64_t points = 4;

    EstimatorSpec spec;
    spec.counting = CountingConfig{16, 5};
    spec.boolean_resolution = 4;

    spec.method = Method::kQmSampling;
    CHECK(run_estimator(oracle, eps, spec, 1).oracle_queries == 256 * points);
    spec.method = Method::kSqrtSampling;
    CHECK(run_estimator(oracle, eps, spec, 1).oracle_queries == 256 * points);
    spec.method = Method::kQmIterated;
    CHECK(run_estimator(oracle, eps, spec, 1).oracle_queries == 256 * points);  // one round, no amplification
    spec.method = Method::kQmGroverFft;
    CHECK(run_estimator(oracle, eps, spec, 1).oracle_queries == 5 * 15 * 2 * points);
    spec.method = Method::kSqrtFft;
    CHECK(run_estimator(oracle, eps, spec, 1).oracle_queries == 5 * 15 * 2 * points);
    spec.method = Method::kQcSampling;
    CHECK(run_estimator(oracle, eps, spec, 1).oracle_queries == 256);
    spec.method = Method::kQcFft;
    CHECK(run_estimator(oracle, eps, spec, 1).oracle_queries == 5 * 15 * 16);
    spec.method = Method::kClassicalMc;
    CHECK(run_estimator(oracle, eps, spec, 1).oracle_queries == 256);
    spec.method = Method::kClassicalExact;
    const Estimate exact = run_estimator(oracle, eps, spec, 1);
    CHECK(exact.oracle_queries == points);
    CHECK(exact.value == doctest::Approx(0.375));
}

TEST_CASE("estimators reject accuracies outside (0, 1/2)") {
    CHECK_THROWS_AS(estimate_mean_sampling(ramp_oracle_m4(), 0.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_mean_sampling(ramp_oracle_m4(), 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_mean_sqrt_fft(ramp_oracle_m4(), -0.1, CountingConfig{}, 1), std::invalid_argument);
}

TEST_CASE("fft estimators surface capacity errors") {
    // 16 function qubits + ancilla + 12 counting qubits > 26.
    IntegrandOracle big = make_grid_oracle([](const std::vector<double>&) { return 0.5; }, GridDomain{2, 256});
    CHECK_THROWS_AS(estimate_mean_grover_fft(big, 0.001, CountingConfig{4096, 1}, 1), std::length_error);
}
