#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "quint/oracle.hpp"
#include "quint/rng.hpp"
#include "quint/statevector.hpp"

namespace quint {

struct EstimatorOptions {
    // Replace measurement sampling with exact probability readout. The
    // accounted protocol cost (shots, oracle queries) is unchanged; only the
    // statistical noise disappears.
    bool exact_readout = false;
    // Shot budgets are ceil(shots_constant / accuracy^2).
    double shots_constant = 16.0;
    // Amplification rounds cap the iterate count at delta_safety / delta^(k-1),
    // keeping the amplified angle on the monotone branch with margin.
    double delta_safety = 0.25;
    int qubit_cap = kDefaultQubitCap;
    // Test hook: when set to the oracle's true mean, the iterated estimator
    // asserts the monotone-branch condition against the true residual.
    double true_value_hint = std::numeric_limits<double>::quiet_NaN();
};

// Configuration of the Fourier readout. fft_size 0 derives A from the
// requested accuracy (smallest power of two >= pi/accuracy).
struct CountingConfig {
    std::uint64_t fft_size = 0;
    int repetitions = 5;
};

// Bookkeeping of one round of the iterated scheme.
struct IterationState {
    double delta = 0.0;
    int round_index = 0;
    std::uint64_t amp_iterations = 0;
    std::uint64_t shots_per_round = 0;
    double residual_estimate = 0.0;  // recovered |U_ts| for this round
    double scaled_estimate = 0.0;    // residual rescaled into [0,1]
    double composite = 0.0;          // running composite estimate after the round
    bool invert_clamped = false;
};

// Exact inverse of p = sin^2((2n+1) * asin(x)) on the monotone branch.
inline double invert_amplification(double amplified_probability, std::uint64_t amp_iterations,
                                   bool* clamped = nullptr) {
    double p = amplified_probability;
    bool did_clamp = false;
    if (p < 0.0) { p = 0.0; did_clamp = true; }
    if (p > 1.0) { p = 1.0; did_clamp = true; }
    if (clamped) *clamped = did_clamp;
    return std::sin(std::asin(std::sqrt(p)) / (2.0 * static_cast<double>(amp_iterations) + 1.0));
}

namespace detail {

inline void require_accuracy(double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("accuracy must lie in (0, 1/2)");
}

inline std::uint64_t shots_for(double accuracy, double shots_constant) {
    return static_cast<std::uint64_t>(std::ceil(shots_constant / (accuracy * accuracy)));
}

inline std::uint64_t next_power_of_two(std::uint64_t x) {
    std::uint64_t p = 1;
    while (p < x) p <<= 1;
    return p;
}

inline std::uint64_t fft_size_for(double eps, const CountingConfig& config) {
    if (config.fft_size != 0) {
        if (!is_power_of_two(config.fft_size))
            throw std::invalid_argument("CountingConfig: fft size must be a power of two");
        return config.fft_size;
    }
    return next_power_of_two(static_cast<std::uint64_t>(std::ceil(std::numbers::pi / eps)));
}

inline double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (0xA511E9B3 + stream));
}

inline std::size_t argmax_index(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

inline double target_frequency(const std::map<std::uint64_t, std::uint64_t>& histogram,
                               const std::function<bool(std::uint64_t)>& target, std::uint64_t shots) {
    std::uint64_t hits = 0;
    for (const auto& [index, count] : histogram)
        if (target(index)) hits += count;
    return static_cast<double>(hits) / static_cast<double>(shots);
}

// Shared Fourier-readout pipeline: build the counting state over G, transform,
// then read the folded peak `repetitions` times (argmax in exact mode, one
// counting-register measurement per repetition otherwise).
template <class Pred>
inline std::vector<double> fourier_peak_angles(const PreparationDescriptor& desc, Pred&& target,
                                               std::uint64_t fft_size, QubitLayout sys_layout, int repetitions,
                                               bool exact_readout, std::uint64_t seed) {
    StateVector state = build_counting_state(desc, target, fft_size, sys_layout);
    dft_counting_register(state);
    const std::vector<double> dist = counting_register_distribution(state);
    Rng rng(sub_seed(seed, 0x17));
    std::vector<double> angles;
    angles.reserve(static_cast<std::size_t>(repetitions));
    for (int r = 0; r < repetitions; ++r) {
        const std::uint64_t m = exact_readout ? argmax_index(dist) : sample_index(dist, rng);
        const std::uint64_t folded = std::min<std::uint64_t>(m, fft_size - m);
        angles.push_back(std::numbers::pi * static_cast<double>(folded) / static_cast<double>(fft_size));
    }
    return angles;
}

}  // namespace detail

// Chart row 1 readout primitive: prepare W^-1 R W with zero shift and count
// the frequency of |1>|0...0>; the target amplitude is the mean itself, so the
// estimate is the square root of the frequency.
inline Estimate estimate_mean_sampling(const IntegrandOracle& oracle, double eps, std::uint64_t seed,
                                       const EstimatorOptions& opts = {}) {
    detail::require_accuracy(eps);
    QubitLayout layout{1, oracle.domain().total_bits(), 0, opts.qubit_cap};
    const std::uint64_t before = oracle.queries();
    PreparationDescriptor desc{PreparationKind::kGroverU, oracle, 0.0};
    StateVector state = prepare(desc, layout);
    const std::uint64_t shots = detail::shots_for(eps, opts.shots_constant);
    oracle.charge((shots - 1) * oracle.point_count());  // one preparation per shot
    const std::uint64_t target = layout.ancilla_mask();
    double frequency;
    if (opts.exact_readout) {
        frequency = std::norm(state.amps[target]);
    } else {
        const auto histogram = sample_measurements(state, shots, detail::sub_seed(seed, 1));
        const auto it = histogram.find(target);
        frequency = it == histogram.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(shots);
    }
    Estimate est;
    est.value = std::sqrt(frequency);
    est.target_accuracy = eps;
    est.oracle_queries = oracle.queries() - before;
    est.shots = shots;
    est.method = Method::kQmSampling;
    est.seed = seed;
    return est;
}

struct IteratedResult {
    Estimate estimate;
    std::vector<IterationState> rounds;
};

// Chart row 1: iterated estimates. Round k re-centers the integrand at the
// composite estimate, amplifies the residual amplitude with
// floor(delta_safety / delta^(k-1)) iterates, measures at fixed shot cost and
// recovers the residual through the exact amplification inverse. Each round
// multiplies the accuracy by delta; the final bracket has width delta^K and
// its midpoint is returned.
inline IteratedResult estimate_mean_grover_iterated_detailed(const IntegrandOracle& oracle, double eps,
                                                             double delta, std::uint64_t seed,
                                                             const EstimatorOptions& opts = {}) {
    detail::require_accuracy(eps);
    if (!(delta >= 0.125 && delta <= 0.5))
        throw std::invalid_argument("iterated estimator: delta must lie in [1/8, 1/2]");
    const int round_count =
        static_cast<int>(std::ceil(std::log(eps) / std::log(delta) - 1e-9));
    const std::uint64_t shots_round = detail::shots_for(delta, opts.shots_constant);
    const std::uint64_t points = oracle.point_count();
    QubitLayout layout{1, oracle.domain().total_bits(), 0, opts.qubit_cap};
    const std::uint64_t target = layout.ancilla_mask();
    const std::uint64_t before = oracle.queries();

    IteratedResult result;
    double composite = 0.0;
    double scale = 1.0;  // delta^(k-1)
    for (int k = 1; k <= round_count; ++k) {
        const double shifted_center = std::min(1.0, std::max(0.0, composite));
        const std::uint64_t amp_iterations =
            static_cast<std::uint64_t>(std::floor(opts.delta_safety / scale));
        if (!std::isnan(opts.true_value_hint)) {
            const double true_residual = std::abs(opts.true_value_hint - shifted_center);
            const double swept = (2.0 * static_cast<double>(amp_iterations) + 1.0) *
                                 std::asin(std::min(1.0, true_residual));
            if (swept > std::numbers::pi / 2.0 + 1e-9)
                throw std::logic_error("iterated estimator: amplified angle left the monotone branch in round " +
                                       std::to_string(k));
        }
        PreparationDescriptor desc{PreparationKind::kGroverU, oracle, shifted_center};

        double residual = 0.0, scaled = 0.0;
        bool clamped = false;
        bool round_ok = false;
        for (int attempt = 0; attempt < 2 && !round_ok; ++attempt) {
            StateVector state = new_zero_state(layout);
            for (std::uint64_t n = 0; n < amp_iterations; ++n)
                grover_iterate(state, desc, [&](std::uint64_t i) { return i == target; });
            apply_preparation(state, desc);
            double p_hat;
            if (opts.exact_readout) {
                p_hat = std::norm(state.amps[target]);
            } else {
                const std::uint64_t round_seed =
                    detail::sub_seed(seed, 0x100 + static_cast<std::uint64_t>(k) * 4 + attempt);
                const auto histogram = sample_measurements(state, shots_round, round_seed);
                const auto it = histogram.find(target);
                p_hat = it == histogram.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(shots_round);
            }
            oracle.charge((shots_round - 1) * (2 * amp_iterations + 1) * points);
            residual = invert_amplification(p_hat, amp_iterations, &clamped);
            scaled = residual / scale;
            round_ok = scaled <= 1.0 + delta;  // residual consistent with the round bracket
        }
        if (!round_ok)
            throw std::runtime_error("iterated estimator: round " + std::to_string(k) +
                                     " inconsistent after restart (scaled residual " + std::to_string(scaled) + ")");

        composite = shifted_center + residual - 0.5 * scale * delta;  // series term (E_k - delta/2) delta^(k-1)
        IterationState round_state;
        round_state.delta = delta;
        round_state.round_index = k;
        round_state.amp_iterations = amp_iterations;
        round_state.shots_per_round = shots_round;
        round_state.residual_estimate = residual;
        round_state.scaled_estimate = scaled;
        round_state.composite = composite;
        round_state.invert_clamped = clamped;
        result.rounds.push_back(round_state);
        scale *= delta;
    }

    Estimate est;
    est.value = std::min(1.0, std::max(0.0, composite + 0.5 * scale));  // midpoint of the final bracket
    est.target_accuracy = eps;
    est.oracle_queries = oracle.queries() - before;
    est.shots = static_cast<std::uint64_t>(round_count) * shots_round;
    est.method = Method::kQmIterated;
    est.seed = seed;
    result.estimate = est;
    return result;
}

inline Estimate estimate_mean_grover_iterated(const IntegrandOracle& oracle, double eps, double delta,
                                              std::uint64_t seed, const EstimatorOptions& opts = {}) {
    return estimate_mean_grover_iterated_detailed(oracle, eps, delta, seed, opts).estimate;
}

// Chart row 2: same unitary as the sampling method, but the rotation
// frequency of G is read out with a Fourier transform over the counting
// register; no iterated estimates are needed.
inline Estimate estimate_mean_grover_fft(const IntegrandOracle& oracle, double eps, const CountingConfig& config,
                                         std::uint64_t seed, const EstimatorOptions& opts = {}) {
    detail::require_accuracy(eps);
    const std::uint64_t fft_size = detail::fft_size_for(eps, config);
    QubitLayout sys_layout{1, oracle.domain().total_bits(), 0, opts.qubit_cap};
    const std::uint64_t target = sys_layout.ancilla_mask();
    const std::uint64_t before = oracle.queries();
    PreparationDescriptor desc{PreparationKind::kGroverU, oracle, 0.0};
    const auto angles = detail::fourier_peak_angles(
        desc, [&](std::uint64_t i) { return i == target; }, fft_size, sys_layout, config.repetitions,
        opts.exact_readout, seed);
    oracle.charge(static_cast<std::uint64_t>(config.repetitions - 1) * (fft_size - 1) * 2 * oracle.point_count());
    std::vector<double> estimates;
    estimates.reserve(angles.size());
    for (double theta : angles) estimates.push_back(std::sin(theta));
    Estimate est;
    est.value = detail::median(estimates);
    est.target_accuracy = eps;
    est.oracle_queries = oracle.queries() - before;
    est.shots = static_cast<std::uint64_t>(config.repetitions);
    est.method = Method::kQmGroverFft;
    est.seed = seed;
    return est;
}

// Chart row 3: uniform superposition over the boolean domain, classical-style
// frequency count of b = 1. One oracle query per shot.
inline Estimate estimate_count_sampling(const BooleanOracle& oracle, double eps, std::uint64_t seed,
                                        const EstimatorOptions& opts = {}) {
    detail::require_accuracy(eps);
    QubitLayout layout{0, oracle.total_bits(), 0, opts.qubit_cap};
    StateVector state = prepare(PreparationDescriptor{PreparationKind::kHadamardOnly, {}, 0.0}, layout);
    const std::uint64_t shots = detail::shots_for(eps, opts.shots_constant);
    const std::uint64_t before = oracle.queries();
    double fraction;
    if (opts.exact_readout) {
        fraction = probability_of(state, [&](std::uint64_t i) { return oracle.value(i) == 1; });
        oracle.charge(shots);
    } else {
        const auto histogram = sample_measurements(state, shots, detail::sub_seed(seed, 3));
        std::uint64_t ones = 0;
        for (const auto& [index, count] : histogram) {
            oracle.charge(count);  // one evaluation per shot, repeats included
            if (oracle.value(index) == 1) ones += count;
        }
        fraction = static_cast<double>(ones) / static_cast<double>(shots);
    }
    Estimate est;
    est.value = fraction;
    est.target_accuracy = eps;
    est.oracle_queries = oracle.queries() - before;
    est.shots = shots;
    est.method = Method::kQcSampling;
    est.seed = seed;
    return est;
}

struct CountingEstimate {
    Estimate estimate;
    std::uint64_t count_estimate = 0;  // round(value * M^d * Q)
};

// Chart row 4: quantum counting. G is built from the plain Walsh-Hadamard
// preparation with the marked set of b as target, so |U_ts| = sqrt(r/N); the
// folded Fourier peak gives the marked fraction as sin^2 of the peak angle.
inline CountingEstimate estimate_count_fft(const BooleanOracle& oracle, double eps, const CountingConfig& config,
                                           std::uint64_t seed, const EstimatorOptions& opts = {}) {
    detail::require_accuracy(eps);
    const std::uint64_t fft_size = detail::fft_size_for(eps, config);
    QubitLayout sys_layout{0, oracle.total_bits(), 0, opts.qubit_cap};
    const std::uint64_t before = oracle.queries();
    PreparationDescriptor desc{PreparationKind::kHadamardOnly, {}, 0.0};
    const auto angles = detail::fourier_peak_angles(
        desc, [&](std::uint64_t i) { return oracle.query(i) == 1; }, fft_size, sys_layout, config.repetitions,
        opts.exact_readout, seed);
    oracle.charge(static_cast<std::uint64_t>(config.repetitions - 1) * (fft_size - 1) * oracle.space_size());
    std::vector<double> estimates;
    estimates.reserve(angles.size());
    for (double theta : angles) estimates.push_back(std::sin(theta) * std::sin(theta));
    CountingEstimate result;
    result.estimate.value = detail::median(estimates);
    result.estimate.target_accuracy = eps;
    result.estimate.oracle_queries = oracle.queries() - before;
    result.estimate.shots = static_cast<std::uint64_t>(config.repetitions);
    result.estimate.method = Method::kQcFft;
    result.estimate.seed = seed;
    result.count_estimate = static_cast<std::uint64_t>(
        std::llround(result.estimate.value * static_cast<double>(oracle.space_size())));
    return result;
}

// Chart row 5: rotate by sqrt(f) after the Walsh-Hadamard and leave the final
// inverse transform out; the ancilla-|1> subspace then occurs with probability
// equal to the mean itself, so the observed frequency is the estimate.
inline Estimate estimate_mean_sqrt_sampling(const IntegrandOracle& oracle, double eps, std::uint64_t seed,
                                            const EstimatorOptions& opts = {}) {
    detail::require_accuracy(eps);
    QubitLayout layout{1, oracle.domain().total_bits(), 0, opts.qubit_cap};
    const std::uint64_t before = oracle.queries();
    PreparationDescriptor desc{PreparationKind::kSqrtRotation, oracle, 0.0};
    StateVector state = prepare(desc, layout);
    const std::uint64_t shots = detail::shots_for(eps, opts.shots_constant);
    oracle.charge((shots - 1) * oracle.point_count());
    const std::uint64_t anc = layout.ancilla_mask();
    double frequency;
    if (opts.exact_readout) {
        frequency = probability_of(state, [&](std::uint64_t i) { return (i & anc) != 0; });
    } else {
        const auto histogram = sample_measurements(state, shots, detail::sub_seed(seed, 5));
        frequency = detail::target_frequency(histogram, [&](std::uint64_t i) { return (i & anc) != 0; }, shots);
    }
    Estimate est;
    est.value = frequency;
    est.target_accuracy = eps;
    est.oracle_queries = oracle.queries() - before;
    est.shots = shots;
    est.method = Method::kSqrtSampling;
    est.seed = seed;
    return est;
}

// Chart row 6: the sqrt-rotation preparation with Fourier readout. The target
// is the whole ancilla-|1> subspace; the rotation law holds with sin(theta) =
// sqrt(S), so the peak angle squared-sine is the mean.
inline Estimate estimate_mean_sqrt_fft(const IntegrandOracle& oracle, double eps, const CountingConfig& config,
                                       std::uint64_t seed, const EstimatorOptions& opts = {}) {
    detail::require_accuracy(eps);
    const std::uint64_t fft_size = detail::fft_size_for(eps, config);
    QubitLayout sys_layout{1, oracle.domain().total_bits(), 0, opts.qubit_cap};
    const std::uint64_t anc = sys_layout.ancilla_mask();
    const std::uint64_t before = oracle.queries();
    PreparationDescriptor desc{PreparationKind::kSqrtRotation, oracle, 0.0};
    const auto angles = detail::fourier_peak_angles(
        desc, [&](std::uint64_t i) { return (i & anc) != 0; }, fft_size, sys_layout, config.repetitions,
        opts.exact_readout, seed);
    oracle.charge(static_cast<std::uint64_t>(config.repetitions - 1) * (fft_size - 1) * 2 * oracle.point_count());
    std::vector<double> estimates;
    estimates.reserve(angles.size());
    for (double theta : angles) estimates.push_back(std::sin(theta) * std::sin(theta));
    Estimate est;
    est.value = detail::median(estimates);
    est.target_accuracy = eps;
    est.oracle_queries = oracle.queries() - before;
    est.shots = static_cast<std::uint64_t>(config.repetitions);
    est.method = Method::kSqrtFft;
    est.seed = seed;
    return est;
}

// Parameters shared by the dispatch surface and the sweep harness.
struct EstimatorSpec {
    Method method = Method::kClassicalExact;
    double delta = 0.25;                    // qm_iterated
    CountingConfig counting;                // *_fft
    std::uint64_t boolean_resolution = 64;  // qc_*: Q of the boolean extension
    std::uint64_t mc_samples = 0;           // classical_mc; 0 derives from accuracy
};

inline Estimate run_estimator(const IntegrandOracle& oracle, double eps, const EstimatorSpec& spec,
                              std::uint64_t seed, const EstimatorOptions& opts = {}) {
    switch (spec.method) {
        case Method::kQmSampling:
            return estimate_mean_sampling(oracle, eps, seed, opts);
        case Method::kQmIterated:
            return estimate_mean_grover_iterated(oracle, eps, spec.delta, seed, opts);
        case Method::kQmGroverFft:
            return estimate_mean_grover_fft(oracle, eps, spec.counting, seed, opts);
        case Method::kQcSampling: {
            const BooleanOracle boolean = make_boolean_extension(oracle, spec.boolean_resolution);
            return estimate_count_sampling(boolean, eps, seed, opts);
        }
        case Method::kQcFft: {
            const BooleanOracle boolean = make_boolean_extension(oracle, spec.boolean_resolution);
            return estimate_count_fft(boolean, eps, spec.counting, seed, opts).estimate;
        }
        case Method::kSqrtSampling:
            return estimate_mean_sqrt_sampling(oracle, eps, seed, opts);
        case Method::kSqrtFft:
            return estimate_mean_sqrt_fft(oracle, eps, spec.counting, seed, opts);
        case Method::kClassicalMc: {
            detail::require_accuracy(eps);
            const std::uint64_t n =
                spec.mc_samples != 0 ? spec.mc_samples : detail::shots_for(eps, opts.shots_constant);
            Estimate est = monte_carlo_estimate(oracle, n, seed);
            est.target_accuracy = eps;
            return est;
        }
        case Method::kClassicalExact: {
            Estimate est = classical_exact_estimate(oracle);
            est.target_accuracy = eps;
            est.seed = seed;
            return est;
        }
    }
    throw std::invalid_argument("run_estimator: unknown method");
}

// Moments of a stochastic process: discretize the process into a grid oracle
// carrying the requested moment power, then dispatch to any estimator.
inline Estimate estimate_moment(const StochasticProcessSpec& process, double eps, const EstimatorSpec& spec,
                                std::uint64_t seed, const EstimatorOptions& opts = {}) {
    const IntegrandOracle oracle = make_stochastic_oracle(process);
    return run_estimator(oracle, eps, spec, seed, opts);
}

}  // namespace quint
