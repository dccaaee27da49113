#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "quint/rng.hpp"

namespace quint {

inline bool is_power_of_two(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

inline int log2_exact(std::uint64_t x) {
    if (!is_power_of_two(x)) throw std::invalid_argument("value is not a power of two");
    int b = 0;
    while ((x >> b) != 1) ++b;
    return b;
}

// Regular grid over [0,1)^d with M sample points per axis, x_i = a_i / M.
struct GridDomain {
    int dimensions = 1;
    std::uint64_t points_per_axis = 2;  // M, power of two

    void validate() const {
        if (dimensions < 1) throw std::invalid_argument("GridDomain: dimensions must be >= 1");
        if (!is_power_of_two(points_per_axis))
            throw std::invalid_argument("GridDomain: points per axis must be a power of two");
        if (static_cast<std::uint64_t>(dimensions) * axis_bits() > 62)
            throw std::length_error("GridDomain: M^d exceeds 64-bit index space");
    }

    int axis_bits() const { return log2_exact(points_per_axis); }
    int total_bits() const { return dimensions * axis_bits(); }
    std::uint64_t point_count() const { return std::uint64_t{1} << total_bits(); }

    // Flat index <-> coordinates. Axis i occupies bits [i*axis_bits, (i+1)*axis_bits).
    std::vector<std::uint64_t> unflatten(std::uint64_t flat) const {
        std::vector<std::uint64_t> coords(static_cast<std::size_t>(dimensions));
        const std::uint64_t mask = points_per_axis - 1;
        for (int i = 0; i < dimensions; ++i) coords[static_cast<std::size_t>(i)] = (flat >> (i * axis_bits())) & mask;
        return coords;
    }

    std::string point_to_string(std::uint64_t flat) const {
        auto coords = unflatten(flat);
        std::string s = "(";
        for (std::size_t i = 0; i < coords.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(coords[i]);
        }
        return s + ")";
    }
};

// Desk scale: every domain small enough to sweep exhaustively.
inline constexpr std::uint64_t kEnumerationCap = std::uint64_t{1} << 25;

// Grid integrand with values in [0,1]. Cheap handle: copies share the value
// table and the query counter. The counter tracks logical oracle queries (the
// complexity currency); it is independent of numerical memoization.
class IntegrandOracle {
public:
    IntegrandOracle() = default;

    static IntegrandOracle from_values(GridDomain domain, std::vector<double> values) {
        domain.validate();
        if (domain.point_count() > kEnumerationCap)
            throw std::length_error("IntegrandOracle: domain exceeds the tabulation cap");
        if (values.size() != domain.point_count())
            throw std::invalid_argument("IntegrandOracle: value table size mismatch");
        auto impl = std::make_shared<Impl>();
        impl->domain = domain;
        impl->table = std::move(values);
        for (std::uint64_t i = 0; i < impl->table.size(); ++i) check_range(impl->table[i], domain, i);
        return IntegrandOracle(std::move(impl));
    }

    static IntegrandOracle from_point_function(GridDomain domain,
                                               const std::function<double(const std::vector<std::uint64_t>&)>& eval) {
        domain.validate();
        if (domain.point_count() > kEnumerationCap)
            throw std::length_error("IntegrandOracle: domain exceeds the tabulation cap");
        std::vector<double> table(domain.point_count());
        for (std::uint64_t flat = 0; flat < table.size(); ++flat)
            table[flat] = eval(domain.unflatten(flat));
        return from_values(domain, std::move(table));
    }

    const GridDomain& domain() const { return impl().domain; }
    std::uint64_t point_count() const { return impl().domain.point_count(); }

    // Counted evaluation: one logical query.
    double query(std::uint64_t flat) const {
        impl().counter.fetch_add(1, std::memory_order_relaxed);
        return value(flat);
    }

    // Uncounted readout, for tests and exact reference computations.
    double value(std::uint64_t flat) const {
        const Impl& im = impl();
        if (flat >= im.table.size()) throw std::out_of_range("IntegrandOracle: point index out of range");
        return im.table[flat];
    }

    // Account additional logical queries whose numerical evaluation was
    // already simulated (e.g. repeated preparations of an identical state).
    void charge(std::uint64_t n) const { impl().counter.fetch_add(n, std::memory_order_relaxed); }

    std::uint64_t queries() const { return impl().counter.load(std::memory_order_relaxed); }

    bool valid() const { return impl_ != nullptr; }

private:
    struct Impl {
        GridDomain domain;
        std::vector<double> table;
        mutable std::atomic<std::uint64_t> counter{0};
    };

    static void check_range(double v, const GridDomain& dom, std::uint64_t flat) {
        if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v))
            throw std::domain_error("integrand value " + std::to_string(v) + " outside [0,1] at grid point " +
                                    dom.point_to_string(flat));
    }

    explicit IntegrandOracle(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

    const Impl& impl() const {
        if (!impl_) throw std::logic_error("IntegrandOracle: empty handle");
        return *impl_;
    }

    std::shared_ptr<Impl> impl_;
};

// f(a_1..a_d) = g(a_1/M, ..., a_d/M).
inline IntegrandOracle make_grid_oracle(const std::function<double(const std::vector<double>&)>& g,
                                        GridDomain domain) {
    domain.validate();
    const double m = static_cast<double>(domain.points_per_axis);
    return IntegrandOracle::from_point_function(domain, [&](const std::vector<std::uint64_t>& coords) {
        std::vector<double> x(coords.size());
        for (std::size_t i = 0; i < coords.size(); ++i) x[i] = static_cast<double>(coords[i]) / m;
        return g(x);
    });
}

// Exact mean by full enumeration. Counts one query per grid point; doubles as
// the deterministic classical baseline and as the reference for estimators.
inline double true_mean(const IntegrandOracle& oracle) {
    const std::uint64_t n = oracle.point_count();
    if (n > kEnumerationCap) throw std::length_error("true_mean: domain too large for exhaustive sweep");
    double sum = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) sum += oracle.query(i);
    return sum / static_cast<double>(n);
}

// Uncounted companion used for reference values in harness records.
inline double reference_mean(const IntegrandOracle& oracle) {
    const std::uint64_t n = oracle.point_count();
    if (n > kEnumerationCap) throw std::length_error("reference_mean: domain too large for exhaustive sweep");
    double sum = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) sum += oracle.value(i);
    return sum / static_cast<double>(n);
}

inline double reference_variance(const IntegrandOracle& oracle) {
    const std::uint64_t n = oracle.point_count();
    if (n > kEnumerationCap) throw std::length_error("reference_variance: domain too large for exhaustive sweep");
    double sum = 0.0, sq = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double v = oracle.value(i);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    return sq / static_cast<double>(n) - mean * mean;
}

// Boolean extension of an integrand over the enlarged domain (a, q),
// q in {0..Q-1}: b(a,q) = 1 iff q < round(f(a) * Q). The fraction of marked q
// per point is then within 1/(2Q) of f(a). Flat index = (a_flat << log2 Q) | q.
class BooleanOracle {
public:
    BooleanOracle() = default;

    static BooleanOracle from_point_counts(IntegrandOracle base, std::uint64_t q_resolution,
                                           std::vector<std::uint64_t> counts) {
        auto impl = std::make_shared<Impl>();
        if (!is_power_of_two(q_resolution))
            throw std::invalid_argument("BooleanOracle: Q must be a power of two");
        impl->base = std::move(base);
        impl->domain = impl->base.domain();
        impl->q_resolution = q_resolution;
        impl->marked_per_point = std::move(counts);
        if (impl->marked_per_point.size() != impl->domain.point_count())
            throw std::invalid_argument("BooleanOracle: per-point count table size mismatch");
        for (std::uint64_t c : impl->marked_per_point)
            if (c > q_resolution) throw std::invalid_argument("BooleanOracle: per-point count exceeds Q");
        return BooleanOracle(std::move(impl));
    }

    // Direct construction from an arbitrary predicate over (a, q); used for
    // counting experiments on raw marked sets.
    static BooleanOracle from_predicate(GridDomain domain, std::uint64_t q_resolution,
                                        const std::function<bool(std::uint64_t a_flat, std::uint64_t q)>& pred) {
        domain.validate();
        if (!is_power_of_two(q_resolution))
            throw std::invalid_argument("BooleanOracle: Q must be a power of two");
        if (domain.point_count() > kEnumerationCap / q_resolution)
            throw std::length_error("BooleanOracle: (a,q) space exceeds the tabulation cap");
        auto impl = std::make_shared<Impl>();
        impl->domain = domain;
        impl->q_resolution = q_resolution;
        impl->marked_per_point.assign(domain.point_count(), 0);
        impl->explicit_table.assign(domain.point_count() * q_resolution, 0);
        for (std::uint64_t a = 0; a < domain.point_count(); ++a) {
            for (std::uint64_t q = 0; q < q_resolution; ++q) {
                const bool v = pred(a, q);
                impl->explicit_table[a * q_resolution + q] = v ? 1 : 0;
                impl->marked_per_point[a] += v ? 1 : 0;
            }
        }
        return BooleanOracle(std::move(impl));
    }

    const GridDomain& domain() const { return impl().domain; }
    std::uint64_t q_resolution() const { return impl().q_resolution; }
    int q_bits() const { return log2_exact(impl().q_resolution); }
    int total_bits() const { return impl().domain.total_bits() + q_bits(); }
    std::uint64_t space_size() const { return impl().domain.point_count() * impl().q_resolution; }
    const IntegrandOracle& base() const { return impl().base; }

    int query(std::uint64_t flat) const {
        impl().counter.fetch_add(1, std::memory_order_relaxed);
        return value(flat);
    }

    int value(std::uint64_t flat) const {
        const Impl& im = impl();
        if (flat >= space_size()) throw std::out_of_range("BooleanOracle: point index out of range");
        if (!im.explicit_table.empty()) return im.explicit_table[flat];
        const std::uint64_t q = flat & (im.q_resolution - 1);
        const std::uint64_t a = flat >> log2_exact(im.q_resolution);
        return q < im.marked_per_point[a] ? 1 : 0;
    }

    void charge(std::uint64_t n) const { impl().counter.fetch_add(n, std::memory_order_relaxed); }
    std::uint64_t queries() const { return impl().counter.load(std::memory_order_relaxed); }
    bool valid() const { return impl_ != nullptr; }

private:
    struct Impl {
        IntegrandOracle base;  // may be an empty handle for direct predicates
        GridDomain domain;
        std::uint64_t q_resolution = 1;
        std::vector<std::uint64_t> marked_per_point;
        std::vector<std::uint8_t> explicit_table;  // only for from_predicate
        mutable std::atomic<std::uint64_t> counter{0};
    };

    explicit BooleanOracle(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

    const Impl& impl() const {
        if (!impl_) throw std::logic_error("BooleanOracle: empty handle");
        return *impl_;
    }

    std::shared_ptr<Impl> impl_;
};

inline BooleanOracle make_boolean_extension(const IntegrandOracle& oracle, std::uint64_t q_resolution) {
    if (q_resolution < 2 || !is_power_of_two(q_resolution))
        throw std::invalid_argument("make_boolean_extension: Q must be a power of two >= 2");
    const std::uint64_t n = oracle.point_count();
    std::vector<std::uint64_t> counts(n);
    for (std::uint64_t a = 0; a < n; ++a) {
        // Half-up rounding keeps the per-point marked count within 1/2 of f*Q.
        const double scaled = oracle.value(a) * static_cast<double>(q_resolution);
        std::uint64_t c = static_cast<std::uint64_t>(std::floor(scaled + 0.5));
        if (c > q_resolution) c = q_resolution;
        counts[a] = c;
    }
    return BooleanOracle::from_point_counts(oracle, q_resolution, std::move(counts));
}

// Exact number of marked (a, q) pairs, by enumeration.
inline std::uint64_t count_true(const BooleanOracle& oracle) {
    const std::uint64_t n = oracle.space_size();
    if (n > kEnumerationCap) throw std::length_error("count_true: domain too large for exhaustive sweep");
    std::uint64_t r = 0;
    for (std::uint64_t i = 0; i < n; ++i) r += static_cast<std::uint64_t>(oracle.query(i));
    return r;
}

// Discretized stochastic process: `steps` sequential values, each driven by a
// uniform draw r_i resolved to `branch` levels (r_i = a_i / branch). The
// statistic of the realized path is mapped affinely from [stat_min, stat_max]
// onto [0,1] and raised to `moment_power`.
struct StochasticProcessSpec {
    int steps = 1;
    std::uint64_t branch = 2;
    std::function<double(int step, const std::vector<double>& walk_so_far, double draw)> transition;
    std::function<double(const std::vector<double>& walk)> statistic;
    double stat_min = 0.0;
    double stat_max = 1.0;
    int moment_power = 1;

    void validate() const {
        if (steps < 1) throw std::invalid_argument("StochasticProcessSpec: steps must be >= 1");
        if (!is_power_of_two(branch)) throw std::invalid_argument("StochasticProcessSpec: branch must be a power of two");
        if (!(stat_max > stat_min)) throw std::invalid_argument("StochasticProcessSpec: empty statistic range");
        if (moment_power < 1) throw std::invalid_argument("StochasticProcessSpec: moment power must be >= 1");
        if (!transition || !statistic) throw std::invalid_argument("StochasticProcessSpec: missing transition or statistic");
    }
};

inline IntegrandOracle make_stochastic_oracle(const StochasticProcessSpec& spec) {
    spec.validate();
    GridDomain dom{spec.steps, spec.branch};
    dom.validate();
    const double inv_branch = 1.0 / static_cast<double>(spec.branch);
    const double lo = spec.stat_min, span = spec.stat_max - spec.stat_min;
    return IntegrandOracle::from_point_function(dom, [&](const std::vector<std::uint64_t>& coords) {
        std::vector<double> walk;
        walk.reserve(static_cast<std::size_t>(spec.steps));
        for (int i = 0; i < spec.steps; ++i) {
            const double draw = static_cast<double>(coords[static_cast<std::size_t>(i)]) * inv_branch;
            walk.push_back(spec.transition(i, walk, draw));
        }
        double scaled = (spec.statistic(walk) - lo) / span;
        if (scaled < -1e-9 || scaled > 1.0 + 1e-9)
            throw std::domain_error("stochastic statistic leaves the declared range: scaled value " +
                                    std::to_string(scaled));
        scaled = std::min(1.0, std::max(0.0, scaled));
        double out = 1.0;
        for (int p = 0; p < spec.moment_power; ++p) out *= scaled;
        return out;
    });
}

// Symmetric +/-1 random walk, statistic = final position scaled from
// [-steps, steps] onto [0,1], raised to moment_power.
inline StochasticProcessSpec make_plus_minus_walk(int steps, int moment_power = 1) {
    StochasticProcessSpec spec;
    spec.steps = steps;
    spec.branch = 2;
    spec.transition = [](int, const std::vector<double>& walk, double draw) {
        const double prev = walk.empty() ? 0.0 : walk.back();
        return prev + (draw < 0.5 ? -1.0 : 1.0);
    };
    spec.statistic = [](const std::vector<double>& walk) { return walk.back(); };
    spec.stat_min = -static_cast<double>(steps);
    spec.stat_max = static_cast<double>(steps);
    spec.moment_power = moment_power;
    return spec;
}

enum class Method {
    kQmSampling,
    kQmIterated,
    kQmGroverFft,
    kQcSampling,
    kQcFft,
    kSqrtSampling,
    kSqrtFft,
    kClassicalMc,
    kClassicalExact,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::kQmSampling: return "qm_sampling";
        case Method::kQmIterated: return "qm_iterated";
        case Method::kQmGroverFft: return "qm_fft";
        case Method::kQcSampling: return "qc_sampling";
        case Method::kQcFft: return "qc_fft";
        case Method::kSqrtSampling: return "sqrt_sampling";
        case Method::kSqrtFft: return "sqrt_fft";
        case Method::kClassicalMc: return "classical_mc";
        case Method::kClassicalExact: return "classical_exact";
    }
    return "unknown";
}

// Result of one estimator run. oracle_queries is always the delta of the
// oracle's logical query counter over the run.
struct Estimate {
    double value = 0.0;
    double target_accuracy = 0.0;
    std::uint64_t oracle_queries = 0;
    std::uint64_t shots = 0;
    Method method = Method::kClassicalExact;
    std::uint64_t seed = 0;
};

// Uniform sampling with replacement over the grid; the probabilistic baseline.
inline Estimate monte_carlo_estimate(const IntegrandOracle& oracle, std::uint64_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("monte_carlo_estimate: need at least one sample");
    Rng rng(seed);
    const std::uint64_t before = oracle.queries();
    const std::uint64_t points = oracle.point_count();
    double sum = 0.0;
    for (std::uint64_t i = 0; i < n_samples; ++i) sum += oracle.query(rng.index_below(points));
    Estimate est;
    est.value = sum / static_cast<double>(n_samples);
    est.target_accuracy = 0.0;
    est.oracle_queries = oracle.queries() - before;
    est.shots = n_samples;
    est.method = Method::kClassicalMc;
    est.seed = seed;
    return est;
}

inline Estimate classical_exact_estimate(const IntegrandOracle& oracle) {
    const std::uint64_t before = oracle.queries();
    Estimate est;
    est.value = true_mean(oracle);
    est.oracle_queries = oracle.queries() - before;
    est.shots = 0;
    est.method = Method::kClassicalExact;
    return est;
}

}  // namespace quint
