#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "quint/oracle.hpp"

namespace quint {

// Parsed form of "name", "name:headline" or "name:headline(key=value, ...)".
struct CallableSpec {
    std::string name;
    std::string headline;
    std::map<std::string, std::string> params;
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(what);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse " + what + " from '" + text + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(what);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse " + what + " from '" + text + "'");
    }
}

}  // namespace detail

inline CallableSpec parse_callable_spec(const std::string& text) {
    CallableSpec spec;
    std::string body = detail::strip(text);
    if (body.empty()) throw std::invalid_argument("empty spec");
    std::string args;
    const std::size_t open = body.find('(');
    if (open != std::string::npos) {
        if (body.back() != ')') throw std::invalid_argument("unbalanced parentheses in spec '" + text + "'");
        args = body.substr(open + 1, body.size() - open - 2);
        body = detail::strip(body.substr(0, open));
    }
    const std::size_t colon = body.find(':');
    if (colon != std::string::npos) {
        spec.name = detail::strip(body.substr(0, colon));
        spec.headline = detail::strip(body.substr(colon + 1));
    } else {
        spec.name = body;
    }
    if (spec.name.empty()) throw std::invalid_argument("missing name in spec '" + text + "'");
    std::size_t start = 0;
    while (start < args.size()) {
        std::size_t end = args.find(',', start);
        if (end == std::string::npos) end = args.size();
        const std::string item = detail::strip(args.substr(start, end - start));
        start = end + 1;
        if (item.empty()) continue;
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("parameter '" + item + "' in spec '" + text + "' is not key=value");
        spec.params[detail::strip(item.substr(0, eq))] = detail::strip(item.substr(eq + 1));
    }
    return spec;
}

struct NamedIntegrand {
    std::string name;  // canonical, comma-free form used in records
    IntegrandOracle oracle;
    bool is_process = false;
    StochasticProcessSpec process;  // populated for walk:*
};

namespace detail {

inline std::string param_or(const CallableSpec& spec, const std::string& key, const std::string& fallback) {
    const auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

inline std::string canonical_name(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (c == ' ' || c == '\t') continue;
        out += c == ',' ? ';' : c;
    }
    return out;
}

}  // namespace detail

// Built-in integrands and processes, addressable from configs and the CLI:
//   const:c                      constant integrand with value c
//   linear(d=,M=)                g(x) = (x_1 + ... + x_d) / d
//   product(d=,M=)               g(x) = x_1 * ... * x_d
//   gaussian-bump(d=,M=,mu=,sigma=,snap=)
//                                exp(-sum (x_i-mu)^2 / (2 sigma^2)), values
//                                snapped to multiples of 1/snap (snap=0: off)
//   walk:steps(p=)               fair +/-1 walk, final position scaled from
//                                [-steps, steps] onto [0,1], p-th moment
inline NamedIntegrand make_named_integrand(const std::string& text) {
    const CallableSpec spec = parse_callable_spec(text);
    NamedIntegrand out;
    out.name = detail::canonical_name(text);

    if (spec.name == "const") {
        const std::string c_text = !spec.headline.empty() ? spec.headline : detail::param_or(spec, "c", "0.5");
        const double c = detail::parse_double(c_text, "const value");
        GridDomain dom{static_cast<int>(detail::parse_uint(detail::param_or(spec, "d", "1"), "d")),
                       detail::parse_uint(detail::param_or(spec, "M", "16"), "M")};
        out.oracle = make_grid_oracle([c](const std::vector<double>&) { return c; }, dom);
        return out;
    }
    if (spec.name == "linear") {
        GridDomain dom{static_cast<int>(detail::parse_uint(detail::param_or(spec, "d", "1"), "d")),
                       detail::parse_uint(detail::param_or(spec, "M", "16"), "M")};
        out.oracle = make_grid_oracle(
            [](const std::vector<double>& x) {
                double s = 0.0;
                for (double xi : x) s += xi;
                return s / static_cast<double>(x.size());
            },
            dom);
        return out;
    }
    if (spec.name == "product") {
        GridDomain dom{static_cast<int>(detail::parse_uint(detail::param_or(spec, "d", "2"), "d")),
                       detail::parse_uint(detail::param_or(spec, "M", "4"), "M")};
        out.oracle = make_grid_oracle(
            [](const std::vector<double>& x) {
                double p = 1.0;
                for (double xi : x) p *= xi;
                return p;
            },
            dom);
        return out;
    }
    if (spec.name == "gaussian-bump") {
        GridDomain dom{static_cast<int>(detail::parse_uint(detail::param_or(spec, "d", "1"), "d")),
                       detail::parse_uint(detail::param_or(spec, "M", "16"), "M")};
        const double mu = detail::parse_double(detail::param_or(spec, "mu", "0.5"), "mu");
        const double sigma = detail::parse_double(detail::param_or(spec, "sigma", "0.17"), "sigma");
        const std::uint64_t snap = detail::parse_uint(detail::param_or(spec, "snap", "64"), "snap");
        if (sigma <= 0.0) throw std::invalid_argument("gaussian-bump: sigma must be positive");
        out.oracle = make_grid_oracle(
            [mu, sigma, snap](const std::vector<double>& x) {
                double q = 0.0;
                for (double xi : x) q += (xi - mu) * (xi - mu);
                const double v = std::exp(-q / (2.0 * sigma * sigma));
                if (snap == 0) return v;
                return std::floor(v * static_cast<double>(snap) + 0.5) / static_cast<double>(snap);
            },
            dom);
        return out;
    }
    if (spec.name == "walk") {
        const std::string steps_text = !spec.headline.empty() ? spec.headline : detail::param_or(spec, "steps", "6");
        const int steps = static_cast<int>(detail::parse_uint(steps_text, "walk steps"));
        const int power = static_cast<int>(detail::parse_uint(detail::param_or(spec, "p", "1"), "moment power"));
        out.is_process = true;
        out.process = make_plus_minus_walk(steps, power);
        out.oracle = make_stochastic_oracle(out.process);
        return out;
    }
    throw std::invalid_argument("unknown integrand '" + spec.name + "'");
}

// The set exercised by the demo command and the scaling benchmark. All
// members share a 16-point grid and take values on the 1/64 lattice, so the
// boolean extension at Q = 64 represents them without rounding error.
inline std::vector<std::string> builtin_sweep_set() {
    return {
        "linear(d=1,M=16)",
        "linear(d=2,M=4)",
        "product(d=2,M=4)",
        "gaussian-bump(d=1,M=16)",
        "walk:4(p=2)",
    };
}

}  // namespace quint
