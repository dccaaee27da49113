#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quint/oracle.hpp"
#include "quint/rng.hpp"

namespace quint {

using Amplitude = std::complex<double>;

inline constexpr int kDefaultQubitCap = 26;

// Register layout. Bit assignment within a basis index, least significant
// first: function qubits [0, f), ancilla bit at position f (when present),
// counting qubits above that. So |j>|r>|a> has index (j << (f+anc)) | (r << f) | a.
struct QubitLayout {
    int ancilla_count = 0;
    int function_qubits = 1;
    int counting_qubits = 0;
    int qubit_cap = kDefaultQubitCap;

    void validate() const {
        if (ancilla_count != 0 && ancilla_count != 1)
            throw std::invalid_argument("QubitLayout: ancilla count must be 0 or 1");
        if (function_qubits < 1) throw std::invalid_argument("QubitLayout: need at least one function qubit");
        if (counting_qubits < 0) throw std::invalid_argument("QubitLayout: negative counting register");
        if (total_qubits() > qubit_cap)
            throw std::length_error("QubitLayout: " + std::to_string(total_qubits()) +
                                    " qubits exceed the cap of " + std::to_string(qubit_cap));
    }

    int total_qubits() const { return ancilla_count + function_qubits + counting_qubits; }
    int system_qubits() const { return ancilla_count + function_qubits; }

    std::uint64_t dim() const { return std::uint64_t{1} << total_qubits(); }
    std::uint64_t function_dim() const { return std::uint64_t{1} << function_qubits; }
    std::uint64_t system_dim() const { return std::uint64_t{1} << system_qubits(); }
    std::uint64_t counting_dim() const { return std::uint64_t{1} << counting_qubits; }

    // 0 when there is no ancilla.
    std::uint64_t ancilla_mask() const {
        return ancilla_count ? (std::uint64_t{1} << function_qubits) : 0;
    }
};

// Dense register of 2^n complex amplitudes.
struct StateVector {
    QubitLayout layout;
    std::vector<Amplitude> amps;

    double norm_sq() const {
        double s = 0.0;
        for (const Amplitude& a : amps) s += std::norm(a);
        return s;
    }
};

inline StateVector new_zero_state(const QubitLayout& layout) {
    layout.validate();
    StateVector state{layout, std::vector<Amplitude>(layout.dim(), Amplitude{0.0, 0.0})};
    state.amps[0] = Amplitude{1.0, 0.0};
    return state;
}

// Hadamard on each qubit in [first_qubit, first_qubit + qubit_count).
inline void apply_walsh_hadamard(StateVector& state, int first_qubit, int qubit_count) {
    const int total = state.layout.total_qubits();
    if (first_qubit < 0 || qubit_count < 0 || first_qubit + qubit_count > total)
        throw std::out_of_range("apply_walsh_hadamard: qubit range outside layout");
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    const std::uint64_t n = state.amps.size();
    for (int q = first_qubit; q < first_qubit + qubit_count; ++q) {
        const std::uint64_t half = std::uint64_t{1} << q;
        const std::uint64_t stride = half << 1;
        for (std::uint64_t base = 0; base < n; base += stride) {
            for (std::uint64_t i = 0; i < half; ++i) {
                const std::uint64_t i0 = base + i;
                const std::uint64_t i1 = i0 + half;
                const Amplitude a = state.amps[i0];
                const Amplitude b = state.amps[i1];
                state.amps[i0] = (a + b) * inv_sqrt2;
                state.amps[i1] = (a - b) * inv_sqrt2;
            }
        }
    }
}

inline void apply_walsh_hadamard_function(StateVector& state) {
    apply_walsh_hadamard(state, 0, state.layout.function_qubits);
}

enum class RotationMode { kShifted, kSqrt };

namespace detail {

// Ancilla rotation conditioned on the function register: for each grid point a
// the (|0>|a>, |1>|a>) pair is rotated by the angle whose sine is v(a). One
// logical oracle query per grid point per invocation.
inline void oracle_rotation(StateVector& state, const IntegrandOracle& oracle, RotationMode mode,
                            double shift, bool inverse) {
    const QubitLayout& lay = state.layout;
    if (lay.ancilla_count != 1) throw std::invalid_argument("oracle rotation requires the ancilla qubit");
    if (oracle.domain().total_bits() != lay.function_qubits)
        throw std::invalid_argument("oracle rotation: oracle domain does not match the function register");
    if (mode == RotationMode::kShifted && (shift < 0.0 || shift > 1.0))
        throw std::invalid_argument("oracle rotation: shift must lie in [0,1]");
    const std::uint64_t points = lay.function_dim();
    const std::uint64_t anc = lay.ancilla_mask();
    const std::uint64_t blocks = lay.counting_dim();
    const int sys_bits = lay.system_qubits();
    for (std::uint64_t a = 0; a < points; ++a) {
        double v = mode == RotationMode::kShifted ? oracle.query(a) - shift : std::sqrt(oracle.query(a));
        if (std::abs(v) > 1.0 + 1e-12)
            throw std::domain_error("oracle rotation: |value| > 1 at grid point " +
                                    oracle.domain().point_to_string(a));
        v = std::min(1.0, std::max(-1.0, v));
        const double c = std::sqrt(1.0 - v * v);
        const double s = inverse ? -v : v;
        for (std::uint64_t j = 0; j < blocks; ++j) {
            const std::uint64_t i0 = (j << sys_bits) | a;
            const std::uint64_t i1 = i0 | anc;
            const Amplitude a0 = state.amps[i0];
            const Amplitude a1 = state.amps[i1];
            state.amps[i0] = c * a0 - s * a1;
            state.amps[i1] = s * a0 + c * a1;
        }
    }
}

}  // namespace detail

inline void apply_oracle_rotation(StateVector& state, const IntegrandOracle& oracle, RotationMode mode,
                                  double shift = 0.0) {
    detail::oracle_rotation(state, oracle, mode, shift, /*inverse=*/false);
}

inline void apply_oracle_rotation_inverse(StateVector& state, const IntegrandOracle& oracle, RotationMode mode,
                                          double shift = 0.0) {
    detail::oracle_rotation(state, oracle, mode, shift, /*inverse=*/true);
}

inline void invert_phase_index(StateVector& state, std::uint64_t basis_index) {
    if (basis_index >= state.amps.size()) throw std::out_of_range("invert_phase_index: basis index out of range");
    state.amps[basis_index] = -state.amps[basis_index];
}

template <class Pred>
inline void invert_phase_predicate(StateVector& state, Pred&& marked) {
    const std::uint64_t n = state.amps.size();
    for (std::uint64_t i = 0; i < n; ++i)
        if (marked(i)) state.amps[i] = -state.amps[i];
}

enum class PreparationKind { kGroverU, kHadamardOnly, kSqrtRotation };

// The unitary U of one estimator variant: which composite maps |0...0> to the
// state whose target amplitude encodes the quantity being estimated.
//   kGroverU:      W^-1 R W   (R rotates by f - shift)
//   kHadamardOnly: W          (over the whole boolean domain)
//   kSqrtRotation: R^ W       (R^ rotates by sqrt(f); no trailing W^-1)
struct PreparationDescriptor {
    PreparationKind kind = PreparationKind::kHadamardOnly;
    IntegrandOracle oracle;  // required for kGroverU and kSqrtRotation
    double shift = 0.0;      // used by kGroverU only
};

namespace detail {

inline void require_descriptor_layout(const PreparationDescriptor& desc, const QubitLayout& lay) {
    const bool needs_ancilla = desc.kind != PreparationKind::kHadamardOnly;
    if (needs_ancilla && lay.ancilla_count != 1)
        throw std::invalid_argument("preparation: this descriptor requires the ancilla qubit");
    if (!needs_ancilla && lay.ancilla_count != 0)
        throw std::invalid_argument("preparation: Hadamard-only descriptor takes no ancilla");
    if (needs_ancilla && !desc.oracle.valid())
        throw std::invalid_argument("preparation: descriptor is missing its oracle");
}

}  // namespace detail

inline void apply_preparation(StateVector& state, const PreparationDescriptor& desc) {
    detail::require_descriptor_layout(desc, state.layout);
    switch (desc.kind) {
        case PreparationKind::kGroverU:
            apply_walsh_hadamard_function(state);
            apply_oracle_rotation(state, desc.oracle, RotationMode::kShifted, desc.shift);
            apply_walsh_hadamard_function(state);
            break;
        case PreparationKind::kHadamardOnly:
            apply_walsh_hadamard_function(state);
            break;
        case PreparationKind::kSqrtRotation:
            apply_walsh_hadamard_function(state);
            apply_oracle_rotation(state, desc.oracle, RotationMode::kSqrt);
            break;
    }
}

inline void apply_preparation_inverse(StateVector& state, const PreparationDescriptor& desc) {
    detail::require_descriptor_layout(desc, state.layout);
    switch (desc.kind) {
        case PreparationKind::kGroverU:
            apply_walsh_hadamard_function(state);
            apply_oracle_rotation_inverse(state, desc.oracle, RotationMode::kShifted, desc.shift);
            apply_walsh_hadamard_function(state);
            break;
        case PreparationKind::kHadamardOnly:
            apply_walsh_hadamard_function(state);
            break;
        case PreparationKind::kSqrtRotation:
            apply_oracle_rotation_inverse(state, desc.oracle, RotationMode::kSqrt);
            apply_walsh_hadamard_function(state);
            break;
    }
}

inline StateVector prepare(const PreparationDescriptor& desc, const QubitLayout& layout) {
    StateVector state = new_zero_state(layout);
    apply_preparation(state, desc);
    return state;
}

// One amplitude-amplification iterate G = -I_s U^-1 I_t U, with I_s the phase
// inversion of the all-zeros state. Applied to states without a counting
// register; the counting construction drives this per block.
template <class Pred>
inline void grover_iterate(StateVector& state, const PreparationDescriptor& desc, Pred&& target) {
    if (state.layout.counting_qubits != 0)
        throw std::invalid_argument("grover_iterate: state must not carry a counting register");
    apply_preparation(state, desc);
    invert_phase_predicate(state, target);
    apply_preparation_inverse(state, desc);
    // -I_s: negate everything except the all-zeros component.
    const std::uint64_t n = state.amps.size();
    for (std::uint64_t i = 1; i < n; ++i) state.amps[i] = -state.amps[i];
}

// (1/sqrt(A)) sum_j |j> G^j |s>, built with A-1 cumulative applications of G.
// sys_layout describes the register G acts on; the counting register is added
// on top of it.
template <class Pred>
inline StateVector build_counting_state(const PreparationDescriptor& desc, Pred&& target,
                                        std::uint64_t fft_size, QubitLayout sys_layout) {
    if (!is_power_of_two(fft_size)) throw std::invalid_argument("build_counting_state: A must be a power of two");
    sys_layout.counting_qubits = 0;
    sys_layout.validate();
    QubitLayout full_layout = sys_layout;
    full_layout.counting_qubits = log2_exact(fft_size);
    full_layout.validate();  // capacity error if the counting register does not fit

    StateVector block = new_zero_state(sys_layout);
    StateVector state{full_layout, std::vector<Amplitude>(full_layout.dim(), Amplitude{0.0, 0.0})};
    const double scale = 1.0 / std::sqrt(static_cast<double>(fft_size));
    const int sys_bits = sys_layout.total_qubits();
    const std::uint64_t sys_dim = sys_layout.dim();
    for (std::uint64_t j = 0; j < fft_size; ++j) {
        if (j > 0) grover_iterate(block, desc, target);
        const std::uint64_t base = j << sys_bits;
        for (std::uint64_t x = 0; x < sys_dim; ++x) state.amps[base | x] = block.amps[x] * scale;
    }
    return state;
}

namespace detail {

// Iterative radix-2 transform, kernel exp(-2*pi*i*j*m/A), scaled by 1/sqrt(A).
inline void fft_radix2(std::vector<Amplitude>& data, bool inverse) {
    const std::size_t n = data.size();
    for (std::size_t i = 1, rev = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; rev & bit; bit >>= 1) rev ^= bit;
        rev ^= bit;
        if (i < rev) std::swap(data[i], data[rev]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const Amplitude root{std::cos(ang), std::sin(ang)};
        for (std::size_t base = 0; base < n; base += len) {
            Amplitude w{1.0, 0.0};
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Amplitude u = data[base + k];
                const Amplitude v = data[base + k + len / 2] * w;
                data[base + k] = u + v;
                data[base + k + len / 2] = u - v;
                w *= root;
            }
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Amplitude& a : data) a *= scale;
}

inline void dft_counting(StateVector& state, bool inverse) {
    const QubitLayout& lay = state.layout;
    if (lay.counting_qubits < 1) throw std::domain_error("dft_counting_register: no counting register");
    const std::uint64_t blocks = lay.counting_dim();
    const std::uint64_t sys_dim = lay.system_dim();
    const int sys_bits = lay.system_qubits();
    std::vector<Amplitude> column(blocks);
    for (std::uint64_t x = 0; x < sys_dim; ++x) {
        for (std::uint64_t j = 0; j < blocks; ++j) column[j] = state.amps[(j << sys_bits) | x];
        fft_radix2(column, inverse);
        for (std::uint64_t j = 0; j < blocks; ++j) state.amps[(j << sys_bits) | x] = column[j];
    }
}

}  // namespace detail

inline void dft_counting_register(StateVector& state) { detail::dft_counting(state, false); }
inline void inverse_dft_counting_register(StateVector& state) { detail::dft_counting(state, true); }

template <class Pred>
inline double probability_of(const StateVector& state, Pred&& event) {
    double p = 0.0;
    const std::uint64_t n = state.amps.size();
    for (std::uint64_t i = 0; i < n; ++i)
        if (event(i)) p += std::norm(state.amps[i]);
    return p;
}

// Marginal distribution of the counting register.
inline std::vector<double> counting_register_distribution(const StateVector& state) {
    const QubitLayout& lay = state.layout;
    if (lay.counting_qubits < 1) throw std::domain_error("counting_register_distribution: no counting register");
    std::vector<double> dist(lay.counting_dim(), 0.0);
    const std::uint64_t sys_dim = lay.system_dim();
    const int sys_bits = lay.system_qubits();
    for (std::uint64_t j = 0; j < dist.size(); ++j)
        for (std::uint64_t x = 0; x < sys_dim; ++x) dist[j] += std::norm(state.amps[(j << sys_bits) | x]);
    return dist;
}

// Seeded draws from the |amplitude|^2 distribution.
inline std::map<std::uint64_t, std::uint64_t> sample_measurements(const StateVector& state, std::uint64_t shots,
                                                                  std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("sample_measurements: need at least one shot");
    std::vector<double> cdf(state.amps.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
        acc += std::norm(state.amps[i]);
        cdf[i] = acc;
    }
    Rng rng(seed);
    std::map<std::uint64_t, std::uint64_t> histogram;
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = rng.uniform01() * acc;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const std::uint64_t idx = it == cdf.end() ? cdf.size() - 1 : static_cast<std::uint64_t>(it - cdf.begin());
        ++histogram[idx];
    }
    return histogram;
}

// Draw one index from an explicit distribution (used for counting readout).
inline std::uint64_t sample_index(const std::vector<double>& dist, Rng& rng) {
    double total = 0.0;
    for (double p : dist) total += p;
    double u = rng.uniform01() * total;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        u -= dist[i];
        if (u <= 0.0) return i;
    }
    return dist.size() - 1;
}

}  // namespace quint
