// Dense statevector simulation for small qubit registers.
//
// Basis states are indexed little-endian: qubit q contributes bit (1 << q)
// to the basis index, so qubit 0 is the least significant bit.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sudai {

using complex = std::complex<double>;

inline constexpr unsigned kMaxQubits = 12;

enum class GateKind { RX, RY, RZ, H, CNOT, CSWAP };

inline const char* to_string(GateKind kind) {
    switch (kind) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::H: return "H";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CSWAP: return "CSWAP";
    }
    return "?";
}

inline bool is_rotation(GateKind kind) {
    return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ;
}

/// Number of target qubits a gate kind acts on (controls excluded).
inline unsigned target_count(GateKind kind) { return kind == GateKind::CSWAP ? 2 : 1; }

inline bool is_controlled(GateKind kind) {
    return kind == GateKind::CNOT || kind == GateKind::CSWAP;
}

/// A single gate. Rotations use R_P(theta) = exp(-i theta P / 2).
/// Unused target/control slots are ignored for kinds that do not need them.
struct Gate {
    GateKind kind = GateKind::H;
    double angle = 0.0;
    std::array<unsigned, 2> targets{0, 0};
    unsigned control = 0;

    static Gate rx(unsigned q, double theta) { return {GateKind::RX, theta, {q, 0}, 0}; }
    static Gate ry(unsigned q, double theta) { return {GateKind::RY, theta, {q, 0}, 0}; }
    static Gate rz(unsigned q, double theta) { return {GateKind::RZ, theta, {q, 0}, 0}; }
    static Gate h(unsigned q) { return {GateKind::H, 0.0, {q, 0}, 0}; }
    static Gate cnot(unsigned control, unsigned target) {
        return {GateKind::CNOT, 0.0, {target, 0}, control};
    }
    static Gate cswap(unsigned control, unsigned a, unsigned b) {
        return {GateKind::CSWAP, 0.0, {a, b}, control};
    }

    /// All qubits touched by the gate, controls first.
    std::vector<unsigned> qubits() const {
        std::vector<unsigned> out;
        if (is_controlled(kind)) out.push_back(control);
        for (unsigned i = 0; i < target_count(kind); ++i) out.push_back(targets[i]);
        return out;
    }

    /// Checks index ranges, distinctness and the no-angle rule for fixed gates.
    void validate(unsigned num_qubits) const {
        const auto qs = qubits();
        for (std::size_t i = 0; i < qs.size(); ++i) {
            if (qs[i] >= num_qubits) {
                throw std::out_of_range(std::string(to_string(kind)) + ": qubit index " +
                                        std::to_string(qs[i]) + " out of range for " +
                                        std::to_string(num_qubits) + " qubits");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (qs[i] == qs[j]) {
                    throw std::invalid_argument(std::string(to_string(kind)) +
                                                ": duplicate qubit index " +
                                                std::to_string(qs[i]));
                }
            }
        }
        if (!is_rotation(kind) && angle != 0.0) {
            throw std::invalid_argument(std::string(to_string(kind)) + " carries no angle");
        }
    }
};

class StateVector {
public:
    /// |0...0> on num_qubits qubits.
    explicit StateVector(unsigned num_qubits) : num_qubits_(checked(num_qubits)) {
        amplitudes_.assign(std::size_t{1} << num_qubits_, complex{0.0, 0.0});
        amplitudes_[0] = 1.0;
    }

    /// Takes ownership of raw amplitudes; the caller is responsible for normalization.
    StateVector(unsigned num_qubits, std::vector<complex> amplitudes)
        : num_qubits_(checked(num_qubits)), amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.size() != (std::size_t{1} << num_qubits_)) {
            throw std::invalid_argument("amplitude count must be 2^num_qubits");
        }
    }

    unsigned num_qubits() const { return num_qubits_; }
    std::size_t dim() const { return amplitudes_.size(); }
    const std::vector<complex>& amplitudes() const { return amplitudes_; }
    const complex& operator[](std::size_t k) const { return amplitudes_[k]; }

    double norm_squared() const {
        double s = 0.0;
        for (const auto& a : amplitudes_) s += std::norm(a);
        return s;
    }

    /// In-place gate application by stride iteration over amplitude pairs.
    void apply(const Gate& gate) {
        gate.validate(num_qubits_);
        switch (gate.kind) {
        case GateKind::RX: {
            const double c = std::cos(gate.angle / 2), s = std::sin(gate.angle / 2);
            for_each_pair(gate.targets[0], [c, s](complex& a0, complex& a1) {
                const complex x0 = a0, x1 = a1;
                a0 = c * x0 + complex{s * x1.imag(), -s * x1.real()};
                a1 = complex{s * x0.imag(), -s * x0.real()} + c * x1;
            });
            break;
        }
        case GateKind::RY: {
            const double c = std::cos(gate.angle / 2), s = std::sin(gate.angle / 2);
            for_each_pair(gate.targets[0], [c, s](complex& a0, complex& a1) {
                const complex x0 = a0, x1 = a1;
                a0 = c * x0 - s * x1;
                a1 = s * x0 + c * x1;
            });
            break;
        }
        case GateKind::RZ: {
            const complex m0 = std::polar(1.0, -gate.angle / 2);
            const complex m1 = std::polar(1.0, gate.angle / 2);
            for_each_pair(gate.targets[0], [m0, m1](complex& a0, complex& a1) {
                a0 *= m0;
                a1 *= m1;
            });
            break;
        }
        case GateKind::H: {
            const double r = 1.0 / std::sqrt(2.0);
            for_each_pair(gate.targets[0], [r](complex& a0, complex& a1) {
                const complex x0 = a0, x1 = a1;
                a0 = r * (x0 + x1);
                a1 = r * (x0 - x1);
            });
            break;
        }
        case GateKind::CNOT: {
            const std::size_t cbit = std::size_t{1} << gate.control;
            const std::size_t tbit = std::size_t{1} << gate.targets[0];
            for (std::size_t k = 0; k < amplitudes_.size(); ++k) {
                if ((k & cbit) && !(k & tbit)) std::swap(amplitudes_[k], amplitudes_[k | tbit]);
            }
            break;
        }
        case GateKind::CSWAP: {
            const std::size_t cbit = std::size_t{1} << gate.control;
            const std::size_t abit = std::size_t{1} << gate.targets[0];
            const std::size_t bbit = std::size_t{1} << gate.targets[1];
            for (std::size_t k = 0; k < amplitudes_.size(); ++k) {
                // visit each |..a=1,b=0..> once and swap with its |..a=0,b=1..> partner
                if ((k & cbit) && (k & abit) && !(k & bbit)) {
                    std::swap(amplitudes_[k], amplitudes_[(k & ~abit) | bbit]);
                }
            }
            break;
        }
        }
    }

private:
    static unsigned checked(unsigned n) {
        if (n < 1 || n > kMaxQubits) {
            throw std::out_of_range("qubit count " + std::to_string(n) + " outside 1.." +
                                    std::to_string(kMaxQubits));
        }
        return n;
    }

    template <class F>
    void for_each_pair(unsigned qubit, F&& f) {
        const std::size_t stride = std::size_t{1} << qubit;
        const std::size_t n = amplitudes_.size();
        for (std::size_t base = 0; base < n; base += 2 * stride) {
            for (std::size_t k = base; k < base + stride; ++k) f(amplitudes_[k], amplitudes_[k + stride]);
        }
    }

    unsigned num_qubits_;
    std::vector<complex> amplitudes_;
};

inline StateVector new_zero_state(unsigned num_qubits) { return StateVector(num_qubits); }

inline StateVector apply_gate(StateVector state, const Gate& gate) {
    state.apply(gate);
    return state;
}

inline void check_qubit(const StateVector& state, unsigned qubit) {
    if (qubit >= state.num_qubits()) {
        throw std::out_of_range("qubit index " + std::to_string(qubit) + " out of range");
    }
}

/// Probability that measuring `qubit` yields `outcome`.
inline double measure_prob(const StateVector& state, unsigned qubit, int outcome) {
    check_qubit(state, qubit);
    if (outcome != 0 && outcome != 1) throw std::invalid_argument("outcome must be 0 or 1");
    const std::size_t bit = std::size_t{1} << qubit;
    double p = 0.0;
    for (std::size_t k = 0; k < state.dim(); ++k) {
        if (((k & bit) != 0) == (outcome == 1)) p += std::norm(state[k]);
    }
    return p;
}

struct MeasurementCounts {
    std::uint64_t zeros = 0;
    std::uint64_t ones = 0;
    bool operator==(const MeasurementCounts&) const = default;
};

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline MeasurementCounts sample_measurements(const StateVector& state, unsigned qubit,
                                             std::uint64_t shots, std::uint64_t rng_seed) {
    if (shots == 0) throw std::invalid_argument("shots must be >= 1");
    const double p1 = measure_prob(state, qubit, 1);
    std::mt19937_64 rng(rng_seed);
    MeasurementCounts counts;
    for (std::uint64_t i = 0; i < shots; ++i) {
        if (uniform01(rng) < p1) ++counts.ones;
        else ++counts.zeros;
    }
    return counts;
}

/// Row-major 2^n x 2^n density matrix.
class DensityMatrix {
public:
    DensityMatrix(unsigned num_qubits, std::vector<complex> entries)
        : num_qubits_(num_qubits), entries_(std::move(entries)) {
        if (entries_.size() != dim() * dim()) {
            throw std::invalid_argument("density matrix entry count must be 4^num_qubits");
        }
    }

    unsigned num_qubits() const { return num_qubits_; }
    std::size_t dim() const { return std::size_t{1} << num_qubits_; }
    const complex& operator()(std::size_t row, std::size_t col) const {
        return entries_[row * dim() + col];
    }
    const std::vector<complex>& entries() const { return entries_; }

    complex trace() const {
        complex t{0.0, 0.0};
        for (std::size_t i = 0; i < dim(); ++i) t += (*this)(i, i);
        return t;
    }

    double hermiticity_error() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < dim(); ++i)
            for (std::size_t j = 0; j < dim(); ++j)
                worst = std::max(worst, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
        return worst;
    }

private:
    unsigned num_qubits_;
    std::vector<complex> entries_;
};

/// Partial trace onto `keep`; keep[i] becomes bit i of the reduced basis index.
inline DensityMatrix reduced_density(const StateVector& state, const std::vector<unsigned>& keep) {
    if (keep.empty()) throw std::invalid_argument("keep set is empty");
    for (std::size_t i = 0; i < keep.size(); ++i) {
        check_qubit(state, keep[i]);
        for (std::size_t j = 0; j < i; ++j)
            if (keep[i] == keep[j]) throw std::invalid_argument("duplicate qubit in keep set");
    }
    const auto n_keep = static_cast<unsigned>(keep.size());
    const std::size_t d = std::size_t{1} << n_keep;

    std::size_t keep_mask = 0;
    for (unsigned q : keep) keep_mask |= std::size_t{1} << q;
    std::vector<unsigned> env;
    for (unsigned q = 0; q < state.num_qubits(); ++q)
        if (!(keep_mask & (std::size_t{1} << q))) env.push_back(q);

    auto spread = [](std::size_t local, const std::vector<unsigned>& qubits) {
        std::size_t full = 0;
        for (std::size_t i = 0; i < qubits.size(); ++i)
            if (local & (std::size_t{1} << i)) full |= std::size_t{1} << qubits[i];
        return full;
    };
    std::vector<std::size_t> keep_index(d);
    for (std::size_t i = 0; i < d; ++i) keep_index[i] = spread(i, keep);
    const std::size_t n_env = std::size_t{1} << env.size();

    std::vector<complex> rho(d * d, complex{0.0, 0.0});
    for (std::size_t e = 0; e < n_env; ++e) {
        const std::size_t env_bits = spread(e, env);
        for (std::size_t i = 0; i < d; ++i) {
            const complex ai = state[keep_index[i] | env_bits];
            if (ai == complex{0.0, 0.0}) continue;
            for (std::size_t j = 0; j < d; ++j)
                rho[i * d + j] += ai * std::conj(state[keep_index[j] | env_bits]);
        }
    }
    return DensityMatrix(n_keep, std::move(rho));
}

/// Tr(rho sigma); equals |<phi|psi>|^2 for pure states.
inline double purity_overlap(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.num_qubits() != sigma.num_qubits()) {
        throw std::invalid_argument("density matrices differ in dimension");
    }
    complex t{0.0, 0.0};
    for (std::size_t i = 0; i < rho.dim(); ++i)
        for (std::size_t j = 0; j < rho.dim(); ++j) t += rho(i, j) * sigma(j, i);
    return t.real();
}

/// Runs H(ancilla), CSWAP(ancilla; a, b), H(ancilla) on a copy of `state` and
/// returns the probability of reading 0 on the ancilla, which is
/// (1 + Tr(rho_a rho_b)) / 2 for the reduced states of a and b.
inline double swap_test(StateVector state, unsigned ancilla, unsigned qubit_a, unsigned qubit_b) {
    if (ancilla == qubit_a || ancilla == qubit_b || qubit_a == qubit_b) {
        throw std::invalid_argument("swap test indices must be distinct");
    }
    if (measure_prob(state, ancilla, 1) > 1e-12) {
        throw std::invalid_argument("swap test ancilla is not in |0>");
    }
    state.apply(Gate::h(ancilla));
    state.apply(Gate::cswap(ancilla, qubit_a, qubit_b));
    state.apply(Gate::h(ancilla));
    return measure_prob(state, ancilla, 0);
}

}  // namespace sudai
