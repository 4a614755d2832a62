// Successive data injection circuits.
//
// An agent circuit on n qubits interleaves K input layers with K variational
// layers and then appends `final_blocks` further variational layers:
//
//   I(a_1) V_1 I(a_2) V_2 ... I(a_K) V_K  V_{K+1} ... V_{K+final_blocks}
//
// I(a_k) applies RY(a_k * w_q) on every qubit q with its own weight w_q.
// V applies RX then RZ on every qubit, followed by a CNOT staircase
// 0->1, 1->2, ..., (n-2)->(n-1).

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sudai/quantum_core.hpp"

namespace sudai {

struct CircuitConfig {
    unsigned agent_qubits = 3;
    unsigned layers = 10;
    unsigned final_blocks = 1;

    void validate() const {
        if (agent_qubits < 2) throw std::invalid_argument("agent_qubits must be >= 2");
        if (layers < 1) throw std::invalid_argument("layers must be >= 1");
    }
    bool operator==(const CircuitConfig&) const = default;
};

/// Parameters of one agent: K*n input weights plus (K + final_blocks)*2n angles.
inline std::size_t param_count(const CircuitConfig& config) {
    config.validate();
    const std::size_t n = config.agent_qubits, k = config.layers;
    return k * n + (k + config.final_blocks) * 2 * n;
}

enum class Agent { Discriminator, Generator };

inline const char* to_string(Agent agent) {
    return agent == Agent::Discriminator ? "discriminator" : "generator";
}

/// Index map of the flat parameter vector. The discriminator partition comes
/// first, the generator partition second; both share the same agent-local layout:
/// for each layer k the n input weights, then for each qubit its RX and RZ angle;
/// the final variational blocks follow the K pairs.
class ParamLayout {
public:
    explicit ParamLayout(CircuitConfig config) : config_(config), per_agent_(param_count(config)) {}

    const CircuitConfig& config() const { return config_; }
    std::size_t per_agent() const { return per_agent_; }
    std::size_t total() const { return 2 * per_agent_; }
    std::size_t offset(Agent agent) const {
        return agent == Agent::Discriminator ? 0 : per_agent_;
    }
    Agent partition_of(std::size_t index) const {
        if (index >= total()) throw std::out_of_range("parameter index out of range");
        return index < per_agent_ ? Agent::Discriminator : Agent::Generator;
    }

    std::size_t input_index(Agent agent, unsigned layer, unsigned qubit) const {
        check(layer < config_.layers, qubit);
        return offset(agent) + block_start(layer) + qubit;
    }
    /// Variational block b in [0, K + final_blocks); RX angle of `qubit`.
    std::size_t rx_index(Agent agent, unsigned block, unsigned qubit) const {
        return variational_start(agent, block) + 2 * qubit;
    }
    std::size_t rz_index(Agent agent, unsigned block, unsigned qubit) const {
        return variational_start(agent, block) + 2 * qubit + 1;
    }

    bool operator==(const ParamLayout& other) const { return config_ == other.config_; }

private:
    std::size_t block_start(unsigned layer) const {
        return std::size_t{layer} * 3 * config_.agent_qubits;
    }
    std::size_t variational_start(Agent agent, unsigned block) const {
        check(block < config_.layers + config_.final_blocks, 0);
        if (block < config_.layers) {
            return offset(agent) + block_start(block) + config_.agent_qubits;
        }
        return offset(agent) + block_start(config_.layers) +
               std::size_t{block - config_.layers} * 2 * config_.agent_qubits;
    }
    void check(bool layer_ok, unsigned qubit) const {
        if (!layer_ok) throw std::out_of_range("layer index out of range");
        if (qubit >= config_.agent_qubits) throw std::out_of_range("agent qubit out of range");
    }

    CircuitConfig config_;
    std::size_t per_agent_;
};

class ParamVector {
public:
    explicit ParamVector(const CircuitConfig& config)
        : layout_(config), values_(layout_.total(), 0.0) {}
    ParamVector(const CircuitConfig& config, std::vector<double> values)
        : layout_(config), values_(std::move(values)) {
        if (values_.size() != layout_.total()) {
            throw std::invalid_argument("parameter vector has " + std::to_string(values_.size()) +
                                        " values, layout needs " + std::to_string(layout_.total()));
        }
    }

    /// Independent uniform samples in [-pi, pi).
    static ParamVector random(const CircuitConfig& config, std::uint64_t seed) {
        ParamVector p(config);
        std::mt19937_64 rng(seed);
        for (auto& v : p.values_) v = -std::numbers::pi + 2.0 * std::numbers::pi * uniform01(rng);
        return p;
    }

    const ParamLayout& layout() const { return layout_; }
    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    std::span<const double> partition(Agent agent) const {
        return std::span<const double>(values_).subspan(layout_.offset(agent), layout_.per_agent());
    }
    std::span<double> partition(Agent agent) {
        return std::span<double>(values_).subspan(layout_.offset(agent), layout_.per_agent());
    }

    bool operator==(const ParamVector&) const = default;

private:
    ParamLayout layout_;
    std::vector<double> values_;
};

/// Where a gate's rotation angle comes from.
struct AngleSource {
    enum class Kind { None, Constant, Param, DataScaled };
    Kind kind = Kind::None;
    double constant = 0.0;
    std::size_t param = 0;
    double data = 0.0;

    static AngleSource none() { return {}; }
    static AngleSource fixed(double angle) { return {Kind::Constant, angle, 0, 0.0}; }
    static AngleSource bound(std::size_t index) { return {Kind::Param, 0.0, index, 0.0}; }
    static AngleSource scaled(std::size_t index, double data) {
        return {Kind::DataScaled, 0.0, index, data};
    }

    bool references_param() const { return kind == Kind::Param || kind == Kind::DataScaled; }
    /// d(angle)/d(param): the data value for scaled gates, 1 for bound gates.
    double chain_factor() const { return kind == Kind::DataScaled ? data : 1.0; }

    double resolve(std::span<const double> params) const {
        switch (kind) {
        case Kind::None: return 0.0;
        case Kind::Constant: return constant;
        case Kind::Param: return params[param];
        case Kind::DataScaled: return data * params[param];
        }
        return 0.0;
    }
    bool operator==(const AngleSource&) const = default;
};

/// A gate whose qubits are relative to the register it will be placed on.
struct GateBinding {
    Gate gate;
    AngleSource angle;
    bool operator==(const GateBinding& o) const {
        return gate.kind == o.gate.kind && gate.targets == o.gate.targets &&
               gate.control == o.gate.control && gate.angle == o.gate.angle && angle == o.angle;
    }
};

struct CircuitSpec {
    std::vector<GateBinding> gates;

    void append(const CircuitSpec& other) {
        gates.insert(gates.end(), other.gates.begin(), other.gates.end());
    }
    bool operator==(const CircuitSpec&) const = default;
};

/// Optional perturbation of one gate's resolved angle (parameter-shift evaluations).
struct AngleShift {
    std::size_t gate_index = 0;
    double delta = 0.0;
};

/// Applies `spec` to `state`, offsetting every qubit index by `qubit_offset`.
inline void run_circuit(StateVector& state, const CircuitSpec& spec, std::span<const double> params,
                        unsigned qubit_offset = 0, const AngleShift* shift = nullptr) {
    for (std::size_t i = 0; i < spec.gates.size(); ++i) {
        const auto& b = spec.gates[i];
        Gate g = b.gate;
        g.targets[0] += qubit_offset;
        if (target_count(g.kind) > 1) g.targets[1] += qubit_offset;
        if (is_controlled(g.kind)) g.control += qubit_offset;
        if (is_rotation(g.kind)) {
            g.angle = b.angle.resolve(params);
            if (shift && shift->gate_index == i) g.angle += shift->delta;
        }
        state.apply(g);
    }
}

/// Parameter-shift gradient of `expectation(state)` for `spec` run on |0...0>.
/// Exact when `expectation` is linear in the density matrix (probabilities,
/// Pauli expectations).
template <class Expectation>
std::vector<double> expectation_gradient(const CircuitSpec& spec, std::span<const double> params,
                                         unsigned num_qubits, Expectation&& expectation) {
    std::vector<double> grad(params.size(), 0.0);
    const auto eval = [&](const AngleShift* shift) {
        StateVector state(num_qubits);
        run_circuit(state, spec, params, 0, shift);
        return expectation(std::as_const(state));
    };
    for (std::size_t i = 0; i < spec.gates.size(); ++i) {
        const auto& source = spec.gates[i].angle;
        if (!source.references_param()) continue;
        const AngleShift plus{i, std::numbers::pi / 2}, minus{i, -std::numbers::pi / 2};
        grad[source.param] += source.chain_factor() * 0.5 * (eval(&plus) - eval(&minus));
    }
    return grad;
}

inline void check_unit_interval(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::domain_error(std::string(what) + " value " + std::to_string(v) +
                                " outside [0, 1]");
    }
}

/// Data-scaled RY(a_k * w) on each agent qubit for context point `layer`.
inline CircuitSpec input_layer(const CircuitConfig& config, unsigned layer, double a_k,
                               Agent agent = Agent::Discriminator) {
    check_unit_interval(a_k, "context");
    const ParamLayout layout(config);
    CircuitSpec spec;
    for (unsigned q = 0; q < config.agent_qubits; ++q) {
        spec.gates.push_back({Gate::ry(q, 0.0), AngleSource::scaled(layout.input_index(agent, layer, q), a_k)});
    }
    return spec;
}

/// RX, RZ per qubit followed by the CNOT staircase.
inline CircuitSpec variational_layer(const CircuitConfig& config, unsigned block,
                                     Agent agent = Agent::Discriminator) {
    const ParamLayout layout(config);
    CircuitSpec spec;
    for (unsigned q = 0; q < config.agent_qubits; ++q) {
        spec.gates.push_back({Gate::rx(q, 0.0), AngleSource::bound(layout.rx_index(agent, block, q))});
        spec.gates.push_back({Gate::rz(q, 0.0), AngleSource::bound(layout.rz_index(agent, block, q))});
    }
    for (unsigned q = 0; q + 1 < config.agent_qubits; ++q) {
        spec.gates.push_back({Gate::cnot(q, q + 1), AngleSource::none()});
    }
    return spec;
}

inline CircuitSpec build_agent_circuit(const CircuitConfig& config, std::span<const double> context,
                                       Agent agent) {
    config.validate();
    if (context.size() != config.layers) {
        throw std::invalid_argument("context has " + std::to_string(context.size()) +
                                    " points, circuit expects " + std::to_string(config.layers));
    }
    CircuitSpec spec;
    for (unsigned k = 0; k < config.layers; ++k) {
        spec.append(input_layer(config, k, context[k], agent));
        spec.append(variational_layer(config, k, agent));
    }
    for (unsigned f = 0; f < config.final_blocks; ++f) {
        spec.append(variational_layer(config, config.layers + f, agent));
    }
    return spec;
}

/// RY(b) on `data_qubit`; b must be a normalized value.
inline CircuitSpec encode_target(double b, unsigned data_qubit = 0) {
    check_unit_interval(b, "target");
    CircuitSpec spec;
    spec.gates.push_back({Gate::ry(data_qubit, 0.0), AngleSource::fixed(b)});
    return spec;
}

/// The agent's output sub-register for the swap test is its last qubit.
inline unsigned output_qubit(const CircuitConfig& config) { return config.agent_qubits - 1; }

}  // namespace sudai
