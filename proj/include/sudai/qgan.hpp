// Conditional state-fidelity QGAN built from two SuDaI agents.
//
// Register layouts (little-endian qubit indices):
//   discriminator vs data:      [ancilla | discriminator (n) | data (1)]
//   discriminator vs generator: [ancilla | discriminator (n) | generator (n)]
// The swap test compares the last qubit of the discriminator with the data
// qubit or with the last qubit of the generator.

#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sudai/circuit.hpp"
#include "sudai/quantum_core.hpp"

namespace sudai {

struct FidelityMode {
    enum class Kind { Exact, Shots };
    Kind kind = Kind::Exact;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;

    static FidelityMode exact() { return {}; }
    static FidelityMode sampled(std::uint64_t shots, std::uint64_t seed) {
        return {Kind::Shots, shots, seed};
    }
    bool operator==(const FidelityMode&) const = default;
};

struct TrainingCounts {
    unsigned dx = 1;  // discriminator on data
    unsigned dg = 1;  // generator on discriminator
    unsigned gd = 1;  // discriminator on generator
    bool operator==(const TrainingCounts&) const = default;
};

struct QganConfig {
    CircuitConfig circuit{};
    unsigned window = 10;
    double learning_rate = 0.005;
    unsigned epochs = 1;
    TrainingCounts counts{};
    FidelityMode fidelity{};
    double fidelity_clamp = 1e-9;

    /// Config whose circuit has one injection layer per context point.
    static QganConfig with_window(unsigned window, unsigned agent_qubits = 3) {
        QganConfig c;
        c.window = window;
        c.circuit.layers = window;
        c.circuit.agent_qubits = agent_qubits;
        return c;
    }

    void validate() const {
        circuit.validate();
        if (window != circuit.layers) {
            throw std::invalid_argument("window must equal the number of injection layers");
        }
        if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
        if (counts.dx < 1 || counts.dg < 1 || counts.gd < 1) {
            throw std::invalid_argument("training counts must be >= 1");
        }
        if (!(fidelity_clamp > 0.0 && fidelity_clamp < 0.5)) {
            throw std::invalid_argument("fidelity_clamp must lie in (0, 0.5)");
        }
        if (fidelity.kind == FidelityMode::Kind::Shots && fidelity.shots == 0) {
            throw std::invalid_argument("shot mode needs at least one shot");
        }
        if (2 * circuit.agent_qubits + 1 > kMaxQubits) {
            throw std::invalid_argument("agent_qubits too large for the simulator");
        }
    }
    bool operator==(const QganConfig&) const = default;
};

class QganModel {
public:
    QganModel(QganConfig config, ParamVector params, std::uint64_t seed = 0)
        : config_(config), params_(std::move(params)), rng_(seed) {
        config_.validate();
        if (!(params_.layout().config() == config_.circuit)) {
            throw std::invalid_argument("parameter layout does not match circuit config");
        }
    }

    /// Both partitions drawn uniformly from [-pi, pi); `seed` also seeds sampling.
    static QganModel init(const QganConfig& config, std::uint64_t seed) {
        config.validate();
        return QganModel(config, ParamVector::random(config.circuit, seed), seed);
    }

    const QganConfig& config() const { return config_; }
    /// Learning rate may be adjusted; everything structural is fixed.
    void set_learning_rate(double rate) {
        if (rate < 0.0) throw std::invalid_argument("learning_rate must be >= 0");
        config_.learning_rate = rate;
    }
    const ParamVector& params() const { return params_; }
    ParamVector& params() { return params_; }
    std::mt19937_64& rng() { return rng_; }
    const std::mt19937_64& rng() const { return rng_; }

    bool operator==(const QganModel&) const = default;

private:
    QganConfig config_;
    ParamVector params_;
    std::mt19937_64 rng_;
};

enum class LossKind { DX, DG, GD };

inline const char* to_string(LossKind kind) {
    switch (kind) {
    case LossKind::DX: return "DX";
    case LossKind::DG: return "DG";
    case LossKind::GD: return "GD";
    }
    return "?";
}

/// Agent whose partition a loss trains.
inline Agent trained_agent(LossKind kind) {
    return kind == LossKind::GD ? Agent::Generator : Agent::Discriminator;
}

struct Sample {
    std::vector<double> context;
    double target = 0.0;
};

namespace detail {

inline void check_context(const QganConfig& config, std::span<const double> context) {
    if (context.size() != config.window) {
        throw std::invalid_argument("context has " + std::to_string(context.size()) +
                                    " points, window is " + std::to_string(config.window));
    }
    for (double v : context) check_unit_interval(v, "context");
}

/// The circuit behind one fidelity value, with both agents' specs prebuilt.
class FidelityCircuit {
public:
    /// Discriminator against RY(target) data when `target` is set, else against the generator.
    FidelityCircuit(const QganModel& model, std::span<const double> context, std::optional<double> target)
        : model_(model), target_(target) {
        check_context(model.config(), context);
        if (target) check_unit_interval(*target, "target");
        const auto& cc = model.config().circuit;
        disc_ = build_agent_circuit(cc, context, Agent::Discriminator);
        if (!target) gen_ = build_agent_circuit(cc, context, Agent::Generator);
    }

    const CircuitSpec& spec(Agent agent) const {
        return agent == Agent::Discriminator ? disc_ : gen_;
    }

    /// 2 P(ancilla = 0) - 1, unclamped. `shift` perturbs a gate of `shifted_agent`.
    double evaluate(std::span<const double> params, Agent shifted_agent = Agent::Discriminator,
                    const AngleShift* shift = nullptr) const {
        const unsigned n = model_.config().circuit.agent_qubits;
        const unsigned ancilla = 0, disc_base = 1, other_base = n + 1;
        const unsigned total = target_ ? n + 2 : 2 * n + 1;
        StateVector state(total);
        run_circuit(state, disc_, params, disc_base,
                    shifted_agent == Agent::Discriminator ? shift : nullptr);
        unsigned other_out;
        if (target_) {
            state.apply(Gate::ry(other_base, *target_));
            other_out = other_base;
        } else {
            run_circuit(state, gen_, params, other_base,
                        shifted_agent == Agent::Generator ? shift : nullptr);
            other_out = other_base + n - 1;
        }
        const unsigned disc_out = disc_base + n - 1;

        const auto& mode = model_.config().fidelity;
        if (mode.kind == FidelityMode::Kind::Exact) {
            return 2.0 * swap_test(state, ancilla, disc_out, other_out) - 1.0;
        }
        state.apply(Gate::h(ancilla));
        state.apply(Gate::cswap(ancilla, disc_out, other_out));
        state.apply(Gate::h(ancilla));
        const auto counts = sample_measurements(state, ancilla, mode.shots, shot_seed(params, shift));
        return 2.0 * static_cast<double>(counts.zeros) / static_cast<double>(mode.shots) - 1.0;
    }

private:
    // Distinct circuits draw distinct shot streams; identical circuits repeat exactly.
    std::uint64_t shot_seed(std::span<const double> params, const AngleShift* shift) const {
        std::vector<std::uint32_t> words;
        auto push = [&words](std::uint64_t w) {
            words.push_back(static_cast<std::uint32_t>(w));
            words.push_back(static_cast<std::uint32_t>(w >> 32));
        };
        auto push_double = [&push](double d) { push(std::bit_cast<std::uint64_t>(d)); };
        push(model_.config().fidelity.seed);
        for (const auto* spec : {&disc_, &gen_})
            for (const auto& g : spec->gates)
                if (g.angle.kind == AngleSource::Kind::DataScaled) push_double(g.angle.data);
        for (double p : params) push_double(p);
        push_double(target_.value_or(-1.0));
        if (shift) {
            push(shift->gate_index);
            push_double(shift->delta);
        }
        std::seed_seq seq(words.begin(), words.end());
        std::mt19937_64 rng(seq);
        return rng();
    }

    const QganModel& model_;
    std::optional<double> target_;
    CircuitSpec disc_;
    CircuitSpec gen_;
};

}  // namespace detail

inline double clamp_fidelity(const QganConfig& config, double f) {
    return std::clamp(f, config.fidelity_clamp, 1.0 - config.fidelity_clamp);
}

/// 2 P(0) - 1 of the discriminator-vs-data swap test, before clamping.
inline double raw_fidelity_dx(const QganModel& model, std::span<const double> context, double target) {
    return detail::FidelityCircuit(model, context, target).evaluate(model.params().values());
}

inline double raw_fidelity_dg(const QganModel& model, std::span<const double> context) {
    return detail::FidelityCircuit(model, context, std::nullopt).evaluate(model.params().values());
}

inline double fidelity_dx(const QganModel& model, std::span<const double> context, double target) {
    return clamp_fidelity(model.config(), raw_fidelity_dx(model, context, target));
}

inline double fidelity_dg(const QganModel& model, std::span<const double> context) {
    return clamp_fidelity(model.config(), raw_fidelity_dg(model, context));
}

/// -log F_dx: how far the discriminator output is from the encoded target.
inline double loss_dx(const QganModel& model, std::span<const double> context, double target) {
    return -std::log(fidelity_dx(model, context, target));
}

/// -log(1 - F_dg): discriminator penalized for agreeing with the generator.
inline double loss_dg(const QganModel& model, std::span<const double> context) {
    return -std::log(1.0 - fidelity_dg(model, context));
}

/// -log F_dg: generator penalized for disagreeing with the discriminator.
inline double loss_gd(const QganModel& model, std::span<const double> context) {
    return -std::log(fidelity_dg(model, context));
}

inline void check_loss_arguments(LossKind kind, const std::optional<double>& target) {
    if ((kind == LossKind::DX) != target.has_value()) {
        throw std::invalid_argument(std::string("loss ") + to_string(kind) +
                                    (kind == LossKind::DX ? " needs a target value"
                                                          : " takes no target value"));
    }
}

inline double loss(const QganModel& model, LossKind kind, std::span<const double> context,
                   std::optional<double> target = std::nullopt) {
    check_loss_arguments(kind, target);
    switch (kind) {
    case LossKind::DX: return loss_dx(model, context, *target);
    case LossKind::DG: return loss_dg(model, context);
    case LossKind::GD: return loss_gd(model, context);
    }
    return 0.0;
}

/// Derivative of the loss with respect to every parameter; zero outside the
/// trained partition.
///
/// The fidelity is an expectation value, so each gate's angle derivative is
/// exact from the two evaluations at angle +/- pi/2. A data-scaled gate
/// RY(a * w) contributes a times that derivative to w. The log is then
/// differentiated analytically; where the fidelity sits on a clamp bound the
/// loss is flat and the gradient is zero.
inline std::vector<double> gradient(const QganModel& model, LossKind kind, std::span<const double> context,
                                    std::optional<double> target = std::nullopt) {
    check_loss_arguments(kind, target);
    const detail::FidelityCircuit circuit(model, context, target);
    const auto params = model.params().values();
    const Agent agent = trained_agent(kind);
    const auto& spec = circuit.spec(agent);

    std::vector<double> grad(params.size(), 0.0);
    const double f = circuit.evaluate(params);
    const double eps = model.config().fidelity_clamp;
    if (f <= eps || f >= 1.0 - eps) return grad;

    constexpr double half_pi = std::numbers::pi / 2;
    for (std::size_t i = 0; i < spec.gates.size(); ++i) {
        const auto& source = spec.gates[i].angle;
        if (!source.references_param()) continue;
        const double chain = source.chain_factor();
        if (chain == 0.0) continue;
        const AngleShift plus{i, half_pi}, minus{i, -half_pi};
        const double df = 0.5 * (circuit.evaluate(params, agent, &plus) -
                                 circuit.evaluate(params, agent, &minus));
        grad[source.param] += chain * df;
    }

    // dL/dF: -1/F for DX and GD, 1/(1 - F) for DG.
    const double dl_df = kind == LossKind::DG ? 1.0 / (1.0 - f) : -1.0 / f;
    for (auto& g : grad) g *= dl_df;
    return grad;
}

/// theta <- theta - alpha * grad
inline void sgd_step(QganModel& model, std::span<const double> grad) {
    auto values = model.params().values();
    const double alpha = model.config().learning_rate;
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= alpha * grad[i];
}

struct EpochLosses {
    double dx = 0.0;  // mean pre-update loss of each phase
    double gd = 0.0;
    double dg = 0.0;
};

struct TrainResult {
    QganModel model;
    std::vector<EpochLosses> history;
};

namespace detail {

inline const Sample& draw(QganModel& model, std::span<const Sample> dataset) {
    const auto i = static_cast<std::size_t>(uniform01(model.rng()) * static_cast<double>(dataset.size()));
    return dataset[std::min(i, dataset.size() - 1)];
}

}  // namespace detail

/// One epoch: discriminator on data, generator on discriminator, discriminator
/// on generator, each phase drawing its samples with replacement.
inline EpochLosses train_epoch(QganModel& model, std::span<const Sample> dataset) {
    if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
    const auto& counts = model.config().counts;
    EpochLosses out;
    for (unsigned c = 0; c < counts.dx; ++c) {
        const Sample& s = detail::draw(model, dataset);
        out.dx += loss_dx(model, s.context, s.target) / counts.dx;
        sgd_step(model, gradient(model, LossKind::DX, s.context, s.target));
    }
    for (unsigned c = 0; c < counts.dg; ++c) {
        const Sample& s = detail::draw(model, dataset);
        out.gd += loss_gd(model, s.context) / counts.dg;
        sgd_step(model, gradient(model, LossKind::GD, s.context));
    }
    for (unsigned c = 0; c < counts.gd; ++c) {
        const Sample& s = detail::draw(model, dataset);
        out.dg += loss_dg(model, s.context) / counts.gd;
        sgd_step(model, gradient(model, LossKind::DG, s.context));
    }
    return out;
}

inline TrainResult train(QganModel model, std::span<const Sample> dataset) {
    if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
    for (const auto& s : dataset) {
        detail::check_context(model.config(), s.context);
        check_unit_interval(s.target, "target");
    }
    TrainResult result{std::move(model), {}};
    for (unsigned e = 0; e < result.model.config().epochs; ++e) {
        result.history.push_back(train_epoch(result.model, dataset));
    }
    return result;
}

/// One epoch on the single pair (context, target), using the configured
/// phase counts.
inline void train_on_point(QganModel& model, std::span<const double> context, double target) {
    const auto counts = model.config().counts;
    for (unsigned c = 0; c < counts.dx; ++c) sgd_step(model, gradient(model, LossKind::DX, context, target));
    for (unsigned c = 0; c < counts.dg; ++c) sgd_step(model, gradient(model, LossKind::GD, context));
    for (unsigned c = 0; c < counts.gd; ++c) sgd_step(model, gradient(model, LossKind::DG, context));
}

/// Reads P(1) of the generator output qubit and inverts the RY(b) encoding.
inline double generate_point(const QganModel& model, std::span<const double> context) {
    detail::check_context(model.config(), context);
    const auto& cc = model.config().circuit;
    StateVector state(cc.agent_qubits);
    run_circuit(state, build_agent_circuit(cc, context, Agent::Generator), model.params().values());
    const double p1 = std::clamp(measure_prob(state, output_qubit(cc), 1), 0.0, 1.0);
    return std::clamp(2.0 * std::asin(std::sqrt(p1)), 0.0, 1.0);
}

// Checkpoint format, version 1: one "key value..." record per line, reals in
// hexadecimal floating point so that a round trip is bit-exact.

inline constexpr const char* kCheckpointMagic = "sudai-qgan-checkpoint";
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline std::string hex(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
    return std::string(buf, r.ptr);
}

inline double parse_hex(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        throw std::runtime_error("checkpoint: bad real value '" + s + "'");
    }
    return v;
}

inline std::istringstream expect_line(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing '" + key + "'");
    std::istringstream fields(line);
    std::string got;
    fields >> got;
    if (got != key) throw std::runtime_error("checkpoint: expected '" + key + "', got '" + got + "'");
    return fields;
}

template <class T>
T read_field(std::istringstream& fields, const std::string& key) {
    T v{};
    if (!(fields >> v)) throw std::runtime_error("checkpoint: malformed '" + key + "'");
    return v;
}

}  // namespace detail

inline void save_checkpoint(const QganModel& model, std::ostream& out) {
    const auto& c = model.config();
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    out << "agent_qubits " << c.circuit.agent_qubits << '\n';
    out << "layers " << c.circuit.layers << '\n';
    out << "final_blocks " << c.circuit.final_blocks << '\n';
    out << "window " << c.window << '\n';
    out << "learning_rate " << detail::hex(c.learning_rate) << '\n';
    out << "epochs " << c.epochs << '\n';
    out << "counts " << c.counts.dx << ' ' << c.counts.dg << ' ' << c.counts.gd << '\n';
    if (c.fidelity.kind == FidelityMode::Kind::Exact) {
        out << "fidelity exact\n";
    } else {
        out << "fidelity shots " << c.fidelity.shots << ' ' << c.fidelity.seed << '\n';
    }
    out << "fidelity_clamp " << detail::hex(c.fidelity_clamp) << '\n';
    out << "params " << model.params().size() << '\n';
    for (double v : model.params().values()) out << detail::hex(v) << '\n';
    out << "rng " << model.rng() << '\n';
}

inline QganModel load_checkpoint(std::istream& in) {
    using detail::expect_line;
    using detail::read_field;
    auto header = expect_line(in, kCheckpointMagic);
    const int version = read_field<int>(header, "version");
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    QganConfig c;
    auto f = expect_line(in, "agent_qubits");
    c.circuit.agent_qubits = read_field<unsigned>(f, "agent_qubits");
    f = expect_line(in, "layers");
    c.circuit.layers = read_field<unsigned>(f, "layers");
    f = expect_line(in, "final_blocks");
    c.circuit.final_blocks = read_field<unsigned>(f, "final_blocks");
    f = expect_line(in, "window");
    c.window = read_field<unsigned>(f, "window");
    f = expect_line(in, "learning_rate");
    c.learning_rate = detail::parse_hex(read_field<std::string>(f, "learning_rate"));
    f = expect_line(in, "epochs");
    c.epochs = read_field<unsigned>(f, "epochs");
    f = expect_line(in, "counts");
    c.counts.dx = read_field<unsigned>(f, "counts");
    c.counts.dg = read_field<unsigned>(f, "counts");
    c.counts.gd = read_field<unsigned>(f, "counts");
    f = expect_line(in, "fidelity");
    const auto mode = read_field<std::string>(f, "fidelity");
    if (mode == "shots") {
        c.fidelity.kind = FidelityMode::Kind::Shots;
        c.fidelity.shots = read_field<std::uint64_t>(f, "fidelity");
        c.fidelity.seed = read_field<std::uint64_t>(f, "fidelity");
    } else if (mode != "exact") {
        throw std::runtime_error("checkpoint: unknown fidelity mode '" + mode + "'");
    }
    f = expect_line(in, "fidelity_clamp");
    c.fidelity_clamp = detail::parse_hex(read_field<std::string>(f, "fidelity_clamp"));
    c.validate();

    f = expect_line(in, "params");
    const auto count = read_field<std::size_t>(f, "params");
    std::vector<double> values(count);
    for (auto& v : values) {
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("checkpoint: truncated parameters");
        v = detail::parse_hex(line);
    }
    QganModel model(c, ParamVector(c.circuit, std::move(values)));
    f = expect_line(in, "rng");
    if (!(f >> model.rng())) throw std::runtime_error("checkpoint: malformed rng state");
    return model;
}

}  // namespace sudai
