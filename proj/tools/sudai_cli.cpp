// sudai: command line driver.
//
//   sudai synth  --kind level_shift --output s.csv
//   sudai detect --input s.csv --report r.csv
//   sudai score  --report r.csv --labels s.labels.json
//   sudai train  --input s.csv --output model.ckpt
//   sudai report --report r.csv --format json --output r.json
//
// Every subcommand accepts --config FILE with `key=value` lines, one per flag
// (without the leading dashes). Flags given on the command line win.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sudai/sudai.hpp"

namespace fs = std::filesystem;
using namespace sudai;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- config file ---------------------------------------------------------

std::vector<std::pair<std::string, std::string>> read_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    for (int row = 1; std::getline(in, line); ++row) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = io_detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path.string() + ":" + std::to_string(row) + ": expected key=value");
        }
        entries.emplace_back(io_detail::trim(line.substr(0, eq)), io_detail::trim(line.substr(eq + 1)));
    }
    return entries;
}

/// Rewrites argv so config entries appear right after the subcommand, skipping
/// any key that is also given on the command line.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::optional<fs::path> config;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file");
            config = args[++i];
        } else if (args[i].starts_with("--config=")) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!config || rest.empty()) return rest;

    const auto given = [&](const std::string& flag) {
        for (const auto& a : rest)
            if (a == flag || a.starts_with(flag + "=")) return true;
        return false;
    };
    std::vector<std::string> out{rest.front()};
    for (const auto& [key, value] : read_config(*config)) {
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        out.push_back(flag);
        // lists are whitespace separated
        std::istringstream words(value);
        for (std::string w; words >> w;) out.push_back(w);
    }
    out.insert(out.end(), rest.begin() + 1, rest.end());
    return out;
}

// --- shared option groups ------------------------------------------------

struct ModelOptions {
    QganConfig config;
    std::string fidelity = "exact";
    std::uint64_t fidelity_shots = 1024;
    std::uint64_t fidelity_seed = 0;
    std::optional<std::string> checkpoint;

    void add(CLI::App* app) {
        app->add_option("--agent_qubits", config.circuit.agent_qubits, "qubits per agent")->capture_default_str();
        app->add_option("--window", config.window, "context window (= injection layers)")->capture_default_str();
        app->add_option("--final_blocks", config.circuit.final_blocks)->capture_default_str();
        app->add_option("--learning_rate", config.learning_rate)->capture_default_str();
        app->add_option("--epochs", config.epochs)->capture_default_str();
        app->add_option("--counts_dx", config.counts.dx, "discriminator-on-data steps")->capture_default_str();
        app->add_option("--counts_dg", config.counts.dg, "generator steps")->capture_default_str();
        app->add_option("--counts_gd", config.counts.gd, "discriminator-on-generator steps")->capture_default_str();
        app->add_option("--fidelity", fidelity)->check(CLI::IsMember({"exact", "shots"}))->capture_default_str();
        app->add_option("--fidelity_shots", fidelity_shots)->capture_default_str();
        app->add_option("--fidelity_seed", fidelity_seed)->capture_default_str();
        app->add_option("--fidelity_clamp", config.fidelity_clamp)->capture_default_str();
        app->add_option("--checkpoint", checkpoint, "start from a saved model instead of a fresh one");
    }

    QganConfig resolved() const {
        QganConfig c = config;
        c.circuit.layers = c.window;
        c.fidelity = fidelity == "shots" ? FidelityMode::sampled(fidelity_shots, fidelity_seed) : FidelityMode::exact();
        return c;
    }

    QganModel make(std::uint64_t seed) const {
        if (checkpoint) {
            std::ifstream in(*checkpoint);
            if (!in) throw DataError("cannot open checkpoint " + *checkpoint);
            try {
                return load_checkpoint(in);
            } catch (const std::exception& e) {
                throw DataError(*checkpoint + ": " + e.what());
            }
        }
        return QganModel::init(resolved(), seed);
    }
};

struct SeriesOptions {
    std::string input;
    std::optional<std::string> labels;
    std::vector<double> bounds;

    void add(CLI::App* app) {
        app->add_option("--input", input, "series CSV (timestamp,value)")->required();
        app->add_option("--labels", labels, "label JSON; defaults to the sidecar next to the CSV");
        app->add_option("--bounds", bounds, "normalization bounds MIN MAX")->expected(2);
    }

    /// Loads and normalizes; bounds come from --bounds or the label file.
    LabeledSeries load() const {
        LabeledSeries s = labels ? load_series_csv(input, fs::path(*labels)) : load_series_csv(input);
        if (!bounds.empty()) s.bounds = Bounds{bounds[0], bounds[1]};
        if (!s.bounds) throw UsageError("normalization bounds missing: pass --bounds MIN MAX");
        auto norm = normalize(s.values, *s.bounds);
        if (norm.clamped > 0) {
            std::cerr << "warning: " << norm.clamped << " value(s) outside bounds were clamped\n";
        }
        s.values = std::move(norm.values);
        return s;
    }
};

void save_model(const QganModel& model, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    save_checkpoint(model, out);
}

void print_score(const ScoreReport& r) {
    std::cout << "anomalies " << r.num_anomalies << "  positives " << r.num_positives << "  TP "
              << r.true_positives << "  FP " << r.false_positives << "  FN " << r.false_negatives << '\n';
}

ReportFormat parse_format(const std::string& s) { return s == "json" ? ReportFormat::JSON : ReportFormat::CSV; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional quantum GAN anomaly detection on univariate series", "sudai"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");
    app.add_option("--config", "key=value file setting any flag of the subcommand");

    std::uint64_t seed = 0;

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic labeled series");
    std::string kind = "level_shift";
    SynthParams sp;
    std::string synth_out;
    synth->add_option("--kind", kind)
        ->check(CLI::IsMember({"level_shift", "spike_train", "noisy_sine"}))
        ->capture_default_str();
    synth->add_option("--length", sp.length)->capture_default_str();
    synth->add_option("--anomaly_times", sp.anomaly_times)->expected(1, -1);
    synth->add_option("--base", sp.base)->capture_default_str();
    synth->add_option("--anomaly_level", sp.anomaly_level)->capture_default_str();
    synth->add_option("--noise_sigma", sp.noise_sigma)->capture_default_str();
    synth->add_option("--half_width", sp.half_width)->capture_default_str();
    synth->add_option("--sine_amplitude", sp.sine_amplitude)->capture_default_str();
    synth->add_option("--sine_period", sp.sine_period)->capture_default_str();
    synth->add_option("--output", synth_out, "series CSV; labels go to the .labels.json sidecar")->required();
    synth->add_option("--seed", seed)->capture_default_str();

    // detect
    auto* detect = app.add_subcommand("detect", "run the continual-learning detector over a series");
    SeriesOptions detect_series;
    ModelOptions detect_model;
    DetectorConfig dc;
    std::string threshold_mode = "dynamic", score_mode = "loss", detect_format = "csv";
    std::optional<std::string> detect_report, detect_save;
    detect_series.add(detect);
    detect_model.add(detect);
    detect->add_option("--epsilon", dc.epsilon)->capture_default_str();
    detect->add_option("--step_multiplier", dc.step_multiplier)->capture_default_str();
    detect->add_option("--threshold_base", dc.threshold_base)->capture_default_str();
    detect->add_option("--threshold_gain", dc.threshold_gain)->capture_default_str();
    detect->add_option("--quantile_p", dc.quantile_p)->capture_default_str();
    detect->add_option("--noise_window", dc.noise_window)->capture_default_str();
    detect->add_option("--variation_radius", dc.variation_radius)->capture_default_str();
    detect->add_option("--prune_steps", dc.prune_steps)->capture_default_str();
    detect->add_option("--threshold_mode", threshold_mode)
        ->check(CLI::IsMember({"dynamic", "static"}))
        ->capture_default_str();
    detect->add_option("--static_threshold", dc.static_threshold)->capture_default_str();
    detect->add_option("--score_mode", score_mode)->check(CLI::IsMember({"loss", "distance"}))->capture_default_str();
    detect->add_option("--report", detect_report, "per-step report path");
    detect->add_option("--format", detect_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    detect->add_option("--save_checkpoint", detect_save, "write the trained model here");
    detect->add_option("--seed", seed)->capture_default_str();

    // score
    auto* score = app.add_subcommand("score", "score a CSV report against label windows");
    std::string score_report, score_labels;
    score->add_option("--report", score_report)->required();
    score->add_option("--labels", score_labels)->required();
    score->add_option("--seed", seed, "unused; accepted for uniformity");

    // train
    auto* train_cmd = app.add_subcommand("train", "offline training on all windows of a series");
    SeriesOptions train_series;
    ModelOptions train_model;
    std::string train_out;
    train_series.add(train_cmd);
    train_model.add(train_cmd);
    train_cmd->add_option("--output", train_out, "checkpoint path")->required();
    train_cmd->add_option("--seed", seed)->capture_default_str();

    // report
    auto* report = app.add_subcommand("report", "re-emit a CSV report, optionally with scores");
    std::string report_in, report_out, report_format = "json";
    std::optional<std::string> report_labels;
    report->add_option("--report", report_in)->required();
    report->add_option("--labels", report_labels);
    report->add_option("--format", report_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    report->add_option("--output", report_out)->required();
    report->add_option("--seed", seed, "unused; accepted for uniformity");

    try {
        const auto args = expand_config(argc, argv);
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*synth) {
            const SynthKind k = kind == "level_shift"   ? SynthKind::LevelShift
                                : kind == "spike_train" ? SynthKind::SpikeTrain
                                                        : SynthKind::NoisySine;
            const auto s = synth_series(k, sp, seed);
            save_series_csv(synth_out, s);
            save_labels_json(default_labels_path(synth_out), s);
            std::cout << "wrote " << s.values.size() << " points, " << s.windows.size() << " window(s) to "
                      << synth_out << '\n';
        } else if (*detect) {
            const auto series = detect_series.load();
            QganModel model = detect_model.make(seed);
            dc.window = model.config().window;
            if (series.values.size() <= dc.window) throw DataError("series is not longer than the window");
            dc.threshold_mode = threshold_mode == "static" ? ThresholdMode::Static : ThresholdMode::Dynamic;
            dc.score_mode = score_mode == "distance" ? ScoreMode::Distance : ScoreMode::Loss;
            const auto records = detect_stream(series.values, model, dc);
            std::optional<ScoreReport> scored;
            if (!series.windows.empty()) {
                scored = score_nab_windows(flags_over_series(records, series.values.size()), series.windows);
                print_score(*scored);
            } else {
                std::size_t flagged = 0;
                for (const auto& r : records) flagged += r.pruned_flag;
                std::cout << "flags " << flagged << " over " << records.size() << " steps\n";
            }
            if (detect_report) emit_report(records, scored, parse_format(detect_format), *detect_report);
            if (detect_save) save_model(model, *detect_save);
        } else if (*score) {
            const auto records = load_report_csv(score_report);
            LabeledSeries labels;
            load_labels_json(score_labels, labels);
            std::size_t length = 0;
            for (const auto& r : records) length = std::max(length, r.t + 1);
            print_score(score_nab_windows(flags_over_series(records, length), labels.windows));
        } else if (*train_cmd) {
            const auto series = train_series.load();
            QganModel model = train_model.make(seed);
            const unsigned window = model.config().window;
            if (series.values.size() <= window) throw DataError("series is not longer than the window");
            std::vector<Sample> samples;
            for (std::size_t t = window; t < series.values.size(); ++t) {
                samples.push_back({{series.values.begin() + static_cast<std::ptrdiff_t>(t - window),
                                    series.values.begin() + static_cast<std::ptrdiff_t>(t)},
                                   series.values[t]});
            }
            auto result = train(std::move(model), samples);
            for (std::size_t e = 0; e < result.history.size(); ++e) {
                const auto& h = result.history[e];
                std::cout << "epoch " << e + 1 << "  loss_dx " << h.dx << "  loss_gd " << h.gd << "  loss_dg "
                          << h.dg << '\n';
            }
            save_model(result.model, train_out);
        } else if (*report) {
            const auto records = load_report_csv(report_in);
            std::optional<ScoreReport> scored;
            if (report_labels) {
                LabeledSeries labels;
                load_labels_json(*report_labels, labels);
                std::size_t length = 0;
                for (const auto& r : records) length = std::max(length, r.t + 1);
                scored = score_nab_windows(flags_over_series(records, length), labels.windows);
            }
            emit_report(records, scored, parse_format(report_format), report_out);
        }
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return EXIT_SUCCESS;
}
