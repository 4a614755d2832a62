// Series ingestion, normalization, synthetic series, window scoring and
// report emission.
//
// Series CSVs have the header `timestamp,value`. Label windows live in a
// sidecar JSON file: {"windows": [[start, end], ...], "bounds": [min, max]},
// with inclusive index windows; "bounds" is optional.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sudai/detector.hpp"

namespace sudai {

/// Bad or unreadable input data (as opposed to bad usage).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Bounds {
    double min = 0.0;
    double max = 1.0;
    bool operator==(const Bounds&) const = default;
};

/// Inclusive index interval [start, end].
struct AnomalyWindow {
    std::size_t start = 0;
    std::size_t end = 0;
    bool operator==(const AnomalyWindow&) const = default;
};

struct LabeledSeries {
    std::vector<std::string> timestamps;
    std::vector<double> values;
    std::optional<Bounds> bounds;
    std::vector<AnomalyWindow> windows;
};

/// Sorts windows and merges overlapping or touching ones.
inline std::vector<AnomalyWindow> merge_windows(std::vector<AnomalyWindow> windows) {
    std::sort(windows.begin(), windows.end(),
              [](const auto& a, const auto& b) { return a.start < b.start || (a.start == b.start && a.end < b.end); });
    std::vector<AnomalyWindow> merged;
    for (const auto& w : windows) {
        if (w.end < w.start) throw DataError("anomaly window ends before it starts");
        if (!merged.empty() && w.start <= merged.back().end + 1) {
            merged.back().end = std::max(merged.back().end, w.end);
        } else {
            merged.push_back(w);
        }
    }
    return merged;
}

namespace io_detail {

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

inline std::optional<double> parse_real(const std::string& text) {
    const std::string s = trim(text);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Shortest text that parses back to the same double.
inline std::string format_real(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace io_detail

/// Reads {"windows": [[s, e], ...], "bounds": [min, max]}.
inline void load_labels_json(const std::filesystem::path& path, LabeledSeries& series) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
        std::vector<AnomalyWindow> windows;
        for (const auto& w : doc.at("windows")) {
            windows.push_back({w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>()});
        }
        series.windows = merge_windows(std::move(windows));
        if (doc.contains("bounds")) {
            series.bounds = Bounds{doc["bounds"].at(0).get<double>(), doc["bounds"].at(1).get<double>()};
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed label file " + path.string() + ": " + e.what());
    }
    for (const auto& w : series.windows) {
        if (!series.values.empty() && w.end >= series.values.size()) {
            throw DataError("label window [" + std::to_string(w.start) + ", " + std::to_string(w.end) +
                            "] exceeds series length " + std::to_string(series.values.size()));
        }
    }
}

inline void save_labels_json(const std::filesystem::path& path, const LabeledSeries& series) {
    nlohmann::json doc;
    doc["windows"] = nlohmann::json::array();
    for (const auto& w : series.windows) doc["windows"].push_back({w.start, w.end});
    if (series.bounds) doc["bounds"] = {series.bounds->min, series.bounds->max};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write label file " + path.string());
    out << doc.dump(2) << '\n';
}

/// Sidecar label path for a series CSV: `x.csv` -> `x.labels.json`.
inline std::filesystem::path default_labels_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".labels.json");
    return p;
}

/// Parses a `timestamp,value` CSV. Data rows are numbered from 1 in errors.
/// Loads the sidecar label file when `labels` is given or the default one exists.
inline LabeledSeries load_series_csv(const std::filesystem::path& path,
                                     std::optional<std::filesystem::path> labels = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open series file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    if (io_detail::trim(line) != "timestamp,value") {
        throw DataError(path.string() + ": expected header 'timestamp,value'");
    }
    LabeledSeries series;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (io_detail::trim(line).empty()) continue;
        ++row;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": expected two columns");
        }
        const auto value = io_detail::parse_real(line.substr(comma + 1));
        if (!value) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": non-numeric value '" +
                            io_detail::trim(line.substr(comma + 1)) + "'");
        }
        series.timestamps.push_back(io_detail::trim(line.substr(0, comma)));
        series.values.push_back(*value);
    }
    if (series.values.empty()) throw DataError(path.string() + ": empty series");

    if (labels) {
        load_labels_json(*labels, series);
    } else if (const auto sidecar = default_labels_path(path); std::filesystem::exists(sidecar)) {
        load_labels_json(sidecar, series);
    }
    return series;
}

inline void save_series_csv(const std::filesystem::path& path, const LabeledSeries& series) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write series file " + path.string());
    out << "timestamp,value\n";
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        out << series.timestamps[i] << ',' << io_detail::format_real(series.values[i]) << '\n';
    }
}

struct NormalizeResult {
    std::vector<double> values;
    std::size_t clamped = 0;  // values that fell outside the bounds
};

/// Affine map of `bounds` onto [0, 1]; out-of-bounds values are clamped and counted.
inline NormalizeResult normalize(std::span<const double> values, const Bounds& bounds) {
    if (!(bounds.min < bounds.max)) {
        throw DataError("degenerate normalization bounds [" + io_detail::format_real(bounds.min) + ", " +
                        io_detail::format_real(bounds.max) + "]");
    }
    NormalizeResult out;
    out.values.reserve(values.size());
    const double span = bounds.max - bounds.min;
    for (double v : values) {
        if (v < bounds.min || v > bounds.max) ++out.clamped;
        out.values.push_back(std::clamp((v - bounds.min) / span, 0.0, 1.0));
    }
    return out;
}

enum class SynthKind { LevelShift, SpikeTrain, NoisySine };

struct SynthParams {
    std::size_t length = 1000;
    std::vector<std::size_t> anomaly_times{600};
    double base = 0.3;
    /// Level after a shift (LevelShift) or peak height of a spike (SpikeTrain, NoisySine).
    double anomaly_level = 0.7;
    double noise_sigma = 0.01;
    std::size_t half_width = 25;
    double sine_amplitude = 0.1;  // NoisySine only
    double sine_period = 8.0;     // NoisySine only, in steps

    void validate() const {
        if (length < 2) throw std::invalid_argument("synthetic series needs length >= 2");
        for (auto t : anomaly_times)
            if (t >= length) throw std::invalid_argument("anomaly time beyond series length");
        if (noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
        if (base < 0.0 || base > 1.0 || anomaly_level < 0.0 || anomaly_level > 1.0) {
            throw std::invalid_argument("levels must lie in [0, 1]");
        }
        if (!(sine_period > 0.0)) throw std::invalid_argument("sine period must be > 0");
    }
};

/// Deterministic normalized series with ground-truth windows
/// [t - half_width, t + half_width] around every anomaly time, merged when they overlap.
/// LevelShift alternates between base and anomaly_level at each anomaly time.
inline LabeledSeries synth_series(SynthKind kind, const SynthParams& params, std::uint64_t seed) {
    params.validate();
    std::vector<std::size_t> times = params.anomaly_times;
    std::sort(times.begin(), times.end());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    LabeledSeries s;
    s.bounds = Bounds{0.0, 1.0};
    double level = params.base;
    std::size_t next = 0;
    for (std::size_t t = 0; t < params.length; ++t) {
        bool at_anomaly = false;
        while (next < times.size() && times[next] == t) {
            at_anomaly = true;
            ++next;
            if (kind == SynthKind::LevelShift) level = level == params.base ? params.anomaly_level : params.base;
        }
        double v = level;
        if (kind == SynthKind::NoisySine) {
            v += params.sine_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / params.sine_period);
        }
        if (kind != SynthKind::LevelShift && at_anomaly) v = params.anomaly_level;
        // draw unconditionally so the noise stream does not depend on sigma == 0
        const double z = noise(rng);
        v += params.noise_sigma * z;
        s.values.push_back(std::clamp(v, 0.0, 1.0));
        s.timestamps.push_back(std::to_string(t));
    }
    std::vector<AnomalyWindow> windows;
    for (auto t : times) {
        windows.push_back({t >= params.half_width ? t - params.half_width : 0,
                           std::min(params.length - 1, t + params.half_width)});
    }
    s.windows = merge_windows(std::move(windows));
    return s;
}

struct ScoreReport {
    std::size_t num_anomalies = 0;
    std::size_t num_positives = 0;  // after window reduction
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    /// Earliest flag index inside each detected window.
    std::vector<std::size_t> detections;

    bool operator==(const ScoreReport&) const = default;
};

/// Window-reduced scoring: all flags inside one window count as a single true
/// positive at the earliest flag; every flag outside all windows is a false
/// positive; windows without flags are false negatives.
inline ScoreReport score_nab_windows(const std::vector<bool>& flags, std::span<const AnomalyWindow> windows) {
    const auto merged = merge_windows({windows.begin(), windows.end()});
    ScoreReport r;
    r.num_anomalies = merged.size();
    std::size_t w = 0;
    std::optional<std::size_t> hit_in_current;
    auto close_window = [&] {
        if (hit_in_current) {
            ++r.true_positives;
            r.detections.push_back(*hit_in_current);
        }
        hit_in_current.reset();
    };
    for (std::size_t t = 0; t < flags.size(); ++t) {
        while (w < merged.size() && merged[w].end < t) {
            close_window();
            ++w;
        }
        if (!flags[t]) continue;
        if (w < merged.size() && merged[w].start <= t) {
            if (!hit_in_current) hit_in_current = t;
        } else {
            ++r.false_positives;
        }
    }
    for (; w < merged.size(); ++w) close_window();
    r.false_negatives = r.num_anomalies - r.true_positives;
    r.num_positives = r.true_positives + r.false_positives;
    return r;
}

/// Pruned flags laid out over series indices [0, length).
inline std::vector<bool> flags_over_series(std::span<const DetectionRecord> records, std::size_t length) {
    std::vector<bool> flags(length, false);
    for (const auto& r : records) {
        if (r.t >= length) throw DataError("record index beyond series length");
        flags[r.t] = r.pruned_flag;
    }
    return flags;
}

enum class ReportFormat { CSV, JSON };

inline constexpr const char* kReportHeader = "t,value,generated,loss,threshold,raw_flag,pruned_flag";

inline std::string render_report(std::span<const DetectionRecord> records, const std::optional<ScoreReport>& score,
                                 ReportFormat format) {
    using io_detail::format_real;
    if (records.empty()) throw std::invalid_argument("no records to report");
    if (format == ReportFormat::CSV) {
        std::string out = std::string(kReportHeader) + "\n";
        for (const auto& r : records) {
            out += std::to_string(r.t) + ',' + format_real(r.value) + ',' + format_real(r.generated) + ',' +
                   format_real(r.loss) + ',' + format_real(r.threshold) + ',' + (r.raw_flag ? "1" : "0") + ',' +
                   (r.pruned_flag ? "1" : "0") + '\n';
        }
        return out;
    }
    nlohmann::ordered_json doc;
    doc["records"] = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        doc["records"].push_back({{"t", r.t},
                                  {"value", r.value},
                                  {"generated", r.generated},
                                  {"loss", r.loss},
                                  {"threshold", r.threshold},
                                  {"raw_flag", r.raw_flag ? 1 : 0},
                                  {"pruned_flag", r.pruned_flag ? 1 : 0}});
    }
    if (score) {
        doc["score"] = {{"num_anomalies", score->num_anomalies},
                        {"num_positives", score->num_positives},
                        {"true_positives", score->true_positives},
                        {"false_positives", score->false_positives},
                        {"false_negatives", score->false_negatives},
                        {"detections", score->detections}};
    }
    return doc.dump(2) + "\n";
}

inline void emit_report(std::span<const DetectionRecord> records, const std::optional<ScoreReport>& score,
                        ReportFormat format, const std::filesystem::path& path) {
    const std::string text = render_report(records, score, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report " + path.string());
    out << text;
    if (!out) throw DataError("failed writing report " + path.string());
}

/// Parses a CSV report written by emit_report.
inline std::vector<DetectionRecord> load_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report " + path.string());
    std::string line;
    if (!std::getline(in, line) || io_detail::trim(line) != kReportHeader) {
        throw DataError(path.string() + ": unexpected report header");
    }
    std::vector<DetectionRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (io_detail::trim(line).empty()) continue;
        ++row;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        const auto bad = [&] { return DataError(path.string() + ": row " + std::to_string(row) + ": malformed"); };
        if (cells.size() != 7) throw bad();
        DetectionRecord r;
        const auto t = io_detail::parse_real(cells[0]);
        if (!t || *t < 0 || *t != std::floor(*t)) throw bad();
        r.t = static_cast<std::size_t>(*t);
        double* reals[] = {&r.value, &r.generated, &r.loss, &r.threshold};
        for (int i = 0; i < 4; ++i) {
            const auto v = io_detail::parse_real(cells[1 + i]);
            if (!v) throw bad();
            *reals[i] = *v;
        }
        const auto raw = io_detail::trim(cells[5]), pruned = io_detail::trim(cells[6]);
        if ((raw != "0" && raw != "1") || (pruned != "0" && pruned != "1")) throw bad();
        r.raw_flag = raw == "1";
        r.pruned_flag = pruned == "1";
        records.push_back(r);
    }
    if (records.empty()) throw DataError(path.string() + ": report has no records");
    return records;
}

}  // namespace sudai
