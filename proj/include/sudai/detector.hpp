// Continual-learning anomaly detection on a normalized univariate stream.
//
// At every step t with a full context window the model predicts x_t, the
// discriminator-vs-data loss L_t is recorded, a flag is raised when the score
// exceeds the threshold, and the model is then trained on (window, x_t).
//
// The dynamic threshold is eta(t) = a * Noise(t) + b, where Noise(t) is the
// p-quantile of local variations Var(s, delta) = max_{|i-s| <= delta} |L_s - L_i|
// over t - tau < s < t. Var needs delta future losses, so in dynamic mode a
// decision for step t is released delta steps later.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sudai/qgan.hpp"

namespace sudai {

enum class ThresholdMode { Static, Dynamic };
enum class ScoreMode { Loss, Distance };

struct DetectorConfig {
    unsigned window = 10;
    double epsilon = 0.05;
    double step_multiplier = 10.0;
    double threshold_base = 0.3;
    double threshold_gain = 2.0;
    double quantile_p = 0.95;
    unsigned noise_window = 500;
    unsigned variation_radius = 2;
    unsigned prune_steps = 30;
    ThresholdMode threshold_mode = ThresholdMode::Dynamic;
    double static_threshold = 0.3;
    ScoreMode score_mode = ScoreMode::Loss;

    void validate() const {
        if (window < 1) throw std::invalid_argument("window must be >= 1");
        if (!(quantile_p > 0.0 && quantile_p < 1.0)) throw std::invalid_argument("quantile_p must lie in (0, 1)");
        if (variation_radius < 1) throw std::invalid_argument("variation_radius must be >= 1");
        if (noise_window <= 2 * variation_radius) {
            throw std::invalid_argument("noise_window must exceed 2 * variation_radius");
        }
        if (threshold_base < 0.0 || threshold_gain < 0.0) {
            throw std::invalid_argument("threshold_base and threshold_gain must be >= 0");
        }
        if (epsilon < 0.0 || step_multiplier < 0.0) {
            throw std::invalid_argument("epsilon and step_multiplier must be >= 0");
        }
    }
};

struct DetectionRecord {
    std::size_t t = 0;
    double value = 0.0;
    double generated = 0.0;
    double loss = 0.0;
    double threshold = 0.0;
    bool raw_flag = false;
    bool pruned_flag = false;

    bool operator==(const DetectionRecord&) const = default;
};

/// max |L_t - L_i| over |i - t| <= delta, clipped to the series bounds.
inline double local_variation(std::span<const double> losses, std::size_t t, unsigned delta) {
    if (losses.empty()) throw std::invalid_argument("loss series is empty");
    if (t >= losses.size()) throw std::out_of_range("time index outside loss series");
    const std::size_t lo = t >= delta ? t - delta : 0;
    const std::size_t hi = std::min(losses.size() - 1, t + delta);
    double worst = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) worst = std::max(worst, std::abs(losses[t] - losses[i]));
    return worst;
}

/// p-quantile with linear interpolation between order statistics
/// (position (m - 1) p in the sorted sample). Reorders `values`.
inline double quantile_in_place(std::vector<double>& values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    const double h = static_cast<double>(values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double x_lo = values[lo];
    if (lo + 1 >= values.size()) return x_lo;
    const double x_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    return x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo);
}

/// Noise level at t: quantile of Var(s, delta) for t - tau < s < t.
/// Zero while fewer than 2 delta + 1 variations are available.
inline double noise_estimate(std::span<const double> losses, std::size_t t, const DetectorConfig& config) {
    const std::size_t first = t + 1 > config.noise_window ? t + 1 - config.noise_window : 0;
    const std::size_t last = std::min(t, losses.size());  // exclusive
    if (last <= first || last - first < 2 * std::size_t{config.variation_radius} + 1) return 0.0;
    std::vector<double> variations;
    variations.reserve(last - first);
    for (std::size_t s = first; s < last; ++s) {
        variations.push_back(local_variation(losses, s, config.variation_radius));
    }
    return quantile_in_place(variations, config.quantile_p);
}

inline double dynamic_threshold(double noise, const DetectorConfig& config) {
    if (noise < 0.0) throw std::invalid_argument("noise must be >= 0");
    return config.threshold_gain * noise + config.threshold_base;
}

/// Number of training passes after observing `loss`: floor(m * loss), or 0 below epsilon.
inline unsigned gradient_step_policy(double loss, const DetectorConfig& config) {
    if (loss < 0.0) throw std::invalid_argument("loss must be >= 0");
    if (loss < config.epsilon) return 0;
    return static_cast<unsigned>(std::floor(config.step_multiplier * loss));
}

/// Push-based detector. Owns its model; one instance per stream.
class StreamDetector {
public:
    StreamDetector(QganModel model, DetectorConfig config) : model_(std::move(model)), config_(config) {
        config_.validate();
        if (config_.window != model_.config().window) {
            throw std::invalid_argument("detector window differs from model window");
        }
    }

    const QganModel& model() const { return model_; }
    QganModel& model() { return model_; }
    const DetectorConfig& config() const { return config_; }

    /// Feeds the next normalized value and returns the records finalized by it.
    std::vector<DetectionRecord> push(double value) {
        check_unit_interval(value, "series");
        const std::size_t t = values_.size();
        values_.push_back(value);
        if (t >= config_.window) observe(t);
        return release(false);
    }

    /// Finalizes everything still waiting for future losses.
    std::vector<DetectionRecord> finish() { return release(true); }

private:
    void observe(std::size_t t) {
        const std::span<const double> context(values_.data() + t - config_.window, config_.window);
        const double x = values_[t];
        DetectionRecord rec;
        rec.t = t;
        rec.value = x;
        rec.generated = generate_point(model_, context);
        rec.loss = loss_dx(model_, context, x);
        pending_.push_back(rec);
        scores_.push_back(config_.score_mode == ScoreMode::Loss ? rec.loss : std::abs(x - rec.generated));

        const unsigned steps = gradient_step_policy(rec.loss, config_);
        for (unsigned i = 0; i < steps; ++i) train_on_point(model_, context, x);
    }

    std::vector<DetectionRecord> release(bool flush) {
        std::vector<DetectionRecord> out;
        const std::size_t latency =
            config_.threshold_mode == ThresholdMode::Dynamic ? config_.variation_radius : 0;
        while (!pending_.empty()) {
            const std::size_t i = decided_;  // index into scores_
            if (!flush && i + latency >= scores_.size()) break;
            DetectionRecord rec = pending_.front();
            pending_.erase(pending_.begin());
            rec.threshold = config_.threshold_mode == ThresholdMode::Dynamic
                                ? dynamic_threshold(noise_estimate(scores_, i, config_), config_)
                                : config_.static_threshold;
            rec.raw_flag = scores_[i] > rec.threshold;
            const bool warming_up = i < config_.prune_steps;
            const bool cooling_down = last_pruned_ && i <= *last_pruned_ + config_.prune_steps;
            rec.pruned_flag = rec.raw_flag && !warming_up && !cooling_down;
            if (rec.pruned_flag) last_pruned_ = i;
            ++decided_;
            out.push_back(rec);
        }
        return out;
    }

    QganModel model_;
    DetectorConfig config_;
    std::vector<double> values_;
    std::vector<double> scores_;
    std::vector<DetectionRecord> pending_;
    std::size_t decided_ = 0;
    std::optional<std::size_t> last_pruned_;
};

/// Runs the detector over a whole series; `model` is trained in place.
inline std::vector<DetectionRecord> detect_stream(std::span<const double> series, QganModel& model,
                                                  const DetectorConfig& config) {
    if (series.size() <= config.window) {
        throw std::invalid_argument("series of length " + std::to_string(series.size()) +
                                    " is not longer than the window");
    }
    for (double v : series) check_unit_interval(v, "series");
    StreamDetector detector(std::move(model), config);
    std::vector<DetectionRecord> records;
    records.reserve(series.size() - config.window);
    for (double v : series) {
        auto done = detector.push(v);
        records.insert(records.end(), done.begin(), done.end());
    }
    auto rest = detector.finish();
    records.insert(records.end(), rest.begin(), rest.end());
    model = std::move(detector.model());
    return records;
}

}  // namespace sudai
