#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "sudai/bench_io.hpp"

using namespace sudai;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("sudai-test-" + std::to_string(std::random_device{}()) + "-" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

std::vector<DetectionRecord> sample_records(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DetectionRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const bool raw = u(rng) < 0.3;
        out.push_back({10 + i, u(rng), u(rng), 3 * u(rng), 0.3 + u(rng), raw, raw && u(rng) < 0.5});
    }
    return out;
}

}  // namespace

TEST(LoadSeries, ThreeRows) {
    TempDir dir;
    write(dir / "s.csv", "timestamp,value\nt0,1.0\nt1,2.0\nt2,3.0\n");
    const auto s = load_series_csv(dir / "s.csv");
    EXPECT_EQ(s.values, (std::vector<double>{1.0, 2.0, 3.0}));
    EXPECT_EQ(s.timestamps, (std::vector<std::string>{"t0", "t1", "t2"}));
    EXPECT_TRUE(s.windows.empty());
    EXPECT_FALSE(s.bounds.has_value());
}

TEST(LoadSeries, HeaderOnlyIsEmpty) {
    TempDir dir;
    write(dir / "s.csv", "timestamp,value\n");
    EXPECT_NE(error_of([&] { load_series_csv(dir / "s.csv"); }).find("empty series"), std::string::npos);
}

TEST(LoadSeries, NonNumericRowIsNamed) {
    TempDir dir;
    write(dir / "s.csv", "timestamp,value\nt0,1.0\nt1,abc\nt2,3.0\n");
    const auto msg = error_of([&] { load_series_csv(dir / "s.csv"); });
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("abc"), std::string::npos) << msg;
}

TEST(LoadSeries, OtherErrors) {
    TempDir dir;
    EXPECT_NE(error_of([&] { load_series_csv(dir / "missing.csv"); }).find("cannot open"), std::string::npos);
    write(dir / "a.csv", "time,val\n0,1\n");
    EXPECT_FALSE(error_of([&] { load_series_csv(dir / "a.csv"); }).empty());
    write(dir / "b.csv", "timestamp,value\n0,1,2\n");
    EXPECT_NE(error_of([&] { load_series_csv(dir / "b.csv"); }).find("row 1"), std::string::npos);
    write(dir / "c.csv", "timestamp,value\n0,1\n1\n");
    EXPECT_NE(error_of([&] { load_series_csv(dir / "c.csv"); }).find("row 2"), std::string::npos);
    write(dir / "d.csv", "timestamp,value\n0,inf\n");
    EXPECT_FALSE(error_of([&] { load_series_csv(dir / "d.csv"); }).empty());
    write(dir / "e.csv", "");
    EXPECT_FALSE(error_of([&] { load_series_csv(dir / "e.csv"); }).empty());
}

TEST(LoadSeries, ToleratesCrlfAndBlankLines) {
    TempDir dir;
    write(dir / "s.csv", "timestamp,value\r\n2015-01-01 00:00:00, 4.5\r\n\r\n2015-01-01 00:05:00,5\r\n");
    const auto s = load_series_csv(dir / "s.csv");
    EXPECT_EQ(s.values, (std::vector<double>{4.5, 5.0}));
    EXPECT_EQ(s.timestamps[1], "2015-01-01 00:05:00");
}

TEST(LoadSeries, SidecarLabels) {
    TempDir dir;
    write(dir / "s.csv", "timestamp,value\n0,1\n1,2\n2,3\n3,4\n4,5\n5,6\n");
    write(dir / "s.labels.json", R"({"windows": [[3, 5], [0, 1]], "bounds": [0, 10]})");
    const auto s = load_series_csv(dir / "s.csv");
    EXPECT_EQ(s.windows, (std::vector<AnomalyWindow>{{0, 1}, {3, 5}}));
    ASSERT_TRUE(s.bounds);
    EXPECT_EQ(*s.bounds, (Bounds{0, 10}));

    write(dir / "other.json", R"({"windows": [[2, 9]]})");
    EXPECT_NE(error_of([&] { load_series_csv(dir / "s.csv", dir / "other.json"); }).find("exceeds"),
              std::string::npos);
    write(dir / "broken.json", R"({"windows": [[2]]})");
    EXPECT_FALSE(error_of([&] { load_series_csv(dir / "s.csv", dir / "broken.json"); }).empty());
    write(dir / "reversed.json", R"({"windows": [[4, 2]]})");
    EXPECT_FALSE(error_of([&] { load_series_csv(dir / "s.csv", dir / "reversed.json"); }).empty());
}

TEST(Normalize, AffineMap) {
    const std::vector<double> v{0, 50, 100};
    const auto r = normalize(v, {0, 100});
    EXPECT_EQ(r.values, (std::vector<double>{0.0, 0.5, 1.0}));
    EXPECT_EQ(r.clamped, 0u);
}

TEST(Normalize, DegenerateBounds) {
    const std::vector<double> v{1, 2};
    EXPECT_THROW(normalize(v, {5, 5}), DataError);
    EXPECT_THROW(normalize(v, {6, 5}), DataError);
}

TEST(Normalize, ClampsAndCounts) {
    const std::vector<double> v{110, 50, -3, 100};
    const auto r = normalize(v, {0, 100});
    EXPECT_EQ(r.values[0], 1.0);
    EXPECT_EQ(r.values[2], 0.0);
    EXPECT_EQ(r.clamped, 2u);
}

TEST(Normalize, MonotoneWithExactEndpoints) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_real_distribution<double> u(-1e3, 1e3);
        double lo = u(rng), hi = u(rng);
        if (lo > hi) std::swap(lo, hi);
        std::vector<double> v{lo, hi};
        for (int i = 0; i < 50; ++i) v.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
        std::sort(v.begin(), v.end());
        const auto r = normalize(v, {lo, hi});
        EXPECT_EQ(r.values.front(), 0.0);
        EXPECT_EQ(r.values.back(), 1.0);
        EXPECT_TRUE(std::is_sorted(r.values.begin(), r.values.end()));
    }
}

TEST(Synth, LevelShiftWindow) {
    SynthParams p;
    p.length = 1000;
    p.anomaly_times = {600};
    p.base = 0.3;
    p.anomaly_level = 0.7;
    p.noise_sigma = 0.01;
    const auto s = synth_series(SynthKind::LevelShift, p, 1);
    EXPECT_EQ(s.windows, (std::vector<AnomalyWindow>{{575, 625}}));
    ASSERT_EQ(s.values.size(), 1000u);
    double before = 0, after = 0;
    for (int t = 0; t < 600; ++t) before += s.values[t];
    for (int t = 600; t < 1000; ++t) after += s.values[t];
    EXPECT_NEAR(before / 600, 0.3, 0.005);
    EXPECT_NEAR(after / 400, 0.7, 0.005);
    for (double v : s.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Synth, NoiselessLevelShiftIsPiecewiseConstant) {
    SynthParams p;
    p.noise_sigma = 0.0;
    const auto s = synth_series(SynthKind::LevelShift, p, 9);
    for (std::size_t t = 0; t < s.values.size(); ++t) EXPECT_EQ(s.values[t], t < 600 ? 0.3 : 0.7);
}

TEST(Synth, CloseAnomaliesMergeWindows) {
    SynthParams p;
    p.anomaly_times = {400, 430, 800};
    const auto s = synth_series(SynthKind::SpikeTrain, p, 2);
    EXPECT_EQ(s.windows, (std::vector<AnomalyWindow>{{375, 455}, {775, 825}}));
    EXPECT_NEAR(s.values[430], 0.7, 0.06);
    EXPECT_NEAR(s.values[429], 0.3, 0.06);
}

TEST(Synth, WindowsClipToSeries) {
    SynthParams p;
    p.length = 100;
    p.anomaly_times = {5, 90};
    const auto s = synth_series(SynthKind::NoisySine, p, 3);
    EXPECT_EQ(s.windows, (std::vector<AnomalyWindow>{{0, 30}, {65, 99}}));
}

TEST(Synth, DeterministicAndSeedSensitive) {
    const SynthParams p;
    for (auto kind : {SynthKind::LevelShift, SynthKind::SpikeTrain, SynthKind::NoisySine}) {
        EXPECT_EQ(synth_series(kind, p, 5).values, synth_series(kind, p, 5).values);
        EXPECT_NE(synth_series(kind, p, 5).values, synth_series(kind, p, 6).values);
    }
}

TEST(Synth, InvalidParams) {
    SynthParams p;
    p.anomaly_times = {1000};
    EXPECT_THROW(synth_series(SynthKind::LevelShift, p, 1), std::invalid_argument);
    p = {};
    p.noise_sigma = -1;
    EXPECT_THROW(synth_series(SynthKind::LevelShift, p, 1), std::invalid_argument);
    p = {};
    p.length = 1;
    EXPECT_THROW(synth_series(SynthKind::LevelShift, p, 1), std::invalid_argument);
    p = {};
    p.anomaly_level = 1.5;
    EXPECT_THROW(synth_series(SynthKind::SpikeTrain, p, 1), std::invalid_argument);
}

TEST(Score, TwoFlagsInOneWindow) {
    std::vector<bool> flags(100, false);
    flags[50] = flags[55] = true;
    const std::vector<AnomalyWindow> w{{40, 60}};
    const auto r = score_nab_windows(flags, w);
    EXPECT_EQ(r.true_positives, 1u);
    EXPECT_EQ(r.false_positives, 0u);
    EXPECT_EQ(r.false_negatives, 0u);
    EXPECT_EQ(r.detections, (std::vector<std::size_t>{50}));
}

TEST(Score, FlagOutsideIsFalsePositive) {
    std::vector<bool> flags(100, false);
    flags[10] = true;
    flags[50] = true;
    const std::vector<AnomalyWindow> w{{40, 60}};
    const auto r = score_nab_windows(flags, w);
    EXPECT_EQ(r.false_positives, 1u);
    EXPECT_EQ(r.true_positives, 1u);
    EXPECT_EQ(r.num_positives, 2u);
}

TEST(Score, EmptyWindowIsFalseNegative) {
    const std::vector<bool> flags(100, false);
    const std::vector<AnomalyWindow> w{{40, 60}};
    const auto r = score_nab_windows(flags, w);
    EXPECT_EQ(r.false_negatives, 1u);
    EXPECT_EQ(r.num_anomalies, 1u);
    EXPECT_EQ(r.num_positives, 0u);
}

TEST(Score, WindowEdgesAreInclusive) {
    std::vector<bool> flags(30, false);
    flags[10] = flags[20] = flags[21] = true;
    const std::vector<AnomalyWindow> w{{10, 20}};
    const auto r = score_nab_windows(flags, w);
    EXPECT_EQ(r.true_positives, 1u);
    EXPECT_EQ(r.false_positives, 1u);
}

TEST(Score, MatchesBruteForceOnRandomCases) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t len = 20 + trial % 300;
        std::vector<bool> flags(len);
        const double density = std::uniform_real_distribution<double>(0.0, 0.2)(rng);
        for (std::size_t t = 0; t < len; ++t) flags[t] = std::uniform_real_distribution<double>()(rng) < density;
        std::vector<AnomalyWindow> windows;
        const int nw = trial % 6;
        for (int i = 0; i < nw; ++i) {
            const std::size_t a = std::uniform_int_distribution<std::size_t>(0, len - 1)(rng);
            const std::size_t b = std::min(len - 1, a + std::uniform_int_distribution<std::size_t>(0, 40)(rng));
            windows.push_back({a, b});
        }
        const auto r = score_nab_windows(flags, windows);
        const auto want = oracle::brute_score(flags, windows);
        ASSERT_EQ(r.true_positives, want.tp);
        ASSERT_EQ(r.false_positives, want.fp);
        ASSERT_EQ(r.false_negatives, want.fn);
        ASSERT_LE(r.true_positives, r.num_anomalies);
        ASSERT_LE(r.true_positives + r.false_positives, r.num_positives);
        ASSERT_EQ(r.true_positives + r.false_negatives, r.num_anomalies);
    }
}

TEST(MergeWindows, OverlapAndAdjacency) {
    EXPECT_EQ(merge_windows({{10, 20}, {0, 5}, {6, 8}, {15, 30}}),
              (std::vector<AnomalyWindow>{{0, 8}, {10, 30}}));
    EXPECT_THROW(merge_windows({{5, 4}}), DataError);
}

TEST(Report, TwoRecordsGiveThreeLines) {
    TempDir dir;
    const auto recs = sample_records(2, 1);
    emit_report(recs, std::nullopt, ReportFormat::CSV, dir / "r.csv");
    const auto text = read(dir / "r.csv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,value,generated,loss,threshold,raw_flag,pruned_flag");
}

TEST(Report, ByteStable) {
    TempDir dir;
    const auto recs = sample_records(50, 2);
    const ScoreReport score{1, 2, 1, 1, 0, {30}};
    for (auto fmt : {ReportFormat::CSV, ReportFormat::JSON}) {
        emit_report(recs, score, fmt, dir / "a");
        emit_report(recs, score, fmt, dir / "b");
        EXPECT_EQ(read(dir / "a"), read(dir / "b"));
    }
}

TEST(Report, Errors) {
    TempDir dir;
    const std::vector<DetectionRecord> none;
    EXPECT_THROW(emit_report(none, std::nullopt, ReportFormat::CSV, dir / "x.csv"), std::invalid_argument);
    EXPECT_THROW(emit_report(sample_records(2, 3), std::nullopt, ReportFormat::CSV, dir / "no" / "such" / "x.csv"),
                 DataError);
}

TEST(Report, CsvRoundTrip) {
    TempDir dir;
    const auto recs = sample_records(200, 4);
    emit_report(recs, std::nullopt, ReportFormat::CSV, dir / "r.csv");
    const auto back = load_report_csv(dir / "r.csv");
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(back[i].t, recs[i].t);
        EXPECT_EQ(back[i].raw_flag, recs[i].raw_flag);
        EXPECT_EQ(back[i].pruned_flag, recs[i].pruned_flag);
        EXPECT_NEAR(back[i].value, recs[i].value, 1e-12);
        EXPECT_NEAR(back[i].generated, recs[i].generated, 1e-12);
        EXPECT_NEAR(back[i].loss, recs[i].loss, 1e-12);
        EXPECT_NEAR(back[i].threshold, recs[i].threshold, 1e-12);
    }
    // shortest round-trip formatting is in fact exact
    EXPECT_EQ(back, recs);
}

TEST(Report, CsvParserRejectsGarbage) {
    TempDir dir;
    write(dir / "r.csv", "t,value,generated,loss,threshold,raw_flag,pruned_flag\n1,0.5,0.5,0.1,0.3,2,0\n");
    EXPECT_THROW(load_report_csv(dir / "r.csv"), DataError);
    write(dir / "h.csv", "t,value\n");
    EXPECT_THROW(load_report_csv(dir / "h.csv"), DataError);
}

TEST(Report, JsonMirrorsFields) {
    TempDir dir;
    const auto recs = sample_records(3, 5);
    const ScoreReport score{2, 3, 1, 2, 1, {12}};
    emit_report(recs, score, ReportFormat::JSON, dir / "r.json");
    const auto doc = nlohmann::json::parse(read(dir / "r.json"));
    ASSERT_EQ(doc["records"].size(), 3u);
    EXPECT_EQ(doc["records"][1]["t"], recs[1].t);
    EXPECT_EQ(doc["records"][1]["loss"].get<double>(), recs[1].loss);
    EXPECT_EQ(doc["records"][1]["raw_flag"], recs[1].raw_flag ? 1 : 0);
    EXPECT_EQ(doc["score"]["true_positives"], 1);
    EXPECT_EQ(doc["score"]["false_positives"], 2);
    EXPECT_EQ(doc["score"]["false_negatives"], 1);
    EXPECT_EQ(doc["score"]["num_anomalies"], 2);
    EXPECT_EQ(doc["score"]["num_positives"], 3);
}

TEST(Labels, SaveLoadRoundTrip) {
    TempDir dir;
    LabeledSeries s;
    s.values.assign(100, 0.0);
    s.windows = {{3, 9}, {40, 60}};
    s.bounds = Bounds{-2.5, 7.0};
    save_labels_json(dir / "l.json", s);
    LabeledSeries back;
    back.values = s.values;
    load_labels_json(dir / "l.json", back);
    EXPECT_EQ(back.windows, s.windows);
    EXPECT_EQ(back.bounds, s.bounds);
}

TEST(Series, SaveLoadRoundTrip) {
    TempDir dir;
    const auto s = synth_series(SynthKind::NoisySine, SynthParams{}, 8);
    save_series_csv(dir / "s.csv", s);
    const auto back = load_series_csv(dir / "s.csv", std::nullopt);
    EXPECT_EQ(back.values, s.values);
    EXPECT_EQ(back.timestamps, s.timestamps);
}
