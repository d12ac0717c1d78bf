#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "txgraph/pipeline.hpp"
#include "txgraph/random.hpp"
#include "txgraph/synth.hpp"

using namespace txgraph;
using namespace txgraph::pipeline;
namespace fs = std::filesystem;

namespace {

synth::SynthConfig fixture_config() {
  synth::SynthConfig cfg;
  cfg.seed = 11;
  cfg.n_accounts = 600;
  cfg.n_transactions = 15000;
  cfg.duration_days = 360;
  cfg.tally_window_days = 90;
  cfg.checkpoint_blocks = 400000;
  cfg.classes = {{Label::Exchange, 4, synth::IntervalModel::Regular, 86400.0, 0}};
  return cfg;
}

struct Prepared {
  fs::path dir;
  synth::FixturePaths paths;
  synth::GroundTruth truth;
  Dataset dataset;
};

const Prepared& prepared() {
  static const Prepared p = [] {
    Prepared out;
    out.dir = txtest::scratch_dir("txgraph_pipeline_test");
    fs::remove_all(out.dir);
    out.paths = synth::write_fixture(fixture_config(), out.dir, InputFormat::Csv);
    std::ifstream in(out.paths.ground_truth);
    out.truth = synth::ground_truth_from_json(nlohmann::json::parse(in));
    InputPaths ip;
    ip.transactions = out.paths.transactions.string();
    ip.labels = out.paths.labels.string();
    ip.credits = out.paths.credits.string();
    ip.contracts = out.paths.contracts.string();
    out.dataset = load_dataset(ip, true);
    return out;
  }();
  return p;
}

AnalyzeConfig tiling_config(const synth::GroundTruth& gt) {
  AnalyzeConfig cfg;
  cfg.width_days = cfg.stride_days = gt.tally_window_s / kSecondsPerDay;
  cfg.range_start = gt.start;
  cfg.range_end = gt.end;
  cfg.mb_sample_size = 3;
  return cfg;
}

std::vector<std::vector<std::string>> rows_of(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    for (auto c : csv::split(line)) row.emplace_back(c);
    rows.push_back(std::move(row));
  }
  return rows;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Options, ParseMetricsAndKinds) {
  EXPECT_EQ(parse_metrics("all"), default_metrics());
  EXPECT_EQ(parse_metrics("motifs, sizes"), (std::set<Metric>{Metric::Motifs, Metric::Sizes}));
  EXPECT_EQ(code_of([] { parse_metrics("sizes,bogus"); }), ErrorCode::ConfigError);
  EXPECT_EQ(parse_kinds("uug,ucg"), (std::vector<GraphKind>{GraphKind::UUG, GraphKind::UCG}));
  EXPECT_EQ(code_of([] { parse_kinds("uug,xyz"); }), ErrorCode::ConfigError);
  EXPECT_EQ(parse_scheme("both"), SchemeSelection::Both);
  EXPECT_EQ(code_of([] { parse_scheme("tumbling"); }), ErrorCode::ConfigError);
}

TEST(Options, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a64("a"), "af63dc4c8601ec8c");
}

TEST(ParallelFor, VisitsEveryIndexOnceAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(50, 3, [](std::size_t i) {
                 if (i == 17) throw Error(ErrorCode::DegenerateInput, "boom");
               }),
               Error);
}

TEST(Analyze, SizesMatchGroundTruthOnTiling) {
  const auto& p = prepared();
  const auto bundle = analyze(p.dataset, tiling_config(p.truth));
  ASSERT_FALSE(bundle.incomplete) << (bundle.problems.empty() ? "" : bundle.problems.front());
  const auto rows = rows_of(bundle.files.at("sizes.csv"));
  ASSERT_GT(rows.size(), 1u);
  const auto& h = rows[0];
  auto col = [&](std::string_view name) {
    return static_cast<std::size_t>(std::find(h.begin(), h.end(), name) - h.begin());
  };
  std::size_t matched = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto w = std::stoul(r[col("window_index")]);
    const auto kind = parse_graph_kind(r[col("kind")]);
    ASSERT_TRUE(kind);
    ASSERT_LT(w, p.truth.windows.size());
    const auto& t = p.truth.windows[w].kinds[static_cast<std::size_t>(*kind)];
    EXPECT_EQ(std::stoull(r[col("node_count")]), t.nodes) << i;
    EXPECT_EQ(std::stoull(r[col("edge_count")]), t.edges) << i;
    EXPECT_EQ(std::stoull(r[col("tx_count")]), t.tx) << i;
    EXPECT_EQ(r[col("total_value_wei")], to_string(t.value)) << i;
    EXPECT_EQ(std::stoull(r[col("new_nodes")]), t.new_nodes) << i;
    EXPECT_EQ(std::stoll(r[col("start")]), p.truth.windows[w].start);
    ++matched;
  }
  EXPECT_EQ(matched, p.truth.windows.size() * 3);
}

TEST(Analyze, ReplayTotalsMatchGroundTruth) {
  const auto& p = prepared();
  const auto bundle = analyze(p.dataset, tiling_config(p.truth));
  const auto rows = rows_of(bundle.files.at("balances.csv"));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows.back()[1], "final");
  EXPECT_EQ(rows.back()[2], to_string(p.truth.credited_total));
  EXPECT_EQ(rows.back()[3], to_string(p.truth.credited_total));
  std::size_t compared = 0;
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    for (const auto& c : p.truth.checkpoints) {
      if (std::to_string(c.block) != rows[i][1]) continue;
      EXPECT_EQ(rows[i][2], to_string(c.total));
      EXPECT_EQ(rows[i][3], to_string(c.total));
      ++compared;
    }
  }
  EXPECT_EQ(bundle.summary["replay"]["negative_balance_diagnostics"], 0);
  EXPECT_GT(compared, 0u);
}

TEST(Analyze, BundleIsIdenticalAcrossRunsAndWorkerCounts) {
  const auto& p = prepared();
  auto cfg = tiling_config(p.truth);
  cfg.scheme = SchemeSelection::Both;
  cfg.initial_days = 60;
  cfg.step_days = 60;
  const auto a = analyze(p.dataset, cfg);
  const auto b = analyze(p.dataset, cfg);
  EXPECT_EQ(a.files, b.files);
  cfg.workers = 4;
  const auto c = analyze(p.dataset, cfg);
  // Worker count is recorded in the manifest config; everything else matches.
  for (const auto& [name, contents] : a.files) {
    if (name == "manifest.json") continue;
    ASSERT_TRUE(c.files.count(name)) << name;
    EXPECT_EQ(c.files.at(name), contents) << name;
  }
  EXPECT_EQ(a.files.size(), c.files.size());
}

TEST(Analyze, EveryCsvParsesWithConsistentWidth) {
  const auto& p = prepared();
  auto cfg = tiling_config(p.truth);
  const auto bundle = analyze(p.dataset, cfg);
  for (const auto& [name, contents] : bundle.files) {
    if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
    ASSERT_FALSE(contents.empty()) << name;
    EXPECT_EQ(contents.back(), '\n') << name;
    const auto rows = rows_of(contents);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].size(), rows[0].size()) << name << " row " << i;
  }
  for (const char* name : {"manifest.json", "summary.json"}) EXPECT_NO_THROW(nlohmann::json::parse(bundle.files.at(name)));
}

TEST(Analyze, ManifestHashesFilesAndListsSkippedMetrics) {
  const auto& p = prepared();
  auto cfg = tiling_config(p.truth);
  cfg.metrics = {Metric::Motifs};
  const auto bundle = analyze(p.dataset, cfg);
  EXPECT_TRUE(bundle.files.count("motifs.csv"));
  EXPECT_FALSE(bundle.files.count("sizes.csv"));
  const auto& skipped = bundle.manifest["skipped_metrics"];
  EXPECT_EQ(skipped.size(), kAllMetrics.size() - 1);
  for (const auto& s : skipped) EXPECT_NE(s.get<std::string>(), "motifs");
  for (const auto& [name, hash] : bundle.manifest["files"].items()) {
    EXPECT_EQ(hash.get<std::string>(), fnv1a64(bundle.files.at(name))) << name;
  }
}

TEST(Analyze, WriteBundleRoundTrips) {
  const auto& p = prepared();
  const auto bundle = analyze(p.dataset, tiling_config(p.truth));
  const auto out = p.dir / "bundle";
  fs::remove_all(out);
  write_bundle(bundle, out);
  for (const auto& [name, contents] : bundle.files) {
    std::ifstream in(out / name, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    EXPECT_EQ(s.str(), contents) << name;
  }
  EXPECT_TRUE(fs::is_regular_file(out / "timing.json"));
}

TEST(Analyze, EmptyDatasetWithoutRangeIsRejected) {
  auto d = dataset_from(RecordStore{});
  EXPECT_EQ(code_of([&] { analysis_windows(d, AnalyzeConfig{}); }), ErrorCode::EmptyRange);
}

TEST(BlockCheckpoints, Cadence) {
  auto f = txtest::fixture({txtest::tx(1, 2, 1, 1, TxKind::Transfer, 10), txtest::tx(1, 2, 2, 1, TxKind::Transfer, 55)});
  EXPECT_EQ(block_checkpoints(f.store, 20), (std::vector<std::int64_t>{30, 50}));
  EXPECT_TRUE(block_checkpoints(f.store, 100).empty());
}

namespace {

std::vector<WindowValue> daily_series(const std::vector<double>& values) {
  std::vector<WindowValue> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Timestamp s = static_cast<Timestamp>(i) * kSecondsPerDay;
    out.push_back({{i, s, s + kSecondsPerDay, WindowScheme::Sliding}, values[i]});
  }
  return out;
}

PriceSeries prices_at_noon(const std::vector<double>& values) {
  PriceSeries p;
  for (std::size_t i = 0; i < values.size(); ++i)
    p.points.push_back({static_cast<Timestamp>(i) * kSecondsPerDay + 43200, values[i]});
  return p;
}

}  // namespace

TEST(Correlate, IdenticalSeriesGiveOne) {
  const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6};
  const auto r = correlate(daily_series(v), prices_at_noon(v));
  EXPECT_EQ(r.n_windows, v.size());
  EXPECT_NEAR(r.pearson, 1.0, 1e-12);
}

TEST(Correlate, ConstantPriceAndNoOverlap) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_EQ(code_of([&] { correlate(daily_series(v), prices_at_noon({7, 7, 7, 7})); }), ErrorCode::ZeroVariance);
  PriceSeries late;
  late.points.push_back({100 * kSecondsPerDay, 1.0});
  late.points.push_back({101 * kSecondsPerDay, 2.0});
  EXPECT_EQ(code_of([&] { correlate(daily_series(v), late); }), ErrorCode::NoOverlap);
}

TEST(Correlate, PlantedLinearRelationWithNoise) {
  Rng rng(21);
  std::vector<double> metric(200), price(200);
  for (std::size_t i = 0; i < metric.size(); ++i) {
    metric[i] = rng.uniform() * 100;
    price[i] = 2.5 * metric[i] + 10 + (rng.uniform() - 0.5) * 40;
  }
  // Independent reference from the same pairs.
  const double expected = txgraph::pearson(metric, price);
  const auto r = correlate(daily_series(metric), prices_at_noon(price));
  EXPECT_NEAR(r.pearson, expected, 1e-12);
  EXPECT_NEAR(r.pearson, 0.97, 0.1);
}

TEST(Correlate, WindowsAverageTheirPricePoints) {
  PriceSeries p;
  p.points = {{10, 1.0}, {20, 3.0}, {kSecondsPerDay + 5, 10.0}, {2 * kSecondsPerDay + 5, 4.0}};
  const auto r = correlate(daily_series({1, 2, 3}), p);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(r.rows[0].mean_price, 2.0);
  EXPECT_EQ(r.rows[0].price_points, 2u);
}
