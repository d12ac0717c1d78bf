#pragma once

// Analysis orchestration: load a dataset, fan per-window graph tasks out to a
// worker pool, merge results in window order and render the report bundle.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "txgraph/burstiness.hpp"
#include "txgraph/contracts.hpp"
#include "txgraph/csv.hpp"
#include "txgraph/graph.hpp"
#include "txgraph/inequality.hpp"
#include "txgraph/ingest.hpp"
#include "txgraph/metrics.hpp"
#include "txgraph/motifs.hpp"

namespace txgraph::pipeline {

using txgraph::to_string;

// ---------------------------------------------------------------------------
// Configuration

enum class Metric { Sizes, Degrees, Weights, TxCounts, Motifs, Burstiness, Gini, Ppmcc, Lifecycle, Snapshots };

inline constexpr std::array<Metric, 10> kAllMetrics = {Metric::Sizes,  Metric::Degrees,   Metric::Weights,
                                                       Metric::TxCounts, Metric::Motifs, Metric::Burstiness,
                                                       Metric::Gini,   Metric::Ppmcc,     Metric::Lifecycle,
                                                       Metric::Snapshots};

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::Sizes: return "sizes";
    case Metric::Degrees: return "degrees";
    case Metric::Weights: return "weights";
    case Metric::TxCounts: return "txcounts";
    case Metric::Motifs: return "motifs";
    case Metric::Burstiness: return "burstiness";
    case Metric::Gini: return "gini";
    case Metric::Ppmcc: return "ppmcc";
    case Metric::Lifecycle: return "lifecycle";
    case Metric::Snapshots: return "snapshots";
  }
  return "sizes";
}

// Everything but edge-list snapshots, which are large and opt-in.
inline std::set<Metric> default_metrics() {
  std::set<Metric> out(kAllMetrics.begin(), kAllMetrics.end());
  out.erase(Metric::Snapshots);
  return out;
}

// Comma-separated metric names; "all" expands to the default set.
inline std::set<Metric> parse_metrics(std::string_view list) {
  std::set<Metric> out;
  for (auto part : csv::split(list)) {
    const auto name = csv::trim(part);
    if (name.empty()) continue;
    if (name == "all") {
      const auto d = default_metrics();
      out.insert(d.begin(), d.end());
      continue;
    }
    bool found = false;
    for (auto m : kAllMetrics) {
      if (name == to_string(m)) {
        out.insert(m);
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::ConfigError, "unknown metric '" + std::string(name) + "'");
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "no metrics selected");
  return out;
}

inline std::vector<GraphKind> parse_kinds(std::string_view list) {
  std::vector<GraphKind> out;
  for (auto part : csv::split(list)) {
    const auto name = csv::trim(part);
    if (name.empty()) continue;
    auto k = parse_graph_kind(name);
    if (!k) throw Error(ErrorCode::ConfigError, "unknown graph kind '" + std::string(name) + "'");
    if (std::find(out.begin(), out.end(), *k) == out.end()) out.push_back(*k);
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "no graph kinds selected");
  std::sort(out.begin(), out.end());
  return out;
}

enum class SchemeSelection { Sliding, Incremental, Both };

inline SchemeSelection parse_scheme(std::string_view s) {
  if (s == "sliding") return SchemeSelection::Sliding;
  if (s == "incremental") return SchemeSelection::Incremental;
  if (s == "both") return SchemeSelection::Both;
  throw Error(ErrorCode::ConfigError, "unknown window scheme '" + std::string(s) + "'");
}

inline const char* to_string(SchemeSelection s) {
  switch (s) {
    case SchemeSelection::Sliding: return "sliding";
    case SchemeSelection::Incremental: return "incremental";
    case SchemeSelection::Both: return "both";
  }
  return "sliding";
}

inline constexpr std::array<double, 10> kDefaultBusyFractions = {0.1, 0.2, 0.3, 0.4, 0.5,
                                                                 0.6, 0.7, 0.8, 0.9, 1.0};

struct AnalyzeConfig {
  SchemeSelection scheme = SchemeSelection::Sliding;
  std::int64_t width_days = 180;
  std::int64_t stride_days = 45;
  std::int64_t initial_days = 180;
  std::int64_t step_days = 45;
  WindowCoverage coverage = WindowCoverage::CoverRange;
  // Analysis range; defaults to [first record, last record + 1 s).
  std::optional<Timestamp> range_start;
  std::optional<Timestamp> range_end;
  std::vector<GraphKind> kinds{kAllGraphKinds.begin(), kAllGraphKinds.end()};
  std::set<Metric> metrics = default_metrics();
  Wei min_value = 0;
  bool strict = false;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint64_t tail_min_degree = 1;
  std::size_t mb_sample_size = 100;
  std::uint64_t checkpoint_blocks = 200000;
  std::size_t top_k = 10;
  bool balance_include_contracts = false;

  bool wants(Metric m) const { return metrics.contains(m); }

  void validate() const {
    if (width_days <= 0 || stride_days <= 0 || initial_days <= 0 || step_days <= 0) {
      throw Error(ErrorCode::ConfigError, "window width, stride, initial and step must be positive");
    }
    if (workers == 0) throw Error(ErrorCode::ConfigError, "workers must be at least 1");
    if (checkpoint_blocks == 0) throw Error(ErrorCode::ConfigError, "checkpoint cadence must be positive");
    if (top_k == 0) throw Error(ErrorCode::ConfigError, "top-k must be at least 1");
    if (mb_sample_size == 0) throw Error(ErrorCode::ConfigError, "M-B sample size must be at least 1");
    if (range_start && range_end && *range_start >= *range_end) {
      throw Error(ErrorCode::ConfigError, "analysis range is empty");
    }
  }
};

// Canonical form used for the manifest's config hash. Worker count is left
// out: it never changes results.
inline nlohmann::json to_json(const AnalyzeConfig& c) {
  nlohmann::json j;
  j["scheme"] = to_string(c.scheme);
  j["width_days"] = c.width_days;
  j["stride_days"] = c.stride_days;
  j["initial_days"] = c.initial_days;
  j["step_days"] = c.step_days;
  j["coverage"] = c.coverage == WindowCoverage::CoverRange ? "cover_range" : "full_width_only";
  j["range_start"] = c.range_start ? nlohmann::json(*c.range_start) : nlohmann::json(nullptr);
  j["range_end"] = c.range_end ? nlohmann::json(*c.range_end) : nlohmann::json(nullptr);
  auto kinds = nlohmann::json::array();
  for (auto k : c.kinds) kinds.push_back(to_string(k));
  j["kinds"] = kinds;
  auto metrics = nlohmann::json::array();
  for (auto m : c.metrics) metrics.push_back(to_string(m));
  j["metrics"] = metrics;
  j["min_value_wei"] = to_string(c.min_value);
  j["strict"] = c.strict;
  j["seed"] = c.seed;
  j["tail_min_degree"] = c.tail_min_degree;
  j["mb_sample_size"] = c.mb_sample_size;
  j["checkpoint_blocks"] = c.checkpoint_blocks;
  j["top_k"] = c.top_k;
  j["balance_include_contracts"] = c.balance_include_contracts;
  return j;
}

// ---------------------------------------------------------------------------
// Inputs

struct InputPaths {
  std::string transactions;
  InputFormat format = InputFormat::Csv;
  std::optional<std::string> labels;
  std::optional<std::string> prices;
  std::optional<std::string> credits;
  std::optional<std::string> contracts;

  void validate() const {
    auto check = [](const std::string& what, const std::string& p) {
      if (p.empty()) throw Error(ErrorCode::ConfigError, what + " path is required");
      if (!std::filesystem::is_regular_file(p)) {
        throw Error(ErrorCode::ConfigError, what + " file '" + p + "' does not exist");
      }
    };
    check("transactions", transactions);
    if (labels) check("labels", *labels);
    if (prices) check("prices", *prices);
    if (credits) check("credits", *credits);
    if (contracts) check("contracts", *contracts);
  }
};

struct Dataset {
  RecordStore store;
  AccountRegistry registry;
  std::vector<IndexedCredit> credits;
  bool has_credits = false;
  std::optional<PriceSeries> prices;
  std::vector<RejectedLine> rejected;
};

inline Dataset load_dataset(const InputPaths& paths, bool strict) {
  paths.validate();
  Dataset d;
  ParseOptions opts;
  opts.format = paths.format;
  opts.strict = strict;
  {
    auto in = open_input(paths.transactions);
    d.store = load_records(in, opts, [&](const RejectedLine& r) { d.rejected.push_back(r); });
  }
  std::vector<DeclaredAccount> declared;
  if (paths.contracts) {
    auto in = open_input(*paths.contracts);
    declared = load_declared_accounts(in);
  }
  d.registry = classify_accounts(d.store, declared);
  if (paths.labels) {
    auto in = open_input(*paths.labels);
    d.registry.apply_labels(load_labels(in));
  }
  if (paths.credits) {
    auto in = open_input(*paths.credits);
    const auto credits = load_credits(in);
    d.credits = resolve_credits(credits, d.registry);
    d.has_credits = true;
  }
  if (paths.prices) {
    auto in = open_input(*paths.prices);
    d.prices = load_price_series(in);
  }
  return d;
}

// In-memory dataset without enrichment files (tests, synthetic runs).
inline Dataset dataset_from(RecordStore store, std::span<const DeclaredAccount> declared = {}) {
  Dataset d;
  d.store = std::move(store);
  d.registry = classify_accounts(d.store, declared);
  return d;
}

// ---------------------------------------------------------------------------
// Worker pool

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// is rethrown after all threads stop.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    while (!failed.load()) {
      const auto i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (threads == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Hashing

// FNV-1a, 64 bit, as 16 hex digits.
inline std::string fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

// ---------------------------------------------------------------------------
// Per-window results

struct WindowTask {
  TimeWindow window;
  GraphKind kind;
};

struct WindowResult {
  TimeWindow window;
  GraphKind kind = GraphKind::UUG;
  SizeStats size;
  AverageDegree avg_degree;
  std::size_t new_nodes = 0;
  std::array<DegreeHistogram, 3> degrees;  // in, out, all
  std::optional<FitResult> tail_fit;
  std::string tail_fit_error;
  WeightStats weights;
  TxCountDistribution tx_counts;
  std::optional<TriadSummary> triads;
  std::optional<double> closed_ratio;
  std::optional<double> mean_closure_days;
  std::size_t closures = 0;
  std::vector<GiniReport> gini;
  AccountValues degree_values;
  AccountValues tx_values;
  std::string snapshot;
  std::vector<std::string> problems;
};

inline std::string task_label(const TimeWindow& w, GraphKind k) {
  return std::string(to_string(w.scheme)) + " window " + std::to_string(w.index) + " " + to_string(k);
}

inline WindowResult analyze_window(const Dataset& d, const WindowTask& task, const AnalyzeConfig& cfg,
                                   const FirstSeenMap& first) {
  WindowResult r;
  r.window = task.window;
  r.kind = task.kind;
  BuildOptions bopts;
  bopts.min_value = cfg.min_value;
  const auto g = build_graph(d.store, task.window, task.kind, d.registry, bopts);
  r.size = size_stats(g);
  r.avg_degree = average_degree(g);
  r.new_nodes = new_node_count(g, first);
  if (cfg.wants(Metric::Degrees)) {
    r.degrees = {degree_histogram(g, DegreeDirection::In), degree_histogram(g, DegreeDirection::Out),
                 degree_histogram(g, DegreeDirection::All)};
    try {
      r.tail_fit = fit_degree_tail(r.degrees[2], cfg.tail_min_degree);
    } catch (const Error& e) {
      r.tail_fit_error = to_string(e.code());
    }
  }
  if (cfg.wants(Metric::Weights)) r.weights = weight_stats(g, first);
  if (cfg.wants(Metric::TxCounts)) r.tx_counts = transaction_count_histogram(g);
  if (cfg.wants(Metric::Motifs)) {
    r.triads = triad_summary(g, 1);
    const auto total = r.triads->census.closed_total + r.triads->census.open_total;
    if (total > 0) r.closed_ratio = closed_ratio(r.triads->census);
    const auto closure = closure_times(d.store, task.window, task.kind, d.registry, bopts);
    r.closures = closure.count();
    if (closure.mean) r.mean_closure_days = *closure.mean / static_cast<double>(kSecondsPerDay);
  }
  if (cfg.wants(Metric::Gini)) {
    for (auto m : kGraphMetrics) {
      const auto values = values_only(node_metric_values(g, m));
      r.gini.push_back(gini_report(m, task.window.index, values));
    }
  }
  if (cfg.wants(Metric::Ppmcc)) {
    r.degree_values = node_metric_values(g, NodeMetric::Degree);
    r.tx_values = node_metric_values(g, NodeMetric::TxNum);
  }
  if (cfg.wants(Metric::Snapshots)) {
    std::ostringstream out;
    write_edge_list(out, g, d.store.accounts);
    r.snapshot = out.str();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bundle

struct Bundle {
  std::map<std::string, std::string> files;  // relative path -> contents, manifest included
  nlohmann::json manifest;
  nlohmann::json summary;
  nlohmann::json timing;
  bool incomplete = false;
  std::vector<std::string> problems;
};

namespace detail {

inline std::string opt(const std::optional<double>& v) { return csv::format_optional(v); }
inline std::string num(double v) { return csv::format_double(v); }

inline nlohmann::json fit_json(const FitResult& f) {
  return {{"exponent", f.exponent}, {"coefficient", f.coefficient}, {"r_squared", f.r_squared},
          {"n_points", f.n_points}};
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

inline std::vector<TimeWindow> analysis_windows(const Dataset& d, const AnalyzeConfig& cfg) {
  if (d.store.records.empty() && !(cfg.range_start && cfg.range_end)) {
    throw Error(ErrorCode::EmptyRange, "no records to analyze");
  }
  const Timestamp t0 = cfg.range_start.value_or(d.store.records.empty() ? 0 : d.store.records.front().timestamp);
  const Timestamp t1 = cfg.range_end.value_or(d.store.records.empty() ? 0 : d.store.records.back().timestamp + 1);
  std::vector<TimeWindow> out;
  if (cfg.scheme != SchemeSelection::Incremental) {
    auto w = make_sliding_windows(t0, t1, cfg.width_days * kSecondsPerDay, cfg.stride_days * kSecondsPerDay,
                                  cfg.coverage);
    out.insert(out.end(), w.begin(), w.end());
  }
  if (cfg.scheme != SchemeSelection::Sliding) {
    auto w = make_incremental_windows(t0, t1, cfg.initial_days * kSecondsPerDay, cfg.step_days * kSecondsPerDay);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

// Block checkpoints every `cadence` blocks after the first record's block, up
// to the last record's block.
inline std::vector<std::int64_t> block_checkpoints(const RecordStore& store, std::uint64_t cadence) {
  std::vector<std::int64_t> out;
  if (store.records.empty()) return out;
  std::uint64_t lo = store.records.front().block_id, hi = lo;
  for (const auto& r : store.records) {
    lo = std::min(lo, r.block_id);
    hi = std::max(hi, r.block_id);
  }
  for (std::uint64_t b = lo + cadence; b <= hi; b += cadence) out.push_back(static_cast<std::int64_t>(b));
  return out;
}

// `inputs` (for example input file hashes) is copied into the manifest.
inline Bundle analyze(const Dataset& d, const AnalyzeConfig& cfg, const nlohmann::json& inputs = nlohmann::json::object()) {
  cfg.validate();
  detail::Timer total_timer;
  Bundle bundle;
  nlohmann::json phases = nlohmann::json::object();
  auto problem = [&](const std::string& what) {
    bundle.problems.push_back(what);
    bundle.incomplete = true;
  };
  // Strict mode turns any analysis failure into a hard error.
  auto guarded = [&](const std::string& what, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (cfg.strict) throw;
      problem(what + ": " + e.what());
    }
  };

  const auto windows = analysis_windows(d, cfg);
  const auto first = first_seen(d.store);

  // Window x kind tasks.
  std::vector<WindowTask> tasks;
  for (const auto& w : windows) {
    for (auto k : cfg.kinds) tasks.push_back({w, k});
  }
  const bool graph_metrics = cfg.wants(Metric::Sizes) || cfg.wants(Metric::Degrees) || cfg.wants(Metric::Weights) ||
                             cfg.wants(Metric::TxCounts) || cfg.wants(Metric::Motifs) || cfg.wants(Metric::Gini) ||
                             cfg.wants(Metric::Ppmcc) || cfg.wants(Metric::Snapshots);
  std::vector<std::optional<WindowResult>> results(tasks.size());
  std::vector<std::string> task_errors(tasks.size());
  if (graph_metrics) {
    detail::Timer t;
    parallel_for(tasks.size(), cfg.workers, [&](std::size_t i) {
      try {
        results[i] = analyze_window(d, tasks[i], cfg, first);
      } catch (const Error& e) {
        if (cfg.strict) throw;
        task_errors[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (!task_errors[i].empty()) problem(task_label(tasks[i].window, tasks[i].kind) + ": " + task_errors[i]);
    }
    phases["windows"] = t.seconds();
  }

  auto& files = bundle.files;
  nlohmann::json summary;
  summary["records"] = d.store.records.size();
  summary["rejected_lines"] = d.rejected.size();
  summary["accounts"] = d.store.accounts.size();
  {
    std::size_t eoa = 0, contracts = 0;
    for (AccountIndex i = 0; i < d.store.accounts.size(); ++i) (d.registry.is_contract(i) ? contracts : eoa)++;
    summary["eoa_accounts"] = eoa;
    summary["contract_accounts"] = contracts;
  }
  if (!d.store.records.empty()) {
    summary["first_timestamp"] = d.store.records.front().timestamp;
    summary["last_timestamp"] = d.store.records.back().timestamp;
  }
  summary["windows"] = windows.size();
  summary["classification_warnings"] = d.registry.warnings;

  auto row_prefix = [](const WindowResult& r) {
    return std::vector<std::string>{std::to_string(r.window.index), to_string(r.window.scheme), to_string(r.kind)};
  };

  if (cfg.wants(Metric::Sizes)) {
    std::ostringstream out;
    out << "window_index,scheme,kind,node_count,edge_count,tx_count,total_value_wei,avg_degree,avg_in_degree,"
           "avg_out_degree,new_nodes,start,end\n";
    for (const auto& r : results) {
      if (!r) continue;
      auto row = row_prefix(*r);
      row.insert(row.end(), {std::to_string(r->size.node_count), std::to_string(r->size.edge_count),
                             std::to_string(r->size.tx_count), to_string(r->size.total_value),
                             detail::opt(r->avg_degree.all), detail::opt(r->avg_degree.in),
                             detail::opt(r->avg_degree.out), std::to_string(r->new_nodes),
                             std::to_string(r->window.start), std::to_string(r->window.end)});
      csv::write_row(out, row);
    }
    files["sizes.csv"] = out.str();

    // Densification across the windows of each scheme and kind.
    auto fits = nlohmann::json::array();
    for (auto scheme : {WindowScheme::Sliding, WindowScheme::Incremental}) {
      for (auto kind : cfg.kinds) {
        std::vector<std::pair<double, double>> points;
        bool any = false;
        for (const auto& r : results) {
          if (!r || r->window.scheme != scheme || r->kind != kind) continue;
          any = true;
          points.emplace_back(static_cast<double>(r->size.node_count), static_cast<double>(r->size.edge_count));
        }
        if (!any) continue;
        nlohmann::json j{{"scheme", to_string(scheme)}, {"kind", to_string(kind)}};
        try {
          j["fit"] = detail::fit_json(fit_densification(points));
        } catch (const Error& e) {
          j["fit"] = nullptr;
          j["error"] = to_string(e.code());
        }
        fits.push_back(std::move(j));
      }
    }
    summary["densification"] = std::move(fits);
  }

  if (cfg.wants(Metric::Degrees)) {
    std::ostringstream out;
    out << "window_index,scheme,kind,direction,degree,node_count,cdf\n";
    auto tails = nlohmann::json::array();
    for (const auto& r : results) {
      if (!r) continue;
      for (const auto& h : r->degrees) {
        for (const auto& [degree, cdf] : h.cdf()) {
          auto row = row_prefix(*r);
          row.insert(row.end(), {to_string(h.direction), std::to_string(degree),
                                 std::to_string(h.counts.at(degree)), detail::num(cdf)});
          csv::write_row(out, row);
        }
      }
      nlohmann::json j{{"window_index", r->window.index},
                       {"scheme", to_string(r->window.scheme)},
                       {"kind", to_string(r->kind)},
                       {"direction", "all"},
                       {"min_degree", cfg.tail_min_degree},
                       {"final_point_excluded", true}};
      if (r->tail_fit) j["fit"] = detail::fit_json(*r->tail_fit);
      else {
        j["fit"] = nullptr;
        j["error"] = r->tail_fit_error;
      }
      tails.push_back(std::move(j));
    }
    files["degrees.csv"] = out.str();
    summary["degree_tail"] = std::move(tails);
  }

  if (cfg.wants(Metric::Weights)) {
    std::ostringstream out;
    out << "window_index,scheme,kind,tx_per_node,tx_per_edge,value_per_node,value_per_edge,value_per_tx,"
           "new_nodes,old_nodes,new_node_tx,old_node_tx,new_node_value,old_node_value\n";
    for (const auto& r : results) {
      if (!r) continue;
      const auto& w = r->weights;
      auto row = row_prefix(*r);
      row.insert(row.end(), {detail::opt(w.tx_per_node), detail::opt(w.tx_per_edge), detail::opt(w.value_per_node),
                             detail::opt(w.value_per_edge), detail::opt(w.value_per_tx),
                             std::to_string(w.new_nodes), std::to_string(w.old_nodes), detail::opt(w.new_node_tx),
                             detail::opt(w.old_node_tx), detail::opt(w.new_node_value),
                             detail::opt(w.old_node_value)});
      csv::write_row(out, row);
    }
    files["weights.csv"] = out.str();
  }

  if (cfg.wants(Metric::TxCounts)) {
    std::ostringstream out;
    out << "window_index,scheme,kind,level,tx_count,count\n";
    for (const auto& r : results) {
      if (!r) continue;
      for (const auto& [level, hist] :
           {std::pair{"edge", &r->tx_counts.per_edge}, std::pair{"node", &r->tx_counts.per_node}}) {
        for (const auto& [c, n] : *hist) {
          auto row = row_prefix(*r);
          row.insert(row.end(), {level, std::to_string(c), std::to_string(n)});
          csv::write_row(out, row);
        }
      }
    }
    files["txcounts.csv"] = out.str();
  }

  if (cfg.wants(Metric::Motifs)) {
    std::ostringstream out;
    out << "window_index";
    for (auto name : kMotifNames) out << ',' << name;
    out << ",closed_total,open_total,closed_ratio,mean_closure_days,global_clustering,scheme,kind,closures\n";
    for (const auto& r : results) {
      if (!r || !r->triads) continue;
      std::vector<std::string> row{std::to_string(r->window.index)};
      for (auto c : r->triads->census.counts) row.push_back(std::to_string(c));
      row.insert(row.end(), {std::to_string(r->triads->census.closed_total),
                             std::to_string(r->triads->census.open_total), detail::opt(r->closed_ratio),
                             detail::opt(r->mean_closure_days), detail::num(r->triads->global_clustering),
                             to_string(r->window.scheme), to_string(r->kind), std::to_string(r->closures)});
      csv::write_row(out, row);
    }
    files["motifs.csv"] = out.str();
  }

  if (cfg.wants(Metric::Snapshots)) {
    for (const auto& r : results) {
      if (r) files["snapshots/" + snapshot_file_name(r->kind, r->window.scheme, r->window.index)] = r->snapshot;
    }
  }

  // Balance replay feeds both the balance Gini and the balance PPMCC.
  std::optional<ReplayResult> replay;
  std::vector<AccountValues> living;
  if (cfg.wants(Metric::Gini) || cfg.wants(Metric::Ppmcc)) {
    detail::Timer t;
    guarded("balance replay", [&] {
      const auto checkpoints = block_checkpoints(d.store, cfg.checkpoint_blocks);
      ReplayOptions ropts;
      ropts.strict = cfg.strict;
      replay = replay_balances(d.store, d.registry.accounts.size(), d.credits, checkpoints, ropts);
      BalanceGiniOptions gopts;
      gopts.include_contracts = cfg.balance_include_contracts;
      for (const auto& sheet : replay->sheets) living.push_back(living_balances(sheet, d.registry, gopts));
    });
    if (replay) {
      nlohmann::json j;
      j["credits_supplied"] = d.has_credits;
      j["checkpoints"] = replay->sheets.size() - 1;
      j["negative_balance_diagnostics"] = replay->diagnostics.size();
      j["final_total_wei"] = to_string_signed(replay->sheets.back().total);
      j["final_credited_wei"] = to_string(replay->sheets.back().credited_total);
      j["fidelity_note"] = "balances are replayed from records and supplied credits only; gas fees are not modeled";
      summary["replay"] = std::move(j);

      std::ostringstream out;
      out << "checkpoint,as_of_block,credited_total_wei,total_wei,living_accounts,dead_accounts\n";
      for (std::size_t k = 0; k < replay->sheets.size(); ++k) {
        const auto& s = replay->sheets[k];
        csv::write_row(out, {std::to_string(k), s.as_of ? std::to_string(*s.as_of) : std::string("final"),
                             to_string(s.credited_total), to_string_signed(s.total), std::to_string(living[k].size()),
                             std::to_string(s.dead_count())});
      }
      files["balances.csv"] = out.str();
    }
    phases["replay"] = t.seconds();
  }

  if (cfg.wants(Metric::Gini)) {
    std::ostringstream out;
    out << "metric,window,gini,scheme,kind,error\n";
    for (const auto& r : results) {
      if (!r) continue;
      for (const auto& g : r->gini) {
        csv::write_row(out, {to_string(g.metric), std::to_string(g.window), detail::opt(g.gini),
                             to_string(r->window.scheme), to_string(r->kind),
                             g.error ? to_string(*g.error) : std::string{}});
      }
    }
    if (replay) {
      for (std::size_t k = 0; k < living.size(); ++k) {
        const auto g = gini_report(NodeMetric::Balance, k, values_only(living[k]));
        csv::write_row(out, {"balance", std::to_string(k), detail::opt(g.gini), "checkpoint", "",
                             g.error ? to_string(*g.error) : std::string{}});
      }
    }
    files["gini.csv"] = out.str();
  }

  if (cfg.wants(Metric::Ppmcc)) {
    std::ostringstream out;
    out << "metric,k,ppmcc,scheme,kind,error\n";
    auto write = [&](const char* metric, const std::vector<PpmccResult>& rows, const std::string& scheme,
                     const std::string& kind) {
      for (const auto& p : rows) {
        csv::write_row(out, {metric, std::to_string(p.k), detail::opt(p.ppmcc), scheme, kind,
                             p.error ? to_string(*p.error) : std::string{}});
      }
    };
    for (auto scheme : {WindowScheme::Sliding, WindowScheme::Incremental}) {
      for (auto kind : cfg.kinds) {
        std::vector<AccountValues> degree_steps, tx_steps;
        for (const auto& r : results) {
          if (!r || r->window.scheme != scheme || r->kind != kind) continue;
          degree_steps.push_back(r->degree_values);
          tx_steps.push_back(r->tx_values);
        }
        write("degree", rich_stay_rich(degree_steps), to_string(scheme), to_string(kind));
        write("tx_num", rich_stay_rich(tx_steps), to_string(scheme), to_string(kind));
      }
    }
    if (replay) write("balance", rich_stay_rich(living), "checkpoint", "");
    files["ppmcc.csv"] = out.str();

    // Degree-balance correlation at each checkpoint, on the cumulative UUG
    // built from all records up to the checkpoint.
    if (replay) {
      std::ostringstream db;
      db << "checkpoint,as_of_block,ppmcc,common_accounts,error\n";
      std::unordered_set<std::uint64_t> edges;
      std::vector<std::uint32_t> degree(d.registry.accounts.size(), 0);
      std::size_t next = 0;
      const auto& recs = d.store.records;
      for (std::size_t k = 0; k < replay->sheets.size(); ++k) {
        const auto& sheet = replay->sheets[k];
        const auto limit = sheet.as_of ? static_cast<std::uint64_t>(*sheet.as_of) : ~std::uint64_t{0};
        for (; next < recs.size() && recs[next].block_id <= limit; ++next) {
          const auto& r = recs[next];
          if (r.value < cfg.min_value || !record_belongs_to(GraphKind::UUG, r, d.registry)) continue;
          if (edges.insert((static_cast<std::uint64_t>(r.sender) << 32) | r.receiver).second) {
            ++degree[r.sender];
            ++degree[r.receiver];
          }
        }
        AccountValues deg;
        for (AccountIndex a = 0; a < degree.size(); ++a) {
          if (degree[a] > 0) deg.emplace_back(a, static_cast<double>(degree[a]));
        }
        std::string value, err, common;
        try {
          value = detail::num(aligned_pearson(deg, living[k]));
        } catch (const Error& e) {
          err = to_string(e.code());
        }
        csv::write_row(db, {std::to_string(k), sheet.as_of ? std::to_string(*sheet.as_of) : std::string("final"),
                            value, std::to_string(std::min(deg.size(), living[k].size())), err});
      }
      files["degree_balance.csv"] = db.str();
    }
  }

  if (cfg.wants(Metric::Burstiness)) {
    detail::Timer t;
    guarded("burstiness", [&] {
      MbOptions mopts;
      mopts.sample_size = cfg.mb_sample_size;
      mopts.seed = cfg.seed;
      const auto samples = mb_by_class(d.store, d.registry, mopts);
      std::ostringstream mb, classes;
      mb << "account,label,B,M,n_intervals\n";
      classes << "label,eligible,sampled,error\n";
      for (const auto& s : samples) {
        csv::write_row(classes, {to_string(s.label), std::to_string(s.eligible), std::to_string(s.accounts.size()),
                                 s.error ? to_string(*s.error) : std::string{}});
        for (const auto& a : s.accounts) {
          csv::write_row(mb, {d.registry.accounts.id(a.account).str(), to_string(s.label), detail::num(a.score.B),
                              detail::opt(a.score.M), std::to_string(a.score.n_intervals)});
        }
      }
      files["mb.csv"] = mb.str();
      files["mb_classes.csv"] = classes.str();

      const auto timelines = extract_timelines(d.store);
      const auto curve = busy_period_curve(timelines, kDefaultBusyFractions);
      std::ostringstream busy;
      busy << "p,accounts,mean,q10,q25,q50,q75,q90\n";
      for (const auto& row : curve) {
        std::vector<std::string> cells{detail::num(row.p), std::to_string(row.accounts), detail::opt(row.mean)};
        for (const auto& q : row.quantiles) cells.push_back(detail::opt(q));
        csv::write_row(busy, cells);
      }
      files["busy_period.csv"] = busy.str();

      const auto hourly = hourly_histogram(d.store.records);
      std::ostringstream hours;
      hours << "hour,avg_tx\n";
      for (int h = 0; h < 24; ++h) csv::write_row(hours, {std::to_string(h), detail::num(hourly[h])});
      files["hourly.csv"] = hours.str();
    });
    phases["burstiness"] = t.seconds();
  }

  if (cfg.wants(Metric::Lifecycle)) {
    detail::Timer t;
    guarded("lifecycle", [&] {
      std::ostringstream out;
      out << "window_index,scheme,start,end,created_by_eoa,created_by_contract,calls_by_eoa,calls_by_contract,"
             "distinct_called_contracts,call_value_by_eoa_wei,call_value_by_contract_wei,"
             "avg_value_per_call_by_eoa_wei,avg_value_per_call_by_contract_wei,suicides_to_eoa,suicides_to_contract\n";
      std::vector<LifecycleStats> stats(windows.size());
      parallel_for(windows.size(), cfg.workers, [&](std::size_t i) {
        stats[i] = lifecycle_stats(d.store.slice(windows[i]), windows[i], d.registry);
      });
      auto opt_wei = [](const std::optional<Wei>& v) { return v ? to_string(*v) : std::string{}; };
      for (const auto& s : stats) {
        csv::write_row(out, {std::to_string(s.window.index), to_string(s.window.scheme),
                             std::to_string(s.window.start), std::to_string(s.window.end),
                             std::to_string(s.created_by_eoa), std::to_string(s.created_by_contract),
                             std::to_string(s.calls_by_eoa), std::to_string(s.calls_by_contract),
                             std::to_string(s.distinct_called_contracts), to_string(s.call_value_by_eoa),
                             to_string(s.call_value_by_contract), opt_wei(s.avg_value_per_call_by_eoa()),
                             opt_wei(s.avg_value_per_call_by_contract()), std::to_string(s.suicides_to_eoa),
                             std::to_string(s.suicides_to_contract)});
      }
      files["lifecycle.csv"] = out.str();

      std::ostringstream top;
      top << "rank,address,calls,label\n";
      const auto ranked = top_contracts(d.store.records, cfg.top_k, d.registry);
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        csv::write_row(top, {std::to_string(i + 1), d.registry.accounts.id(ranked[i].account).str(),
                             std::to_string(ranked[i].calls), to_string(ranked[i].label)});
      }
      files["top_contracts.csv"] = top.str();
    });
    phases["lifecycle"] = t.seconds();
  }

  if (!d.rejected.empty()) {
    std::ostringstream out;
    out << "line,reason,text\n";
    for (const auto& r : d.rejected) {
      // Commas in the raw line would break the row, so the text is escaped.
      std::string text = r.text;
      std::replace(text.begin(), text.end(), ',', ';');
      std::string reason = r.reason;
      std::replace(reason.begin(), reason.end(), ',', ';');
      csv::write_row(out, {std::to_string(r.line_number), reason, text});
    }
    files["rejected_lines.csv"] = out.str();
  }

  files["summary.json"] = summary.dump(1) + "\n";
  bundle.summary = std::move(summary);

  nlohmann::json manifest;
  manifest["config"] = to_json(cfg);
  manifest["config_hash"] = fnv1a64(to_json(cfg).dump());
  manifest["inputs"] = inputs;
  auto skipped = nlohmann::json::array();
  for (auto m : kAllMetrics) {
    if (!cfg.wants(m)) skipped.push_back(to_string(m));
  }
  manifest["skipped_metrics"] = std::move(skipped);
  manifest["incomplete"] = bundle.incomplete;
  manifest["problems"] = bundle.problems;
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& [name, contents] : files) hashes[name] = fnv1a64(contents);
  manifest["files"] = std::move(hashes);
  manifest["hash_algorithm"] = "fnv1a64";
  files["manifest.json"] = manifest.dump(1) + "\n";
  bundle.manifest = std::move(manifest);

  phases["total"] = total_timer.seconds();
  bundle.timing = {{"seconds", phases}, {"workers", cfg.workers}};
  return bundle;
}

// Writes every bundle file under `dir`, plus timing.json, which holds wall
// clock times and is deliberately not listed in the manifest.
inline void write_bundle(const Bundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::filesystem::path& p, const std::string& contents) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << contents;
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + p.string() + "'");
  };
  for (const auto& [name, contents] : bundle.files) write(dir / name, contents);
  write(dir / "timing.json", bundle.timing.dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Price correlation

struct WindowValue {
  TimeWindow window;
  double value = 0.0;
};

struct CorrelationRow {
  std::size_t window_index = 0;
  double value = 0.0;
  double mean_price = 0.0;
  std::size_t price_points = 0;
};

struct CorrelationReport {
  std::size_t n_windows = 0;
  double pearson = 0.0;
  std::vector<CorrelationRow> rows;
};

// Pearson between per-window metric values and the mean of the price points
// inside each window. Windows without prices are skipped.
inline CorrelationReport correlate(std::span<const WindowValue> series, const PriceSeries& prices) {
  CorrelationReport report;
  std::vector<double> x, y;
  for (const auto& wv : series) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& p : prices.points) {
      if (wv.window.contains(p.timestamp)) {
        sum += p.price;
        ++n;
      }
    }
    if (n == 0) continue;
    const double mean_price = sum / static_cast<double>(n);
    report.rows.push_back({wv.window.index, wv.value, mean_price, n});
    x.push_back(wv.value);
    y.push_back(mean_price);
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::NoOverlap, std::to_string(x.size()) + " window(s) overlap the price series (need 2)");
  }
  report.n_windows = x.size();
  report.pearson = pearson(x, y);
  return report;
}

}  // namespace txgraph::pipeline
