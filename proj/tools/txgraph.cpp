// txgraph command-line tool: ingest-check, synth, analyze, correlate, report.
//
// Exit codes: 0 ok, 1 configuration error, 2 data error, 3 partial results.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "txgraph/pipeline.hpp"
#include "txgraph/synth.hpp"

namespace fs = std::filesystem;
using namespace txgraph;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::UnknownFormat:
    case ErrorCode::InfeasibleConfig:
    case ErrorCode::IoError: return kExitConfig;
    default: return kExitData;
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rows of a bundle CSV as header-name -> cell maps.
std::vector<std::map<std::string, std::string>> read_csv_table(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    const auto cells = csv::split(line);
    if (header.empty()) {
      for (auto c : cells) header.emplace_back(c);
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = std::string(cells[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

struct IngestCheckArgs {
  std::string tx;
  std::string format = "csv";
  bool strict = false;
  std::string rejected;
};

int run_ingest_check(const IngestCheckArgs& a) {
  pipeline::InputPaths paths;
  paths.transactions = a.tx;
  paths.validate();
  ParseOptions opts;
  opts.format = parse_format(a.format);
  opts.strict = a.strict;
  auto in = open_input(a.tx);
  // Streaming pass: records are dropped as soon as they are validated.
  std::vector<RejectedLine> rejected;
  const auto stats = parse_transactions(
      in, opts, [](TransactionRecord&&) {}, [&](const RejectedLine& r) { rejected.push_back(r); });
  nlohmann::json j{{"records_read", stats.records_read},
                   {"records_accepted", stats.records_accepted},
                   {"records_rejected", stats.records_rejected},
                   {"distinct_accounts", stats.distinct_accounts},
                   {"first_timestamp", stats.first_timestamp ? nlohmann::json(*stats.first_timestamp) : nullptr},
                   {"last_timestamp", stats.last_timestamp ? nlohmann::json(*stats.last_timestamp) : nullptr}};
  if (!rejected.empty()) {
    const auto sidecar = a.rejected.empty() ? a.tx + ".rejected.csv" : a.rejected;
    std::ofstream out(sidecar, std::ios::binary);
    out << "line,reason,text\n";
    for (const auto& r : rejected) {
      std::string text = r.text, reason = r.reason;
      std::replace(text.begin(), text.end(), ',', ';');
      std::replace(reason.begin(), reason.end(), ',', ';');
      out << r.line_number << ',' << reason << ',' << text << '\n';
    }
    j["rejected_sidecar"] = sidecar;
  }
  std::cout << j.dump(1) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  synth::SynthConfig cfg;
  std::string arrival = "uniform";
  std::string format = "csv";
  std::vector<std::string> plant;
  std::string out = "synth_out";
};

// LABEL:COUNT:MODEL:MEAN_SECONDS[:B]
synth::PlantedClass parse_plant(const std::string& spec) {
  const auto f = csv::split(spec, ':');
  auto fail = [&] {
    return Error(ErrorCode::ConfigError, "bad --plant '" + spec + "' (want LABEL:COUNT:MODEL:MEAN_SECONDS[:B])");
  };
  if (f.size() < 4 || f.size() > 5) throw fail();
  synth::PlantedClass c;
  auto label = parse_label(f[0]);
  auto count = csv::parse_int<std::size_t>(f[1]);
  auto mean = csv::parse_double(f[3]);
  if (!label || !count || !mean) throw fail();
  c.label = *label;
  c.accounts = *count;
  c.mean_interval_s = *mean;
  if (f[2] == "regular") c.model = synth::IntervalModel::Regular;
  else if (f[2] == "exponential") c.model = synth::IntervalModel::Exponential;
  else if (f[2] == "heavy_tailed" || f[2] == "heavy-tailed") c.model = synth::IntervalModel::HeavyTailed;
  else throw fail();
  if (f.size() == 5) {
    auto b = csv::parse_double(f[4]);
    if (!b) throw fail();
    c.b_target = *b;
  }
  return c;
}

int run_synth(SynthArgs a) {
  auto arrival = synth::parse_arrival_model(a.arrival);
  if (!arrival) throw Error(ErrorCode::ConfigError, "unknown arrival model '" + a.arrival + "'");
  a.cfg.arrival = *arrival;
  for (const auto& p : a.plant) a.cfg.classes.push_back(parse_plant(p));
  const auto paths = synth::write_fixture(a.cfg, a.out, parse_format(a.format));
  nlohmann::json j{{"transactions", paths.transactions.string()}, {"credits", paths.credits.string()},
                   {"labels", paths.labels.string()},             {"contracts", paths.contracts.string()},
                   {"ground_truth", paths.ground_truth.string()}};
  std::cout << j.dump(1) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  pipeline::InputPaths paths;
  std::string format = "csv";
  std::string scheme = "sliding";
  std::string kinds = "uug,ccg,ucg";
  std::string metrics = "all";
  std::string min_value = "0";
  std::string coverage = "cover_range";
  std::optional<Timestamp> range_start;
  std::optional<Timestamp> range_end;
  std::string labels, prices, credits, contracts;
  pipeline::AnalyzeConfig cfg;
  std::string out = "bundle";
};

int run_analyze(AnalyzeArgs a) {
  a.paths.format = parse_format(a.format);
  if (!a.labels.empty()) a.paths.labels = a.labels;
  if (!a.prices.empty()) a.paths.prices = a.prices;
  if (!a.credits.empty()) a.paths.credits = a.credits;
  if (!a.contracts.empty()) a.paths.contracts = a.contracts;
  a.cfg.scheme = pipeline::parse_scheme(a.scheme);
  a.cfg.kinds = pipeline::parse_kinds(a.kinds);
  a.cfg.metrics = pipeline::parse_metrics(a.metrics);
  const auto min_value = parse_wei(csv::trim(a.min_value));
  if (!min_value) throw Error(ErrorCode::ConfigError, "bad --min-value '" + a.min_value + "'");
  a.cfg.min_value = *min_value;
  if (a.coverage == "cover_range") a.cfg.coverage = WindowCoverage::CoverRange;
  else if (a.coverage == "full_width_only") a.cfg.coverage = WindowCoverage::FullWidthOnly;
  else throw Error(ErrorCode::ConfigError, "unknown --coverage '" + a.coverage + "'");
  a.cfg.range_start = a.range_start;
  a.cfg.range_end = a.range_end;
  a.cfg.validate();
  a.paths.validate();

  nlohmann::json inputs = nlohmann::json::object();
  auto add_input = [&](const char* name, const std::optional<std::string>& p) {
    if (p) inputs[name] = {{"path", fs::path(*p).filename().string()}, {"hash", pipeline::hash_file(*p)}};
  };
  add_input("transactions", a.paths.transactions);
  add_input("labels", a.paths.labels);
  add_input("prices", a.paths.prices);
  add_input("credits", a.paths.credits);
  add_input("contracts", a.paths.contracts);

  const auto dataset = pipeline::load_dataset(a.paths, a.cfg.strict);
  const auto bundle = pipeline::analyze(dataset, a.cfg, inputs);
  pipeline::write_bundle(bundle, a.out);
  std::cerr << "wrote " << bundle.files.size() << " files to " << a.out << '\n';
  for (const auto& w : dataset.registry.warnings) std::cerr << "warning: " << w << '\n';
  if (!dataset.rejected.empty()) std::cerr << dataset.rejected.size() << " malformed lines skipped\n";
  if (bundle.incomplete) {
    for (const auto& p : bundle.problems) std::cerr << "incomplete: " << p << '\n';
    return kExitPartial;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CorrelateArgs {
  std::string bundle = "bundle";
  std::string prices;
  std::string metric = "node_count";
  std::string scheme = "sliding";
  std::string kind = "uug";
};

int run_correlate(const CorrelateArgs& a) {
  if (a.prices.empty() || !fs::is_regular_file(a.prices)) {
    throw Error(ErrorCode::ConfigError, "prices file '" + a.prices + "' does not exist");
  }
  const auto sizes_path = fs::path(a.bundle) / "sizes.csv";
  if (!fs::is_regular_file(sizes_path)) {
    throw Error(ErrorCode::ConfigError, "bundle '" + a.bundle + "' has no sizes.csv");
  }
  auto in = open_input(a.prices);
  const auto prices = load_price_series(in);
  std::vector<pipeline::WindowValue> series;
  for (const auto& row : read_csv_table(sizes_path)) {
    if (row.at("scheme") != a.scheme || row.at("kind") != a.kind) continue;
    auto it = row.find(a.metric);
    if (it == row.end()) throw Error(ErrorCode::ConfigError, "sizes.csv has no column '" + a.metric + "'");
    if (it->second.empty()) continue;
    const auto value = csv::parse_double(it->second);
    const auto index = csv::parse_int<std::size_t>(row.at("window_index"));
    const auto start = csv::parse_int<Timestamp>(row.at("start"));
    const auto end = csv::parse_int<Timestamp>(row.at("end"));
    if (!value || !index || !start || !end) throw Error(ErrorCode::SchemaViolation, "malformed sizes.csv row");
    const auto scheme = a.scheme == "incremental" ? WindowScheme::Incremental : WindowScheme::Sliding;
    series.push_back({{*index, *start, *end, scheme}, *value});
  }
  const auto report = pipeline::correlate(series, prices);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"window_index", r.window_index},
                    {"value", r.value},
                    {"mean_price", r.mean_price},
                    {"price_points", r.price_points}});
  }
  nlohmann::json j{{"metric", a.metric},           {"scheme", a.scheme}, {"kind", a.kind},
                   {"n_windows", report.n_windows}, {"pearson", report.pearson}, {"windows", rows}};
  std::cout << j.dump(1) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_report(const std::string& bundle) {
  const auto manifest_path = fs::path(bundle) / "manifest.json";
  if (!fs::is_regular_file(manifest_path)) throw Error(ErrorCode::ConfigError, "no manifest in '" + bundle + "'");
  const auto manifest = nlohmann::json::parse(read_file(manifest_path));
  const auto summary = nlohmann::json::parse(read_file(fs::path(bundle) / "summary.json"));
  std::cout << "bundle: " << bundle << '\n';
  std::cout << "config hash: " << manifest.at("config_hash").get<std::string>() << '\n';
  std::cout << "records: " << summary.at("records") << ", accounts: " << summary.at("accounts")
            << " (eoa " << summary.at("eoa_accounts") << ", contract " << summary.at("contract_accounts") << ")\n";
  std::cout << "windows: " << summary.at("windows") << '\n';
  if (summary.contains("densification")) {
    for (const auto& d : summary["densification"]) {
      std::cout << "densification " << d["scheme"].get<std::string>() << '/' << d["kind"].get<std::string>() << ": ";
      if (d["fit"].is_null()) {
        std::cout << "undefined (" << d.value("error", "") << ")\n";
      } else {
        std::cout << "alpha=" << d["fit"]["exponent"] << " r2=" << d["fit"]["r_squared"] << '\n';
      }
    }
  }
  if (summary.contains("replay")) {
    std::cout << "replay: final total " << summary["replay"]["final_total_wei"].get<std::string>() << " Wei, "
              << summary["replay"]["negative_balance_diagnostics"] << " negative-balance diagnostics\n";
  }
  std::cout << "files: " << manifest.at("files").size() << '\n';
  std::cout << "skipped metrics: " << manifest.at("skipped_metrics").dump() << '\n';
  const bool incomplete = manifest.at("incomplete").get<bool>();
  std::cout << "complete: " << (incomplete ? "no" : "yes") << '\n';
  for (const auto& p : manifest.at("problems")) std::cout << "  " << p.get<std::string>() << '\n';
  return incomplete ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal transaction-graph analytics"};
  app.require_subcommand(1);

  IngestCheckArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest-check", "Validate a transaction file in one streaming pass");
  ingest_cmd->add_option("--tx", ingest.tx, "Transactions file")->required();
  ingest_cmd->add_option("--format", ingest.format, "csv or jsonl");
  ingest_cmd->add_flag("--strict", ingest.strict, "Abort on the first malformed line");
  ingest_cmd->add_option("--rejected", ingest.rejected, "Sidecar for rejected lines (default <tx>.rejected.csv)");

  SynthArgs syn;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic fixture with ground truth");
  synth_cmd->set_config("--config");
  synth_cmd->add_option("--seed", syn.cfg.seed);
  synth_cmd->add_option("--accounts", syn.cfg.n_accounts, "Background accounts");
  synth_cmd->add_option("--transactions", syn.cfg.n_transactions);
  synth_cmd->add_option("--days", syn.cfg.duration_days);
  synth_cmd->add_option("--start", syn.cfg.start, "First timestamp");
  synth_cmd->add_option("--contract-fraction", syn.cfg.contract_fraction);
  synth_cmd->add_option("--arrival", syn.arrival, "uniform, diurnal or three_stage");
  synth_cmd->add_option("--attachment", syn.cfg.attachment, "Preferential attachment probability");
  synth_cmd->add_option("--call-fraction", syn.cfg.call_fraction);
  synth_cmd->add_option("--creator-fraction", syn.cfg.contract_creator_fraction);
  synth_cmd->add_option("--suicide-fraction", syn.cfg.suicide_fraction);
  synth_cmd->add_option("--zero-fraction", syn.cfg.zero_value_fraction);
  synth_cmd->add_option("--min-log10-ether", syn.cfg.min_log10_ether);
  synth_cmd->add_option("--max-log10-ether", syn.cfg.max_log10_ether);
  synth_cmd->add_option("--block-time", syn.cfg.block_time_s);
  synth_cmd->add_option("--checkpoint-blocks", syn.cfg.checkpoint_blocks);
  synth_cmd->add_option("--tally-days", syn.cfg.tally_window_days);
  synth_cmd->add_option("--plant", syn.plant, "LABEL:COUNT:MODEL:MEAN_SECONDS[:B], repeatable");
  synth_cmd->add_option("--format", syn.format, "csv or jsonl");
  synth_cmd->add_option("--out", syn.out, "Output directory");

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Build window graphs and write the report bundle");
  analyze_cmd->set_config("--config", "", "Flat key=value file mirroring the flags; flags override it");
  analyze_cmd->add_option("--tx", an.paths.transactions, "Transactions file");
  analyze_cmd->add_option("--format", an.format, "csv or jsonl");
  analyze_cmd->add_option("--labels", an.labels);
  analyze_cmd->add_option("--prices", an.prices);
  analyze_cmd->add_option("--credits", an.credits);
  analyze_cmd->add_option("--contracts", an.contracts, "Declared contract addresses");
  analyze_cmd->add_option("--scheme", an.scheme, "sliding, incremental or both");
  analyze_cmd->add_option("--width-days", an.cfg.width_days);
  analyze_cmd->add_option("--stride-days", an.cfg.stride_days);
  analyze_cmd->add_option("--initial-days", an.cfg.initial_days);
  analyze_cmd->add_option("--step-days", an.cfg.step_days);
  analyze_cmd->add_option("--coverage", an.coverage, "cover_range or full_width_only");
  analyze_cmd->add_option("--range-start", an.range_start, "Analysis range start (default first record)");
  analyze_cmd->add_option("--range-end", an.range_end, "Analysis range end, exclusive (default last record + 1)");
  analyze_cmd->add_option("--kinds", an.kinds, "Comma list of uug,ccg,ucg");
  analyze_cmd->add_option("--metrics", an.metrics,
                          "all or a comma list of sizes,degrees,weights,txcounts,motifs,burstiness,gini,ppmcc,"
                          "lifecycle,snapshots");
  analyze_cmd->add_option("--min-value", an.min_value, "Drop records below this value (Wei)");
  analyze_cmd->add_flag("--strict", an.cfg.strict, "Fail on the first malformed line or analysis error");
  analyze_cmd->add_option("--seed", an.cfg.seed, "Seed for M-B class sampling");
  analyze_cmd->add_option("--workers", an.cfg.workers);
  analyze_cmd->add_option("--tail-min-degree", an.cfg.tail_min_degree);
  analyze_cmd->add_option("--mb-sample", an.cfg.mb_sample_size, "Accounts sampled per label class");
  analyze_cmd->add_option("--checkpoint-blocks", an.cfg.checkpoint_blocks, "Balance checkpoint cadence");
  analyze_cmd->add_option("--top-k", an.cfg.top_k);
  analyze_cmd->add_flag("--balance-include-contracts", an.cfg.balance_include_contracts);
  analyze_cmd->add_option("--out", an.out, "Bundle directory");

  CorrelateArgs corr;
  auto* correlate_cmd = app.add_subcommand("correlate", "Correlate a per-window metric with a price series");
  correlate_cmd->add_option("--bundle", corr.bundle, "Bundle directory from analyze");
  correlate_cmd->add_option("--prices", corr.prices)->required();
  correlate_cmd->add_option("--metric", corr.metric, "sizes.csv column");
  correlate_cmd->add_option("--scheme", corr.scheme);
  correlate_cmd->add_option("--kind", corr.kind);

  std::string report_bundle = "bundle";
  auto* report_cmd = app.add_subcommand("report", "Summarize a report bundle");
  report_cmd->add_option("--bundle", report_bundle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*ingest_cmd) return run_ingest_check(ingest);
    if (*synth_cmd) return run_synth(syn);
    if (*analyze_cmd) return run_analyze(an);
    if (*correlate_cmd) return run_correlate(corr);
    if (*report_cmd) return run_report(report_bundle);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
