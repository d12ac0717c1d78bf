#pragma once

// Streaming transaction parsers, the interned in-memory record store, account
// classification, and loaders for the enrichment files (labels, prices,
// credits, contract declarations).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "txgraph/bounded_queue.hpp"
#include "txgraph/core.hpp"
#include "txgraph/csv.hpp"

namespace txgraph {

enum class InputFormat { Csv, Jsonl };

inline InputFormat parse_format(std::string_view name) {
  if (name == "csv" || name == "CSV") return InputFormat::Csv;
  if (name == "jsonl" || name == "JSONL") return InputFormat::Jsonl;
  throw Error(ErrorCode::UnknownFormat, "unknown transaction format '" + std::string(name) + "'");
}

inline constexpr std::string_view kTransactionsHeader =
    "block_id,tx_hash,sender,receiver,value_wei,timestamp,kind,internal";

struct ParseOptions {
  InputFormat format = InputFormat::Csv;
  // Strict mode aborts with SchemaViolation on the first bad line.
  bool strict = false;
  std::optional<Timestamp> min_timestamp;
  std::optional<Timestamp> max_timestamp;
};

struct RejectedLine {
  std::size_t line_number = 0;
  std::string reason;
  std::string text;
};

struct IngestStats {
  std::size_t records_read = 0;
  std::size_t records_accepted = 0;
  std::size_t records_rejected = 0;
  std::optional<Timestamp> first_timestamp;
  std::optional<Timestamp> last_timestamp;
  std::size_t distinct_accounts = 0;
};

using RejectHandler = std::function<void(const RejectedLine&)>;

namespace detail {

struct LineError {
  std::string reason;
};

inline TransactionRecord record_from_fields(std::string_view block, std::string_view hash,
                                            std::string_view sender, std::string_view receiver,
                                            std::string_view value, std::string_view ts,
                                            std::string_view kind, std::string_view internal) {
  TransactionRecord r;
  auto block_id = csv::parse_int<std::uint64_t>(block);
  if (!block_id) throw LineError{"malformed block_id '" + std::string(block) + "'"};
  r.block_id = *block_id;
  r.tx_hash = std::string(csv::trim(hash));
  try {
    r.sender = normalize_address(csv::trim(sender));
    r.receiver = normalize_address(csv::trim(receiver));
  } catch (const Error& e) {
    throw LineError{e.what()};
  }
  value = csv::trim(value);
  if (!value.empty() && value.front() == '-') throw LineError{"negative value '" + std::string(value) + "'"};
  auto wei = parse_wei(value);
  if (!wei) throw LineError{"malformed value_wei '" + std::string(value) + "'"};
  r.value = *wei;
  auto t = csv::parse_int<Timestamp>(ts);
  if (!t) throw LineError{"malformed timestamp '" + std::string(ts) + "'"};
  r.timestamp = *t;
  auto k = parse_tx_kind(csv::trim(kind));
  if (!k) throw LineError{"unknown kind '" + std::string(kind) + "'"};
  r.kind = *k;
  internal = csv::trim(internal);
  if (internal == "0" || internal == "false") {
    r.internal = false;
  } else if (internal == "1" || internal == "true") {
    r.internal = true;
  } else {
    throw LineError{"malformed internal flag '" + std::string(internal) + "'"};
  }
  return r;
}

inline TransactionRecord parse_csv_line(std::string_view line) {
  const auto f = csv::split(line);
  if (f.size() != 8) throw LineError{"expected 8 fields, got " + std::to_string(f.size())};
  return record_from_fields(f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7]);
}

inline std::string json_scalar_text(const nlohmann::json& v, const char* field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d < 0) return "-" + std::string(field);
    throw LineError{std::string("non-integer ") + field};
  }
  throw LineError{std::string("unsupported type for ") + field};
}

inline TransactionRecord parse_json_line(std::string_view line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw LineError{std::string("invalid JSON: ") + e.what()};
  }
  if (!obj.is_object()) throw LineError{"line is not a JSON object"};
  auto field = [&](const char* name) {
    auto it = obj.find(name);
    if (it == obj.end()) throw LineError{std::string("missing field ") + name};
    return json_scalar_text(*it, name);
  };
  return record_from_fields(field("block_id"), field("tx_hash"), field("sender"), field("receiver"),
                            field("value_wei"), field("timestamp"), field("kind"), field("internal"));
}

}  // namespace detail

// Pull-style reader: one record per call to next(), nothing buffered beyond the
// current line plus the set of distinct addresses for the stats.
class TransactionReader {
 public:
  TransactionReader(std::istream& in, ParseOptions options, RejectHandler on_reject = {})
      : in_(in), options_(options), on_reject_(std::move(on_reject)) {}

  std::optional<TransactionRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      if (options_.format == InputFormat::Csv && !header_checked_) {
        header_checked_ = true;
        if (line.rfind("block_id", 0) == 0) {
          if (line != kTransactionsHeader) {
            throw Error(ErrorCode::SchemaViolation,
                        "line 1: unexpected CSV header '" + line + "'");
          }
          continue;
        }
      }
      ++stats_.records_read;
      try {
        TransactionRecord r = options_.format == InputFormat::Csv ? detail::parse_csv_line(line)
                                                                  : detail::parse_json_line(line);
        if (options_.min_timestamp && r.timestamp < *options_.min_timestamp)
          throw detail::LineError{"timestamp before measurement range"};
        if (options_.max_timestamp && r.timestamp > *options_.max_timestamp)
          throw detail::LineError{"timestamp after measurement range"};
        accept(r);
        return r;
      } catch (const detail::LineError& e) {
        ++stats_.records_rejected;
        if (options_.strict) {
          throw Error(ErrorCode::SchemaViolation,
                      "line " + std::to_string(line_number_) + ": " + e.reason);
        }
        if (on_reject_) on_reject_(RejectedLine{line_number_, e.reason, line});
      }
    }
    return std::nullopt;
  }

  const IngestStats& stats() const noexcept { return stats_; }
  std::size_t line_number() const noexcept { return line_number_; }

 private:
  void accept(const TransactionRecord& r) {
    ++stats_.records_accepted;
    if (!stats_.first_timestamp || r.timestamp < *stats_.first_timestamp) stats_.first_timestamp = r.timestamp;
    if (!stats_.last_timestamp || r.timestamp > *stats_.last_timestamp) stats_.last_timestamp = r.timestamp;
    seen_.insert(r.sender.str());
    seen_.insert(r.receiver.str());
    stats_.distinct_accounts = seen_.size();
  }

  std::istream& in_;
  ParseOptions options_;
  RejectHandler on_reject_;
  IngestStats stats_;
  std::unordered_set<std::string> seen_;
  std::size_t line_number_ = 0;
  bool header_checked_ = false;
};

// Streams every accepted record to `on_record` in file order.
template <class OnRecord>
IngestStats parse_transactions(std::istream& in, const ParseOptions& options, OnRecord&& on_record,
                               RejectHandler on_reject = {}) {
  TransactionReader reader(in, options, std::move(on_reject));
  while (auto r = reader.next()) on_record(std::move(*r));
  return reader.stats();
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return in;
}

// ---------------------------------------------------------------------------
// Interned record store

using AccountIndex = std::uint32_t;

class AccountTable {
 public:
  AccountIndex intern(const AccountId& id) {
    auto [it, inserted] = index_.try_emplace(id.str(), static_cast<AccountIndex>(ids_.size()));
    if (inserted) ids_.push_back(id);
    return it->second;
  }

  std::optional<AccountIndex> find(const AccountId& id) const {
    auto it = index_.find(id.str());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const AccountId& id(AccountIndex i) const { return ids_.at(i); }
  std::size_t size() const noexcept { return ids_.size(); }

 private:
  std::vector<AccountId> ids_;
  std::unordered_map<std::string, AccountIndex> index_;
};

struct CompactRecord {
  Wei value = 0;
  std::uint64_t block_id = 0;
  Timestamp timestamp = 0;
  std::uint32_t seq = 0;  // position in the source stream
  AccountIndex sender = 0;
  AccountIndex receiver = 0;
  TxKind kind = TxKind::Transfer;
  bool internal = false;
};

// All accepted records, sorted by (timestamp, source order), with addresses
// interned to dense indices.
struct RecordStore {
  AccountTable accounts;
  std::vector<CompactRecord> records;
  IngestStats stats;

  void add(const TransactionRecord& r) {
    CompactRecord c;
    c.value = r.value;
    c.block_id = r.block_id;
    c.timestamp = r.timestamp;
    c.seq = static_cast<std::uint32_t>(records.size());
    c.sender = accounts.intern(r.sender);
    c.receiver = accounts.intern(r.receiver);
    c.kind = r.kind;
    c.internal = r.internal;
    records.push_back(c);
  }

  void finalize() {
    std::stable_sort(records.begin(), records.end(),
                     [](const CompactRecord& a, const CompactRecord& b) { return a.timestamp < b.timestamp; });
  }

  // Records with start <= timestamp < end.
  std::span<const CompactRecord> slice(Timestamp start, Timestamp end) const {
    auto lo = std::lower_bound(records.begin(), records.end(), start,
                               [](const CompactRecord& r, Timestamp t) { return r.timestamp < t; });
    auto hi = std::lower_bound(lo, records.end(), end,
                               [](const CompactRecord& r, Timestamp t) { return r.timestamp < t; });
    return {records.data() + (lo - records.begin()), static_cast<std::size_t>(hi - lo)};
  }

  std::span<const CompactRecord> slice(const TimeWindow& w) const { return slice(w.start, w.end); }
};

inline RecordStore record_store_from(const std::vector<TransactionRecord>& records) {
  RecordStore store;
  for (const auto& r : records) store.add(r);
  store.stats.records_read = store.stats.records_accepted = records.size();
  store.finalize();
  return store;
}

// Parses on a producer thread and interns on the calling thread, handing
// batches across a bounded queue so the parser blocks when the consumer lags.
inline RecordStore load_records(std::istream& in, const ParseOptions& options, RejectHandler on_reject = {},
                                std::size_t queue_batches = 8, std::size_t batch_size = 4096) {
  using Batch = std::vector<TransactionRecord>;
  BoundedQueue<Batch> queue(queue_batches);
  IngestStats stats;
  std::exception_ptr producer_error;

  std::thread producer([&] {
    try {
      Batch batch;
      batch.reserve(batch_size);
      stats = parse_transactions(
          in, options,
          [&](TransactionRecord&& r) {
            batch.push_back(std::move(r));
            if (batch.size() == batch_size) {
              queue.push(std::move(batch));
              batch = Batch{};
              batch.reserve(batch_size);
            }
          },
          on_reject);
      if (!batch.empty()) queue.push(std::move(batch));
    } catch (...) {
      producer_error = std::current_exception();
    }
    queue.close();
  });

  RecordStore store;
  while (auto batch = queue.pop()) {
    for (const auto& r : *batch) store.add(r);
  }
  producer.join();
  if (producer_error) std::rethrow_exception(producer_error);
  store.stats = stats;
  store.finalize();
  return store;
}

// ---------------------------------------------------------------------------
// Classification

struct DeclaredAccount {
  AccountId id;
  AccountKind kind = AccountKind::Contract;
};

// One address per line; an optional second column "eoa" or "contract"
// (default contract). Blank lines and lines starting with '#' are skipped.
inline std::vector<DeclaredAccount> load_declared_accounts(std::istream& in) {
  std::vector<DeclaredAccount> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto trimmed = csv::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto f = csv::split(trimmed);
    if (line_number == 1 && csv::trim(f[0]) == "address") continue;
    DeclaredAccount d;
    d.id = normalize_address(csv::trim(f[0]));
    if (f.size() > 1) {
      const auto k = csv::trim(f[1]);
      if (k == "eoa") d.kind = AccountKind::EOA;
      else if (k == "contract" || k.empty()) d.kind = AccountKind::Contract;
      else throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(line_number) + ": unknown kind '" +
                                                       std::string(k) + "'");
    }
    out.push_back(std::move(d));
  }
  return out;
}

struct AccountRegistry {
  AccountTable accounts;
  std::vector<AccountKind> kinds;
  std::vector<Label> labels;
  // ConflictingEvidence warnings: declared EOA, but records show contract behavior.
  std::vector<std::string> warnings;

  AccountKind kind(AccountIndex i) const { return i < kinds.size() ? kinds[i] : AccountKind::Unknown; }
  Label label(AccountIndex i) const { return i < labels.size() ? labels[i] : Label::Ordinary; }
  bool is_contract(AccountIndex i) const { return kind(i) == AccountKind::Contract; }

  AccountKind kind(const AccountId& id) const {
    auto i = accounts.find(id);
    return i ? kind(*i) : AccountKind::Unknown;
  }

  void apply_labels(const LabelMap& map) {
    labels.assign(accounts.size(), Label::Ordinary);
    for (const auto& [id, label] : map.entries) {
      if (auto i = accounts.find(id)) labels[*i] = label;
    }
  }
};

// An account is a contract if it is created by a Create, invoked by a Call,
// self-destructs in a Suicide (as sender), or is declared as one. Behavior
// overrides a declared EOA, with a warning.
inline AccountRegistry classify_accounts(const RecordStore& store,
                                         std::span<const DeclaredAccount> declared = {}) {
  AccountRegistry reg;
  reg.accounts = store.accounts;
  std::vector<bool> behaves_as_contract(store.accounts.size(), false);
  for (const auto& r : store.records) {
    switch (r.kind) {
      case TxKind::Create:
      case TxKind::Call: behaves_as_contract[r.receiver] = true; break;
      case TxKind::Suicide: behaves_as_contract[r.sender] = true; break;
      case TxKind::Transfer: break;
    }
  }
  std::vector<std::optional<AccountKind>> declared_kind(store.accounts.size());
  for (const auto& d : declared) {
    const auto i = reg.accounts.intern(d.id);
    if (i >= declared_kind.size()) declared_kind.resize(i + 1);
    if (d.kind == AccountKind::Contract || !declared_kind[i]) declared_kind[i] = d.kind;
  }
  reg.kinds.assign(reg.accounts.size(), AccountKind::EOA);
  for (AccountIndex i = 0; i < reg.accounts.size(); ++i) {
    const bool behavior = i < behaves_as_contract.size() && behaves_as_contract[i];
    const auto decl = i < declared_kind.size() ? declared_kind[i] : std::nullopt;
    if (behavior || decl == AccountKind::Contract) reg.kinds[i] = AccountKind::Contract;
    if (behavior && decl == AccountKind::EOA) {
      reg.warnings.push_back("ConflictingEvidence: " + reg.accounts.id(i).str() +
                             " declared EOA but shows contract behavior; treated as contract");
    }
  }
  std::sort(reg.warnings.begin(), reg.warnings.end());
  reg.labels.assign(reg.accounts.size(), Label::Ordinary);
  return reg;
}

// ---------------------------------------------------------------------------
// Enrichment files

// Two columns, address,label. A leading "address,label" header is skipped.
inline LabelMap load_labels(std::istream& in) {
  LabelMap map;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (line_number == 1 && csv::trim(f[0]) == "address") continue;
    if (f.size() != 2) {
      throw Error(ErrorCode::SchemaViolation, "labels line " + std::to_string(line_number) + ": expected 2 columns");
    }
    const auto id = normalize_address(csv::trim(f[0]));
    const auto label = parse_label(csv::trim(f[1]));
    if (!label) {
      throw Error(ErrorCode::UnknownLabelName,
                  "labels line " + std::to_string(line_number) + ": '" + std::string(csv::trim(f[1])) + "'");
    }
    auto [it, inserted] = map.entries.emplace(id, *label);
    if (!inserted && it->second != *label) {
      throw Error(ErrorCode::DuplicateLabel, id.str() + " labeled both " + to_string(it->second) + " and " +
                                                 to_string(*label));
    }
  }
  return map;
}

// Accepts "YYYY-MM-DD", optionally followed by "THH:MM:SS" and a 'Z'. UTC.
inline std::optional<Timestamp> parse_iso_date(std::string_view s) {
  s = csv::trim(s);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const auto y = csv::parse_int<int>(s.substr(0, 4));
  const auto m = csv::parse_int<unsigned>(s.substr(5, 2));
  const auto d = csv::parse_int<unsigned>(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m}, std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  Timestamp t = std::chrono::sys_days{ymd}.time_since_epoch().count() * kSecondsPerDay;
  if (s.size() > 10) {
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    auto rest = s.substr(11);
    if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
    if (rest.size() != 8 || rest[2] != ':' || rest[5] != ':') return std::nullopt;
    const auto hh = csv::parse_int<int>(rest.substr(0, 2));
    const auto mm = csv::parse_int<int>(rest.substr(3, 2));
    const auto ss = csv::parse_int<int>(rest.substr(6, 2));
    if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;
    t += *hh * 3600 + *mm * 60 + *ss;
  }
  return t;
}

inline PriceSeries load_price_series(std::istream& in) {
  PriceSeries series;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (line_number == 1 && csv::trim(f[0]) == "date") continue;
    if (f.size() != 2) {
      throw Error(ErrorCode::SchemaViolation, "prices line " + std::to_string(line_number) + ": expected 2 columns");
    }
    const auto t = parse_iso_date(f[0]);
    const auto p = csv::parse_double(f[1]);
    if (!t || !p) {
      throw Error(ErrorCode::SchemaViolation, "prices line " + std::to_string(line_number) + ": malformed row");
    }
    if (*p < 0) {
      throw Error(ErrorCode::NegativePrice, "prices line " + std::to_string(line_number) + ": " +
                                                std::string(csv::trim(f[1])));
    }
    if (!series.points.empty() && *t <= series.points.back().timestamp) {
      throw Error(ErrorCode::NonMonotoneTimestamps, "prices line " + std::to_string(line_number));
    }
    series.points.push_back({*t, *p});
  }
  return series;
}

// External balance credits (block rewards, genesis allocations).
struct Credit {
  std::uint64_t block_id = 0;
  AccountId account;
  Wei amount = 0;
};

inline constexpr std::string_view kCreditsHeader = "block_id,address,amount_wei";

inline std::vector<Credit> load_credits(std::istream& in) {
  std::vector<Credit> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (line_number == 1 && csv::trim(f[0]) == "block_id") continue;
    if (f.size() != 3) {
      throw Error(ErrorCode::SchemaViolation, "credits line " + std::to_string(line_number) + ": expected 3 columns");
    }
    const auto block = csv::parse_int<std::uint64_t>(f[0]);
    const auto amount = parse_wei(csv::trim(f[2]));
    if (!block || !amount) {
      throw Error(ErrorCode::SchemaViolation, "credits line " + std::to_string(line_number) + ": malformed row");
    }
    out.push_back({*block, normalize_address(csv::trim(f[1])), *amount});
  }
  return out;
}

}  // namespace txgraph
