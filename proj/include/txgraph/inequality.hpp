#pragma once

// Gini coefficients over degree / transaction / balance distributions, the
// cross-window "rich stays rich" correlation, and the balance replay engine.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "txgraph/graph.hpp"
#include "txgraph/metrics.hpp"
#include "txgraph/stats.hpp"

namespace txgraph {

// Population Gini: sum_i sum_j |x_i - x_j| / (2 n^2 mean), evaluated through
// the sorted form (2 * sum_i i*x_(i)) / (n * sum) - (n + 1) / n, i from 1.
inline double gini(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "gini of an empty list");
  std::vector<double> x(values.begin(), values.end());
  for (double v : x) {
    if (v < 0.0) throw Error(ErrorCode::DegenerateInput, "gini input must be non-negative");
  }
  std::sort(x.begin(), x.end());
  long double sum = 0.0L, weighted = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i];
    weighted += static_cast<long double>(i + 1) * x[i];
  }
  if (sum == 0.0L) throw Error(ErrorCode::ZeroSum, "gini input sums to zero");
  const auto n = static_cast<long double>(x.size());
  const long double g = 2.0L * weighted / (n * sum) - (n + 1.0L) / n;
  return std::clamp(static_cast<double>(g), 0.0, 1.0);
}

struct Rational {
  SignedWei num = 0;
  SignedWei den = 1;

  friend bool operator==(const Rational&, const Rational&) = default;
};

// Exact sorted-form Gini of non-negative integers, reduced to lowest terms.
inline Rational gini_exact(std::span<const std::uint64_t> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "gini of an empty list");
  std::vector<std::uint64_t> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  SignedWei sum = 0, weighted = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i];
    weighted += static_cast<SignedWei>(i + 1) * x[i];
  }
  if (sum == 0) throw Error(ErrorCode::ZeroSum, "gini input sums to zero");
  const auto n = static_cast<SignedWei>(x.size());
  Rational r{2 * weighted - (n + 1) * sum, n * sum};
  auto a = r.num < 0 ? -r.num : r.num, b = r.den;
  while (b != 0) {
    const auto t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    r.num /= a;
    r.den /= a;
  }
  return r;
}

enum class NodeMetric { Degree, InDegree, OutDegree, TxNum, InNum, OutNum, Balance };

inline const char* to_string(NodeMetric m) {
  switch (m) {
    case NodeMetric::Degree: return "degree";
    case NodeMetric::InDegree: return "in_degree";
    case NodeMetric::OutDegree: return "out_degree";
    case NodeMetric::TxNum: return "tx_num";
    case NodeMetric::InNum: return "in_num";
    case NodeMetric::OutNum: return "out_num";
    case NodeMetric::Balance: return "balance";
  }
  return "degree";
}

inline constexpr std::array<NodeMetric, 6> kGraphMetrics = {NodeMetric::Degree, NodeMetric::InDegree,
                                                            NodeMetric::OutDegree, NodeMetric::TxNum,
                                                            NodeMetric::InNum, NodeMetric::OutNum};

// (account, value) pairs sorted by account.
using AccountValues = std::vector<std::pair<AccountIndex, double>>;

// Per-node values of a graph metric: degree variants are distinct-neighbor
// counts, tx variants are sums of incident edge tx_counts.
inline AccountValues node_metric_values(const TxGraph& g, NodeMetric metric) {
  if (metric == NodeMetric::Balance) throw Error(ErrorCode::DegenerateInput, "balance is not a graph metric");
  AccountValues out;
  out.reserve(g.node_count());
  NodeTotals totals;
  if (metric == NodeMetric::TxNum || metric == NodeMetric::InNum || metric == NodeMetric::OutNum) {
    totals = node_totals(g);
  }
  for (TxGraph::LocalId v = 0; v < g.node_count(); ++v) {
    double value = 0;
    switch (metric) {
      case NodeMetric::Degree: value = static_cast<double>(g.in_degree(v) + g.out_degree(v)); break;
      case NodeMetric::InDegree: value = static_cast<double>(g.in_degree(v)); break;
      case NodeMetric::OutDegree: value = static_cast<double>(g.out_degree(v)); break;
      case NodeMetric::TxNum: value = static_cast<double>(totals.tx[v]); break;
      case NodeMetric::InNum: value = static_cast<double>(totals.in_tx[v]); break;
      case NodeMetric::OutNum: value = static_cast<double>(totals.out_tx[v]); break;
      case NodeMetric::Balance: break;
    }
    out.emplace_back(g.account(v), value);
  }
  return out;
}

inline std::vector<double> values_only(const AccountValues& av) {
  std::vector<double> out;
  out.reserve(av.size());
  for (const auto& [a, v] : av) out.push_back(v);
  return out;
}

struct GiniReport {
  NodeMetric metric = NodeMetric::Degree;
  std::size_t window = 0;  // window index or snapshot ordinal
  std::optional<double> gini;
  std::optional<ErrorCode> error;
};

inline GiniReport gini_report(NodeMetric metric, std::size_t window, std::span<const double> values) {
  GiniReport r{metric, window, std::nullopt, std::nullopt};
  try {
    r.gini = gini(values);
  } catch (const Error& e) {
    r.error = e.code();
  }
  return r;
}

inline std::vector<GiniReport> gini_timeseries(std::span<const TxGraph> graphs, NodeMetric metric) {
  std::vector<GiniReport> out;
  for (const auto& g : graphs) {
    const auto values = values_only(node_metric_values(g, metric));
    out.push_back(gini_report(metric, g.window().index, values));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence correlation

// Pearson over the accounts present in both lists.
inline double aligned_pearson(const AccountValues& a, const AccountValues& b) {
  std::vector<double> x, y;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (b[j].first < a[i].first) {
      ++j;
    } else {
      x.push_back(a[i].second);
      y.push_back(b[j].second);
      ++i;
      ++j;
    }
  }
  if (x.empty()) throw Error(ErrorCode::EmptyIntersection, "no common accounts");
  return pearson(x, y);
}

struct PpmccResult {
  std::size_t k = 0;  // correlates step k with step k + 1
  std::optional<double> ppmcc;
  std::optional<ErrorCode> error;
};

inline std::vector<PpmccResult> rich_stay_rich(std::span<const AccountValues> steps) {
  std::vector<PpmccResult> out;
  for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
    PpmccResult r{k, std::nullopt, std::nullopt};
    try {
      r.ppmcc = aligned_pearson(steps[k], steps[k + 1]);
    } catch (const Error& e) {
      r.error = e.code();
    }
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Balance replay

enum class CheckpointAxis { Block, Timestamp };

struct IndexedCredit {
  std::uint64_t block_id = 0;
  AccountIndex account = 0;
  Wei amount = 0;
};

// Maps credit addresses onto registry indices; credited accounts never seen
// in a record are added as EOAs.
inline std::vector<IndexedCredit> resolve_credits(std::span<const Credit> credits, AccountRegistry& registry) {
  std::vector<IndexedCredit> out;
  out.reserve(credits.size());
  for (const auto& c : credits) {
    const auto i = registry.accounts.intern(c.account);
    if (i >= registry.kinds.size()) {
      registry.kinds.resize(i + 1, AccountKind::EOA);
      registry.labels.resize(i + 1, Label::Ordinary);
    }
    out.push_back({c.block_id, i, c.amount});
  }
  return out;
}

struct BalanceDiagnostic {
  AccountIndex account = 0;
  std::uint64_t block_id = 0;
  Wei deficit = 0;
};

struct BalanceSheet {
  CheckpointAxis axis = CheckpointAxis::Block;
  // Checkpoint value; nullopt for the end-of-stream sheet.
  std::optional<std::int64_t> as_of;
  std::vector<SignedWei> balances;  // indexed by AccountIndex
  std::vector<std::uint8_t> seen;   // account active or credited at or before as_of
  std::vector<std::uint8_t> dead;   // zero balance and no later transaction
  Wei credited_total = 0;
  SignedWei total = 0;

  std::size_t dead_count() const { return static_cast<std::size_t>(std::count(dead.begin(), dead.end(), 1)); }
};

struct ReplayOptions {
  CheckpointAxis axis = CheckpointAxis::Block;
  // Strict mode throws NegativeBalance; lenient mode floors the balance at zero
  // and records a diagnostic.
  bool strict = true;
};

struct ReplayResult {
  std::vector<BalanceSheet> sheets;  // one per checkpoint, then the final sheet
  std::vector<BalanceDiagnostic> diagnostics;
};

// Applies records in (block_id, source order), crediting each block's credits
// before its records. Sheet k holds the state after everything at or before
// checkpoint k.
inline ReplayResult replay_balances(const RecordStore& store, std::size_t account_count,
                                    std::span<const IndexedCredit> credits_in,
                                    std::span<const std::int64_t> checkpoints, const ReplayOptions& options = {}) {
  const auto& recs = store.records;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i].block_id < recs[i - 1].block_id) {
      throw Error(ErrorCode::UnsortedInput, "block ids decrease at record " + std::to_string(recs[i].seq));
    }
  }
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw Error(ErrorCode::UnsortedInput, "checkpoints must be ascending");
  }
  std::vector<IndexedCredit> credits(credits_in.begin(), credits_in.end());
  std::stable_sort(credits.begin(), credits.end(),
                   [](const IndexedCredit& a, const IndexedCredit& b) { return a.block_id < b.block_id; });
  for (const auto& c : credits) account_count = std::max<std::size_t>(account_count, c.account + 1);
  account_count = std::max(account_count, store.accounts.size());

  // Position of the last record touching each account, for the dead set.
  std::vector<std::int64_t> last_touch(account_count, -1);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    last_touch[recs[i].sender] = static_cast<std::int64_t>(i);
    last_touch[recs[i].receiver] = static_cast<std::int64_t>(i);
  }

  ReplayResult result;
  std::vector<SignedWei> bal(account_count, 0);
  std::vector<std::uint8_t> seen(account_count, 0);
  Wei credited = 0;
  SignedWei total = 0;
  std::size_t next_credit = 0;
  std::size_t next_record = 0;

  auto snapshot = [&](std::optional<std::int64_t> as_of) {
    BalanceSheet s;
    s.axis = options.axis;
    s.as_of = as_of;
    s.balances = bal;
    s.seen = seen;
    s.dead.assign(account_count, 0);
    for (std::size_t a = 0; a < account_count; ++a) {
      s.dead[a] = seen[a] && bal[a] == 0 && last_touch[a] < static_cast<std::int64_t>(next_record);
    }
    s.credited_total = credited;
    s.total = total;
    result.sheets.push_back(std::move(s));
  };

  auto apply_credits_through = [&](std::uint64_t block) {
    while (next_credit < credits.size() && credits[next_credit].block_id <= block) {
      const auto& c = credits[next_credit++];
      bal[c.account] += static_cast<SignedWei>(c.amount);
      seen[c.account] = 1;
      credited += c.amount;
      total += static_cast<SignedWei>(c.amount);
    }
  };

  auto record_key = [&](const CompactRecord& r) -> std::int64_t {
    return options.axis == CheckpointAxis::Block ? static_cast<std::int64_t>(r.block_id) : r.timestamp;
  };

  std::size_t next_checkpoint = 0;
  while (next_record < recs.size()) {
    const auto& r = recs[next_record];
    while (next_checkpoint < checkpoints.size() && record_key(r) > checkpoints[next_checkpoint]) {
      if (options.axis == CheckpointAxis::Block) {
        apply_credits_through(static_cast<std::uint64_t>(checkpoints[next_checkpoint]));
      }
      snapshot(checkpoints[next_checkpoint++]);
    }
    apply_credits_through(r.block_id);
    const auto v = static_cast<SignedWei>(r.value);
    bal[r.sender] -= v;
    bal[r.receiver] += v;
    seen[r.sender] = seen[r.receiver] = 1;
    if (bal[r.sender] < 0) {
      if (options.strict) {
        throw Error(ErrorCode::NegativeBalance, store.accounts.id(r.sender).str() + " at block " +
                                                    std::to_string(r.block_id) + " short by " +
                                                    to_string(static_cast<Wei>(-bal[r.sender])));
      }
      const auto deficit = -bal[r.sender];
      result.diagnostics.push_back({r.sender, r.block_id, static_cast<Wei>(deficit)});
      bal[r.sender] = 0;
      total += deficit;
    }
    ++next_record;
  }
  while (next_checkpoint < checkpoints.size()) {
    if (options.axis == CheckpointAxis::Block) {
      apply_credits_through(static_cast<std::uint64_t>(checkpoints[next_checkpoint]));
    }
    snapshot(checkpoints[next_checkpoint++]);
  }
  apply_credits_through(~std::uint64_t{0});
  snapshot(std::nullopt);
  return result;
}

struct BalanceGiniOptions {
  bool include_contracts = false;
};

// Balances of living accounts: seen by the checkpoint and not dead. Zero
// balances of accounts that trade again later are included.
inline AccountValues living_balances(const BalanceSheet& sheet, const AccountRegistry& registry,
                                     const BalanceGiniOptions& options = {}) {
  AccountValues out;
  for (AccountIndex a = 0; a < sheet.balances.size(); ++a) {
    if (!sheet.seen[a] || sheet.dead[a]) continue;
    if (!options.include_contracts && registry.kind(a) == AccountKind::Contract) continue;
    out.emplace_back(a, to_double(std::max<SignedWei>(sheet.balances[a], 0)));
  }
  return out;
}

// Pearson between graph degree and balance over the graph's nodes.
inline double degree_balance_correlation(const TxGraph& g, const BalanceSheet& sheet,
                                         NodeMetric degree = NodeMetric::Degree) {
  AccountValues balances;
  for (auto a : g.nodes()) {
    if (a < sheet.balances.size()) balances.emplace_back(a, to_double(sheet.balances[a]));
  }
  const auto degrees = node_metric_values(g, degree);
  if (balances.size() < 2) throw Error(ErrorCode::EmptyIntersection, "fewer than 2 common accounts");
  return aligned_pearson(degrees, balances);
}

}  // namespace txgraph
