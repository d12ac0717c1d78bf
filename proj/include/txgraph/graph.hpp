#pragma once

// Time windows and the per-window aggregate transaction graphs (UUG, CCG, UCG).

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "txgraph/core.hpp"
#include "txgraph/ingest.hpp"

namespace txgraph {

enum class GraphKind : std::uint8_t { UUG, CCG, UCG };

inline constexpr std::array<GraphKind, 3> kAllGraphKinds = {GraphKind::UUG, GraphKind::CCG, GraphKind::UCG};

inline const char* to_string(GraphKind k) {
  switch (k) {
    case GraphKind::UUG: return "uug";
    case GraphKind::CCG: return "ccg";
    case GraphKind::UCG: return "ucg";
  }
  return "uug";
}

inline std::optional<GraphKind> parse_graph_kind(std::string_view s) {
  if (s == "uug" || s == "UUG") return GraphKind::UUG;
  if (s == "ccg" || s == "CCG") return GraphKind::CCG;
  if (s == "ucg" || s == "UCG") return GraphKind::UCG;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Windows

enum class WindowCoverage {
  // Every window whose start lies before the range end; the last windows may
  // reach past it.
  CoverRange,
  // Only windows that fit entirely inside the range.
  FullWidthOnly,
};

inline std::vector<TimeWindow> make_sliding_windows(Timestamp t0, Timestamp t1, Duration width, Duration stride,
                                                    WindowCoverage coverage = WindowCoverage::CoverRange) {
  if (width <= 0 || stride <= 0) throw Error(ErrorCode::ConfigError, "window width and stride must be positive");
  if (t0 >= t1) throw Error(ErrorCode::EmptyRange, "sliding window range is empty");
  std::vector<TimeWindow> out;
  for (Timestamp start = t0; start < t1; start += stride) {
    if (coverage == WindowCoverage::FullWidthOnly && start + width > t1) break;
    out.push_back({out.size(), start, start + width, WindowScheme::Sliding});
  }
  return out;
}

// Windows [t0, t0 + initial + k*step) for every k whose end stays within the
// range. An initial width larger than the range yields one window clipped to t1.
inline std::vector<TimeWindow> make_incremental_windows(Timestamp t0, Timestamp t1, Duration initial, Duration step) {
  if (initial <= 0 || step <= 0) throw Error(ErrorCode::ConfigError, "initial width and step must be positive");
  if (t0 >= t1) throw Error(ErrorCode::EmptyRange, "incremental window range is empty");
  std::vector<TimeWindow> out;
  if (t0 + initial >= t1) {
    out.push_back({0, t0, t1, WindowScheme::Incremental});
    return out;
  }
  for (Timestamp end = t0 + initial; end <= t1; end += step) {
    out.push_back({out.size(), t0, end, WindowScheme::Incremental});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph construction

inline bool record_belongs_to(GraphKind kind, TxKind tx, AccountKind sender, AccountKind receiver) {
  const bool s_contract = sender == AccountKind::Contract;
  const bool r_contract = receiver == AccountKind::Contract;
  switch (kind) {
    case GraphKind::UUG: return !s_contract && !r_contract && tx == TxKind::Transfer;
    case GraphKind::CCG: return s_contract && r_contract && tx != TxKind::Suicide;
    case GraphKind::UCG: return s_contract != r_contract;
  }
  return false;
}

inline bool record_belongs_to(GraphKind kind, const CompactRecord& r, const AccountRegistry& reg) {
  const auto sk = reg.kind(r.sender);
  const auto rk = reg.kind(r.receiver);
  if (sk == AccountKind::Unknown || rk == AccountKind::Unknown) {
    const auto who = sk == AccountKind::Unknown ? r.sender : r.receiver;
    const std::string name = who < reg.accounts.size() ? reg.accounts.id(who).str() : std::to_string(who);
    throw Error(ErrorCode::UnclassifiedAccount, name);
  }
  return record_belongs_to(kind, r.kind, sk, rk);
}

struct EdgeAggregate {
  AccountIndex src = 0;
  AccountIndex dst = 0;
  std::uint64_t tx_count = 0;
  Wei total_value = 0;
  Timestamp first_ts = 0;
  Timestamp last_ts = 0;
};

struct BuildOptions {
  // Records with value < min_value are dropped. min_value = 0 keeps
  // zero-value transfers.
  Wei min_value = 0;
};

// Immutable directed aggregate graph for one window and graph kind. Nodes are
// the union of edge endpoints, addressed by a dense local id; edges are sorted
// by (src, dst).
class TxGraph {
 public:
  using LocalId = std::uint32_t;

  TxGraph() = default;

  GraphKind kind() const noexcept { return kind_; }
  const TimeWindow& window() const noexcept { return window_; }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  // Account index of each local node id, ascending.
  std::span<const AccountIndex> nodes() const noexcept { return nodes_; }
  std::span<const EdgeAggregate> edges() const noexcept { return edges_; }

  std::optional<LocalId> local_id(AccountIndex account) const {
    auto it = local_.find(account);
    if (it == local_.end()) return std::nullopt;
    return it->second;
  }
  AccountIndex account(LocalId v) const { return nodes_[v]; }

  // Distinct out/in neighbors (self-loop included if present).
  std::span<const LocalId> out_neighbors(LocalId v) const {
    return {out_targets_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
  }
  std::span<const LocalId> in_neighbors(LocalId v) const {
    return {in_sources_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
  }
  // Edge indices (into edges()) leaving / entering v, parallel to the neighbor spans.
  std::span<const std::uint32_t> out_edge_ids(LocalId v) const {
    return {out_edges_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
  }
  std::span<const std::uint32_t> in_edge_ids(LocalId v) const {
    return {in_edges_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
  }

  std::size_t out_degree(LocalId v) const { return out_offsets_[v + 1] - out_offsets_[v]; }
  std::size_t in_degree(LocalId v) const { return in_offsets_[v + 1] - in_offsets_[v]; }

  std::uint64_t tx_count() const noexcept { return tx_count_; }
  Wei total_value() const noexcept { return total_value_; }

  static TxGraph from_edges(GraphKind kind, const TimeWindow& window, std::vector<EdgeAggregate> edges) {
    TxGraph g;
    g.kind_ = kind;
    g.window_ = window;
    std::sort(edges.begin(), edges.end(), [](const EdgeAggregate& a, const EdgeAggregate& b) {
      return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    g.edges_ = std::move(edges);
    for (const auto& e : g.edges_) {
      g.nodes_.push_back(e.src);
      g.nodes_.push_back(e.dst);
      g.tx_count_ += e.tx_count;
      g.total_value_ += e.total_value;
    }
    std::sort(g.nodes_.begin(), g.nodes_.end());
    g.nodes_.erase(std::unique(g.nodes_.begin(), g.nodes_.end()), g.nodes_.end());
    g.local_.reserve(g.nodes_.size());
    for (LocalId i = 0; i < g.nodes_.size(); ++i) g.local_.emplace(g.nodes_[i], i);

    const std::size_t n = g.nodes_.size();
    g.out_offsets_.assign(n + 1, 0);
    g.in_offsets_.assign(n + 1, 0);
    std::vector<LocalId> src_local(g.edges_.size()), dst_local(g.edges_.size());
    for (std::size_t i = 0; i < g.edges_.size(); ++i) {
      src_local[i] = g.local_.at(g.edges_[i].src);
      dst_local[i] = g.local_.at(g.edges_[i].dst);
      ++g.out_offsets_[src_local[i] + 1];
      ++g.in_offsets_[dst_local[i] + 1];
    }
    for (std::size_t v = 0; v < n; ++v) {
      g.out_offsets_[v + 1] += g.out_offsets_[v];
      g.in_offsets_[v + 1] += g.in_offsets_[v];
    }
    g.out_targets_.resize(g.edges_.size());
    g.out_edges_.resize(g.edges_.size());
    g.in_sources_.resize(g.edges_.size());
    g.in_edges_.resize(g.edges_.size());
    std::vector<std::size_t> out_fill(g.out_offsets_.begin(), g.out_offsets_.end() - 1);
    std::vector<std::size_t> in_fill(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
    // Edges are sorted by (src, dst) and local ids follow account order, so
    // both adjacency lists come out sorted.
    for (std::size_t i = 0; i < g.edges_.size(); ++i) {
      const auto s = src_local[i];
      const auto d = dst_local[i];
      g.out_targets_[out_fill[s]] = d;
      g.out_edges_[out_fill[s]++] = static_cast<std::uint32_t>(i);
      g.in_sources_[in_fill[d]] = s;
      g.in_edges_[in_fill[d]++] = static_cast<std::uint32_t>(i);
    }
    return g;
  }

 private:
  GraphKind kind_ = GraphKind::UUG;
  TimeWindow window_;
  std::vector<AccountIndex> nodes_;
  std::vector<EdgeAggregate> edges_;
  std::unordered_map<AccountIndex, LocalId> local_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<std::size_t> in_offsets_{0};
  std::vector<LocalId> out_targets_;
  std::vector<LocalId> in_sources_;
  std::vector<std::uint32_t> out_edges_;
  std::vector<std::uint32_t> in_edges_;
  std::uint64_t tx_count_ = 0;
  Wei total_value_ = 0;
};

// Aggregates the records of `kind` inside the window into one edge per
// ordered (sender, receiver) pair. Expects `records` sorted by timestamp
// (only the window slice is scanned).
inline TxGraph build_graph(const RecordStore& store, const TimeWindow& window, GraphKind kind,
                           const AccountRegistry& registry, const BuildOptions& options = {}) {
  std::unordered_map<std::uint64_t, std::uint32_t> edge_of;
  std::vector<EdgeAggregate> edges;
  for (const auto& r : store.slice(window)) {
    if (r.value < options.min_value) continue;
    if (!record_belongs_to(kind, r, registry)) continue;
    const std::uint64_t key = (static_cast<std::uint64_t>(r.sender) << 32) | r.receiver;
    auto [it, inserted] = edge_of.try_emplace(key, static_cast<std::uint32_t>(edges.size()));
    if (inserted) {
      edges.push_back({r.sender, r.receiver, 0, 0, r.timestamp, r.timestamp});
    }
    auto& e = edges[it->second];
    ++e.tx_count;
    e.total_value += r.value;
    e.first_ts = std::min(e.first_ts, r.timestamp);
    e.last_ts = std::max(e.last_ts, r.timestamp);
  }
  return TxGraph::from_edges(kind, window, std::move(edges));
}

// Global first-transaction time of every account, over all records and kinds.
using FirstSeenMap = std::vector<std::optional<Timestamp>>;

inline FirstSeenMap first_seen(const RecordStore& store) {
  FirstSeenMap out(store.accounts.size());
  for (const auto& r : store.records) {
    for (auto a : {r.sender, r.receiver}) {
      if (!out[a] || r.timestamp < *out[a]) out[a] = r.timestamp;
    }
  }
  return out;
}

inline bool is_new_in_window(const FirstSeenMap& first, AccountIndex a, const TimeWindow& w) {
  return a < first.size() && first[a] && w.contains(*first[a]);
}

inline std::size_t new_node_count(const TxGraph& g, const FirstSeenMap& first) {
  return static_cast<std::size_t>(std::count_if(g.nodes().begin(), g.nodes().end(), [&](AccountIndex a) {
    return is_new_in_window(first, a, g.window());
  }));
}

inline std::vector<std::size_t> new_node_counts(std::span<const TxGraph> graphs, const FirstSeenMap& first) {
  std::vector<std::size_t> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(new_node_count(g, first));
  return out;
}

// ---------------------------------------------------------------------------
// Snapshot export

inline std::string snapshot_file_name(GraphKind kind, WindowScheme scheme, std::size_t index) {
  return std::string(to_string(kind)) + "_" + to_string(scheme) + "_" + std::to_string(index) + ".csv";
}

inline void write_edge_list(std::ostream& out, const TxGraph& g, const AccountTable& accounts) {
  out << "src,dst,tx_count,total_value_wei\n";
  for (const auto& e : g.edges()) {
    out << accounts.id(e.src).str() << ',' << accounts.id(e.dst).str() << ',' << e.tx_count << ','
        << to_string(e.total_value) << '\n';
  }
}

}  // namespace txgraph
