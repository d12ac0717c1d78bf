#pragma once

// Size, degree and weight statistics over one TxGraph, plus the two log-log
// regressions (densification and degree-CDF tail).

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "txgraph/graph.hpp"
#include "txgraph/stats.hpp"

namespace txgraph {

struct SizeStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::uint64_t tx_count = 0;
  Wei total_value = 0;
};

inline SizeStats size_stats(const TxGraph& g) {
  return {g.node_count(), g.edge_count(), g.tx_count(), g.total_value()};
}

struct FitResult {
  double exponent = 0.0;
  double coefficient = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

// Fits e = coefficient * n^exponent by least squares on (log n, log e).
inline FitResult fit_densification(std::span<const std::pair<double, double>> points) {
  std::vector<double> x, y;
  for (const auto& [n, e] : points) {
    if (!(n > 0.0) || !(e > 0.0)) continue;
    x.push_back(std::log(n));
    y.push_back(std::log(e));
  }
  if (x.size() < 2) throw Error(ErrorCode::DegenerateInput, "densification fit needs 2 points with n, e > 0");
  const auto line = least_squares(x, y);
  return {line.slope, std::exp(line.intercept), line.r_squared, line.n_points};
}

// ---------------------------------------------------------------------------
// Degree distribution

enum class DegreeDirection { In, Out, All };

inline const char* to_string(DegreeDirection d) {
  switch (d) {
    case DegreeDirection::In: return "in";
    case DegreeDirection::Out: return "out";
    case DegreeDirection::All: return "all";
  }
  return "all";
}

using CountHistogram = std::map<std::uint64_t, std::uint64_t>;

// (value, fraction of items with value <= it) for each distinct value.
inline std::vector<std::pair<std::uint64_t, double>> cumulative(const CountHistogram& h) {
  std::uint64_t total = 0;
  for (const auto& [v, c] : h) total += c;
  std::vector<std::pair<std::uint64_t, double>> out;
  std::uint64_t running = 0;
  for (const auto& [v, c] : h) {
    running += c;
    out.emplace_back(v, static_cast<double>(running) / static_cast<double>(total));
  }
  return out;
}

struct DegreeHistogram {
  DegreeDirection direction = DegreeDirection::All;
  CountHistogram counts;  // degree -> number of nodes

  std::uint64_t node_count() const {
    std::uint64_t n = 0;
    for (const auto& [d, c] : counts) n += c;
    return n;
  }
  std::vector<std::pair<std::uint64_t, double>> cdf() const { return cumulative(counts); }
};

// Distinct-neighbor degree. All = in + out, so a mutual pair contributes 2.
inline std::size_t degree_of(const TxGraph& g, TxGraph::LocalId v, DegreeDirection dir) {
  switch (dir) {
    case DegreeDirection::In: return g.in_degree(v);
    case DegreeDirection::Out: return g.out_degree(v);
    case DegreeDirection::All: return g.in_degree(v) + g.out_degree(v);
  }
  return 0;
}

inline DegreeHistogram degree_histogram(const TxGraph& g, DegreeDirection dir) {
  DegreeHistogram h;
  h.direction = dir;
  for (TxGraph::LocalId v = 0; v < g.node_count(); ++v) ++h.counts[degree_of(g, v, dir)];
  return h;
}

// Fits 1 - CDF(d) = coefficient * d^(-exponent) on log-log axes. The largest
// degree has 1 - CDF = 0 and is always excluded; degrees below min_degree
// are excluded too.
inline FitResult fit_degree_tail(const DegreeHistogram& h, std::uint64_t min_degree = 1) {
  const std::uint64_t total = h.node_count();
  std::vector<double> x, y;
  std::uint64_t at_or_below = 0;
  for (const auto& [d, c] : h.counts) {
    at_or_below += c;
    const std::uint64_t above = total - at_or_below;
    if (d == 0 || d < min_degree || above == 0) continue;
    x.push_back(std::log(static_cast<double>(d)));
    y.push_back(std::log(static_cast<double>(above) / static_cast<double>(total)));
  }
  if (x.size() < 2) throw Error(ErrorCode::DegenerateInput, "degree tail fit needs at least 2 usable degrees");
  const auto line = least_squares(x, y);
  return {-line.slope, std::exp(line.intercept), line.r_squared, line.n_points};
}

struct AverageDegree {
  std::optional<double> in;
  std::optional<double> out;
  std::optional<double> all;
};

inline AverageDegree average_degree(const TxGraph& g) {
  if (g.node_count() == 0) return {};
  const double n = static_cast<double>(g.node_count());
  const double m = static_cast<double>(g.edge_count());
  return {m / n, m / n, 2.0 * m / n};
}

// ---------------------------------------------------------------------------
// Transaction counts and values per node / edge

// Per-node totals over incident edges (in + out); a self-loop counts twice.
struct NodeTotals {
  std::vector<std::uint64_t> tx;
  std::vector<Wei> value;
  std::vector<std::uint64_t> in_tx;
  std::vector<std::uint64_t> out_tx;
};

inline NodeTotals node_totals(const TxGraph& g) {
  NodeTotals t;
  const auto n = g.node_count();
  t.tx.assign(n, 0);
  t.value.assign(n, 0);
  t.in_tx.assign(n, 0);
  t.out_tx.assign(n, 0);
  for (const auto& e : g.edges()) {
    const auto s = *g.local_id(e.src);
    const auto d = *g.local_id(e.dst);
    t.out_tx[s] += e.tx_count;
    t.in_tx[d] += e.tx_count;
    t.tx[s] += e.tx_count;
    t.tx[d] += e.tx_count;
    t.value[s] += e.total_value;
    t.value[d] += e.total_value;
  }
  return t;
}

struct TxCountDistribution {
  CountHistogram per_edge;  // tx_count -> number of edges
  CountHistogram per_node;  // incident tx count -> number of nodes
};

inline TxCountDistribution transaction_count_histogram(const TxGraph& g) {
  TxCountDistribution d;
  for (const auto& e : g.edges()) ++d.per_edge[e.tx_count];
  const auto totals = node_totals(g);
  for (auto c : totals.tx) ++d.per_node[c];
  return d;
}

// Averages are absent (nullopt) when their denominator is zero.
struct WeightStats {
  std::optional<double> tx_per_node;
  std::optional<double> tx_per_edge;
  std::optional<double> value_per_node;
  std::optional<double> value_per_edge;
  std::optional<double> value_per_tx;

  std::size_t new_nodes = 0;
  std::size_t old_nodes = 0;
  // Mean incident tx count / value (Wei) over new and old nodes.
  std::optional<double> new_node_tx;
  std::optional<double> old_node_tx;
  std::optional<double> new_node_value;
  std::optional<double> old_node_value;
};

inline std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

inline WeightStats weight_stats(const TxGraph& g, const FirstSeenMap& first) {
  WeightStats w;
  const double n = static_cast<double>(g.node_count());
  const double m = static_cast<double>(g.edge_count());
  const double tx = static_cast<double>(g.tx_count());
  const double value = to_double(g.total_value());
  w.tx_per_node = ratio(tx, n);
  w.tx_per_edge = ratio(tx, m);
  w.value_per_node = ratio(value, n);
  w.value_per_edge = ratio(value, m);
  w.value_per_tx = ratio(value, tx);

  const auto totals = node_totals(g);
  std::uint64_t new_tx = 0, old_tx = 0;
  Wei new_value = 0, old_value = 0;
  for (TxGraph::LocalId v = 0; v < g.node_count(); ++v) {
    if (is_new_in_window(first, g.account(v), g.window())) {
      ++w.new_nodes;
      new_tx += totals.tx[v];
      new_value += totals.value[v];
    } else {
      ++w.old_nodes;
      old_tx += totals.tx[v];
      old_value += totals.value[v];
    }
  }
  w.new_node_tx = ratio(static_cast<double>(new_tx), static_cast<double>(w.new_nodes));
  w.old_node_tx = ratio(static_cast<double>(old_tx), static_cast<double>(w.old_nodes));
  w.new_node_value = ratio(to_double(new_value), static_cast<double>(w.new_nodes));
  w.old_node_value = ratio(to_double(old_value), static_cast<double>(w.old_nodes));
  return w;
}

}  // namespace txgraph
