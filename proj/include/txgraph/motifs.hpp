#pragma once

// Directed 3-node motif census, closed-triplet ratio, triplet closure times and
// global clustering.
//
// Class ids follow the standard directed triad census ordering with the three
// disconnected classes (003, 012, 102) removed:
//
//   id  name  shape (B is the center of open triads)   closed
//    0  021D  A<-B->C                                   no
//    1  021U  A->B<-C                                   no
//    2  021C  A->B->C                                   no
//    3  111D  A<->B<-C                                  no
//    4  111U  A<->B->C                                  no
//    5  030T  A->B<-C, A->C                             yes
//    6  030C  A->B->C->A                                yes
//    7  201   A<->B<->C                                 no
//    8  120D  A<-B->C, A<->C                            yes
//    9  120U  A->B<-C, A<->C                            yes
//   10  120C  A->B->C, A<->C                            yes
//   11  210   A->B<->C, A<->C                           yes
//   12  300   all mutual                                yes

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "txgraph/graph.hpp"

namespace txgraph {

inline constexpr std::size_t kMotifClasses = 13;

inline constexpr std::array<std::string_view, kMotifClasses> kMotifNames = {
    "021D", "021U", "021C", "111D", "111U", "030T", "030C", "201", "120D", "120U", "120C", "210", "300"};

inline constexpr std::array<bool, kMotifClasses> kMotifClosed = {false, false, false, false, false, true, true,
                                                                 false, true,  true,  true,  true,  true};

enum MotifClass : std::uint8_t {
  k021D,
  k021U,
  k021C,
  k111D,
  k111U,
  k030T,
  k030C,
  k201,
  k120D,
  k120U,
  k120C,
  k210,
  k300,
};

struct MotifCounts {
  std::array<std::uint64_t, kMotifClasses> counts{};
  std::uint64_t closed_total = 0;
  std::uint64_t open_total = 0;

  MotifCounts& operator+=(const MotifCounts& o) {
    for (std::size_t i = 0; i < kMotifClasses; ++i) counts[i] += o.counts[i];
    closed_total += o.closed_total;
    open_total += o.open_total;
    return *this;
  }

  friend bool operator==(const MotifCounts&, const MotifCounts&) = default;
};

inline double closed_ratio(const MotifCounts& m) {
  const auto total = m.closed_total + m.open_total;
  if (total == 0) throw Error(ErrorCode::NoTriplets, "no connected triplets");
  return static_cast<double>(m.closed_total) / static_cast<double>(total);
}

// Undirected projection of a TxGraph without self-loops, with the direction
// of each pair kept as a dyad type seen from the owning node.
class DyadGraph {
 public:
  enum Dyad : std::uint8_t { Out = 1, In = 2, Mutual = 3 };

  struct Neighbor {
    std::uint32_t node;
    Dyad dyad;
  };

  explicit DyadGraph(const TxGraph& g) : offsets_(g.node_count() + 1, 0) {
    const auto n = g.node_count();
    for (TxGraph::LocalId v = 0; v < n; ++v) {
      // Both neighbor lists are sorted; merge them.
      const auto outs = g.out_neighbors(v);
      const auto ins = g.in_neighbors(v);
      std::size_t i = 0, j = 0;
      while (i < outs.size() || j < ins.size()) {
        std::uint32_t u;
        std::uint8_t dyad = 0;
        if (j == ins.size() || (i < outs.size() && outs[i] < ins[j])) {
          u = outs[i++];
          dyad = Out;
        } else if (i == outs.size() || ins[j] < outs[i]) {
          u = ins[j++];
          dyad = In;
        } else {
          u = outs[i];
          ++i;
          ++j;
          dyad = Mutual;
        }
        if (u == v) continue;
        adjacency_.push_back({u, static_cast<Dyad>(dyad)});
      }
      offsets_[v + 1] = adjacency_.size();
    }
  }

  std::size_t node_count() const noexcept { return offsets_.size() - 1; }
  std::span<const Neighbor> neighbors(std::uint32_t v) const {
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(std::uint32_t v) const { return offsets_[v + 1] - offsets_[v]; }

  static Dyad reverse(Dyad d) {
    switch (d) {
      case Out: return In;
      case In: return Out;
      case Mutual: return Mutual;
    }
    return Mutual;
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
};

namespace detail {

// Open class of a wedge from its center's two dyads.
inline MotifClass wedge_class(DyadGraph::Dyad a, DyadGraph::Dyad b) {
  using D = DyadGraph;
  if (a > b) std::swap(a, b);
  if (a == D::Out && b == D::Out) return k021D;
  if (a == D::In && b == D::In) return k021U;
  if (a == D::Out && b == D::In) return k021C;
  if (a == D::In && b == D::Mutual) return k111D;
  if (a == D::Out && b == D::Mutual) return k111U;
  return k201;
}

// Class of a triangle given the dyads a->b, b->c, c->a (each seen from the
// first node of the pair).
inline MotifClass triangle_class(DyadGraph::Dyad ab, DyadGraph::Dyad bc, DyadGraph::Dyad ca) {
  using D = DyadGraph;
  const std::array<D::Dyad, 3> d = {ab, bc, ca};
  const int mutual = static_cast<int>(std::count(d.begin(), d.end(), D::Mutual));
  if (mutual == 3) return k300;
  if (mutual == 2) return k210;
  if (mutual == 0) {
    // Cycle iff every edge points the same way around the triangle.
    const bool forward = ab == D::Out && bc == D::Out && ca == D::Out;
    const bool backward = ab == D::In && bc == D::In && ca == D::In;
    return forward || backward ? k030C : k030T;
  }
  // One mutual pair; look at the node outside it. Its two asymmetric pairs are
  // the ones adjacent to it in the cyclic order.
  D::Dyad first, second;  // dyads from the lone node toward its two partners
  if (ab == D::Mutual) {  // lone node c: pairs c->a (ca) and c->b (reverse of bc)
    first = ca;
    second = D::reverse(bc);
  } else if (bc == D::Mutual) {  // lone node a: a->b, a->c
    first = ab;
    second = D::reverse(ca);
  } else {  // lone node b: b->c, b->a
    first = bc;
    second = D::reverse(ab);
  }
  if (first == D::Out && second == D::Out) return k120D;
  if (first == D::In && second == D::In) return k120U;
  return k120C;
}

inline std::uint64_t choose2(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

struct CensusPartial {
  MotifCounts census;
  std::uint64_t triangles = 0;
  std::uint64_t wedges = 0;
};

// Counts every wedge centered at v in [begin, end) and every triangle whose
// lowest-ranked vertex lies in that range.
inline CensusPartial census_range(const DyadGraph& dg, std::span<const std::uint32_t> rank, std::uint32_t begin,
                                  std::uint32_t end) {
  using D = DyadGraph;
  CensusPartial part;
  auto& counts = part.census.counts;
  std::vector<std::uint8_t> mark(dg.node_count(), 0);  // dyad v->w for higher-ranked w
  for (std::uint32_t v = begin; v < end; ++v) {
    std::uint64_t out = 0, in = 0, mutual = 0;
    for (const auto& nb : dg.neighbors(v)) {
      if (nb.dyad == D::Out) ++out;
      else if (nb.dyad == D::In) ++in;
      else ++mutual;
    }
    counts[k021D] += choose2(out);
    counts[k021U] += choose2(in);
    counts[k021C] += out * in;
    counts[k111D] += mutual * in;
    counts[k111U] += mutual * out;
    counts[k201] += choose2(mutual);
    part.wedges += choose2(dg.degree(v));

    for (const auto& nb : dg.neighbors(v))
      if (rank[nb.node] > rank[v]) mark[nb.node] = nb.dyad;
    for (const auto& nu : dg.neighbors(v)) {
      const auto u = nu.node;
      if (rank[u] <= rank[v]) continue;
      for (const auto& nw : dg.neighbors(u)) {
        const auto w = nw.node;
        if (rank[w] <= rank[u] || !mark[w]) continue;
        // Triangle v, u, w with dyads v->u, u->w, w->v.
        const auto vu = nu.dyad;
        const auto uw = nw.dyad;
        const auto wv = D::reverse(static_cast<D::Dyad>(mark[w]));
        ++counts[triangle_class(vu, uw, wv)];
        ++part.triangles;
        // These three wedges are closed, not open.
        --counts[wedge_class(vu, D::reverse(wv))];          // center v: v->u, v->w
        --counts[wedge_class(uw, D::reverse(vu))];          // center u: u->w, u->v
        --counts[wedge_class(wv, D::reverse(uw))];          // center w: w->v, w->u
      }
    }
    for (const auto& nb : dg.neighbors(v)) mark[nb.node] = 0;
  }
  return part;
}

// Degree ordering (ties by id) used to orient triangle enumeration.
inline std::vector<std::uint32_t> degree_rank(const DyadGraph& dg) {
  const auto n = static_cast<std::uint32_t>(dg.node_count());
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return dg.degree(a) != dg.degree(b) ? dg.degree(a) < dg.degree(b) : a < b;
  });
  std::vector<std::uint32_t> rank(n);
  for (std::uint32_t i = 0; i < n; ++i) rank[order[i]] = i;
  return rank;
}

// Wrapping arithmetic: per-range partials may be transiently "negative" in
// an open class (a closed wedge subtracted in a different range than the
// one that counted it), but the merged total is exact.
inline CensusPartial census(const DyadGraph& dg, unsigned workers) {
  const auto rank = degree_rank(dg);
  const auto n = static_cast<std::uint32_t>(dg.node_count());
  workers = std::max(1u, std::min<unsigned>(workers, n == 0 ? 1 : n));
  std::vector<CensusPartial> parts(workers);
  if (workers == 1) {
    parts[0] = census_range(dg, rank, 0, n);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) {
      const auto begin = static_cast<std::uint32_t>(static_cast<std::uint64_t>(n) * w / workers);
      const auto end = static_cast<std::uint32_t>(static_cast<std::uint64_t>(n) * (w + 1) / workers);
      threads.emplace_back([&, w, begin, end] { parts[w] = census_range(dg, rank, begin, end); });
    }
    for (auto& t : threads) t.join();
  }
  CensusPartial total;
  for (const auto& p : parts) {
    total.census += p.census;
    total.triangles += p.triangles;
    total.wedges += p.wedges;
  }
  total.census.closed_total = 0;
  total.census.open_total = 0;
  for (std::size_t i = 0; i < kMotifClasses; ++i) {
    (kMotifClosed[i] ? total.census.closed_total : total.census.open_total) += total.census.counts[i];
  }
  return total;
}

}  // namespace detail

// Connected 3-node induced subgraphs by class. Self-loops are ignored and
// parallel records collapse to one directed edge.
inline MotifCounts motif_census(const TxGraph& g, unsigned workers = 1) {
  return detail::census(DyadGraph(g), workers).census;
}

// 3 * triangles / wedges on the undirected projection; 0 when there is no wedge.
inline double global_clustering(const TxGraph& g) {
  const auto p = detail::census(DyadGraph(g), 1);
  if (p.wedges == 0) return 0.0;
  return 3.0 * static_cast<double>(p.triangles) / static_cast<double>(p.wedges);
}

struct TriadSummary {
  MotifCounts census;
  std::uint64_t triangles = 0;
  std::uint64_t wedges = 0;
  double global_clustering = 0.0;
};

// Census and clustering from a single enumeration.
inline TriadSummary triad_summary(const TxGraph& g, unsigned workers = 1) {
  const auto p = detail::census(DyadGraph(g), workers);
  TriadSummary s{p.census, p.triangles, p.wedges, 0.0};
  if (p.wedges > 0) s.global_clustering = 3.0 * static_cast<double>(p.triangles) / static_cast<double>(p.wedges);
  return s;
}

// ---------------------------------------------------------------------------
// Closure times

struct PairEvent {
  AccountIndex a = 0;
  AccountIndex b = 0;
  Timestamp t = 0;
};

struct ClosureStats {
  std::vector<Duration> durations;
  std::optional<double> mean;

  std::size_t count() const noexcept { return durations.size(); }
};

// For each triple that becomes closed among `events` (sorted by time), the
// time from the moment the triple first had two connected pairs to the first
// event connecting its third pair. Self-pairs are ignored.
inline ClosureStats closure_times(std::span<const PairEvent> events) {
  ClosureStats stats;
  std::unordered_map<std::uint64_t, Timestamp> pair_first;
  std::unordered_map<AccountIndex, std::vector<AccountIndex>> adjacency;
  auto key = [](AccountIndex x, AccountIndex y) {
    if (x > y) std::swap(x, y);
    return (static_cast<std::uint64_t>(x) << 32) | y;
  };
  Timestamp previous = std::numeric_limits<Timestamp>::min();
  Duration sum = 0;
  for (const auto& e : events) {
    if (e.t < previous) throw Error(ErrorCode::UnsortedInput, "closure events must be sorted by timestamp");
    previous = e.t;
    if (e.a == e.b) continue;
    if (pair_first.contains(key(e.a, e.b))) continue;
    auto& na = adjacency[e.a];
    auto& nb = adjacency[e.b];
    const auto& small = na.size() <= nb.size() ? na : nb;
    const auto other = na.size() <= nb.size() ? e.b : e.a;
    const auto self = na.size() <= nb.size() ? e.a : e.b;
    for (auto v : small) {
      auto it = pair_first.find(key(other, v));
      if (it == pair_first.end()) continue;
      const Timestamp opened = std::max(it->second, pair_first.at(key(self, v)));
      stats.durations.push_back(e.t - opened);
      sum += e.t - opened;
    }
    pair_first.emplace(key(e.a, e.b), e.t);
    na.push_back(e.b);
    nb.push_back(e.a);
  }
  if (!stats.durations.empty()) {
    stats.mean = static_cast<double>(sum) / static_cast<double>(stats.durations.size());
  }
  return stats;
}

// Closure times of the records of `kind` inside the window; triple state
// starts empty at window.start.
inline ClosureStats closure_times(const RecordStore& store, const TimeWindow& window, GraphKind kind,
                                  const AccountRegistry& registry, const BuildOptions& options = {}) {
  std::vector<PairEvent> events;
  for (const auto& r : store.slice(window)) {
    if (r.value < options.min_value) continue;
    if (!record_belongs_to(kind, r, registry)) continue;
    events.push_back({r.sender, r.receiver, r.timestamp});
  }
  return closure_times(events);
}

}  // namespace txgraph
