#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "support.hpp"
#include "txgraph/metrics.hpp"
#include "txgraph/random.hpp"

using namespace txgraph;
using txtest::tx;

namespace {

TxGraph whole_graph(const txtest::Fixture& f, GraphKind kind = GraphKind::UUG) {
  return build_graph(f.store, txtest::window(0, 1'000'000'000), kind, f.registry);
}

std::vector<TransactionRecord> random_transfers(unsigned seed, int n, unsigned accounts) {
  std::mt19937 gen(seed);
  std::vector<TransactionRecord> rs;
  for (int i = 0; i < n; ++i) rs.push_back(tx(gen() % accounts, gen() % accounts, gen() % 100000, gen() % 1000));
  return rs;
}

}  // namespace

TEST(SizeStats, TwoRecords) {
  auto f = txtest::fixture({tx(1, 2, 10, 3), tx(1, 2, 11, 4)});
  auto s = size_stats(whole_graph(f));
  EXPECT_EQ(s.node_count, 2u);
  EXPECT_EQ(s.edge_count, 1u);
  EXPECT_EQ(s.tx_count, 2u);
  EXPECT_EQ(s.total_value, Wei{7});
}

TEST(SizeStats, EmptyWindow) {
  auto f = txtest::fixture({tx(1, 2, 10)});
  auto s = size_stats(build_graph(f.store, txtest::window(100, 200), GraphKind::UUG, f.registry));
  EXPECT_EQ(s.node_count, 0u);
  EXPECT_EQ(s.edge_count, 0u);
  EXPECT_EQ(s.tx_count, 0u);
  EXPECT_EQ(s.total_value, Wei{0});
}

TEST(SizeStats, BoundsHold) {
  auto f = txtest::fixture(random_transfers(1, 3000, 60));
  auto s = size_stats(whole_graph(f));
  EXPECT_LE(s.edge_count, s.node_count * (s.node_count - 1) + s.node_count);
  EXPECT_GE(s.tx_count, s.edge_count);
}

TEST(Densification, ExactPowerLaws) {
  std::vector<std::pair<double, double>> pts;
  for (double n : {10.0, 50.0, 300.0, 2000.0, 9000.0}) pts.emplace_back(n, std::pow(n, 1.5));
  auto fit = fit_densification(pts);
  EXPECT_NEAR(fit.exponent, 1.5, 1e-9);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
  EXPECT_EQ(fit.n_points, 5u);

  pts.clear();
  for (double n : {3.0, 7.0, 11.0, 40.0}) pts.emplace_back(n, 2 * n);
  fit = fit_densification(pts);
  EXPECT_NEAR(fit.exponent, 1.0, 1e-9);
  EXPECT_NEAR(fit.coefficient, 2.0, 1e-9);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
}

TEST(Densification, AnyExactPowerLawHasUnitR2) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = 0.5 + 2.0 * rng.uniform();
    const double c = 0.1 + 10 * rng.uniform();
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 10; ++i) {
      const double n = 1 + 1e5 * rng.uniform();
      pts.emplace_back(n, c * std::pow(n, alpha));
    }
    EXPECT_NEAR(fit_densification(pts).r_squared, 1.0, 1e-9);
  }
}

TEST(Densification, NoisyRecovery) {
  Rng rng(13);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 25; ++i) {
    const double n = std::pow(10.0, 3 + 3.0 * i / 24);
    pts.emplace_back(n, std::pow(n, 1.3) * rng.lognormal(0, 0.1));
  }
  EXPECT_NEAR(fit_densification(pts).exponent, 1.3, 0.1);
}

TEST(Densification, Degenerate) {
  std::vector<std::pair<double, double>> pts{{5, 10}, {5, 20}};
  try {
    fit_densification(pts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
}

TEST(DegreeHistogram, Star) {
  auto f = txtest::fixture({tx(0, 1, 1), tx(0, 2, 1), tx(0, 3, 1), tx(0, 4, 1), tx(0, 5, 1)});
  auto g = whole_graph(f);
  const auto c = *g.local_id(txtest::index_of(f, 0));
  EXPECT_EQ(degree_of(g, c, DegreeDirection::Out), 5u);
  for (unsigned leaf = 1; leaf <= 5; ++leaf) {
    EXPECT_EQ(degree_of(g, *g.local_id(txtest::index_of(f, leaf)), DegreeDirection::In), 1u);
  }
  auto h = degree_histogram(g, DegreeDirection::Out);
  EXPECT_EQ(h.counts, (CountHistogram{{0, 5}, {5, 1}}));
}

TEST(DegreeHistogram, MutualPair) {
  auto f = txtest::fixture({tx(1, 2, 1), tx(2, 1, 2)});
  auto h = degree_histogram(whole_graph(f), DegreeDirection::All);
  EXPECT_EQ(h.counts, (CountHistogram{{2, 2}}));
}

TEST(DegreeHistogram, MatchesBruteForceNeighborScan) {
  auto rs = random_transfers(21, 4000, 400);
  auto f = txtest::fixture(rs);
  auto g = whole_graph(f);
  std::map<std::string, std::set<std::string>> outs, ins;
  for (const auto& r : rs) {
    outs[r.sender.str()].insert(r.receiver.str());
    ins[r.receiver.str()].insert(r.sender.str());
  }
  std::set<std::string> nodes;
  for (const auto& r : rs) nodes.insert({r.sender.str(), r.receiver.str()});
  CountHistogram in_h, out_h, all_h;
  for (const auto& n : nodes) {
    ++in_h[ins[n].size()];
    ++out_h[outs[n].size()];
    ++all_h[ins[n].size() + outs[n].size()];
  }
  EXPECT_EQ(degree_histogram(g, DegreeDirection::In).counts, in_h);
  EXPECT_EQ(degree_histogram(g, DegreeDirection::Out).counts, out_h);
  EXPECT_EQ(degree_histogram(g, DegreeDirection::All).counts, all_h);

  auto cdf = degree_histogram(g, DegreeDirection::All).cdf();
  for (std::size_t i = 1; i < cdf.size(); ++i) EXPECT_GE(cdf[i].second, cdf[i - 1].second);
  EXPECT_DOUBLE_EQ(cdf.back().second, 1.0);
}

TEST(DegreeHistogram, DegreeSumIdentity) {
  auto f = txtest::fixture(random_transfers(22, 2000, 150));
  auto g = whole_graph(f);
  std::uint64_t in = 0, out = 0;
  for (const auto& [d, c] : degree_histogram(g, DegreeDirection::In).counts) in += d * c;
  for (const auto& [d, c] : degree_histogram(g, DegreeDirection::Out).counts) out += d * c;
  EXPECT_EQ(in, g.edge_count());
  EXPECT_EQ(out, g.edge_count());
  EXPECT_EQ(degree_histogram(g, DegreeDirection::All).node_count(), g.node_count());
}

TEST(DegreeTail, RecoversExactTailLaw) {
  // Counts realizing 1 - CDF(d) = 0.79 d^-1.23 for d = 1..10^4.
  const double total = 1e15;
  auto survival = [](double d) { return d == 0 ? 1.0 : 0.79 * std::pow(d, -1.23); };
  DegreeHistogram h;
  std::uint64_t assigned = 0;
  for (int d = 1; d < 10000; ++d) {
    const auto above_prev = static_cast<std::uint64_t>(std::llround(total * survival(d - 1)));
    const auto above = static_cast<std::uint64_t>(std::llround(total * survival(d)));
    h.counts[d] = above_prev - above;
    assigned += above_prev - above;
  }
  h.counts[10000] = static_cast<std::uint64_t>(total) - assigned;
  auto fit = fit_degree_tail(h);
  EXPECT_NEAR(fit.exponent, 1.23, 0.02);
  EXPECT_NEAR(fit.coefficient, 0.79, 0.02);
  EXPECT_LE(fit.r_squared, 1.0);
}

TEST(DegreeTail, AllDegreeOneIsDegenerate) {
  DegreeHistogram h;
  h.counts[1] = 100;
  try {
    fit_degree_tail(h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
}

TEST(DegreeTail, ParetoSampleRecovery) {
  Rng rng(99);
  DegreeHistogram h;
  const double gamma = 1.5;
  for (int i = 0; i < 200000; ++i) {
    const double x = std::pow(rng.uniform_open(), -1.0 / gamma);  // P(X > x) = x^-gamma
    ++h.counts[static_cast<std::uint64_t>(std::ceil(x))];
  }
  // P(ceil(X) > d) = d^-gamma exactly for integer d.
  EXPECT_NEAR(fit_degree_tail(h).exponent, gamma, 0.1);
}

TEST(WeightStats, SingleEdge) {
  auto f = txtest::fixture({tx(1, 2, 10), tx(1, 2, 11), tx(1, 2, 12)});
  auto g = whole_graph(f);
  auto w = weight_stats(g, first_seen(f.store));
  EXPECT_DOUBLE_EQ(*w.tx_per_edge, 3.0);
  EXPECT_DOUBLE_EQ(*w.tx_per_node, 1.5);
  EXPECT_EQ(w.new_nodes, 2u);
  EXPECT_FALSE(w.old_node_tx.has_value());
  EXPECT_FALSE(w.old_node_value.has_value());
  EXPECT_DOUBLE_EQ(*w.new_node_tx, 3.0);
}

TEST(WeightStats, EmptyGraphAveragesAbsent) {
  auto f = txtest::fixture({tx(1, 2, 10)});
  auto g = build_graph(f.store, txtest::window(50, 60), GraphKind::UUG, f.registry);
  auto w = weight_stats(g, first_seen(f.store));
  EXPECT_FALSE(w.tx_per_node || w.tx_per_edge || w.value_per_node || w.value_per_edge || w.value_per_tx);
  EXPECT_FALSE(average_degree(g).all.has_value());
}

TEST(WeightStats, OldNewSplit) {
  auto f = txtest::fixture({tx(1, 2, 5, 10), tx(1, 3, 15, 6), tx(3, 1, 16, 2)});
  auto g = build_graph(f.store, txtest::window(10, 20), GraphKind::UUG, f.registry);
  auto w = weight_stats(g, first_seen(f.store));
  EXPECT_EQ(w.new_nodes, 1u);  // account 3
  EXPECT_EQ(w.old_nodes, 1u);  // account 1
  EXPECT_DOUBLE_EQ(*w.new_node_tx, 2.0);
  EXPECT_DOUBLE_EQ(*w.old_node_value, 8.0);
}

TEST(AverageDegree, Conventions) {
  auto f = txtest::fixture({tx(1, 2, 1), tx(2, 3, 1), tx(3, 1, 1), tx(1, 3, 1)});
  auto a = average_degree(whole_graph(f));
  EXPECT_DOUBLE_EQ(*a.in, 4.0 / 3);
  EXPECT_DOUBLE_EQ(*a.out, 4.0 / 3);
  EXPECT_DOUBLE_EQ(*a.all, 8.0 / 3);
}

TEST(Pearson, Examples) {
  std::vector<double> x{1, 2, 3}, neg{-1, -2, -3};
  EXPECT_NEAR(pearson(x, x), 1.0, 1e-12);
  EXPECT_NEAR(pearson(x, neg), -1.0, 1e-12);
  std::vector<double> a{1, 2, 3, 4}, b{2, 4, 5, 4};
  EXPECT_NEAR(pearson(a, b), oracle::pearson(a, b), 1e-12);
  EXPECT_NEAR(pearson(a, b), 3.5 / std::sqrt(5.0 * 4.75), 1e-12);
}

TEST(Pearson, SymmetricAndAffineInvariant) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(20), y(20), ax(20);
    const double s = 0.01 + 100 * rng.uniform(), o = 50 * rng.normal();
    for (int i = 0; i < 20; ++i) {
      x[i] = rng.normal();
      y[i] = x[i] * 0.3 + rng.normal();
      ax[i] = s * x[i] + o;
    }
    EXPECT_NEAR(pearson(x, y), pearson(y, x), 1e-12);
    EXPECT_NEAR(pearson(ax, y), pearson(x, y), 1e-12);
  }
}

TEST(TxCounts, SingleTxEdgesStepAtOne) {
  auto f = txtest::fixture({tx(1, 2, 1), tx(2, 3, 1), tx(3, 4, 1)});
  auto d = transaction_count_histogram(whole_graph(f));
  auto cdf = cumulative(d.per_edge);
  ASSERT_EQ(cdf.size(), 1u);
  EXPECT_EQ(cdf[0].first, 1u);
  EXPECT_DOUBLE_EQ(cdf[0].second, 1.0);
}

TEST(TxCounts, RepeatedPair) {
  auto f = txtest::fixture({tx(1, 2, 1), tx(1, 2, 2)});
  auto d = transaction_count_histogram(whole_graph(f));
  EXPECT_EQ(d.per_edge, (CountHistogram{{2, 1}}));
  EXPECT_EQ(d.per_node, (CountHistogram{{2, 2}}));
}

TEST(TxCounts, MatchesRecordLevelRecount) {
  auto rs = random_transfers(41, 5000, 300);
  auto f = txtest::fixture(rs);
  auto g = whole_graph(f);
  std::map<std::pair<std::string, std::string>, std::uint64_t> per_pair;
  std::map<std::string, std::uint64_t> per_node;
  for (const auto& r : rs) {
    ++per_pair[{r.sender.str(), r.receiver.str()}];
    ++per_node[r.sender.str()];
    ++per_node[r.receiver.str()];
  }
  CountHistogram edge_h, node_h;
  for (const auto& [k, c] : per_pair) ++edge_h[c];
  for (const auto& [k, c] : per_node) ++node_h[c];
  auto d = transaction_count_histogram(g);
  EXPECT_EQ(d.per_edge, edge_h);
  EXPECT_EQ(d.per_node, node_h);

  auto totals = node_totals(g);
  for (TxGraph::LocalId v = 0; v < g.node_count(); ++v) {
    std::uint64_t incident = 0;
    for (auto e : g.out_edge_ids(v)) incident += g.edges()[e].tx_count;
    for (auto e : g.in_edge_ids(v)) incident += g.edges()[e].tx_count;
    EXPECT_EQ(totals.tx[v], incident);
  }
}
