#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "txgraph/burstiness.hpp"
#include "txgraph/random.hpp"

using namespace txgraph;
using txtest::tx;

namespace {

AccountTimeline timeline(std::vector<Timestamp> ts) {
  AccountTimeline tl;
  tl.timestamps = std::move(ts);
  return tl;
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

TEST(BusyPeriod, EvenlySpaced) {
  auto tl = timeline({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  EXPECT_DOUBLE_EQ(busy_period_ratio(tl, 0.4), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(busy_period_ratio(tl, 1.0), 1.0);
}

TEST(BusyPeriod, Errors) {
  EXPECT_EQ(code_of([] { busy_period_ratio(timeline({0, 1, 2, 3, 4, 5, 6, 7, 8}), 0.5); }),
            ErrorCode::TooFewTransactions);
  EXPECT_EQ(code_of([] { busy_period_ratio(timeline(std::vector<Timestamp>(12, 5)), 0.5); }), ErrorCode::ZeroLifetime);
}

TEST(BusyPeriod, MatchesPairwiseOracleAndIsMonotone) {
  std::mt19937 gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Timestamp> ts(10 + gen() % 50);
    for (auto& t : ts) t = gen() % 100000;
    std::sort(ts.begin(), ts.end());
    if (ts.front() == ts.back()) continue;
    auto tl = timeline(ts);
    double previous = 0.0;
    for (int step = 1; step <= 20; ++step) {
      const double p = step / 20.0;
      const auto k = static_cast<std::size_t>(std::ceil(p * ts.size() - 1e-9));
      const double r = busy_period_ratio(tl, p);
      EXPECT_DOUBLE_EQ(r, oracle::busy_period(ts, k));
      EXPECT_GE(r, previous);
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
      previous = r;
    }
  }
}

TEST(BusyPeriod, CurveSkipsIneligibleTimelines) {
  std::vector<AccountTimeline> tls{timeline({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), timeline({1, 2, 3}),
                                   timeline(std::vector<Timestamp>(10, 3))};
  std::vector<double> ps{0.4, 1.0};
  auto rows = busy_period_curve(tls, ps);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].accounts, 1u);
  EXPECT_DOUBLE_EQ(*rows[0].mean, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*rows[1].quantiles[2], 1.0);
}

TEST(Hourly, SingleHour) {
  std::vector<TransactionRecord> rs;
  for (int d = 0; d < 4; ++d) rs.push_back(tx(1, 2, d * kSecondsPerDay + 7 * 3600 + 1800));
  auto f = txtest::fixture(rs);
  auto bins = hourly_histogram(f.store.records);
  for (int h = 0; h < 24; ++h) EXPECT_DOUBLE_EQ(bins[h], h == 7 ? 1.0 : 0.0) << h;
}

TEST(Hourly, UniformArrivalsGiveFlatBins) {
  Rng rng(5);
  std::vector<TransactionRecord> rs;
  const int days = 400;
  for (int i = 0; i < 240000; ++i) rs.push_back(tx(1, 2, static_cast<Timestamp>(rng.below(days * kSecondsPerDay))));
  auto f = txtest::fixture(rs);
  auto bins = hourly_histogram(f.store.records, days);
  for (double b : bins) EXPECT_NEAR(b, 25.0, 1.0);
}

TEST(BurstinessB, Examples) {
  std::vector<double> regular{5, 5, 5}, pair{1, 3};
  EXPECT_DOUBLE_EQ(burstiness_B(regular), -1.0);
  EXPECT_DOUBLE_EQ(burstiness_B(pair), -1.0 / 3.0);
  Rng rng(1);
  std::vector<double> exp(100000);
  for (auto& x : exp) x = rng.exponential(60.0);
  EXPECT_NEAR(burstiness_B(exp), 0.0, 0.01);
}

TEST(BurstinessB, Errors) {
  EXPECT_EQ(code_of([] {
              std::vector<double> one{4};
              burstiness_B(one);
            }),
            ErrorCode::TooFewIntervals);
  EXPECT_EQ(code_of([] {
              std::vector<double> zeros{0, 0, 0};
              burstiness_B(zeros);
            }),
            ErrorCode::AllZeroIntervals);
}

TEST(BurstinessB, MatchesOracleBoundedAndScaleInvariant) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> iv(2 + rng.below(40));
    for (auto& x : iv) x = static_cast<double>(rng.below(1000));
    if (std::all_of(iv.begin(), iv.end(), [](double x) { return x == 0; })) iv[0] = 1;
    const double b = burstiness_B(iv);
    EXPECT_NEAR(b, oracle::burstiness(iv), 1e-12);
    EXPECT_GE(b, -1.0);
    EXPECT_LT(b, 1.0);
    // Power-of-two scaling is exact in binary floating point.
    auto scaled = iv;
    for (auto& x : scaled) x *= 8.0;
    EXPECT_EQ(burstiness_B(scaled), b);
    const double c = 0.1 + 50 * rng.uniform();
    for (std::size_t i = 0; i < iv.size(); ++i) scaled[i] = iv[i] * c;
    EXPECT_NEAR(burstiness_B(scaled), b, 1e-12);
  }
}

TEST(MemoryM, Examples) {
  std::vector<double> inc{1, 2, 3, 4}, alt{1, 3, 1, 3, 1};
  EXPECT_NEAR(memory_M(inc), 1.0, 1e-12);
  EXPECT_NEAR(memory_M(alt), -1.0, 1e-12);
  Rng rng(3);
  std::vector<double> indep(100000);
  for (auto& x : indep) x = rng.exponential(10.0);
  EXPECT_NEAR(memory_M(indep), 0.0, 0.01);
}

TEST(MemoryM, Errors) {
  EXPECT_EQ(code_of([] {
              std::vector<double> two{1, 2};
              memory_M(two);
            }),
            ErrorCode::TooFewIntervals);
  EXPECT_EQ(code_of([] {
              std::vector<double> flat{2, 2, 2, 5};
              memory_M(flat);
            }),
            ErrorCode::ZeroVariance);
}

TEST(MemoryM, MatchesOracleAndAffineInvariant) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> iv(3 + rng.below(50));
    for (auto& x : iv) x = 1 + rng.exponential(100);
    const double m = memory_M(iv);
    EXPECT_NEAR(m, oracle::memory(iv), 1e-12);
    const double c = 0.01 + 10 * rng.uniform(), d = 100 * rng.uniform();
    auto scaled = iv;
    for (auto& x : scaled) x = c * x + d;
    EXPECT_NEAR(memory_M(scaled), m, 1e-12);
  }
}

TEST(Timelines, SidesAndSelfTransfers) {
  auto f = txtest::fixture({tx(1, 2, 10), tx(2, 1, 20), tx(1, 1, 30)});
  auto all = extract_timelines(f.store);
  auto sent = extract_timelines(f.store, TimelineSide::SentOnly);
  const auto a = txtest::index_of(f, 1);
  EXPECT_EQ(all[a].timestamps, (std::vector<Timestamp>{10, 20, 30}));
  EXPECT_EQ(sent[a].timestamps, (std::vector<Timestamp>{10, 30}));
  EXPECT_EQ(all[a].lifetime(), 20);
}

TEST(MbByClass, RegularExchangeAndSmallClass) {
  std::vector<TransactionRecord> rs;
  // Exchange 1 sends to 2 every hour; ponzi accounts 10..12 are irregular.
  for (int i = 0; i < 50; ++i) rs.push_back(tx(1, 2, 3600 * i));
  std::mt19937 gen(1);
  for (unsigned p = 10; p < 13; ++p)
    for (int i = 0; i < 20; ++i) rs.push_back(tx(p, 100 + p, gen() % 1000000));
  auto f = txtest::fixture(rs);
  LabelMap labels;
  labels.entries[txtest::id(1)] = Label::Exchange;
  for (unsigned p = 10; p < 13; ++p) labels.entries[txtest::id(p)] = Label::Ponzi;
  f.registry.apply_labels(labels);

  MbOptions opt;
  opt.sample_size = 1;
  auto samples = mb_by_class(f.store, f.registry, opt);
  const ClassSample* exchange = nullptr;
  for (const auto& s : samples)
    if (s.label == Label::Exchange) exchange = &s;
  ASSERT_NE(exchange, nullptr);
  ASSERT_EQ(exchange->accounts.size(), 1u);
  EXPECT_DOUBLE_EQ(exchange->accounts[0].score.B, -1.0);
  EXPECT_FALSE(exchange->accounts[0].score.M.has_value());

  opt.sample_size = 5;
  for (const auto& s : mb_by_class(f.store, f.registry, opt)) {
    if (s.label == Label::Ponzi) {
      EXPECT_EQ(s.eligible, 3u);
      EXPECT_EQ(s.error, ErrorCode::ClassTooSmall);
    }
  }
}

TEST(MbByClass, SeededSamplingIsReproducible) {
  std::vector<TransactionRecord> rs;
  std::mt19937 gen(2);
  for (unsigned a = 0; a < 40; ++a)
    for (int i = 0; i < 15; ++i) rs.push_back(tx(a, 1000, gen() % 100000));
  auto f = txtest::fixture(rs);
  MbOptions opt;
  opt.sample_size = 10;
  opt.seed = 9;
  auto a = mb_by_class(f.store, f.registry, opt);
  auto b = mb_by_class(f.store, f.registry, opt);
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a[0].accounts.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(a[0].accounts[i].account, b[0].accounts[i].account);
}
