#include <gtest/gtest.h>

#include <thread>

#include "oracles.hpp"
#include "txgraph/bounded_queue.hpp"
#include "txgraph/core.hpp"
#include "txgraph/csv.hpp"
#include "txgraph/random.hpp"
#include "txgraph/stats.hpp"

using namespace txgraph;

TEST(Wei, RoundTripsBeyond64Bits) {
  const std::string big = "340282366920938463463374607431768211455";  // 2^128 - 1
  auto v = parse_wei(big);
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(to_string(*v), big);
  EXPECT_FALSE(parse_wei("340282366920938463463374607431768211456").has_value());
  EXPECT_EQ(to_string(Wei{0}), "0");
}

TEST(Wei, RejectsSignsAndJunk) {
  for (const char* s : {"", "-1", "+1", "1.5", "1e18", " 1", "0x10"}) EXPECT_FALSE(parse_wei(s).has_value()) << s;
}

TEST(Wei, SignedRendering) {
  EXPECT_EQ(to_string_signed(SignedWei{-42}), "-42");
  EXPECT_EQ(to_string_signed(SignedWei{7}), "7");
}

TEST(Wei, EtherConversion) {
  EXPECT_EQ(wei_to_ether(kWeiPerEther).to_string(), "1.0");
  EXPECT_EQ(wei_to_ether(kWeiPerEther / 2).to_string(), "0.5");
  EXPECT_EQ(wei_to_ether(1).to_string(), "0.000000000000000001");
  const Wei v = kWeiPerEther * 123 + 4;
  EXPECT_EQ(wei_to_ether(v).whole, Wei{123});
  EXPECT_EQ(wei_to_ether(v).frac_wei, 4u);
}

TEST(Address, NormalizesCaseAndPrefix) {
  const std::string lower = "0x" + std::string(39, 'a') + "1";
  EXPECT_EQ(normalize_address("0X" + std::string(39, 'A') + "1").str(), lower);
  EXPECT_EQ(normalize_address(std::string(39, 'a') + "1").str(), lower);
}

TEST(Address, ReportsOffendingPosition) {
  std::string bad = "0x" + std::string(40, '0');
  bad[7] = 'g';
  try {
    normalize_address(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedAddress);
    EXPECT_NE(std::string(e.what()).find("position 7"), std::string::npos) << e.what();
  }
  EXPECT_THROW(normalize_address("0x1234"), Error);
}

TEST(Enums, RoundTrip) {
  for (auto k : {TxKind::Transfer, TxKind::Create, TxKind::Call, TxKind::Suicide})
    EXPECT_EQ(parse_tx_kind(to_string(k)), k);
  for (auto l : kAllLabels) EXPECT_EQ(parse_label(to_string(l)), l);
  EXPECT_EQ(parse_label("Mining Pool"), Label::MiningPool);
  EXPECT_EQ(parse_label("ICO-wallet"), Label::IcoWallet);
  EXPECT_FALSE(parse_label("casino").has_value());
}

TEST(Error, MessageCarriesCode) {
  Error e(ErrorCode::ZeroSum, "nothing");
  EXPECT_STREQ(e.what(), "ZeroSum: nothing");
}

TEST(Window, HalfOpen) {
  TimeWindow w{0, 10, 20, WindowScheme::Sliding};
  EXPECT_TRUE(w.contains(10));
  EXPECT_TRUE(w.contains(19));
  EXPECT_FALSE(w.contains(20));
  EXPECT_EQ(w.width(), 10);
}

TEST(Stats, PearsonMatchesOracle) {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y{2, 4, 5, 4, 5};
  EXPECT_NEAR(pearson(x, y), oracle::pearson(x, y), 1e-12);
  EXPECT_NEAR(pearson(x, y), 0.7745966692414834, 1e-12);
}

TEST(Stats, PearsonErrors) {
  std::vector<double> a{1, 2, 3}, b{1, 1, 1}, c{1, 2};
  EXPECT_THROW(pearson(a, c), Error);
  try {
    pearson(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVariance);
  }
}

TEST(Stats, LeastSquaresExactLine) {
  std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  auto fit = least_squares(x, y);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(Rng, DeterministicAndBounded) {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.below(13);
    EXPECT_EQ(x, b.below(13));
    EXPECT_LT(x, 13u);
  }
  Rng r(1);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += r.exponential(5.0);
  EXPECT_NEAR(sum / n, 5.0, 0.1);
}

TEST(Csv, SplitTrimAndFormat) {
  auto cells = csv::split("a,,b\r");
  ASSERT_EQ(cells.size(), 3u);
  EXPECT_EQ(cells[2], "b");
  EXPECT_EQ(csv::parse_int<int>(" 42 "), 42);
  EXPECT_FALSE(csv::parse_int<int>("4x").has_value());
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125}) EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
}

TEST(BoundedQueue, NeverExceedsCapacity) {
  BoundedQueue<int> q(4);
  std::thread producer([&] {
    for (int i = 0; i < 10000; ++i) q.push(i);
    q.close();
  });
  long long sum = 0;
  int expected = 0;
  while (auto v = q.pop()) {
    EXPECT_EQ(*v, expected++);
    sum += *v;
  }
  producer.join();
  EXPECT_EQ(sum, 10000LL * 9999 / 2);
  EXPECT_LE(q.high_water_mark(), 4u);
}
