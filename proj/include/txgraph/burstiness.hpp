#pragma once

// Macroscopic burstiness (busy-period ratio, hour-of-day profile) and the
// microscopic inter-event coefficients B and M per account.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "txgraph/ingest.hpp"
#include "txgraph/random.hpp"
#include "txgraph/stats.hpp"

namespace txgraph {

inline constexpr std::size_t kMinTimelineTransactions = 10;

struct AccountTimeline {
  AccountIndex account = 0;
  std::vector<Timestamp> timestamps;  // ascending

  Duration lifetime() const { return timestamps.empty() ? 0 : timestamps.back() - timestamps.front(); }
};

enum class TimelineSide { SentAndReceived, SentOnly };

// One grouped pass over the store. A self-transfer contributes one event.
// Accounts without events get an empty timeline.
inline std::vector<AccountTimeline> extract_timelines(const RecordStore& store,
                                                      TimelineSide side = TimelineSide::SentAndReceived) {
  std::vector<AccountTimeline> out(store.accounts.size());
  for (AccountIndex i = 0; i < out.size(); ++i) out[i].account = i;
  for (const auto& r : store.records) {
    out[r.sender].timestamps.push_back(r.timestamp);
    if (side == TimelineSide::SentAndReceived && r.receiver != r.sender) {
      out[r.receiver].timestamps.push_back(r.timestamp);
    }
  }
  // The store is time-sorted, so each list already is.
  return out;
}

// Smallest span holding ceil(p * N) consecutive transactions, divided by the
// lifetime.
inline double busy_period_ratio(const AccountTimeline& tl, double p) {
  const auto& t = tl.timestamps;
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::DegenerateInput, "busy-period fraction must lie in (0, 1]");
  if (t.size() < kMinTimelineTransactions) {
    throw Error(ErrorCode::TooFewTransactions, std::to_string(t.size()) + " transactions (< 10)");
  }
  const Duration life = tl.lifetime();
  if (life <= 0) throw Error(ErrorCode::ZeroLifetime, "all transactions share one timestamp");
  const auto n = t.size();
  // The epsilon absorbs representation error in p * n (0.07 * 100 is 7.000000000000001).
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  Duration best = life;
  for (std::size_t i = 0; i + k <= n; ++i) best = std::min(best, t[i + k - 1] - t[i]);
  return static_cast<double>(best) / static_cast<double>(life);
}

struct BusyPeriodRow {
  double p = 0.0;
  std::size_t accounts = 0;
  std::optional<double> mean;
  std::array<std::optional<double>, 5> quantiles;  // 10th, 25th, 50th, 75th, 90th percentiles
};

inline constexpr std::array<double, 5> kBusyQuantiles = {0.10, 0.25, 0.50, 0.75, 0.90};

// Nearest-rank quantile of a sorted sample.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

// Distribution of busy-period ratios over every eligible timeline, per p.
inline std::vector<BusyPeriodRow> busy_period_curve(std::span<const AccountTimeline> timelines,
                                                    std::span<const double> fractions) {
  std::vector<BusyPeriodRow> rows;
  for (double p : fractions) {
    std::vector<double> ratios;
    for (const auto& tl : timelines) {
      if (tl.timestamps.size() < kMinTimelineTransactions || tl.lifetime() <= 0) continue;
      ratios.push_back(busy_period_ratio(tl, p));
    }
    BusyPeriodRow row;
    row.p = p;
    row.accounts = ratios.size();
    if (!ratios.empty()) {
      std::sort(ratios.begin(), ratios.end());
      row.mean = mean(ratios);
      for (std::size_t q = 0; q < kBusyQuantiles.size(); ++q) row.quantiles[q] = sorted_quantile(ratios, kBusyQuantiles[q]);
    }
    rows.push_back(row);
  }
  return rows;
}

inline int utc_hour(Timestamp t) {
  const auto s = ((t % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  return static_cast<int>(s / kSecondsPerHour);
}

inline Timestamp utc_day(Timestamp t) {
  return (t >= 0 ? t : t - (kSecondsPerDay - 1)) / kSecondsPerDay;
}

// Mean transactions per UTC hour of day: count in hour h divided by `days`.
inline std::array<double, 24> hourly_histogram(std::span<const CompactRecord> records, double days) {
  std::array<double, 24> bins{};
  if (records.empty()) return bins;
  if (!(days > 0.0)) throw Error(ErrorCode::DegenerateInput, "hourly histogram needs a positive day count");
  std::array<std::uint64_t, 24> counts{};
  for (const auto& r : records) ++counts[utc_hour(r.timestamp)];
  for (int h = 0; h < 24; ++h) bins[h] = static_cast<double>(counts[h]) / days;
  return bins;
}

// Day count taken as the number of UTC calendar days from the first to the
// last record, inclusive.
inline std::array<double, 24> hourly_histogram(std::span<const CompactRecord> records) {
  if (records.empty()) return {};
  Timestamp lo = records.front().timestamp, hi = lo;
  for (const auto& r : records) {
    lo = std::min(lo, r.timestamp);
    hi = std::max(hi, r.timestamp);
  }
  return hourly_histogram(records, static_cast<double>(utc_day(hi) - utc_day(lo) + 1));
}

// ---------------------------------------------------------------------------
// Inter-event coefficients

inline std::vector<double> inter_event_times(std::span<const Timestamp> ts) {
  std::vector<double> out;
  if (ts.size() < 2) return out;
  out.reserve(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) out.push_back(static_cast<double>(ts[i] - ts[i - 1]));
  return out;
}

// (sigma - mean) / (sigma + mean), population sigma.
inline double burstiness_B(std::span<const double> intervals) {
  if (intervals.size() < 2) throw Error(ErrorCode::TooFewIntervals, "B needs at least 2 intervals");
  const double mu = mean(intervals);
  if (mu == 0.0) throw Error(ErrorCode::AllZeroIntervals, "all inter-event times are zero");
  const double sigma = population_stddev(intervals, mu);
  return (sigma - mu) / (sigma + mu);
}

// Correlation between tau_i and tau_{i+lag}, each subsequence with its own
// mean and population sigma.
inline double memory_M(std::span<const double> intervals, std::size_t lag = 1) {
  if (lag == 0) throw Error(ErrorCode::DegenerateInput, "lag must be positive");
  if (intervals.size() < lag + 2 || intervals.size() < 3) {
    throw Error(ErrorCode::TooFewIntervals, "M needs at least 3 intervals");
  }
  const auto m = intervals.size() - lag;
  const auto first = intervals.first(m);
  const auto second = intervals.subspan(lag, m);
  const double mu1 = mean(first), mu2 = mean(second);
  const double s1 = population_stddev(first, mu1), s2 = population_stddev(second, mu2);
  if (s1 == 0.0 || s2 == 0.0) throw Error(ErrorCode::ZeroVariance, "M subsequence has zero variance");
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) acc += (first[i] - mu1) * (second[i] - mu2);
  return std::clamp(acc / static_cast<double>(m) / (s1 * s2), -1.0, 1.0);
}

struct BurstinessScore {
  double B = 0.0;
  std::optional<double> M;  // absent when a shifted subsequence has zero variance
  std::size_t n_intervals = 0;
};

// Score of one timeline; nullopt unless it has at least 10 transactions and B
// is defined.
inline std::optional<BurstinessScore> burstiness_score(const AccountTimeline& tl, std::size_t lag = 1) {
  if (tl.timestamps.size() < kMinTimelineTransactions) return std::nullopt;
  const auto iv = inter_event_times(tl.timestamps);
  BurstinessScore s;
  s.n_intervals = iv.size();
  try {
    s.B = burstiness_B(iv);
  } catch (const Error&) {
    return std::nullopt;
  }
  try {
    s.M = memory_M(iv, lag);
  } catch (const Error&) {
    s.M.reset();
  }
  return s;
}

struct ScoredAccount {
  AccountIndex account = 0;
  BurstinessScore score;
};

struct ClassSample {
  Label label = Label::Ordinary;
  std::size_t eligible = 0;
  std::vector<ScoredAccount> accounts;
  std::optional<ErrorCode> error;  // ClassTooSmall when eligible < sample_size
};

struct MbOptions {
  std::size_t sample_size = 100;
  std::uint64_t seed = 0;
  TimelineSide side = TimelineSide::SentAndReceived;
  std::size_t lag = 1;
  // Restrict to externally owned accounts.
  bool eoa_only = false;
};

// Draws the same number of scored accounts from every label class that has
// at least one eligible account. Sampling is a seeded partial Fisher-Yates
// over eligible accounts in address order, so it is reproducible.
inline std::vector<ClassSample> mb_by_class(const RecordStore& store, const AccountRegistry& registry,
                                            const MbOptions& options) {
  const auto timelines = extract_timelines(store, options.side);
  std::map<Label, std::vector<std::pair<const AccountId*, ScoredAccount>>> pool;
  for (const auto& tl : timelines) {
    if (options.eoa_only && registry.kind(tl.account) != AccountKind::EOA) continue;
    auto score = burstiness_score(tl, options.lag);
    if (!score) continue;
    pool[registry.label(tl.account)].push_back({&registry.accounts.id(tl.account), {tl.account, *score}});
  }
  std::vector<ClassSample> out;
  for (Label label : kAllLabels) {
    auto it = pool.find(label);
    ClassSample sample;
    sample.label = label;
    if (it == pool.end()) {
      // A class that was labeled but has no eligible account is still reported.
      bool labeled = false;
      for (AccountIndex i = 0; i < registry.labels.size() && !labeled; ++i) labeled = registry.labels[i] == label;
      if (!labeled) continue;
      sample.error = ErrorCode::ClassTooSmall;
      out.push_back(std::move(sample));
      continue;
    }
    auto& members = it->second;
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });
    sample.eligible = members.size();
    if (members.size() < options.sample_size) {
      sample.error = ErrorCode::ClassTooSmall;
      out.push_back(std::move(sample));
      continue;
    }
    Rng rng(mix64(options.seed) ^ static_cast<std::uint64_t>(label));
    for (std::size_t i = 0; i < options.sample_size; ++i) {
      const auto j = i + rng.below(members.size() - i);
      std::swap(members[i], members[j]);
      sample.accounts.push_back(members[i].second);
    }
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace txgraph
