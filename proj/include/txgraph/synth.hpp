#pragma once

// Deterministic synthetic transaction streams with planted ground truth.
//
// The generator emits a time-sorted record stream in the ingest schema, a
// credits file that funds every sender (so strict replay never goes negative),
// a labels file for the planted behavior classes, a contract declaration file,
// and ground_truth.json holding the tallies it tracked while emitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "txgraph/core.hpp"
#include "txgraph/ingest.hpp"
#include "txgraph/random.hpp"

namespace txgraph::synth {

using txgraph::to_string;

enum class ArrivalModel { Uniform, Diurnal, ThreeStage };
enum class IntervalModel { Regular, Exponential, HeavyTailed };

inline const char* to_string(ArrivalModel m) {
  switch (m) {
    case ArrivalModel::Uniform: return "uniform";
    case ArrivalModel::Diurnal: return "diurnal";
    case ArrivalModel::ThreeStage: return "three_stage";
  }
  return "uniform";
}

inline std::optional<ArrivalModel> parse_arrival_model(std::string_view s) {
  if (s == "uniform") return ArrivalModel::Uniform;
  if (s == "diurnal") return ArrivalModel::Diurnal;
  if (s == "three_stage" || s == "three-stage") return ArrivalModel::ThreeStage;
  return std::nullopt;
}

inline const char* to_string(IntervalModel m) {
  switch (m) {
    case IntervalModel::Regular: return "regular";
    case IntervalModel::Exponential: return "exponential";
    case IntervalModel::HeavyTailed: return "heavy_tailed";
  }
  return "regular";
}

// Hour-of-day weights used by the diurnal arrival model: busiest 07-10 UTC,
// secondary bump 03-04 UTC.
inline constexpr std::array<double, 24> kDefaultDiurnalProfile = {
    1.0, 1.0, 1.2, 2.0, 2.0, 1.2, 1.4, 3.0, 3.0, 3.0, 3.0, 1.5,
    1.2, 1.2, 1.2, 1.2, 1.1, 1.1, 1.0, 1.0, 0.8, 0.8, 0.8, 0.9};

// A group of labeled EOAs that send on their own planted inter-event schedule
// and are never picked as counterparties by the background process.
struct PlantedClass {
  Label label = Label::Exchange;
  std::size_t accounts = 0;
  IntervalModel model = IntervalModel::Regular;
  double mean_interval_s = 3600.0;
  // Target burstiness for HeavyTailed; ignored otherwise.
  double b_target = 0.3;
};

// Largest heavy-tailed B target accepted. Sample B of a lognormal series
// converges slowly for large shape parameters, so higher targets cannot be
// hit at desk-scale event counts.
inline constexpr double kMaxHeavyTailB = 0.5;

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t n_accounts = 1000;      // background accounts, EOAs and contracts
  double contract_fraction = 0.1;
  std::size_t n_transactions = 10000;  // total records, including arrivals and planted sends
  std::int64_t duration_days = 720;
  Timestamp start = 1438214400;  // 2015-07-30T00:00:00Z
  ArrivalModel arrival = ArrivalModel::Uniform;
  std::array<double, 24> diurnal_profile = kDefaultDiurnalProfile;
  // Probability of picking a counterparty in proportion to its past activity
  // rather than uniformly (linear preferential attachment).
  double attachment = 0.8;
  double call_fraction = 0.6;            // share of payments to contracts that are calls
  double contract_creator_fraction = 0.1;  // contracts created by other contracts
  double suicide_fraction = 0.05;         // share of contracts that self-destruct
  double zero_value_fraction = 0.05;
  double min_log10_ether = -3.0;
  double max_log10_ether = 2.0;
  Duration block_time_s = 15;
  std::uint64_t checkpoint_blocks = 200000;
  std::int64_t tally_window_days = 180;
  std::vector<PlantedClass> classes;
};

struct KindTally {
  std::uint64_t nodes = 0;
  std::uint64_t edges = 0;
  std::uint64_t tx = 0;
  Wei value = 0;
  std::uint64_t new_nodes = 0;
};

struct LifecycleTally {
  std::uint64_t created_by_eoa = 0;
  std::uint64_t created_by_contract = 0;
  std::uint64_t calls_by_eoa = 0;
  std::uint64_t calls_by_contract = 0;
  std::uint64_t distinct_called_contracts = 0;
  std::uint64_t suicides_to_eoa = 0;
  std::uint64_t suicides_to_contract = 0;
};

struct WindowTruth {
  std::size_t index = 0;
  Timestamp start = 0;
  Timestamp end = 0;
  std::array<KindTally, 3> kinds{};  // uug, ccg, ucg
  LifecycleTally lifecycle;
};

struct CheckpointTruth {
  std::uint64_t block = 0;
  Wei total = 0;  // credits applied through this block == sum of balances
};

struct PlantedTruth {
  std::string address;
  Label label = Label::Ordinary;
  IntervalModel model = IntervalModel::Regular;
  double mean_interval_s = 0;
  double b_target = 0;  // -1 regular, 0 exponential
  Timestamp arrival = 0;
  std::size_t events = 0;
};

struct GroundTruth {
  std::uint64_t seed = 0;
  Timestamp start = 0;
  Timestamp end = 0;
  Duration tally_window_s = 0;
  std::size_t records = 0;
  std::size_t credits = 0;
  Wei credited_total = 0;
  std::size_t eoa_count = 0;
  std::size_t contract_count = 0;
  std::vector<WindowTruth> windows;
  std::vector<CheckpointTruth> checkpoints;
  std::map<std::string, Wei> final_balances;
  std::map<std::string, Timestamp> first_seen;
  std::vector<PlantedTruth> planted;
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const GroundTruth& gt) {
  using nlohmann::json;
  json j;
  j["seed"] = gt.seed;
  j["start"] = gt.start;
  j["end"] = gt.end;
  j["tally_window_seconds"] = gt.tally_window_s;
  j["records"] = gt.records;
  j["credits"] = gt.credits;
  j["credited_total_wei"] = to_string(gt.credited_total);
  j["eoa_count"] = gt.eoa_count;
  j["contract_count"] = gt.contract_count;
  json windows = json::array();
  static constexpr const char* kKindNames[3] = {"uug", "ccg", "ucg"};
  for (const auto& w : gt.windows) {
    json jw;
    jw["index"] = w.index;
    jw["start"] = w.start;
    jw["end"] = w.end;
    for (int k = 0; k < 3; ++k) {
      const auto& t = w.kinds[k];
      jw[kKindNames[k]] = {{"nodes", t.nodes},
                           {"edges", t.edges},
                           {"tx", t.tx},
                           {"value_wei", to_string(t.value)},
                           {"new_nodes", t.new_nodes}};
    }
    const auto& l = w.lifecycle;
    jw["lifecycle"] = {{"created_by_eoa", l.created_by_eoa},
                       {"created_by_contract", l.created_by_contract},
                       {"calls_by_eoa", l.calls_by_eoa},
                       {"calls_by_contract", l.calls_by_contract},
                       {"distinct_called_contracts", l.distinct_called_contracts},
                       {"suicides_to_eoa", l.suicides_to_eoa},
                       {"suicides_to_contract", l.suicides_to_contract}};
    windows.push_back(std::move(jw));
  }
  j["windows"] = std::move(windows);
  json cps = json::array();
  for (const auto& c : gt.checkpoints) cps.push_back({{"block", c.block}, {"total_wei", to_string(c.total)}});
  j["checkpoints"] = std::move(cps);
  json balances = json::object();
  for (const auto& [a, b] : gt.final_balances) balances[a] = to_string(b);
  j["final_balances"] = std::move(balances);
  json first = json::object();
  for (const auto& [a, t] : gt.first_seen) first[a] = t;
  j["first_seen"] = std::move(first);
  json planted = json::array();
  for (const auto& p : gt.planted) {
    planted.push_back({{"address", p.address},
                       {"label", to_string(p.label)},
                       {"model", to_string(p.model)},
                       {"mean_interval_s", p.mean_interval_s},
                       {"b_target", p.b_target},
                       {"arrival", p.arrival},
                       {"events", p.events}});
  }
  j["planted"] = std::move(planted);
  return j;
}

inline Wei wei_from_json(const nlohmann::json& j) {
  auto v = parse_wei(j.get<std::string>());
  if (!v) throw Error(ErrorCode::SchemaViolation, "bad Wei string in ground truth");
  return *v;
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth gt;
  gt.seed = j.at("seed").get<std::uint64_t>();
  gt.start = j.at("start").get<Timestamp>();
  gt.end = j.at("end").get<Timestamp>();
  gt.tally_window_s = j.at("tally_window_seconds").get<Duration>();
  gt.records = j.at("records").get<std::size_t>();
  gt.credits = j.at("credits").get<std::size_t>();
  gt.credited_total = wei_from_json(j.at("credited_total_wei"));
  gt.eoa_count = j.at("eoa_count").get<std::size_t>();
  gt.contract_count = j.at("contract_count").get<std::size_t>();
  static constexpr const char* kKindNames[3] = {"uug", "ccg", "ucg"};
  for (const auto& jw : j.at("windows")) {
    WindowTruth w;
    w.index = jw.at("index").get<std::size_t>();
    w.start = jw.at("start").get<Timestamp>();
    w.end = jw.at("end").get<Timestamp>();
    for (int k = 0; k < 3; ++k) {
      const auto& jk = jw.at(kKindNames[k]);
      w.kinds[k] = {jk.at("nodes").get<std::uint64_t>(), jk.at("edges").get<std::uint64_t>(),
                    jk.at("tx").get<std::uint64_t>(), wei_from_json(jk.at("value_wei")),
                    jk.at("new_nodes").get<std::uint64_t>()};
    }
    const auto& jl = jw.at("lifecycle");
    w.lifecycle = {jl.at("created_by_eoa").get<std::uint64_t>(),
                   jl.at("created_by_contract").get<std::uint64_t>(),
                   jl.at("calls_by_eoa").get<std::uint64_t>(),
                   jl.at("calls_by_contract").get<std::uint64_t>(),
                   jl.at("distinct_called_contracts").get<std::uint64_t>(),
                   jl.at("suicides_to_eoa").get<std::uint64_t>(),
                   jl.at("suicides_to_contract").get<std::uint64_t>()};
    gt.windows.push_back(w);
  }
  for (const auto& jc : j.at("checkpoints")) {
    gt.checkpoints.push_back({jc.at("block").get<std::uint64_t>(), wei_from_json(jc.at("total_wei"))});
  }
  for (const auto& [a, b] : j.at("final_balances").items()) gt.final_balances[a] = wei_from_json(b);
  for (const auto& [a, t] : j.at("first_seen").items()) gt.first_seen[a] = t.get<Timestamp>();
  for (const auto& jp : j.at("planted")) {
    PlantedTruth p;
    p.address = jp.at("address").get<std::string>();
    p.label = parse_label(jp.at("label").get<std::string>()).value_or(Label::Ordinary);
    const auto model = jp.at("model").get<std::string>();
    p.model = model == "regular" ? IntervalModel::Regular
              : model == "exponential" ? IntervalModel::Exponential
                                       : IntervalModel::HeavyTailed;
    p.mean_interval_s = jp.at("mean_interval_s").get<double>();
    p.b_target = jp.at("b_target").get<double>();
    p.arrival = jp.at("arrival").get<Timestamp>();
    p.events = jp.at("events").get<std::size_t>();
    gt.planted.push_back(std::move(p));
  }
  return gt;
}

// ---------------------------------------------------------------------------
// Generator

namespace detail {

inline std::string hex_bytes(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::size_t digits) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "0x";
  const std::uint64_t words[3] = {a, b, c};
  for (std::size_t i = 0; i < digits; ++i) {
    const auto w = words[i / 16];
    const auto shift = 60 - 4 * (i % 16);
    out.push_back(kHex[(w >> shift) & 0xF]);
  }
  return out;
}

inline std::string account_address(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
  const auto base = mix64(seed ^ mix64(index * 0x9e3779b97f4a7c15ULL + salt));
  return hex_bytes(mix64(base + 1), mix64(base + 2), mix64(base + 3), kAddressHexDigits);
}

// Samples a timestamp in [start, end) under the arrival model.
class TimeSampler {
 public:
  TimeSampler(const SynthConfig& cfg, Timestamp start, Timestamp end) : cfg_(cfg), start_(start), end_(end) {
    double acc = 0;
    for (double w : cfg.diurnal_profile) {
      acc += w;
      hour_cdf_.push_back(acc);
    }
  }

  Timestamp sample(Rng& rng) const { return sample(rng, start_, end_); }

  Timestamp sample(Rng& rng, Timestamp lo, Timestamp hi) const {
    const double span = static_cast<double>(hi - lo);
    switch (cfg_.arrival) {
      case ArrivalModel::Uniform: return lo + static_cast<Timestamp>(rng.uniform() * span);
      case ArrivalModel::Diurnal: {
        // Uniform day, weighted hour, uniform second; rejected until in range.
        for (int attempt = 0; attempt < 64; ++attempt) {
          const auto first_day = utc_day_of(lo);
          const auto days = utc_day_of(hi - 1) - first_day + 1;
          const auto day = first_day + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(days)));
          const double u = rng.uniform() * hour_cdf_.back();
          const auto hour = static_cast<Timestamp>(std::upper_bound(hour_cdf_.begin(), hour_cdf_.end(), u) -
                                                   hour_cdf_.begin());
          const Timestamp t = day * kSecondsPerDay + std::min<Timestamp>(hour, 23) * kSecondsPerHour +
                              static_cast<Timestamp>(rng.below(kSecondsPerHour));
          if (t >= lo && t < hi) return t;
        }
        return lo + static_cast<Timestamp>(rng.uniform() * span);
      }
      case ArrivalModel::ThreeStage: {
        // Piecewise-constant density: slow start (50% of time, weight 1),
        // outbreak (30%, weight 6), abatement (20%, weight 3).
        static constexpr double kBounds[4] = {0.0, 0.5, 0.8, 1.0};
        static constexpr double kWeights[3] = {1.0, 6.0, 3.0};
        double mass[3], total = 0;
        for (int i = 0; i < 3; ++i) total += mass[i] = kWeights[i] * (kBounds[i + 1] - kBounds[i]);
        double u = rng.uniform() * total;
        int seg = 0;
        while (seg < 2 && u >= mass[seg]) u -= mass[seg++];
        const double x = kBounds[seg] + (u / mass[seg]) * (kBounds[seg + 1] - kBounds[seg]);
        return std::min(hi - 1, lo + static_cast<Timestamp>(x * span));
      }
    }
    return lo;
  }

 private:
  static Timestamp utc_day_of(Timestamp t) { return (t >= 0 ? t : t - (kSecondsPerDay - 1)) / kSecondsPerDay; }

  const SynthConfig& cfg_;
  Timestamp start_;
  Timestamp end_;
  std::vector<double> hour_cdf_;
};

struct Account {
  std::string address;
  AccountKind kind = AccountKind::EOA;
  Label label = Label::Ordinary;
  bool planted = false;
  bool alive = true;  // contracts stop after self-destruct
  Timestamp arrival = 0;
  std::optional<Timestamp> first_seen;
};

enum class EventType : std::uint8_t { Arrival, Planted, Background };

struct Event {
  Timestamp t;
  EventType type;
  std::uint32_t account;  // arrival / planted sender; unused for background
  std::uint64_t seq;
};

// Ground-truth bookkeeping with plain ordered containers, kept apart from the
// analytics code paths it is compared against.
class Tallies {
 public:
  Tallies(Timestamp start, Timestamp end, Duration width) {
    for (Timestamp s = start; s < end; s += width) windows_.push_back({windows_.size(), s, s + width, {}, {}});
    sets_.resize(windows_.size());
  }

  void record(const std::vector<Account>& accounts, std::uint32_t s, std::uint32_t r, TxKind kind, Wei value,
              Timestamp t) {
    const auto w = static_cast<std::size_t>(window_of(t));
    auto& sets = sets_[w];
    const bool sc = accounts[s].kind == AccountKind::Contract;
    const bool rc = accounts[r].kind == AccountKind::Contract;
    int graph = -1;
    if (!sc && !rc && kind == TxKind::Transfer) graph = 0;
    else if (sc && rc && kind != TxKind::Suicide) graph = 1;
    else if (sc != rc) graph = 2;
    if (graph >= 0) {
      auto& tally = windows_[w].kinds[graph];
      sets.nodes[graph].insert(s);
      sets.nodes[graph].insert(r);
      sets.edges[graph].insert({s, r});
      ++tally.tx;
      tally.value += value;
    }
    auto& l = windows_[w].lifecycle;
    switch (kind) {
      case TxKind::Create: (sc ? l.created_by_contract : l.created_by_eoa)++; break;
      case TxKind::Call:
        (sc ? l.calls_by_contract : l.calls_by_eoa)++;
        sets.called.insert(r);
        break;
      case TxKind::Suicide: (rc ? l.suicides_to_contract : l.suicides_to_eoa)++; break;
      case TxKind::Transfer: break;
    }
  }

  std::vector<WindowTruth> finish(const std::vector<Account>& accounts) {
    for (std::size_t w = 0; w < windows_.size(); ++w) {
      auto& win = windows_[w];
      for (int k = 0; k < 3; ++k) {
        win.kinds[k].nodes = sets_[w].nodes[k].size();
        win.kinds[k].edges = sets_[w].edges[k].size();
        for (auto a : sets_[w].nodes[k]) {
          const auto fs = accounts[a].first_seen;
          if (fs && *fs >= win.start && *fs < win.end) ++win.kinds[k].new_nodes;
        }
      }
      win.lifecycle.distinct_called_contracts = sets_[w].called.size();
    }
    return windows_;
  }

 private:
  std::int64_t window_of(Timestamp t) const {
    std::size_t lo = 0, hi = windows_.size();
    while (hi - lo > 1) {
      const auto mid = (lo + hi) / 2;
      (windows_[mid].start <= t ? lo : hi) = mid;
    }
    return static_cast<std::int64_t>(lo);
  }

  struct Sets {
    std::array<std::set<std::uint32_t>, 3> nodes;
    std::array<std::set<std::pair<std::uint32_t, std::uint32_t>>, 3> edges;
    std::set<std::uint32_t> called;
  };
  std::vector<WindowTruth> windows_;
  std::vector<Sets> sets_;
};

}  // namespace detail

struct GeneratedCredit {
  std::uint64_t block_id = 0;
  std::string address;
  Wei amount = 0;
};

struct SynthSinks {
  std::function<void(const TransactionRecord&)> on_record;
  std::function<void(const GeneratedCredit&)> on_credit;
};

inline void validate(const SynthConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InfeasibleConfig, what); };
  if (cfg.n_accounts < 2) fail("need at least 2 background accounts");
  if (cfg.duration_days <= 0) fail("duration must be positive");
  if (cfg.tally_window_days <= 0) fail("tally window must be positive");
  if (cfg.block_time_s <= 0) fail("block time must be positive");
  if (cfg.checkpoint_blocks == 0) fail("checkpoint cadence must be positive");
  for (double f : {cfg.contract_fraction, cfg.attachment, cfg.call_fraction, cfg.contract_creator_fraction,
                   cfg.suicide_fraction, cfg.zero_value_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) fail("fractions must lie in [0, 1]");
  }
  if (cfg.min_log10_ether > cfg.max_log10_ether) fail("value range is inverted");
  if (cfg.max_log10_ether > 18.0) fail("values above 1e18 Ether are not supported");
  for (double w : cfg.diurnal_profile) {
    if (!(w >= 0.0)) fail("diurnal weights must be non-negative");
  }
  for (const auto& c : cfg.classes) {
    if (!(c.mean_interval_s >= 1.0)) fail("planted mean interval must be at least one second");
    if (c.model == IntervalModel::HeavyTailed && !(c.b_target > -1.0 && c.b_target <= kMaxHeavyTailB)) {
      fail("heavy-tailed B target " + std::to_string(c.b_target) + " outside (-1, " +
           std::to_string(kMaxHeavyTailB) + "]");
    }
  }
}

inline GroundTruth generate(const SynthConfig& cfg, const SynthSinks& sinks) {
  validate(cfg);
  Rng rng(cfg.seed);
  const Timestamp start = cfg.start;
  const Timestamp end = start + cfg.duration_days * kSecondsPerDay;
  const detail::TimeSampler sampler(cfg, start, end);

  // Accounts: background first, planted after.
  std::vector<detail::Account> accounts;
  const std::size_t n_bg = cfg.n_accounts;
  auto n_contracts = static_cast<std::size_t>(std::llround(cfg.contract_fraction * static_cast<double>(n_bg)));
  n_contracts = std::min(n_contracts, n_bg - 2);  // accounts 0 and 1 are EOAs
  std::vector<AccountKind> kinds(n_bg, AccountKind::EOA);
  {
    std::vector<std::size_t> idx(n_bg - 2);
    std::iota(idx.begin(), idx.end(), 2);
    for (std::size_t i = 0; i < n_contracts; ++i) {
      const auto j = i + rng.below(idx.size() - i);
      std::swap(idx[i], idx[j]);
      kinds[idx[i]] = AccountKind::Contract;
    }
  }
  std::unordered_set<std::string> used;
  auto fresh_address = [&](std::uint64_t index) {
    for (std::uint64_t salt = 0;; ++salt) {
      auto a = detail::account_address(cfg.seed, index, salt);
      if (used.insert(a).second) return a;
    }
  };
  std::vector<Timestamp> arrivals(n_bg);
  for (auto& t : arrivals) t = sampler.sample(rng);
  std::sort(arrivals.begin(), arrivals.end());
  arrivals[0] = arrivals[1] = start;
  for (std::size_t i = 0; i < n_bg; ++i) {
    detail::Account a;
    a.address = fresh_address(i);
    a.kind = kinds[i];
    a.arrival = arrivals[i];
    accounts.push_back(std::move(a));
  }

  // Planted accounts and their send schedules.
  struct PlantedSchedule {
    std::uint32_t account;
    std::vector<Timestamp> sends;
  };
  std::vector<PlantedSchedule> planted;
  GroundTruth gt;
  const Timestamp planted_arrival_end = start + std::max<Duration>(1, (end - start) / 20);
  for (const auto& cls : cfg.classes) {
    double sigma = 0, mu = 0;
    if (cls.model == IntervalModel::HeavyTailed) {
      const double cv = (1.0 + cls.b_target) / (1.0 - cls.b_target);
      sigma = std::sqrt(std::log(1.0 + cv * cv));
      mu = std::log(cls.mean_interval_s) - 0.5 * sigma * sigma;
    }
    for (std::size_t i = 0; i < cls.accounts; ++i) {
      detail::Account a;
      a.address = fresh_address(accounts.size());
      a.kind = AccountKind::EOA;
      a.label = cls.label;
      a.planted = true;
      // After the two founding accounts so the arrival transfer has a sender.
      a.arrival = start + 1 + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(planted_arrival_end - start)));
      PlantedSchedule sched{static_cast<std::uint32_t>(accounts.size()), {}};
      Timestamp t = a.arrival;
      while (true) {
        double gap = cls.mean_interval_s;
        if (cls.model == IntervalModel::Exponential) gap = rng.exponential(cls.mean_interval_s);
        else if (cls.model == IntervalModel::HeavyTailed) gap = rng.lognormal(mu, sigma);
        const auto step = static_cast<Timestamp>(std::llround(gap));
        if (step > end - t) break;
        t += step;
        if (t >= end) break;
        sched.sends.push_back(t);
      }
      PlantedTruth truth;
      truth.address = a.address;
      truth.label = cls.label;
      truth.model = cls.model;
      truth.mean_interval_s = cls.model == IntervalModel::Regular ? static_cast<double>(std::llround(cls.mean_interval_s))
                                                                  : cls.mean_interval_s;
      truth.b_target = cls.model == IntervalModel::Regular ? -1.0
                       : cls.model == IntervalModel::Exponential ? 0.0
                                                                 : cls.b_target;
      truth.arrival = a.arrival;
      truth.events = sched.sends.size() + 1;
      gt.planted.push_back(truth);
      accounts.push_back(std::move(a));
      planted.push_back(std::move(sched));
    }
  }

  // Event list.
  std::size_t fixed_events = n_bg - 1;  // every background account but the first arrives by a record
  for (const auto& p : planted) fixed_events += 1 + p.sends.size();
  if (fixed_events > cfg.n_transactions) {
    throw Error(ErrorCode::InfeasibleConfig, "n_transactions " + std::to_string(cfg.n_transactions) +
                                                 " is below the " + std::to_string(fixed_events) +
                                                 " arrival and planted records");
  }
  const std::size_t n_background = cfg.n_transactions - fixed_events;
  std::vector<detail::Event> events;
  events.reserve(cfg.n_transactions);
  std::uint64_t seq = 0;
  for (std::uint32_t i = 1; i < accounts.size(); ++i) {
    events.push_back({accounts[i].arrival, detail::EventType::Arrival, i, seq++});
  }
  for (const auto& p : planted) {
    for (auto t : p.sends) events.push_back({t, detail::EventType::Planted, p.account, seq++});
  }
  for (std::size_t i = 0; i < n_background; ++i) {
    events.push_back({sampler.sample(rng), detail::EventType::Background, 0, seq++});
  }
  std::sort(events.begin(), events.end(), [](const detail::Event& a, const detail::Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.type != b.type) return a.type < b.type;
    return a.seq < b.seq;
  });

  // Emission state.
  std::vector<SignedWei> balance(accounts.size(), 0);
  std::vector<std::uint32_t> eoas, contracts, arrived, pa_pool;
  detail::Tallies tallies(start, end, cfg.tally_window_days * kSecondsPerDay);
  Wei credited = 0;
  std::uint64_t checkpoint_next = cfg.checkpoint_blocks;
  std::uint64_t last_block = 0;
  std::size_t emitted = 0, credit_count = 0;
  const double suicide_rate =
      n_background == 0 ? 0.0
                        : std::min(1.0, cfg.suicide_fraction * static_cast<double>(n_contracts) /
                                            static_cast<double>(n_background));

  auto block_of = [&](Timestamp t) { return static_cast<std::uint64_t>((t - start) / cfg.block_time_s); };

  auto advance_checkpoints = [&](std::uint64_t block) {
    while (checkpoint_next < block) {
      gt.checkpoints.push_back({checkpoint_next, credited});
      checkpoint_next += cfg.checkpoint_blocks;
    }
  };

  auto credit = [&](std::uint32_t a, Wei amount, std::uint64_t block) {
    balance[a] += static_cast<SignedWei>(amount);
    credited += amount;
    ++credit_count;
    if (sinks.on_credit) sinks.on_credit({block, accounts[a].address, amount});
  };

  auto draw_value = [&]() -> Wei {
    if (rng.bernoulli(cfg.zero_value_fraction)) return 0;
    const double x = cfg.min_log10_ether + rng.uniform() * (cfg.max_log10_ether - cfg.min_log10_ether);
    const long double wei = std::pow(10.0L, static_cast<long double>(x) + 18.0L);
    return static_cast<Wei>(wei);
  };

  auto pick = [&](bool allow_contracts) -> std::uint32_t {
    for (int attempt = 0; attempt < 32; ++attempt) {
      std::uint32_t a;
      if (!pa_pool.empty() && rng.bernoulli(cfg.attachment)) a = pa_pool[rng.below(pa_pool.size())];
      else a = arrived[rng.below(arrived.size())];
      const auto& acc = accounts[a];
      if (acc.kind == AccountKind::Contract && (!allow_contracts || !acc.alive)) continue;
      return a;
    }
    return eoas[rng.below(eoas.size())];
  };

  std::uint64_t tx_seq = 0;
  auto emit = [&](std::uint32_t s, std::uint32_t r, Wei value, Timestamp t, TxKind kind) {
    const auto block = block_of(t);
    advance_checkpoints(block);
    const bool contract_sender = accounts[s].kind == AccountKind::Contract;
    if (!contract_sender && balance[s] < static_cast<SignedWei>(value)) {
      credit(s, static_cast<Wei>(static_cast<SignedWei>(value) - balance[s]) + value, block);
    }
    balance[s] -= static_cast<SignedWei>(value);
    balance[r] += static_cast<SignedWei>(value);
    for (auto a : {s, r}) {
      if (!accounts[a].first_seen) accounts[a].first_seen = t;
    }
    tallies.record(accounts, s, r, kind, value, t);
    TransactionRecord rec;
    rec.block_id = block;
    rec.tx_hash = detail::hex_bytes(mix64(cfg.seed ^ mix64(++tx_seq)), 0, 0, 16);
    rec.sender = AccountId::from_normalized(accounts[s].address);
    rec.receiver = AccountId::from_normalized(accounts[r].address);
    rec.value = value;
    rec.timestamp = t;
    rec.kind = kind;
    rec.internal = contract_sender;
    if (sinks.on_record) sinks.on_record(rec);
    last_block = block;
    ++emitted;
  };

  auto contract_value = [&](std::uint32_t s, Wei v) -> Wei {
    const auto b = balance[s] > 0 ? static_cast<Wei>(balance[s]) : Wei{0};
    return std::min(v, b);
  };

  auto join = [&](std::uint32_t a) {
    arrived.push_back(a);
    pa_pool.push_back(a);
    (accounts[a].kind == AccountKind::Contract ? contracts : eoas).push_back(a);
  };

  join(0);
  for (const auto& ev : events) {
    switch (ev.type) {
      case detail::EventType::Arrival: {
        const auto a = ev.account;
        if (accounts[a].kind == AccountKind::Contract) {
          std::uint32_t creator = eoas[rng.below(eoas.size())];
          if (!contracts.empty() && rng.bernoulli(cfg.contract_creator_fraction)) {
            const auto c = contracts[rng.below(contracts.size())];
            if (accounts[c].alive) creator = c;
          }
          Wei v = rng.bernoulli(0.5) ? Wei{0} : draw_value() / 100;
          if (accounts[creator].kind == AccountKind::Contract) v = contract_value(creator, v);
          emit(creator, a, v, ev.t, TxKind::Create);
          pa_pool.push_back(creator);
        } else {
          const auto funder = eoas[rng.below(eoas.size())];
          emit(funder, a, draw_value(), ev.t, TxKind::Transfer);
          pa_pool.push_back(funder);
        }
        if (!accounts[a].planted) join(a);
        break;
      }
      case detail::EventType::Planted: {
        const auto s = ev.account;
        const auto r = pick(true);
        const TxKind kind = accounts[r].kind == AccountKind::Contract && rng.bernoulli(cfg.call_fraction)
                                ? TxKind::Call
                                : TxKind::Transfer;
        emit(s, r, draw_value() / 1000, ev.t, kind);
        break;
      }
      case detail::EventType::Background: {
        if (!contracts.empty() && rng.bernoulli(suicide_rate)) {
          const auto c = contracts[rng.below(contracts.size())];
          if (accounts[c].alive) {
            std::uint32_t beneficiary = eoas[rng.below(eoas.size())];
            if (rng.bernoulli(0.02)) {
              const auto other = contracts[rng.below(contracts.size())];
              if (other != c && accounts[other].alive) beneficiary = other;
            }
            const auto v = contract_value(c, ~Wei{0});
            emit(c, beneficiary, v, ev.t, TxKind::Suicide);
            accounts[c].alive = false;
            break;
          }
        }
        const auto s = pick(true);
        const auto r = pick(true);
        TxKind kind = TxKind::Transfer;
        if (accounts[r].kind == AccountKind::Contract && rng.bernoulli(cfg.call_fraction)) kind = TxKind::Call;
        Wei v = draw_value();
        if (accounts[s].kind == AccountKind::Contract) v = contract_value(s, v);
        emit(s, r, v, ev.t, kind);
        pa_pool.push_back(s);
        pa_pool.push_back(r);
        break;
      }
    }
  }
  advance_checkpoints(last_block + 1);

  gt.seed = cfg.seed;
  gt.start = start;
  gt.end = end;
  gt.tally_window_s = cfg.tally_window_days * kSecondsPerDay;
  gt.records = emitted;
  gt.credits = credit_count;
  gt.credited_total = credited;
  gt.windows = tallies.finish(accounts);
  for (std::size_t i = 0; i < accounts.size(); ++i) {
    const auto& a = accounts[i];
    (a.kind == AccountKind::Contract ? gt.contract_count : gt.eoa_count)++;
    if (a.first_seen) gt.first_seen[a.address] = *a.first_seen;
    if (balance[i] < 0) throw Error(ErrorCode::NegativeBalance, "generator ledger went negative");
    if (a.first_seen || balance[i] != 0) gt.final_balances[a.address] = static_cast<Wei>(balance[i]);
  }
  return gt;
}

// ---------------------------------------------------------------------------
// Fixture files

struct FixturePaths {
  std::filesystem::path transactions;
  std::filesystem::path credits;
  std::filesystem::path labels;
  std::filesystem::path contracts;
  std::filesystem::path ground_truth;
};

inline void write_record(std::ostream& out, const TransactionRecord& r, InputFormat format) {
  if (format == InputFormat::Csv) {
    out << r.block_id << ',' << r.tx_hash << ',' << r.sender.str() << ',' << r.receiver.str() << ','
        << to_string(r.value) << ',' << r.timestamp << ',' << to_string(r.kind) << ',' << (r.internal ? 1 : 0)
        << '\n';
  } else {
    out << "{\"block_id\":" << r.block_id << ",\"tx_hash\":\"" << r.tx_hash << "\",\"sender\":\"" << r.sender.str()
        << "\",\"receiver\":\"" << r.receiver.str() << "\",\"value_wei\":\"" << to_string(r.value)
        << "\",\"timestamp\":" << r.timestamp << ",\"kind\":\"" << to_string(r.kind)
        << "\",\"internal\":" << (r.internal ? 1 : 0) << "}\n";
  }
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + p.string() + "'");
  return out;
}

// Writes transactions.{csv,jsonl}, credits.csv, labels.csv, contracts.txt and
// ground_truth.json into `dir`.
inline FixturePaths write_fixture(const SynthConfig& cfg, const std::filesystem::path& dir,
                                  InputFormat format = InputFormat::Csv) {
  std::filesystem::create_directories(dir);
  FixturePaths paths{dir / (format == InputFormat::Csv ? "transactions.csv" : "transactions.jsonl"),
                     dir / "credits.csv", dir / "labels.csv", dir / "contracts.txt", dir / "ground_truth.json"};
  auto tx = open_output(paths.transactions);
  auto credits = open_output(paths.credits);
  if (format == InputFormat::Csv) tx << kTransactionsHeader << '\n';
  credits << kCreditsHeader << '\n';
  std::set<std::string> contract_addresses;
  SynthSinks sinks;
  sinks.on_record = [&](const TransactionRecord& r) {
    write_record(tx, r, format);
    if (r.kind == TxKind::Create || r.kind == TxKind::Call) contract_addresses.insert(r.receiver.str());
  };
  sinks.on_credit = [&](const GeneratedCredit& c) {
    credits << c.block_id << ',' << c.address << ',' << to_string(c.amount) << '\n';
  };
  const auto gt = generate(cfg, sinks);

  auto labels = open_output(paths.labels);
  labels << "address,label\n";
  for (const auto& p : gt.planted) labels << p.address << ',' << to_string(p.label) << '\n';
  auto contracts = open_output(paths.contracts);
  for (const auto& a : contract_addresses) contracts << a << '\n';
  auto truth = open_output(paths.ground_truth);
  truth << to_json(gt).dump(1) << '\n';
  if (!tx || !credits || !labels || !contracts || !truth) {
    throw Error(ErrorCode::IoError, "short write in '" + dir.string() + "'");
  }
  return paths;
}

// ---------------------------------------------------------------------------
// Closure-time script

struct ClosureScript {
  std::vector<TransactionRecord> records;  // time-sorted
  std::vector<Duration> planted_gaps;
  double planted_mean = 0.0;
};

// `triples` disjoint triangles a-b, b-c, c-a. The third pair of triple i
// connects planted_gaps[i] seconds after the second.
inline ClosureScript closure_script(std::size_t triples, std::uint64_t seed, Timestamp start = 1500000000) {
  Rng rng(seed);
  ClosureScript s;
  Duration sum = 0;
  std::uint64_t next_account = 0;
  std::uint64_t seq = 0;
  auto rec = [&](std::uint64_t from, std::uint64_t to, Timestamp t) {
    TransactionRecord r;
    r.block_id = static_cast<std::uint64_t>((t - start) / 15);
    r.tx_hash = detail::hex_bytes(mix64(seed ^ ++seq), 0, 0, 16);
    r.sender = AccountId::from_normalized(detail::account_address(seed, from, 7));
    r.receiver = AccountId::from_normalized(detail::account_address(seed, to, 7));
    r.value = kWeiPerEther;
    r.timestamp = t;
    return r;
  };
  for (std::size_t i = 0; i < triples; ++i) {
    const auto a = next_account++, b = next_account++, c = next_account++;
    const Timestamp base = start + static_cast<Timestamp>(i) * 10 * kSecondsPerDay;
    const auto first_gap = static_cast<Duration>(1 + rng.below(kSecondsPerDay));
    const auto gap = static_cast<Duration>(rng.below(5 * kSecondsPerDay));
    s.records.push_back(rec(a, b, base));
    s.records.push_back(rec(b, c, base + first_gap));
    s.records.push_back(rec(c, a, base + first_gap + gap));
    s.planted_gaps.push_back(gap);
    sum += gap;
  }
  if (triples > 0) s.planted_mean = static_cast<double>(sum) / static_cast<double>(triples);
  return s;
}

}  // namespace txgraph::synth
