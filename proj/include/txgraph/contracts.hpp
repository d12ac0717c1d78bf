#pragma once

// Contract lifecycle statistics: creations, calls and self-destructs split by
// the kind of account on the other side.

#include <algorithm>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "txgraph/graph.hpp"

namespace txgraph {

struct LifecycleStats {
  TimeWindow window;
  std::uint64_t created_by_eoa = 0;
  std::uint64_t created_by_contract = 0;
  std::uint64_t calls_by_eoa = 0;
  std::uint64_t calls_by_contract = 0;
  std::uint64_t distinct_called_contracts = 0;
  Wei call_value_by_eoa = 0;
  Wei call_value_by_contract = 0;
  std::uint64_t suicides_to_eoa = 0;
  std::uint64_t suicides_to_contract = 0;

  // Mean value per call in Wei, absent without calls.
  std::optional<Wei> avg_value_per_call_by_eoa() const {
    if (calls_by_eoa == 0) return std::nullopt;
    return call_value_by_eoa / calls_by_eoa;
  }
  std::optional<Wei> avg_value_per_call_by_contract() const {
    if (calls_by_contract == 0) return std::nullopt;
    return call_value_by_contract / calls_by_contract;
  }
};

namespace detail {
inline AccountKind checked_kind(const AccountRegistry& reg, AccountIndex a) {
  const auto k = reg.kind(a);
  if (k == AccountKind::Unknown) {
    throw Error(ErrorCode::UnclassifiedAccount,
                a < reg.accounts.size() ? reg.accounts.id(a).str() : std::to_string(a));
  }
  return k;
}
}  // namespace detail

// Creations and calls are split by initiator (sender) kind; a contract calling
// itself is a contract-initiated call. Suicides are split by beneficiary
// (receiver) kind as classified over the whole dataset.
inline LifecycleStats lifecycle_stats(std::span<const CompactRecord> records, const TimeWindow& window,
                                      const AccountRegistry& registry) {
  LifecycleStats s;
  s.window = window;
  std::unordered_set<AccountIndex> called;
  for (const auto& r : records) {
    if (!window.contains(r.timestamp)) continue;
    switch (r.kind) {
      case TxKind::Create:
        if (detail::checked_kind(registry, r.sender) == AccountKind::Contract) ++s.created_by_contract;
        else ++s.created_by_eoa;
        break;
      case TxKind::Call:
        called.insert(r.receiver);
        if (detail::checked_kind(registry, r.sender) == AccountKind::Contract) {
          ++s.calls_by_contract;
          s.call_value_by_contract += r.value;
        } else {
          ++s.calls_by_eoa;
          s.call_value_by_eoa += r.value;
        }
        break;
      case TxKind::Suicide:
        if (detail::checked_kind(registry, r.receiver) == AccountKind::Contract) ++s.suicides_to_contract;
        else ++s.suicides_to_eoa;
        break;
      case TxKind::Transfer: break;
    }
  }
  s.distinct_called_contracts = called.size();
  return s;
}

inline std::vector<LifecycleStats> lifecycle_stats(const RecordStore& store, std::span<const TimeWindow> windows,
                                                   const AccountRegistry& registry) {
  std::vector<LifecycleStats> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(lifecycle_stats(store.slice(w), w, registry));
  return out;
}

struct RankedContract {
  AccountIndex account = 0;
  std::uint64_t calls = 0;
  Label label = Label::Ordinary;
};

// Top-k receivers of Call records, by count descending, ties by address.
inline std::vector<RankedContract> top_contracts(std::span<const CompactRecord> records, std::size_t k,
                                                 const AccountRegistry& registry) {
  if (k == 0) throw Error(ErrorCode::ConfigError, "top_contracts needs k >= 1");
  std::unordered_map<AccountIndex, std::uint64_t> calls;
  for (const auto& r : records) {
    if (r.kind == TxKind::Call) ++calls[r.receiver];
  }
  std::vector<RankedContract> ranked;
  ranked.reserve(calls.size());
  for (const auto& [a, c] : calls) ranked.push_back({a, c, registry.label(a)});
  auto by_rank = [&](const RankedContract& x, const RankedContract& y) {
    if (x.calls != y.calls) return x.calls > y.calls;
    return registry.accounts.id(x.account) < registry.accounts.id(y.account);
  };
  const auto keep = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), by_rank);
  ranked.resize(keep);
  return ranked;
}

}  // namespace txgraph
