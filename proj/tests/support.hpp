#pragma once

// Record builders shared by the unit tests.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "txgraph/graph.hpp"
#include "txgraph/ingest.hpp"

namespace txtest {

using namespace txgraph;

// Per-process scratch directory; ctest runs test cases in parallel processes.
inline std::filesystem::path scratch_dir(const std::string& name) {
  return std::filesystem::temp_directory_path() / (name + "_" + std::to_string(::getpid()));
}

inline std::string addr(unsigned i) {
  char buf[43];
  std::snprintf(buf, sizeof(buf), "0x%040x", i);
  return buf;
}

inline AccountId id(unsigned i) { return AccountId::from_normalized(addr(i)); }

inline TransactionRecord tx(unsigned from, unsigned to, Timestamp t, Wei value = 1, TxKind kind = TxKind::Transfer,
                            std::uint64_t block = 0) {
  TransactionRecord r;
  r.block_id = block;
  r.tx_hash = "0x" + std::to_string(t) + "_" + std::to_string(from) + "_" + std::to_string(to);
  r.sender = id(from);
  r.receiver = id(to);
  r.value = value;
  r.timestamp = t;
  r.kind = kind;
  return r;
}

inline std::string csv_line(const TransactionRecord& r) {
  return std::to_string(r.block_id) + "," + r.tx_hash + "," + r.sender.str() + "," + r.receiver.str() + "," +
         to_string(r.value) + "," + std::to_string(r.timestamp) + "," + to_string(r.kind) + "," +
         (r.internal ? "1" : "0");
}

inline std::string csv_file(const std::vector<TransactionRecord>& rs) {
  std::string out(kTransactionsHeader);
  out += '\n';
  for (const auto& r : rs) out += csv_line(r) + "\n";
  return out;
}

// Store plus registry in which every account is classified by behavior.
struct Fixture {
  RecordStore store;
  AccountRegistry registry;
};

inline Fixture fixture(const std::vector<TransactionRecord>& rs, std::span<const DeclaredAccount> declared = {}) {
  Fixture f;
  f.store = record_store_from(rs);
  f.registry = classify_accounts(f.store, declared);
  return f;
}

inline TimeWindow window(Timestamp start, Timestamp end, std::size_t index = 0) {
  return {index, start, end, WindowScheme::Sliding};
}

inline AccountIndex index_of(const Fixture& f, unsigned i) { return *f.store.accounts.find(id(i)); }

}  // namespace txtest
