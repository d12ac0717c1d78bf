#pragma once

// Domain types shared by every txgraph module: account ids, Wei arithmetic,
// record and window types, and the error type thrown across the library.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace txgraph {

enum class ErrorCode {
  MalformedAddress,
  MalformedNumber,
  UnknownFormat,
  SchemaViolation,
  DuplicateLabel,
  UnknownLabelName,
  NonMonotoneTimestamps,
  NegativePrice,
  EmptyRange,
  UnclassifiedAccount,
  DegenerateInput,
  ZeroVariance,
  LengthMismatch,
  NoTriplets,
  TooFewTransactions,
  ZeroLifetime,
  TooFewIntervals,
  AllZeroIntervals,
  ClassTooSmall,
  EmptyInput,
  ZeroSum,
  NegativeBalance,
  UnsortedInput,
  EmptyIntersection,
  NoOverlap,
  InfeasibleConfig,
  ConfigError,
  IoError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedAddress: return "MalformedAddress";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::UnknownLabelName: return "UnknownLabelName";
    case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::NegativePrice: return "NegativePrice";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::UnclassifiedAccount: return "UnclassifiedAccount";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoTriplets: return "NoTriplets";
    case ErrorCode::TooFewTransactions: return "TooFewTransactions";
    case ErrorCode::ZeroLifetime: return "ZeroLifetime";
    case ErrorCode::TooFewIntervals: return "TooFewIntervals";
    case ErrorCode::AllZeroIntervals: return "AllZeroIntervals";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ZeroSum: return "ZeroSum";
    case ErrorCode::NegativeBalance: return "NegativeBalance";
    case ErrorCode::UnsortedInput: return "UnsortedInput";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::InfeasibleConfig: return "InfeasibleConfig";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Wei amounts. Chain-wide totals exceed 2^64, so everything is 128-bit.

__extension__ typedef unsigned __int128 Wei;
__extension__ typedef __int128 SignedWei;

inline constexpr Wei kWeiPerEther = static_cast<Wei>(1'000'000'000'000'000'000ULL);

inline std::string to_string(Wei v) {
  if (v == 0) return "0";
  char buf[48];
  int pos = sizeof(buf);
  while (v > 0) {
    buf[--pos] = static_cast<char>('0' + static_cast<int>(v % 10));
    v /= 10;
  }
  return std::string(buf + pos, buf + sizeof(buf));
}

inline std::string to_string_signed(SignedWei v) {
  if (v < 0) return "-" + to_string(static_cast<Wei>(-v));
  return to_string(static_cast<Wei>(v));
}

// Parses a base-10 unsigned amount. Leading '+' and '-' are rejected; the caller
// decides how a negative amount is reported.
inline std::optional<Wei> parse_wei(std::string_view s) {
  if (s.empty() || s.size() > 39) return std::nullopt;
  Wei v = 0;
  constexpr Wei kMax = ~static_cast<Wei>(0);
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    const auto digit = static_cast<Wei>(c - '0');
    if (v > (kMax - digit) / 10) return std::nullopt;
    v = v * 10 + digit;
  }
  return v;
}

inline double to_double(Wei v) { return static_cast<double>(static_cast<long double>(v)); }
inline double to_double(SignedWei v) { return static_cast<double>(static_cast<long double>(v)); }

// Exact fixed-point Ether amount: whole ether plus the remaining Wei (< 10^18).
struct EtherAmount {
  Wei whole = 0;
  std::uint64_t frac_wei = 0;

  // Decimal rendering with trailing zeros trimmed, always at least one
  // fractional digit: 10^18 Wei -> "1.0", 5*10^17 -> "0.5".
  std::string to_string() const {
    std::string frac = std::to_string(frac_wei);
    frac.insert(0, 18 - frac.size(), '0');
    while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
    return txgraph::to_string(whole) + "." + frac;
  }

  friend bool operator==(const EtherAmount&, const EtherAmount&) = default;
};

inline EtherAmount wei_to_ether(Wei v) {
  return {v / kWeiPerEther, static_cast<std::uint64_t>(v % kWeiPerEther)};
}

// ---------------------------------------------------------------------------
// Accounts

// Canonical account address: "0x" followed by 40 lowercase hex digits.
class AccountId {
 public:
  AccountId() = default;

  static AccountId from_normalized(std::string s) {
    AccountId id;
    id.value_ = std::move(s);
    return id;
  }

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const AccountId&, const AccountId&) = default;

 private:
  std::string value_;
};

inline constexpr std::size_t kAddressHexDigits = 40;

inline AccountId normalize_address(std::string_view raw) {
  std::size_t offset = 0;
  if (raw.size() >= 2 && raw[0] == '0' && (raw[1] == 'x' || raw[1] == 'X')) offset = 2;
  const std::string_view hex = raw.substr(offset);
  if (hex.size() != kAddressHexDigits) {
    throw Error(ErrorCode::MalformedAddress,
                "expected " + std::to_string(kAddressHexDigits) + " hex digits, got " +
                    std::to_string(hex.size()) + " in '" + std::string(raw) + "'");
  }
  std::string out = "0x";
  out.reserve(2 + kAddressHexDigits);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const char c = hex[i];
    if (c >= '0' && c <= '9') {
      out.push_back(c);
    } else if (c >= 'a' && c <= 'f') {
      out.push_back(c);
    } else if (c >= 'A' && c <= 'F') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      throw Error(ErrorCode::MalformedAddress, "invalid hex character at position " +
                                                   std::to_string(offset + i) + " in '" +
                                                   std::string(raw) + "'");
    }
  }
  return AccountId::from_normalized(std::move(out));
}

enum class AccountKind : std::uint8_t { Unknown, EOA, Contract };

inline const char* to_string(AccountKind k) {
  switch (k) {
    case AccountKind::EOA: return "eoa";
    case AccountKind::Contract: return "contract";
    case AccountKind::Unknown: break;
  }
  return "unknown";
}

enum class TxKind : std::uint8_t { Transfer, Create, Call, Suicide };

inline const char* to_string(TxKind k) {
  switch (k) {
    case TxKind::Transfer: return "transfer";
    case TxKind::Create: return "create";
    case TxKind::Call: return "call";
    case TxKind::Suicide: return "suicide";
  }
  return "transfer";
}

inline std::optional<TxKind> parse_tx_kind(std::string_view s) {
  if (s == "transfer") return TxKind::Transfer;
  if (s == "create") return TxKind::Create;
  if (s == "call") return TxKind::Call;
  if (s == "suicide") return TxKind::Suicide;
  return std::nullopt;
}

enum class Label : std::uint8_t { Ordinary, Exchange, MiningPool, Donation, IcoWallet, Phishing, Ponzi };

inline constexpr std::array<Label, 7> kAllLabels = {Label::Ordinary, Label::Exchange, Label::MiningPool,
                                                   Label::Donation, Label::IcoWallet, Label::Phishing,
                                                   Label::Ponzi};

inline const char* to_string(Label l) {
  switch (l) {
    case Label::Ordinary: return "ordinary";
    case Label::Exchange: return "exchange";
    case Label::MiningPool: return "mining_pool";
    case Label::Donation: return "donation";
    case Label::IcoWallet: return "ico_wallet";
    case Label::Phishing: return "phishing";
    case Label::Ponzi: return "ponzi";
  }
  return "ordinary";
}

inline std::optional<Label> parse_label(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::erase(lower, '-');
  std::erase(lower, '_');
  std::erase(lower, ' ');
  if (lower == "ordinary" || lower == "normal") return Label::Ordinary;
  if (lower == "exchange") return Label::Exchange;
  if (lower == "miningpool" || lower == "mining") return Label::MiningPool;
  if (lower == "donation") return Label::Donation;
  if (lower == "icowallet" || lower == "ico") return Label::IcoWallet;
  if (lower == "phishing" || lower == "phish") return Label::Phishing;
  if (lower == "ponzi") return Label::Ponzi;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Records, windows, series

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;
using Duration = std::int64_t;

inline constexpr Duration kSecondsPerHour = 3600;
inline constexpr Duration kSecondsPerDay = 86400;

struct TransactionRecord {
  std::uint64_t block_id = 0;
  std::string tx_hash;
  AccountId sender;
  AccountId receiver;
  Wei value = 0;
  Timestamp timestamp = 0;
  TxKind kind = TxKind::Transfer;
  bool internal = false;

  friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

enum class WindowScheme : std::uint8_t { Sliding, Incremental };

inline const char* to_string(WindowScheme s) {
  return s == WindowScheme::Sliding ? "sliding" : "incremental";
}

// Half-open interval [start, end).
struct TimeWindow {
  std::size_t index = 0;
  Timestamp start = 0;
  Timestamp end = 0;
  WindowScheme scheme = WindowScheme::Sliding;

  bool contains(Timestamp t) const noexcept { return start <= t && t < end; }
  Duration width() const noexcept { return end - start; }

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct PricePoint {
  Timestamp timestamp = 0;
  double price = 0.0;
};

struct PriceSeries {
  std::vector<PricePoint> points;
};

struct LabelMap {
  std::map<AccountId, Label> entries;

  Label lookup(const AccountId& id) const {
    auto it = entries.find(id);
    return it == entries.end() ? Label::Ordinary : it->second;
  }
};

}  // namespace txgraph
