#pragma once

#include "spotvol/types.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spotvol {

struct RawTrade {
  double time = 0.0;
  double price = 0.0;
  std::string exchange;
  std::string condition;
  bool corrected = false;
};

struct RawQuote {
  double time = 0.0;
  double bid = 0.0;
  double ask = 0.0;
  std::string exchange;
};

// Session-window, exchange, and sale-condition filters in the usual TAQ
// preprocessing order. The session window is closed on both ends. An empty
// whitelist disables the exchange rule. The condition blacklist ships a
// small default of plainly non-regular sale conditions and is fully
// configurable.
struct CleanConfig {
  double session_open = 34200.0;   // 09:30:00
  double session_close = 57600.0;  // 16:00:00
  std::vector<std::string> exchange_whitelist = {"N"};
  std::vector<std::string> condition_blacklist = {"B", "G", "J", "K", "L", "O", "T", "W", "Z"};
};

struct CleanAudit {
  long removed_session = 0;
  long removed_exchange = 0;
  long removed_condition = 0;  // abnormal condition or corrected price
  long unparseable = 0;
  long kept = 0;
};

std::vector<RawTrade> clean_trades(std::vector<RawTrade> records, const CleanConfig& cfg,
                                   CleanAudit& audit);
std::vector<RawQuote> clean_quotes(std::vector<RawQuote> records, const CleanConfig& cfg,
                                   CleanAudit& audit);

// Rewrites each maximal run of equal stamps onto the equispaced grid between
// the run's first stamp and the next distinct stamp. A trailing run has no
// following stamp and is spaced with the gap back to the previous distinct
// stamp (1 second when the whole stream shares one stamp). Output is strictly
// increasing; run-boundary stamps are preserved.
std::vector<double> despread_timestamps(std::span<const double> times);
void despread_timestamps(std::vector<RawTrade>& records);

struct MatchConfig {
  double latency_offset = 0.0;  // quote_time <= trade_time - offset
  double price_rel_tol = 1e-9;
};

struct MatchAudit {
  long matched = 0;
  long no_prior_quote = 0;
  long off_quote = 0;  // trade price equals neither bid nor ask

  long total() const { return matched + no_prior_quote + off_quote; }
  double unmatched_fraction() const;
};

// Attaches to each trade the most recent quote as of trade_time - offset and
// keeps only trades striking the bid or ask; the rest are counted, never
// fatal.
std::vector<TickObservation> match_quotes(std::span<const RawTrade> trades,
                                          std::span<const RawQuote> quotes,
                                          const MatchConfig& cfg, MatchAudit& audit);

// Seconds since midnight, either as a plain decimal or HH:MM:SS[.fff].
double parse_time_field(const std::string& field);

inline constexpr const char* kTradesCsvHeader = "time,price,exchange,cond,corr";
inline constexpr const char* kQuotesCsvHeader = "time,bid,ask,exchange";

// Validates the first line of a CSV stream against the expected header.
void expect_csv_header(std::istream& is, const char* expected, const char* who);

// Single-row parsers for streaming consumption; empty result marks a
// malformed row. Comment lines starting with '#' and blank lines also come
// back empty and should not be counted as malformed.
bool csv_row_is_skippable(const std::string& line);
std::optional<RawTrade> parse_trade_row(const std::string& line);
std::optional<RawQuote> parse_quote_row(const std::string& line);

// CSV input with required headers `time,price,exchange,cond,corr` and
// `time,bid,ask,exchange`. Malformed rows are skipped and counted.
std::vector<RawTrade> read_trades_csv(std::istream& is, long& unparseable);
std::vector<RawQuote> read_quotes_csv(std::istream& is, long& unparseable);

void write_trades_csv(std::ostream& os, std::span<const RawTrade> records);
void write_quotes_csv(std::ostream& os, std::span<const RawQuote> records);

// Trade rows from simulated or matched observations (quotes, if any, are
// written separately).
void write_ticks_as_trades_csv(std::ostream& os, std::span<const TickObservation> ticks);

std::string format_double(double v);  // 17 significant digits

}  // namespace spotvol
