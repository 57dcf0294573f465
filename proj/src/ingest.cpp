#include "spotvol/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spotvol {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_time_field(const std::string& field) {
  if (field.empty()) throw std::invalid_argument("parse_time_field: empty field");
  if (field.find(':') == std::string::npos) {
    std::size_t pos = 0;
    const double t = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument("parse_time_field: trailing characters");
    return t;
  }
  int h = 0, m = 0;
  double s = 0.0;
  char dummy = 0;
  const int got = std::sscanf(field.c_str(), "%d:%d:%lf%c", &h, &m, &s, &dummy);
  if (got != 3 || h < 0 || h > 23 || m < 0 || m > 59 || s < 0.0 || s >= 60.0)
    throw std::invalid_argument("parse_time_field: expected HH:MM:SS[.fff]");
  return h * 3600.0 + m * 60.0 + s;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

bool contains(const std::vector<std::string>& list, const std::string& v) {
  return std::find(list.begin(), list.end(), v) != list.end();
}

template <class Rec>
void stable_sort_by_time(std::vector<Rec>& records) {
  if (!std::is_sorted(records.begin(), records.end(),
                      [](const Rec& a, const Rec& b) { return a.time < b.time; }))
    std::stable_sort(records.begin(), records.end(),
                     [](const Rec& a, const Rec& b) { return a.time < b.time; });
}

}  // namespace

void expect_csv_header(std::istream& is, const char* expected, const char* who) {
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error(std::string(who) + ": empty input");
  if (split_csv_line(line) != split_csv_line(expected))
    throw std::runtime_error(std::string(who) + ": expected header `" + expected + "`");
}

bool csv_row_is_skippable(const std::string& line) {
  return line.empty() || line[0] == '#' || line == "\r";
}

std::optional<RawTrade> parse_trade_row(const std::string& line) {
  const auto f = split_csv_line(line);
  try {
    if (f.size() != 5) return std::nullopt;
    RawTrade r;
    r.time = parse_time_field(f[0]);
    r.price = std::stod(f[1]);
    r.exchange = f[2];
    r.condition = f[3];
    r.corrected = std::stol(f[4]) != 0;
    if (!std::isfinite(r.time) || !(r.price > 0.0) || !std::isfinite(r.price))
      return std::nullopt;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<RawQuote> parse_quote_row(const std::string& line) {
  const auto f = split_csv_line(line);
  try {
    if (f.size() != 4) return std::nullopt;
    RawQuote r;
    r.time = parse_time_field(f[0]);
    r.bid = std::stod(f[1]);
    r.ask = std::stod(f[2]);
    r.exchange = f[3];
    if (!std::isfinite(r.time) || !std::isfinite(r.bid) || !std::isfinite(r.ask))
      return std::nullopt;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<RawTrade> read_trades_csv(std::istream& is, long& unparseable) {
  expect_csv_header(is, kTradesCsvHeader, "read_trades_csv");
  std::vector<RawTrade> out;
  std::string line;
  while (std::getline(is, line)) {
    if (csv_row_is_skippable(line)) continue;
    if (auto r = parse_trade_row(line))
      out.push_back(std::move(*r));
    else
      ++unparseable;
  }
  return out;
}

std::vector<RawQuote> read_quotes_csv(std::istream& is, long& unparseable) {
  expect_csv_header(is, kQuotesCsvHeader, "read_quotes_csv");
  std::vector<RawQuote> out;
  std::string line;
  while (std::getline(is, line)) {
    if (csv_row_is_skippable(line)) continue;
    if (auto r = parse_quote_row(line))
      out.push_back(std::move(*r));
    else
      ++unparseable;
  }
  return out;
}

void write_trades_csv(std::ostream& os, std::span<const RawTrade> records) {
  os << kTradesCsvHeader << '\n';
  for (const auto& r : records)
    os << format_double(r.time) << ',' << format_double(r.price) << ',' << r.exchange << ','
       << r.condition << ',' << (r.corrected ? 1 : 0) << '\n';
}

void write_quotes_csv(std::ostream& os, std::span<const RawQuote> records) {
  os << kQuotesCsvHeader << '\n';
  for (const auto& r : records)
    os << format_double(r.time) << ',' << format_double(r.bid) << ',' << format_double(r.ask)
       << ',' << r.exchange << '\n';
}

void write_ticks_as_trades_csv(std::ostream& os, std::span<const TickObservation> ticks) {
  os << kTradesCsvHeader << '\n';
  for (const auto& t : ticks)
    os << format_double(t.time) << ',' << format_double(t.price) << ','
       << (t.exchange.empty() ? "SIM" : t.exchange) << ',' << t.condition << ",0\n";
}

std::vector<RawTrade> clean_trades(std::vector<RawTrade> records, const CleanConfig& cfg,
                                   CleanAudit& audit) {
  stable_sort_by_time(records);
  std::vector<RawTrade> out;
  out.reserve(records.size());
  for (auto& r : records) {
    if (r.time < cfg.session_open || r.time > cfg.session_close) {
      ++audit.removed_session;
      continue;
    }
    if (!cfg.exchange_whitelist.empty() && !contains(cfg.exchange_whitelist, r.exchange)) {
      ++audit.removed_exchange;
      continue;
    }
    if (r.corrected || contains(cfg.condition_blacklist, r.condition)) {
      ++audit.removed_condition;
      continue;
    }
    ++audit.kept;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawQuote> clean_quotes(std::vector<RawQuote> records, const CleanConfig& cfg,
                                   CleanAudit& audit) {
  stable_sort_by_time(records);
  std::vector<RawQuote> out;
  out.reserve(records.size());
  for (auto& r : records) {
    if (r.time < cfg.session_open || r.time > cfg.session_close) {
      ++audit.removed_session;
      continue;
    }
    if (!cfg.exchange_whitelist.empty() && !contains(cfg.exchange_whitelist, r.exchange)) {
      ++audit.removed_exchange;
      continue;
    }
    if (!(r.bid > 0.0) || !(r.ask > r.bid)) {
      ++audit.removed_condition;
      continue;
    }
    ++audit.kept;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<double> despread_timestamps(std::span<const double> times) {
  std::vector<double> out(times.begin(), times.end());
  const std::size_t n = out.size();
  for (std::size_t i = 1; i < n; ++i)
    if (out[i] < out[i - 1])
      throw std::invalid_argument("despread_timestamps: input must be sorted");

  double prev_distinct = 0.0;
  bool have_prev = false;
  std::size_t j = 0;
  while (j < n) {
    std::size_t k = j + 1;
    while (k < n && times[k] == times[j]) ++k;
    if (k - j > 1) {
      double t_next;
      if (k < n) {
        t_next = times[k];
      } else {
        const double gap = have_prev ? times[j] - prev_distinct : 1.0;
        t_next = times[j] + gap;
      }
      const double base = times[j];
      const double step = (t_next - base) / static_cast<double>(k - j);
      for (std::size_t l = j; l < k; ++l)
        out[l] = base + static_cast<double>(l - j) * step;
    }
    prev_distinct = times[j];
    have_prev = true;
    j = k;
  }
  return out;
}

void despread_timestamps(std::vector<RawTrade>& records) {
  std::vector<double> times(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) times[i] = records[i].time;
  const std::vector<double> fixed = despread_timestamps(times);
  for (std::size_t i = 0; i < records.size(); ++i) records[i].time = fixed[i];
}

double MatchAudit::unmatched_fraction() const {
  const long t = total();
  return t == 0 ? 0.0 : static_cast<double>(no_prior_quote + off_quote) / static_cast<double>(t);
}

std::vector<TickObservation> match_quotes(std::span<const RawTrade> trades,
                                          std::span<const RawQuote> quotes,
                                          const MatchConfig& cfg, MatchAudit& audit) {
  for (std::size_t i = 1; i < quotes.size(); ++i)
    if (quotes[i].time < quotes[i - 1].time)
      throw std::invalid_argument("match_quotes: quotes must be sorted");

  std::vector<TickObservation> out;
  out.reserve(trades.size());
  for (const auto& tr : trades) {
    const double cutoff = tr.time - cfg.latency_offset;
    // Most recent quote with quote_time <= cutoff.
    auto it = std::upper_bound(quotes.begin(), quotes.end(), cutoff,
                               [](double t, const RawQuote& q) { return t < q.time; });
    if (it == quotes.begin()) {
      ++audit.no_prior_quote;
      continue;
    }
    const RawQuote& q = *(it - 1);
    const double tol = cfg.price_rel_tol * std::max(1.0, std::abs(tr.price));
    const bool at_bid = std::abs(tr.price - q.bid) <= tol;
    const bool at_ask = std::abs(tr.price - q.ask) <= tol;
    if (!at_bid && !at_ask) {
      ++audit.off_quote;
      continue;
    }
    TickObservation obs;
    obs.time = tr.time;
    obs.price = tr.price;
    obs.bid = q.bid;
    obs.ask = q.ask;
    obs.exchange = tr.exchange;
    obs.condition = tr.condition;
    out.push_back(std::move(obs));
    ++audit.matched;
  }
  return out;
}

}  // namespace spotvol
