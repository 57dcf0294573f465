#include "spotvol/ingest.hpp"
#include "spotvol/pipeline.hpp"
#include "spotvol/simulator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace spotvol;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

// Grid syntax: either a comma list "0.1,0.01" or "first:last:15lin" /
// "first:last:15log" for an evenly or geometrically spaced grid.
std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> grid;
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw CLI::ValidationError("grid", "expected first:last:COUNT{lin|log}");
    const double a = std::stod(parts[0]);
    const double b = std::stod(parts[1]);
    std::size_t pos = 0;
    const long k = std::stol(parts[2], &pos);
    const std::string scale = parts[2].substr(pos);
    if (k < 1 || (scale != "lin" && scale != "log" && !scale.empty()))
      throw CLI::ValidationError("grid", "count must be a positive integer with lin or log suffix");
    if (k == 1) return {a};
    for (long i = 0; i < k; ++i) {
      const double w = static_cast<double>(i) / static_cast<double>(k - 1);
      if (scale == "log") {
        if (!(a > 0.0 && b > 0.0))
          throw CLI::ValidationError("grid", "log spacing needs positive endpoints");
        grid.push_back(std::exp(std::log(a) + w * (std::log(b) - std::log(a))));
      } else {
        grid.push_back(a + w * (b - a));
      }
    }
  } else {
    for (const auto& p : split(s, ',')) grid.push_back(std::stod(p));
  }
  if (grid.empty()) throw CLI::ValidationError("grid", "empty grid");
  return grid;
}

VolCurve parse_vol_curve(const std::string& s) {
  const auto head = s.find(':');
  if (head == std::string::npos)
    throw CLI::ValidationError("vol-curve", "expected KIND:ARGS");
  const std::string kind = s.substr(0, head);
  const std::string rest = s.substr(head + 1);
  const auto args = split(rest, ',');
  const auto need = [&](std::size_t n) {
    if (args.size() != n)
      throw CLI::ValidationError("vol-curve", kind + " takes " + std::to_string(n) + " arguments");
  };
  if (kind == "constant") {
    need(1);
    return VolCurve::constant(std::stod(args[0]));
  }
  if (kind == "sinusoid") {
    need(3);
    return VolCurve::sinusoid(std::stod(args[0]), std::stod(args[1]), std::stod(args[2]));
  }
  if (kind == "ushape") {
    need(3);
    return VolCurve::ushape(std::stod(args[0]), std::stod(args[1]), std::stod(args[2]));
  }
  if (kind == "piecewise") {
    std::vector<std::pair<double, double>> knots;
    for (const auto& kv : split(rest, ';')) {
      const auto uv = split(kv, ',');
      if (uv.size() != 2) throw CLI::ValidationError("vol-curve", "piecewise knots are u,v pairs");
      knots.emplace_back(std::stod(uv[0]), std::stod(uv[1]));
    }
    return VolCurve::piecewise_linear(std::move(knots));
  }
  throw CLI::ValidationError("vol-curve", "unknown curve kind `" + kind + "`");
}

ArrivalModel parse_arrivals(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts[0] == "equispaced" && parts.size() == 2)
    return ArrivalModel::equispaced(std::stod(parts[1]));
  if (parts[0] == "poisson" && parts.size() == 2)
    return ArrivalModel::poisson(std::stod(parts[1]));
  if (parts[0] == "inhom-ushape" && parts.size() == 3) {
    const auto omc = split(parts[1], ',');
    if (omc.size() != 3)
      throw CLI::ValidationError("arrivals", "inhom-ushape takes open,mid,close:session");
    return ArrivalModel::inhom_poisson(
        VolCurve::ushape(std::stod(omc[0]), std::stod(omc[1]), std::stod(omc[2])),
        std::stod(parts[2]));
  }
  throw CLI::ValidationError(
      "arrivals", "expected equispaced:DT, poisson:RATE, or inhom-ushape:O,M,C:SESSION");
}

NoiseConfig::Kind parse_noise_kind(const std::string& s, bool for_estimate) {
  if (s == "det") return NoiseConfig::Kind::SimpleDeterministic;
  if (s == "stoch") return NoiseConfig::Kind::SimpleStochastic;
  if (s == "mm") return NoiseConfig::Kind::MarketMakerQuotes;
  if (s == "book") {
    if (for_estimate)
      throw CLI::ValidationError(
          "noise", "the trade CSV carries no book levels; order-book estimation runs through "
                   "the library interface");
    return NoiseConfig::Kind::OrderBook;
  }
  if (s == "spread") {
    if (!for_estimate)
      throw CLI::ValidationError("noise", "spread estimation applies on the estimation side; "
                                          "simulate with det, stoch, book, or mm");
    return NoiseConfig::Kind::SpreadEstimate;
  }
  throw CLI::ValidationError("noise", "unknown noise model `" + s + "`");
}

class OutputFile {
 public:
  explicit OutputFile(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file `" + path + "`");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open input file `" + path + "`");
  return in;
}

std::string mode_column_tag(EstimatorMode mode) {
  std::string tag = estimator_mode_name(mode);
  std::replace(tag.begin(), tag.end(), '-', '_');
  return tag;
}

struct SimulateArgs {
  std::string out;
  std::string truth_out;
  std::string quotes_out;
  long ticks = 5000;
  double p0 = 50.0;
  double p0_halfwidth = 0.005;
  double sigma2 = 1e-8;
  std::string vol_curve;
  std::string arrivals = "equispaced:1";
  std::string mode = "txn";
  std::string noise = "det";
  double tick = 0.01;
  int book_depth = 5;
  double t0 = 34200.0;
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  PathConfig pc;
  pc.T = a.ticks;
  pc.p0 = a.p0;
  pc.p0_halfwidth = a.p0_halfwidth;
  pc.vol = a.vol_curve.empty() ? VolCurve::constant(a.sigma2) : parse_vol_curve(a.vol_curve);
  pc.arrivals = parse_arrivals(a.arrivals);
  if (a.mode != "txn" && a.mode != "clock")
    throw std::runtime_error("simulate: mode must be txn or clock");
  pc.mode = a.mode == "clock" ? TimeMode::ClockTime : TimeMode::TransactionTime;
  pc.t0 = a.t0;

  const LatentPath path = gen_path(pc, a.seed);

  SimNoise noise;
  noise.kind = parse_noise_kind(a.noise, false);
  noise.tick = a.tick;
  noise.book_depth = a.book_depth;
  const std::vector<TickObservation> ticks = apply_noise(path, noise, a.seed);

  OutputFile out(a.out);
  write_ticks_as_trades_csv(out.stream(), ticks);

  if (!a.truth_out.empty()) {
    OutputFile tf(a.truth_out);
    std::ostream& os = tf.stream();
    os << "time,x,sigma2\n";
    const double span = path.times.back() - path.times.front();
    for (std::size_t j = 0; j < path.x.size(); ++j) {
      double var;
      if (pc.mode == TimeMode::TransactionTime) {
        var = pc.vol(static_cast<double>(j) / static_cast<double>(pc.T - 1));
      } else {
        const double u = span > 0.0 ? (path.times[j] - path.times.front()) / span : 0.0;
        var = pc.vol(u);
      }
      os << format_double(path.times[j]) << ',' << format_double(path.x[j]) << ','
         << format_double(var) << '\n';
    }
  }

  if (!a.quotes_out.empty()) {
    if (noise.kind != NoiseConfig::Kind::MarketMakerQuotes)
      throw std::runtime_error("simulate: --quotes-out needs --noise mm");
    std::vector<RawQuote> quotes(ticks.size());
    for (std::size_t j = 0; j < ticks.size(); ++j) {
      quotes[j].time = ticks[j].time;
      quotes[j].bid = *ticks[j].bid;
      quotes[j].ask = *ticks[j].ask;
      quotes[j].exchange = "SIM";
    }
    OutputFile qf(a.quotes_out);
    write_quotes_csv(qf.stream(), quotes);
  }
  return 0;
}

struct CleanArgs {
  std::string trades;
  std::string quotes;
  std::string out = "-";
  std::string quotes_out;
  double session_open = 34200.0;
  double session_close = 57600.0;
  std::string exchanges = "N";
  std::string conditions = "B,G,J,K,L,O,T,W,Z";
  bool keep_timestamps = false;
};

int cmd_clean(const CleanArgs& a) {
  CleanConfig cfg;
  cfg.session_open = a.session_open;
  cfg.session_close = a.session_close;
  cfg.exchange_whitelist.clear();
  for (const auto& e : split(a.exchanges, ','))
    if (!e.empty()) cfg.exchange_whitelist.push_back(e);
  cfg.condition_blacklist.clear();
  for (const auto& c : split(a.conditions, ','))
    if (!c.empty()) cfg.condition_blacklist.push_back(c);

  auto in = open_input(a.trades);
  CleanAudit audit;
  std::vector<RawTrade> trades = read_trades_csv(in, audit.unparseable);
  trades = clean_trades(std::move(trades), cfg, audit);
  if (!a.keep_timestamps) despread_timestamps(trades);

  OutputFile out(a.out);
  write_trades_csv(out.stream(), trades);
  std::cerr << "# trades kept=" << audit.kept << " removed_session=" << audit.removed_session
            << " removed_exchange=" << audit.removed_exchange
            << " removed_condition=" << audit.removed_condition
            << " unparseable=" << audit.unparseable << "\n";

  if (!a.quotes.empty()) {
    auto qin = open_input(a.quotes);
    CleanAudit qaudit;
    std::vector<RawQuote> quotes = read_quotes_csv(qin, qaudit.unparseable);
    quotes = clean_quotes(std::move(quotes), cfg, qaudit);
    OutputFile qf(a.quotes_out.empty() ? "-" : a.quotes_out);
    write_quotes_csv(qf.stream(), quotes);
    std::cerr << "# quotes kept=" << qaudit.kept << " removed_session=" << qaudit.removed_session
              << " removed_exchange=" << qaudit.removed_exchange
              << " removed_invalid=" << qaudit.removed_condition
              << " unparseable=" << qaudit.unparseable << "\n";
  }
  return 0;
}

struct EstimateArgs {
  std::string in;
  std::string quotes;
  std::string truth;
  std::string out = "-";
  std::string noise = "det";
  double tick = 0.01;
  std::string mode;
  int n_particles = 500;
  double ess_c = 0.2;
  int k_lag = 1;
  int threads = 1;
  double gamma = 0.9;
  double lambda0 = 1.0;
  std::optional<double> lambda;
  double lambda_dur = 0.1025;
  std::optional<double> sigma2_init;
  std::string sages_grid;
  std::string kappa_file;
  double kappa_sigma2_null = 1e-8;
  double latency_offset = 0.0;
  std::uint64_t seed = 0;
};

void write_estimate_row(std::ostream& os, const StepRecord& rec, bool with_clock_col) {
  os << format_double(rec.time) << ',' << rec.j << ',' << format_double(rec.price) << ','
     << format_double(rec.sigma2_hat);
  if (with_clock_col) os << ',' << format_double(rec.sigma2_c_hat.value_or(0.0));
  os << ',' << format_double(rec.ess) << ',' << (rec.resampled ? 1 : 0) << ','
     << (rec.diverged ? 1 : 0) << '\n';
}

int cmd_estimate(const EstimateArgs& a) {
  const auto mode = parse_estimator_mode(a.mode);
  if (!mode) throw std::runtime_error("estimate: unknown mode `" + a.mode + "`");

  NoiseConfig noise;
  noise.kind = parse_noise_kind(a.noise, true);
  noise.tick = a.tick;

  FilterConfig fc;
  fc.n_particles = a.n_particles;
  fc.ess_c = a.ess_c;
  fc.k_lag = a.k_lag;
  fc.threads = a.threads;
  fc.seed = a.seed;

  EstimatorConfig ec;
  ec.mode = *mode;
  ec.gamma = a.gamma;
  ec.lambda0 = a.lambda0;
  ec.lambda = a.lambda;
  ec.lambda_dur = a.lambda_dur;
  ec.sigma2_init = a.sigma2_init;
  if (!a.sages_grid.empty()) ec.sages_lambdas = parse_grid(a.sages_grid);
  if (*mode == EstimatorMode::TvSages) {
    if (a.kappa_file.empty())
      throw std::runtime_error("estimate: tv-sages needs --kappa-file (run `calibrate kappa`)");
    SagesConfig probe;
    probe.lambdas = ec.sages_lambdas.empty() ? sages_default_grid(15, 0.05, 0.00005)
                                             : ec.sages_lambdas;
    auto kf = open_input(a.kappa_file);
    ec.sages_kappas =
        read_kappa_file(kf, probe.config_hash(a.kappa_sigma2_null, fc.n_particles));
  }

  const bool mm = noise.kind == NoiseConfig::Kind::MarketMakerQuotes;
  std::vector<RawQuote> quote_book;
  if (mm) {
    if (a.quotes.empty()) throw std::runtime_error("estimate: mm noise needs --quotes");
    auto qin = open_input(a.quotes);
    long bad = 0;
    quote_book = read_quotes_csv(qin, bad);
    if (quote_book.empty()) throw std::runtime_error("estimate: quote file has no usable rows");
  }

  const bool oracle = *mode == EstimatorMode::Oracle;
  std::ifstream truth_in;
  if (oracle) {
    if (a.truth.empty())
      throw std::runtime_error("estimate: oracle mode needs --truth with the simulated latent path");
    truth_in = open_input(a.truth);
    expect_csv_header(truth_in, "time,x,sigma2", "estimate");
  }

  auto in = open_input(a.in);
  expect_csv_header(in, kTradesCsvHeader, "estimate");

  OutputFile out(a.out);
  std::ostream& os = out.stream();
  const bool with_clock_col = *mode == EstimatorMode::ClockAlt;
  os << "time,j,price,sigma2_hat_" << mode_column_tag(*mode);
  if (with_clock_col) os << ",sigma2_c_hat";
  os << ",ess,resampled,diverged\n";

  Pipeline pipeline(noise, fc, ec, true);
  MatchConfig mcfg;
  mcfg.latency_offset = a.latency_offset;
  MatchAudit maudit;
  long unparseable = 0;

  std::string line;
  std::string truth_line;
  while (std::getline(in, line)) {
    if (csv_row_is_skippable(line)) continue;
    const auto trade = parse_trade_row(line);
    if (!trade) {
      ++unparseable;
      continue;
    }
    std::optional<double> truth_x;
    if (oracle) {
      do {
        if (!std::getline(truth_in, truth_line))
          throw std::runtime_error("estimate: truth file ended before the trade stream");
      } while (csv_row_is_skippable(truth_line));
      const auto f = split(truth_line, ',');
      if (f.size() != 3) throw std::runtime_error("estimate: malformed truth row");
      truth_x = std::stod(f[1]);
    }

    TickObservation obs;
    if (mm) {
      const auto matched = match_quotes(std::span<const RawTrade>(&*trade, 1), quote_book, mcfg,
                                        maudit);
      if (matched.empty()) continue;
      obs = matched.front();
    } else {
      obs.time = trade->time;
      obs.price = trade->price;
      obs.exchange = trade->exchange;
      obs.condition = trade->condition;
    }
    if (const auto rec = pipeline.push(obs, truth_x ? &*truth_x : nullptr))
      write_estimate_row(os, *rec, with_clock_col);
  }

  const RunStats& st = pipeline.stats();
  os << "# ticks=" << st.ticks_in << " updates=" << st.updates << " resamples=" << st.resamples
     << " divergences=" << st.divergences << " unparseable=" << unparseable;
  if (mm)
    os << " quote_matched=" << maudit.matched << " no_prior_quote=" << maudit.no_prior_quote
       << " off_quote=" << maudit.off_quote;
  os << "\n";
  if (st.timed_updates > 0) {
    std::vector<double> ns = st.update_ns;
    std::nth_element(ns.begin(), ns.begin() + static_cast<std::ptrdiff_t>(ns.size() / 2),
                     ns.end());
    const double median_ms = ns[ns.size() / 2] / 1e6;
    const double mean_ms = st.update_ns_total / static_cast<double>(st.timed_updates) / 1e6;
    os << "# update_wall_ms median=" << format_double(median_ms)
       << " mean=" << format_double(mean_ms) << "\n";
  }
  if (st.updates == 0) throw std::runtime_error("estimate: no usable ticks in input");
  return 0;
}

struct StylizedArgs {
  std::string in;
  std::string out = "-";
  int max_lag = 20;
};

int cmd_stylized(const StylizedArgs& a) {
  auto in = open_input(a.in);
  long unparseable = 0;
  const std::vector<RawTrade> trades = read_trades_csv(in, unparseable);
  std::vector<double> prices(trades.size());
  for (std::size_t i = 0; i < trades.size(); ++i) prices[i] = trades[i].price;

  std::vector<double> acf, pacf;
  try {
    acf = return_acf(prices, a.max_lag);
    pacf = return_pacf(prices, a.max_lag);
  } catch (const std::domain_error& e) {
    throw std::runtime_error(std::string("stylized: ") + e.what());
  }

  OutputFile out(a.out);
  std::ostream& os = out.stream();
  os << "lag,acf,pacf\n";
  for (int lag = 1; lag <= a.max_lag; ++lag)
    os << lag << ',' << format_double(acf[static_cast<std::size_t>(lag - 1)]) << ','
       << format_double(pacf[static_cast<std::size_t>(lag - 1)]) << '\n';
  os << "# zero_return_fraction=" << format_double(zero_return_fraction(prices)) << "\n";
  os << "# ticks=" << trades.size() << " unparseable=" << unparseable << "\n";
  return 0;
}

struct CalibrateLambdaArgs {
  std::string in;
  std::string out = "-";
  std::string grid;
  std::string noise = "det";
  double tick = 0.01;
  int n_particles = 500;
  double ess_c = 0.2;
  int k_lag = 1;
  int threads = 1;
  double sigma2_init = 1e-8;
  std::uint64_t seed = 0;
};

void write_cv_table(std::ostream& os, const CvResult& res, const char* star_key) {
  os << "lambda,criterion\n";
  for (const auto& [lam, crit] : res.trace)
    os << format_double(lam) << ',' << format_double(crit) << '\n';
  os << "# " << star_key << "=" << format_double(res.lambda) << "\n";
}

int cmd_calibrate_lambda(const CalibrateLambdaArgs& a) {
  auto in = open_input(a.in);
  long unparseable = 0;
  const std::vector<RawTrade> trades = read_trades_csv(in, unparseable);
  std::vector<TickObservation> ticks(trades.size());
  for (std::size_t i = 0; i < trades.size(); ++i) {
    ticks[i].time = trades[i].time;
    ticks[i].price = trades[i].price;
  }

  NoiseConfig noise;
  noise.kind = parse_noise_kind(a.noise, true);
  noise.tick = a.tick;
  if (noise.kind == NoiseConfig::Kind::MarketMakerQuotes)
    throw std::runtime_error("calibrate lambda: use det, stoch, or spread noise");

  FilterConfig fc;
  fc.n_particles = a.n_particles;
  fc.ess_c = a.ess_c;
  fc.k_lag = a.k_lag;
  fc.threads = a.threads;
  fc.seed = a.seed;

  EstimatorConfig base;
  base.sigma2_init = a.sigma2_init;

  const CvResult res = cv_select_lambda(ticks, noise, fc, base, parse_grid(a.grid));
  OutputFile out(a.out);
  write_cv_table(out.stream(), res, "lambda_star");
  return 0;
}

struct CalibrateBenchArgs {
  std::string in;
  std::string out = "-";
  std::string grid;
};

int cmd_calibrate_bench(const CalibrateBenchArgs& a) {
  auto in = open_input(a.in);
  long unparseable = 0;
  const std::vector<RawTrade> trades = read_trades_csv(in, unparseable);
  std::vector<double> prices(trades.size());
  for (std::size_t i = 0; i < trades.size(); ++i) prices[i] = trades[i].price;

  const BenchCvResult res = bench_cv(prices, parse_grid(a.grid));
  OutputFile out(a.out);
  std::ostream& os = out.stream();
  os << "lambda,criterion\n";
  for (const auto& [lam, crit] : res.trace)
    os << format_double(lam) << ',' << format_double(crit) << '\n';
  os << "# lambda_star=" << format_double(res.lambda) << "\n";
  return 0;
}

struct CalibrateDurationArgs {
  std::string in;
  std::string out = "-";
  std::string grid;
};

int cmd_calibrate_duration(const CalibrateDurationArgs& a) {
  auto in = open_input(a.in);
  long unparseable = 0;
  const std::vector<RawTrade> trades = read_trades_csv(in, unparseable);
  std::vector<double> times(trades.size());
  for (std::size_t i = 0; i < trades.size(); ++i) times[i] = trades[i].time;

  const CvResult res = cv_select_duration_lambda(times, parse_grid(a.grid));
  OutputFile out(a.out);
  write_cv_table(out.stream(), res, "lambda_dur_star");
  return 0;
}

struct CalibrateKappaArgs {
  std::string out;
  std::string sages_grid;
  double sigma2_null = 1e-8;
  double tick = 0.01;
  double p0 = 50.0;
  long runs = 200;
  long ticks_per_run = 1000;
  double alpha = 0.25;
  int n_particles = 500;
  double ess_c = 0.2;
  int threads = 1;
  std::uint64_t seed = 0;
};

int cmd_calibrate_kappa(const CalibrateKappaArgs& a) {
  std::vector<double> lambdas =
      a.sages_grid.empty() ? sages_default_grid(15, 0.05, 0.00005) : parse_grid(a.sages_grid);

  KappaNullConfig nc;
  nc.sigma2_null = a.sigma2_null;
  nc.tick = a.tick;
  nc.p0 = a.p0;
  nc.runs = a.runs;
  nc.ticks_per_run = a.ticks_per_run;
  nc.alpha = a.alpha;

  FilterConfig fc;
  fc.n_particles = a.n_particles;
  fc.ess_c = a.ess_c;
  fc.threads = a.threads;
  fc.seed = a.seed;

  const KappaCalibration cal = calibrate_kappa(std::move(lambdas), nc, fc);

  {
    OutputFile out(a.out);
    write_kappa_file(out.stream(), cal.config,
                     cal.config.config_hash(cal.sigma2_null, cal.n_particles));
  }
  std::cerr << "# kappa calibration: scales=" << cal.config.K() << " samples=" << cal.samples
            << " runs=" << nc.runs << "\n";
  for (std::size_t k = 0; k < cal.config.kappas.size(); ++k)
    std::cerr << "# stage=" << (k + 2) << " lambda=" << format_double(cal.config.lambdas[k + 1])
              << " kappa=" << format_double(cal.config.kappas[k]) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spot volatility estimation from rounded tick prices"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file with key = value lines; flags take precedence");

  SimulateArgs sim;
  auto* cs = app.add_subcommand("simulate", "Generate a latent path and rounded tick CSV");
  cs->add_option("--out", sim.out, "Tick CSV path, - for stdout")->required();
  cs->add_option("--truth-out", sim.truth_out, "Latent path CSV (time,x,sigma2)");
  cs->add_option("--quotes-out", sim.quotes_out, "Quote CSV for mm noise");
  cs->add_option("-T,--ticks", sim.ticks, "Number of ticks")->check(CLI::Range(2L, 100000000L));
  cs->add_option("--p0", sim.p0, "Initial efficient price");
  cs->add_option("--p0-halfwidth", sim.p0_halfwidth, "Half width of the initial price draw");
  cs->add_option("--sigma2", sim.sigma2, "Constant variance per transaction (or per second)");
  cs->add_option("--vol-curve", sim.vol_curve,
                 "constant:V | sinusoid:B,A,C | ushape:O,M,C | piecewise:u,v;u,v;...");
  cs->add_option("--arrivals", sim.arrivals,
                 "equispaced:DT | poisson:RATE | inhom-ushape:O,M,C:SESSION");
  cs->add_option("--mode", sim.mode, "txn or clock")->check(CLI::IsMember({"txn", "clock"}));
  cs->add_option("--noise", sim.noise, "det, stoch, book, or mm");
  cs->add_option("--tick", sim.tick, "Price grid step")->check(CLI::PositiveNumber);
  cs->add_option("--book-depth", sim.book_depth, "Levels per side for book noise");
  cs->add_option("--t0", sim.t0, "Session start in seconds since midnight");
  cs->add_option("--seed", sim.seed, "Master seed")->required();

  CleanArgs cl;
  auto* cc = app.add_subcommand("clean", "Filter and despread a raw trade CSV");
  cc->add_option("--trades", cl.trades, "Raw trade CSV")->required();
  cc->add_option("--quotes", cl.quotes, "Raw quote CSV");
  cc->add_option("--out", cl.out, "Cleaned trade CSV, - for stdout");
  cc->add_option("--quotes-out", cl.quotes_out, "Cleaned quote CSV");
  cc->add_option("--session-open", cl.session_open, "Session open, seconds since midnight");
  cc->add_option("--session-close", cl.session_close, "Session close, seconds since midnight");
  cc->add_option("--exchanges", cl.exchanges, "Exchange whitelist, comma list; empty keeps all");
  cc->add_option("--conditions", cl.conditions, "Sale-condition blacklist, comma list");
  cc->add_flag("--keep-timestamps", cl.keep_timestamps, "Skip timestamp despreading");

  EstimateArgs es;
  auto* ce = app.add_subcommand("estimate", "Run the streaming volatility estimator");
  ce->add_option("--in", es.in, "Clean trade CSV")->required();
  ce->add_option("--quotes", es.quotes, "Clean quote CSV (mm noise)");
  ce->add_option("--truth", es.truth, "Simulated latent path CSV (oracle mode)");
  ce->add_option("--out", es.out, "Estimate CSV, - for stdout");
  ce->add_option("--noise", es.noise, "det, stoch, mm, or spread");
  ce->add_option("--tick", es.tick, "Price grid step")->check(CLI::PositiveNumber);
  ce->add_option("--mode", es.mode,
                 "const-gamma, tv-lambda, tv-sages, clock, clock-alt, benchmark-const, "
                 "benchmark-tv, or oracle")
      ->required();
  ce->add_option("-N,--particles", es.n_particles, "Particle count")->check(CLI::Range(2, 1000000));
  ce->add_option("-c,--ess-threshold", es.ess_c, "Resampling trigger as a fraction of N");
  ce->add_option("--k-lag", es.k_lag, "Increment lag for the update matrix")
      ->check(CLI::Range(1, 64));
  ce->add_option("--threads", es.threads, "Worker threads; 1 is the reproducibility reference")
      ->check(CLI::Range(1, 8));
  ce->add_option("--gamma", es.gamma, "Step decay exponent");
  ce->add_option("--lambda0", es.lambda0, "Step scale for the decaying schedule");
  ce->add_option("--lambda", es.lambda, "Fixed step size (tv-lambda, benchmark-tv, clock modes)");
  ce->add_option("--lambda-dur", es.lambda_dur, "Duration smoothing step (clock-alt)");
  ce->add_option("--sigma2-init", es.sigma2_init,
                 "Initial variance fed to the filter; per second in clock mode");
  ce->add_option("--sages-grid", es.sages_grid, "Step-size grid for tv-sages");
  ce->add_option("--kappa-file", es.kappa_file, "Critical-value sidecar from `calibrate kappa`");
  ce->add_option("--kappa-sigma2-null", es.kappa_sigma2_null,
                 "Null variance the sidecar was calibrated at");
  ce->add_option("--latency-offset", es.latency_offset, "Quote matching lag in seconds");
  ce->add_option("--seed", es.seed, "Master seed")->required();

  StylizedArgs st;
  auto* cy = app.add_subcommand("stylized", "Return ACF/PACF and zero-return fraction");
  cy->add_option("--in", st.in, "Trade CSV")->required();
  cy->add_option("--out", st.out, "Stats CSV, - for stdout");
  cy->add_option("--max-lag", st.max_lag, "Largest lag")->check(CLI::Range(1, 10000));

  auto* cal = app.add_subcommand("calibrate", "Offline parameter selection");
  cal->require_subcommand(1);

  CalibrateLambdaArgs cla;
  auto* cll = cal->add_subcommand("lambda", "Cross-validate the fixed step size");
  cll->add_option("--in", cla.in, "Clean trade CSV")->required();
  cll->add_option("--out", cla.out, "Criterion table, - for stdout");
  cll->add_option("--grid", cla.grid, "Step-size grid")->required();
  cll->add_option("--noise", cla.noise, "det, stoch, or spread");
  cll->add_option("--tick", cla.tick, "Price grid step")->check(CLI::PositiveNumber);
  cll->add_option("-N,--particles", cla.n_particles, "Particle count");
  cll->add_option("-c,--ess-threshold", cla.ess_c, "Resampling trigger");
  cll->add_option("--k-lag", cla.k_lag, "Increment lag");
  cll->add_option("--threads", cla.threads, "Worker threads");
  cll->add_option("--sigma2-init", cla.sigma2_init, "Initial variance fed to the filter");
  cll->add_option("--seed", cla.seed, "Master seed")->required();

  CalibrateBenchArgs cba;
  auto* clb = cal->add_subcommand("bench-lambda", "Cross-validate the benchmark step size");
  clb->add_option("--in", cba.in, "Trade CSV")->required();
  clb->add_option("--out", cba.out, "Criterion table, - for stdout");
  clb->add_option("--grid", cba.grid, "Step-size grid")->required();

  CalibrateDurationArgs cda;
  auto* cld = cal->add_subcommand("duration", "Select the duration smoothing step");
  cld->add_option("--in", cda.in, "Trade CSV with despread timestamps")->required();
  cld->add_option("--out", cda.out, "Criterion table, - for stdout");
  cld->add_option("--grid", cda.grid, "Step-size grid")->required();

  CalibrateKappaArgs cka;
  auto* clk = cal->add_subcommand("kappa", "Monte Carlo aggregation critical values");
  clk->add_option("--out", cka.out, "Sidecar path")->required();
  clk->add_option("--sages-grid", cka.sages_grid, "Step-size grid; default transaction-time grid");
  clk->add_option("--sigma2-null", cka.sigma2_null, "Constant null variance")
      ->check(CLI::PositiveNumber);
  clk->add_option("--tick", cka.tick, "Price grid step")->check(CLI::PositiveNumber);
  clk->add_option("--p0", cka.p0, "Null initial price");
  clk->add_option("--runs", cka.runs, "Simulation runs")->check(CLI::Range(200L, 1000000L));
  clk->add_option("--ticks-per-run", cka.ticks_per_run, "Ticks per run");
  clk->add_option("--alpha", cka.alpha, "Per-step down-weighting level under the null");
  clk->add_option("-N,--particles", cka.n_particles, "Particle count");
  clk->add_option("-c,--ess-threshold", cka.ess_c, "Resampling trigger");
  clk->add_option("--threads", cka.threads, "Worker threads");
  clk->add_option("--seed", cka.seed, "Master seed")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cs->parsed()) return cmd_simulate(sim);
    if (cc->parsed()) return cmd_clean(cl);
    if (ce->parsed()) return cmd_estimate(es);
    if (cy->parsed()) return cmd_stylized(st);
    if (cal->parsed()) {
      if (cll->parsed()) return cmd_calibrate_lambda(cla);
      if (clb->parsed()) return cmd_calibrate_bench(cba);
      if (cld->parsed()) return cmd_calibrate_duration(cda);
      if (clk->parsed()) return cmd_calibrate_kappa(cka);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
