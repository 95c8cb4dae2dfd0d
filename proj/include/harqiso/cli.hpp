#pragma once

// Command-line front end: argument parsing, command dispatch and report
// emission for the `harqiso` tool.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "harqiso/errors.hpp"
#include "harqiso/exponent.hpp"
#include "harqiso/optimizer.hpp"
#include "harqiso/protocol_sim.hpp"
#include "harqiso/queueing.hpp"
#include "harqiso/report.hpp"
#include "harqiso/wer_model.hpp"

namespace harqiso::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDomain = 3, kIo = 4 };

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

enum class Format { csv, json };

struct Params {
  // channel
  std::optional<double> snr_db;
  std::optional<double> snr_linear;
  // geometric ladder
  std::optional<double> p_minus1;
  std::optional<double> h;
  std::optional<double> g;
  // table ladder
  std::optional<std::string> series_file;
  // analytic ladder
  std::optional<std::int64_t> k_info;
  std::int64_t dk = 0;
  std::optional<std::int64_t> n_base;
  std::optional<std::int64_t> dn;
  std::optional<std::int64_t> m_groups;
  // exponent
  std::optional<double> rate_bits;
  std::optional<double> rate_nat;
  std::optional<std::int64_t> n_coded;
  int points = 0;
  // series
  int terms = 20;
  // stability
  int servers = 1;
  std::optional<double> eps1;
  std::optional<double> k0_budget;
  // optimize
  std::optional<double> p0_hat;
  std::optional<double> theta;
  double floor_threshold = 0.01;
  std::int64_t dn_bas = 1;
  double r_min = 0.1;
  double r_max = 8.0;
  bool calibrate = false;
  bool curve = false;
  // simulate
  std::optional<std::string> algorithm;
  std::int64_t slots = 100000;
  std::uint64_t seed = 1;
  double eps0 = 1e-3;
  std::optional<std::int64_t> queue_cap;
  bool no_boost = false;
  double warmup = 0.01;
  std::int64_t trace = 0;
  std::optional<std::string> trace_out;
  // sweep
  std::optional<double> snr_start;
  std::optional<double> snr_stop;
  std::optional<double> snr_step;
  bool no_sim = false;
};

struct RunSpec {
  std::string command;
  Params params;
  Format format = Format::csv;
  std::string output_path;           // empty means standard output
  std::optional<std::string> help;   // set when --help was requested
};

namespace detail {

inline std::optional<double> to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// Numeric interval check; `lo_open`/`hi_open` exclude the endpoints.
inline CLI::Validator interval(double lo, double hi, bool lo_open, bool hi_open) {
  std::ostringstream desc;
  desc << (lo_open ? "(" : "[") << lo << "," << hi << (hi_open ? ")" : "]");
  const std::string text = desc.str();
  return CLI::Validator(
      [=](std::string& s) -> std::string {
        const auto v = to_double(s);
        if (!v) return "value '" + s + "' is not a number";
        const bool ok_lo = lo_open ? *v > lo : *v >= lo;
        const bool ok_hi = hi_open ? *v < hi : *v <= hi;
        if (!ok_lo || !ok_hi) return "value " + s + " is outside " + text;
        return {};
      },
      text);
}

inline CLI::Validator probability_open() { return interval(0.0, 1.0, true, true); }
inline CLI::Validator probability_half_open() { return interval(0.0, 1.0, true, false); }
inline CLI::Validator positive() { return interval(0.0, HUGE_VAL, true, true); }

inline const std::set<std::string>& boolean_flags() {
  static const std::set<std::string> flags{"no-boost", "no-sim", "calibrate", "curve"};
  return flags;
}

inline std::string trim(const std::string& s) { return harqiso::detail::trim(s); }

/// key=value lines from a config file, translated to command-line tokens for
/// every key not already given on the command line.
inline std::vector<std::string> config_tokens(const std::string& path,
                                              const std::vector<std::string>& argv) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::set<std::string> given;
  for (const auto& tok : argv) {
    if (tok.rfind("--", 0) != 0) continue;
    given.insert(tok.substr(2, tok.find('=') == std::string::npos ? std::string::npos
                                                                 : tok.find('=') - 2));
  }
  std::vector<std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(text.substr(0, eq));
    while (!key.empty() && key[0] == '-') key.erase(0, 1);
    const std::string value = trim(text.substr(eq + 1));
    if (key == "config") throw UsageError("config files cannot include other config files");
    if (given.count(key)) continue;
    if (boolean_flags().count(key)) {
      if (value == "true" || value == "1" || value == "yes") out.push_back("--" + key);
      continue;
    }
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

inline std::optional<std::string> config_path(const std::vector<std::string>& argv) {
  for (std::size_t k = 0; k < argv.size(); ++k) {
    if (argv[k] == "--config") {
      if (k + 1 >= argv.size()) throw UsageError("--config: missing file path");
      return argv[k + 1];
    }
    if (argv[k].rfind("--config=", 0) == 0) return argv[k].substr(9);
  }
  return std::nullopt;
}

inline bool given(const std::vector<std::string>& argv, const std::string& flag) {
  for (const auto& tok : argv) {
    if (tok == flag || tok.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

struct AppBuilder {
  RunSpec& spec;
  std::string config_ignored;
  std::string format = "csv";

  void output(CLI::App* sub) {
    sub->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--out", spec.output_path, "Output file (default: standard output)");
    sub->add_option("--config", config_ignored,
                    "File of key=value lines, one per flag; command-line flags win");
  }

  void channel(CLI::App* sub) {
    auto* db = sub->add_option("--snr-db", spec.params.snr_db, "Per-symbol SNR A in dB");
    auto* lin = sub->add_option("--snr-linear", spec.params.snr_linear, "Per-symbol SNR A, linear")
                    ->check(positive());
    db->excludes(lin);
  }

  void geometry(CLI::App* sub) {
    auto& p = spec.params;
    sub->add_option("--k-info", p.k_info, "Information bits K")->check(CLI::PositiveNumber);
    sub->add_option("--dk", p.dk, "CRC bits (also sets the undetected-error rate 2^-dk)")
        ->check(CLI::Range(0, 62));
    sub->add_option("--n-base", p.n_base, "Coded bits of the base code C(-1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--dn", p.dn, "Coded bits per retransmission group")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--m-groups", p.m_groups, "Index m of the last family member (default: unbounded)")
        ->check(CLI::NonNegativeNumber);
  }

  void ladder(CLI::App* sub) {
    auto& p = spec.params;
    sub->add_option("--p-1", p.p_minus1, "Geometric ladder: P(-1)")->check(probability_half_open());
    sub->add_option("--h", p.h, "Geometric ladder: step ratio h")->check(probability_open());
    sub->add_option("--g", p.g, "Geometric ladder: ratio-of-ratios g (default 1)")
        ->check(probability_half_open());
    sub->add_option("--series-file", p.series_file, "WER table CSV (index,wer)");
    channel(sub);
    geometry(sub);
  }

  void servers(CLI::App* sub) {
    sub->add_option("--servers", spec.params.servers, "Number of HARQ servers a")
        ->check(CLI::Range(1, 1 << 20));
  }

  void simulation(CLI::App* sub) {
    auto& p = spec.params;
    sub->add_option("--algorithm", p.algorithm, "A (single server) or B (multiple servers)")
        ->check(CLI::IsMember({"A", "B"}));
    servers(sub);
    sub->add_option("--slots", p.slots, "Slots to simulate")->check(CLI::PositiveNumber);
    sub->add_option("--seed", p.seed, "Generator seed (default: $HARQISO_SEED or 1)");
    sub->add_option("--eps0", p.eps0, "Delay quantile level for t_eps0")->check(probability_open());
    sub->add_option("--queue-cap", p.queue_cap, "Per-server queue capacity (default unbounded)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--no-boost", p.no_boost, "Disable the empty-queue boost to C(a-1)");
    sub->add_option("--warmup", p.warmup, "Fraction of slots excluded from steady-state metrics")
        ->check(interval(0.0, 1.0, false, true));
  }

  void build(CLI::App& app) {
    auto& p = spec.params;
    app.require_subcommand(1);
    // --h names the ladder ratio, so help takes the long form only
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    auto* exponent = app.add_subcommand("exponent", "Error exponent landmarks and curve");
    channel(exponent);
    exponent->add_option("--rate-bits", p.rate_bits, "Code rate in bits per symbol")
        ->check(positive());
    exponent->add_option("--rate-nat", p.rate_nat, "Code rate in nats per symbol")
        ->check(positive());
    exponent->add_option("--n-coded", p.n_coded, "Block length for the WER bound")
        ->check(CLI::PositiveNumber);
    exponent->add_option("--points", p.points, "Rows of the rho curve (0 for none)")
        ->check(CLI::Range(0, 100000));
    output(exponent);

    auto* series = app.add_subcommand("series", "Tabulate a WER ladder");
    ladder(series);
    series->add_option("--terms", p.terms, "Indices -1 .. terms-2 to print")
        ->check(CLI::Range(1, 1000000));
    output(series);

    auto* stability = app.add_subcommand("stability", "Queue stability of a WER ladder");
    ladder(stability);
    servers(stability);
    stability->add_option("--eps1", p.eps1, "Target undetected error probability for CRC sizing")
        ->check(probability_open());
    stability->add_option("--k0", p.k0_budget, "Stationarity budget for the optimal design point")
        ->check(probability_open());
    output(stability);

    auto* optimize = app.add_subcommand("optimize", "Optimise the retransmission block size");
    ladder(optimize);
    optimize->add_option("--p0-hat", p.p0_hat, "Direct input: P0 estimate")
        ->check(probability_half_open());
    optimize->add_option("--theta", p.theta, "Error-floor tail mass (default: estimated)")
        ->check(interval(0.0, HUGE_VAL, false, true));
    optimize->add_option("--floor-threshold", p.floor_threshold, "WER below which the tail is theta")
        ->check(probability_half_open());
    optimize->add_option("--dn-bas", p.dn_bas, "Base block length")->check(CLI::PositiveNumber);
    optimize->add_option("--r-min", p.r_min, "Lower end of the block scale search")->check(positive());
    optimize->add_option("--r-max", p.r_max, "Upper end of the block scale search")->check(positive());
    optimize->add_flag("--calibrate", p.calibrate,
                       "Choose the SNR giving P(-1)~0.5, P(0)~0.25 for the geometry");
    optimize->add_flag("--curve", p.curve, "Emit the sampled objective curve");
    output(optimize);

    auto* simulate = app.add_subcommand("simulate", "Slotted HARQ-II simulation");
    ladder(simulate);
    simulation(simulate);
    simulate->add_option("--trace", p.trace, "Trace events of the first N slots")
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--trace-out", p.trace_out, "Trace CSV file");
    output(simulate);

    auto* sweep = app.add_subcommand("sweep", "SNR sweep of stability and simulated throughput");
    geometry(sweep);
    sweep->add_option("--snr-start", p.snr_start, "First SNR point in dB")->required();
    sweep->add_option("--snr-stop", p.snr_stop, "Last SNR point in dB")->required();
    sweep->add_option("--snr-step", p.snr_step, "SNR step in dB")->check(positive())->required();
    simulation(sweep);
    sweep->add_flag("--no-sim", p.no_sim, "Skip the simulation columns");
    output(sweep);
  }
};

enum class Source { none, geometric, table, analytic };

inline Source series_source(const Params& p, bool need_channel = true) {
  const bool geometric = p.p_minus1 || p.h || p.g;
  const bool table = p.series_file.has_value();
  const bool analytic = p.k_info || p.n_base || p.dn || p.m_groups;
  if (geometric + table + analytic > 1) {
    throw UsageError("choose one WER ladder: --p-1/--h/--g, --series-file, or --k-info/--n-base/--dn");
  }
  if (geometric) {
    if (!p.p_minus1) throw UsageError("--p-1 is required for a geometric ladder");
    if (!p.h) throw UsageError("--h is required for a geometric ladder");
    return Source::geometric;
  }
  if (table) return Source::table;
  if (analytic) {
    if (!p.k_info) throw UsageError("--k-info is required for an analytic ladder");
    if (!p.n_base) throw UsageError("--n-base is required for an analytic ladder");
    if (!p.dn) throw UsageError("--dn is required for an analytic ladder");
    if (need_channel && !p.snr_db && !p.snr_linear) {
      throw UsageError("--snr-db or --snr-linear is required for an analytic ladder");
    }
    return Source::analytic;
  }
  return Source::none;
}

inline void validate(const RunSpec& spec) {
  const Params& p = spec.params;
  const std::string& cmd = spec.command;
  if (cmd == "exponent") {
    if (!p.snr_db && !p.snr_linear) throw UsageError("exponent: --snr-db or --snr-linear is required");
    if (p.rate_bits && p.rate_nat) throw UsageError("--rate-bits excludes --rate-nat");
    if (p.n_coded && !p.rate_bits && !p.rate_nat) {
      throw UsageError("--n-coded needs --rate-bits or --rate-nat");
    }
  } else if (cmd == "series" || cmd == "stability" || cmd == "simulate") {
    if (series_source(p) == Source::none) {
      throw UsageError(cmd + ": a WER ladder is required (--p-1/--h, --series-file or geometry)");
    }
  } else if (cmd == "optimize") {
    if (p.p0_hat) {
      if (!p.h) throw UsageError("--h is required with --p0-hat");
      if (p.p_minus1 || p.series_file || p.k_info || p.n_base || p.dn) {
        throw UsageError("--p0-hat takes the estimates directly and excludes a WER ladder");
      }
    } else if (p.calibrate) {
      if (series_source(p, false) != Source::analytic) {
        throw UsageError("--calibrate needs --k-info, --n-base and --dn");
      }
      if (p.snr_db || p.snr_linear) throw UsageError("--calibrate chooses the SNR; drop --snr-db/--snr-linear");
    } else if (series_source(p) == Source::none) {
      throw UsageError("optimize: give --p0-hat/--h/--g or a WER ladder");
    }
    if (p.r_min >= p.r_max) throw UsageError("--r-min must be below --r-max");
  } else if (cmd == "sweep") {
    if (!p.k_info || !p.n_base || !p.dn) {
      throw UsageError("sweep: --k-info, --n-base and --dn are required");
    }
    if (*p.snr_stop < *p.snr_start) throw UsageError("--snr-stop must not be below --snr-start");
  }
  if ((cmd == "simulate" || cmd == "sweep") && p.algorithm && *p.algorithm == "A" && p.servers != 1) {
    throw UsageError("--servers must be 1 with --algorithm A");
  }
  if (cmd == "simulate" && p.trace > 0 && !p.trace_out) {
    throw UsageError("--trace needs --trace-out");
  }
}

inline ChannelParams channel_of(const Params& p) {
  if (p.snr_linear) return ChannelParams::from_linear(*p.snr_linear);
  return ChannelParams::from_db(*p.snr_db);
}

inline CodeFamilyGeometry geometry_of(const Params& p) {
  return CodeFamilyGeometry::make(*p.k_info, p.dk, *p.n_base, *p.dn, p.m_groups);
}

inline WerSeries series_of(const Params& p) {
  switch (series_source(p)) {
    case Source::geometric:
      return WerSeries::geometric(*p.p_minus1, *p.h, p.g.value_or(1.0));
    case Source::table: {
      std::ifstream in(*p.series_file);
      if (!in) throw IoError("cannot read WER table '" + *p.series_file + "'");
      return read_wer_table(in);
    }
    case Source::analytic:
      return WerSeries::analytic(geometry_of(p), channel_of(p));
    case Source::none:
      break;
  }
  throw UsageError("a WER ladder is required");
}

inline SimConfig sim_config(const Params& p, WerSeries series) {
  SimConfig c{.series = std::move(series)};
  c.servers = p.servers;
  c.algorithm = p.algorithm ? (*p.algorithm == "A" ? Algorithm::A : Algorithm::B)
                            : (p.servers == 1 ? Algorithm::A : Algorithm::B);
  c.slots = p.slots;
  c.seed = p.seed;
  c.dk = static_cast<int>(p.dk);
  c.eps0 = p.eps0;
  if (p.queue_cap) c.queue_cap = static_cast<std::size_t>(*p.queue_cap);
  c.empty_queue_boost = !p.no_boost;
  c.warmup_fraction = p.warmup;
  return c;
}

}  // namespace detail

/// Parses a command line (without the program name). Throws UsageError for
/// malformed or inconsistent flags; returns a spec with `help` set when help
/// was requested.
inline RunSpec parse_args(const std::vector<std::string>& argv_in) {
  std::vector<std::string> argv = argv_in;
  if (const auto path = detail::config_path(argv)) {
    const auto extra = detail::config_tokens(*path, argv);
    argv.insert(argv.end(), extra.begin(), extra.end());
  }

  RunSpec spec;
  CLI::App app{"Isochronous HARQ-II analysis and simulation", "harqiso"};
  detail::AppBuilder builder{spec, {}};
  builder.build(app);

  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    spec.help = app.help();
    return spec;
  } catch (const CLI::CallForAllHelp&) {
    spec.help = app.help("", CLI::AppFormatMode::All);
    return spec;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  spec.command = app.get_subcommands().front()->get_name();
  spec.format = builder.format == "json" ? Format::json : Format::csv;

  if (!detail::given(argv, "--seed")) {
    if (const char* env = std::getenv("HARQISO_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        spec.params.seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        throw UsageError("HARQISO_SEED is not an unsigned integer: '" + std::string(env) + "'");
      }
    }
  }
  detail::validate(spec);
  return spec;
}

/// Stability and simulation columns per SNR point, ascending in SNR. Errors at
/// a point are recorded in the `error` column and the sweep continues.
inline report::Report run_sweep(const RunSpec& spec) {
  const Params& p = spec.params;
  report::Report r;
  r.columns = {"snr_db",         "p_minus1",   "p0",     "stability_sum", "stable",
               "throughput_sim", "mean_delay", "t_eps0", "error"};
  const double start = *p.snr_start;
  const double step = *p.snr_step;
  const auto points = static_cast<std::int64_t>(std::floor((*p.snr_stop - start) / step + 1e-9)) + 1;
  const CodeFamilyGeometry geometry = detail::geometry_of(p);
  for (std::int64_t k = 0; k < points; ++k) {
    const double snr = start + static_cast<double>(k) * step;
    std::vector<report::Value> row{snr, std::string{}, std::string{}, std::string{},
                                   std::string{}, std::string{}, std::string{}, std::string{},
                                   std::string{}};
    try {
      const WerSeries series = WerSeries::analytic(geometry, ChannelParams::from_db(snr));
      row[1] = series.p(-1);
      row[2] = series.p(0);
      const StabilityReport st = stability_check(series, p.servers);
      row[3] = st.stability_sum;
      row[4] = st.stable;
      if (!p.no_sim) {
        const SimMetrics m = run(detail::sim_config(p, series));
        row[5] = m.throughput;
        row[6] = m.mean_delay;
        row[7] = m.t_eps0;
      }
    } catch (const std::exception& e) {
      row[8] = std::string(e.what());
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

inline report::Report run_exponent(const Params& p) {
  const ChannelParams ch = detail::channel_of(p);
  const ChannelLandmarks lm = landmarks(ch);
  report::Report r;
  r.add("a_linear", ch.linear());
  r.add("a_db", ch.db());
  r.add("capacity", lm.capacity);
  r.add("r_crit", lm.r_crit);
  r.add("r0", lm.r0);
  if (p.rate_bits || p.rate_nat) {
    const double rate = p.rate_nat ? *p.rate_nat : *p.rate_bits * std::log(2.0);
    r.add("rate_nat", rate);
    r.add("error_exponent", error_exponent(rate, ch));
    if (p.n_coded) r.add("wer_bound", wer_bound(*p.n_coded, rate, ch));
  }
  if (p.points > 0) {
    r.columns = {"rho", "beta", "e_sp", "r_nat", "e0"};
    for (int k = 0; k < p.points; ++k) {
      const double rho = p.points == 1 ? 0.0 : static_cast<double>(k) / (p.points - 1);
      const ExponentPoint pt = esp_point(rho, ch);
      r.rows.push_back({pt.rho, pt.beta, pt.e_sp, pt.r_nat, pt.e0});
    }
  }
  return r;
}

inline report::Report run_series(const Params& p) {
  const WerSeries s = detail::series_of(p);
  report::Report r;
  r.columns = {"index", "wer", "conditional_fail"};
  for (std::int64_t i = -1; i < p.terms - 1; ++i) {
    const double wer = s.p(i);
    report::Value cond = std::string{};
    if (i >= 0 && s.p(i - 1) > 0.0) cond = conditional_fail(s, i);
    r.rows.push_back({i, wer, cond});
  }
  return r;
}

inline report::Report run_stability(const Params& p) {
  const WerSeries s = detail::series_of(p);
  report::Report r = report::from(stability_check(s, p.servers));
  const double p0 = s.p(0);
  r.add("p0", p0);
  r.add("classical_arq_throughput", classical_arq_throughput(p0));
  if (p.eps1) r.add("crc_bits", static_cast<std::int64_t>(crc_overhead(*p.eps1, p.servers)));
  if (p.k0_budget) {
    const DesignPoint d = optimal_design(*p.k0_budget, p.servers);
    r.add("k0_budget", d.k0_budget);
    r.add("h_star", d.h_star);
    r.add("p_minus1_star", d.p_minus1_star);
    r.add("p0_star_aggregate", d.p0_star_aggregate);
  }
  return r;
}

inline report::Report run_optimize(const Params& p) {
  report::Report r;
  OptimizerInputs in;
  in.dn_bas = p.dn_bas;
  in.r_min = p.r_min;
  in.r_max = p.r_max;
  if (p.p0_hat) {
    in.p0_hat = *p.p0_hat;
    in.h_hat = *p.h;
    in.g_hat = p.g.value_or(1.0);
    in.theta = p.theta.value_or(0.0);
  } else {
    std::optional<WerSeries> series;
    if (p.calibrate) {
      const CodeFamilyGeometry geometry = detail::geometry_of(p);
      const CalibrationResult cal = calibrate_operating_point(geometry);
      r.add("calibrated_a_linear", cal.channel.linear());
      r.add("calibrated_a_db", cal.channel.db());
      series = WerSeries::analytic(geometry, cal.channel);
    } else {
      series = detail::series_of(p);
    }
    const RatioEstimate est = estimate_ratios(series->p(-1), series->p(0), series->p(1));
    in.p0_hat = series->p(0);
    in.h_hat = est.h_hat;
    // analytic ladders can land a rounding error above 1
    in.g_hat = std::min(1.0, est.g_hat);
    in.theta = p.theta ? *p.theta : estimate_theta(*series, p.floor_threshold);
  }
  const OptimizerResult res = optimize_r(in);
  r.add("p0_hat", in.p0_hat);
  r.add("h_hat", in.h_hat);
  r.add("g_hat", in.g_hat);
  r.add("theta", in.theta);
  r.add("dn_bas", in.dn_bas);
  r.add("r_star", res.r_star);
  r.add("dn_star", res.dn_star);
  r.add("objective_at_r_star", res.objective_at_r_star);
  r.add("at_bound", res.at_bound);
  if (p.curve) {
    r.columns = {"r", "phi", "objective"};
    for (const auto& c : res.curve) r.rows.push_back({c.r, c.phi, c.objective});
  }
  return r;
}

inline report::Report run_simulate(const Params& p) {
  const SimConfig config = detail::sim_config(p, detail::series_of(p));
  if (p.trace > 0) {
    std::ofstream trace(*p.trace_out);
    if (!trace) throw IoError("cannot write trace file '" + *p.trace_out + "'");
    report::Report r = report::from(run(config, &trace, p.trace));
    if (!trace) throw IoError("failed writing trace file '" + *p.trace_out + "'");
    return r;
  }
  return report::from(run(config));
}

inline report::Report execute(const RunSpec& spec) {
  const Params& p = spec.params;
  if (spec.command == "exponent") return run_exponent(p);
  if (spec.command == "series") return run_series(p);
  if (spec.command == "stability") return run_stability(p);
  if (spec.command == "optimize") return run_optimize(p);
  if (spec.command == "simulate") return run_simulate(p);
  if (spec.command == "sweep") return run_sweep(spec);
  throw UsageError("unknown command '" + spec.command + "'");
}

inline void emit(const report::Report& r, Format format, const std::string& path,
                 std::ostream& stdout_stream) {
  const auto write = [&](std::ostream& out) {
    if (format == Format::json) {
      report::write_json(r, out);
    } else {
      report::write_csv(r, out);
    }
  };
  if (path.empty()) {
    write(stdout_stream);
    return;
  }
  std::ofstream file(path);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  write(file);
  file.flush();
  if (!file) throw IoError("failed writing '" + path + "'");
}

/// Whole-program entry: returns the process exit code.
inline int run_main(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  RunSpec spec;
  try {
    spec = parse_args(argv);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  }
  if (spec.help) {
    out << *spec.help;
    return kOk;
  }
  try {
    emit(execute(spec), spec.format, spec.output_path, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kDomain;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << "\n";
    return kDomain;
  }
  return kOk;
}

}  // namespace harqiso::cli
