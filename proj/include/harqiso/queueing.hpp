#pragma once

// Queue-stability analysis of the HARQ retransmission queue fed by a WER
// ladder, the closed-form throughput optima and CRC sizing.

#include <cmath>
#include <cstdint>
#include <string>

#include "harqiso/errors.hpp"
#include "harqiso/numeric.hpp"
#include "harqiso/wer_model.hpp"

namespace harqiso {

struct StabilityReport {
  double lambda = 0.0;          // arrivals to the queue per slot, P(-1)
  double mu = 0.0;              // departures per busy slot
  double t_out = 0.0;           // mean retransmission groups per queued packet
  double stability_sum = 0.0;   // sum of the whole ladder
  int servers = 1;
  bool stable = false;
  double margin = 0.0;          // servers - stability_sum
};

struct DesignPoint {
  double k0_budget = 0.0;
  int servers = 1;
  double h_star = 0.0;              // optimal full-group ratio P(0)/P(-1)
  double p_minus1_star = 0.0;       // aggregate P(-1) across servers
  double p_minus1_per_server = 0.0;
  double p0_star_aggregate = 0.0;
};

/// Mean number of retransmission groups a queued packet receives before it
/// decodes, conditioned on decoding by C(m).
inline double departure_time(const WerSeries& series, std::int64_t m) {
  detail::require(m >= 0, "m must be nonnegative");
  const double denom = series.p(-1) - series.p(m);
  detail::require(denom > 0.0, "departure time undefined: P(-1) <= P(m)");
  double num = 0.0;
  double prev = series.p(-1);
  for (std::int64_t i = 0; i <= m; ++i) {
    const double cur = series.p(i);
    num += (prev - cur) * static_cast<double>(i + 1);
    prev = cur;
  }
  return num / denom;
}

/// mu = P(-1) / sum_{i>=0} (P(i-1) - P(i)) (i+1). Finite ladders use the
/// departure time up to their last member.
inline double service_rate(const WerSeries& series) {
  if (const auto last = series.last_index()) {
    return 1.0 / departure_time(series, std::max<std::int64_t>(*last, 0));
  }
  const double p_minus1 = series.p(-1);
  detail::require(p_minus1 > 0.0, "service rate undefined for P(-1) = 0");
  double denom = 0.0;
  double prev = p_minus1;
  for (std::int64_t i = 0; i < kSeriesMaxTerms; ++i) {
    const double cur = series.p(i);
    denom += (prev - cur) * static_cast<double>(i + 1);
    // cur * (i + 1) bounds what the remaining terms can still add
    if (cur * static_cast<double>(i + 1) < kSeriesTolerance) return p_minus1 / denom;
    prev = cur;
  }
  throw ConvergenceError("service-rate series did not converge within " +
                         std::to_string(kSeriesMaxTerms) + " terms");
}

/// Stationarity test of the retransmission queue. With a servers the ladder
/// is read in per-subblock steps and the whole of it must sum below a.
inline StabilityReport stability_check(const WerSeries& series, int servers = 1) {
  detail::require(servers >= 1, "servers must be positive");
  StabilityReport r;
  r.servers = servers;
  r.lambda = series.p(-1);
  r.stability_sum = sum_series(series, -1);
  r.mu = service_rate(series);
  r.t_out = 1.0 / r.mu;
  r.margin = static_cast<double>(servers) - r.stability_sum;
  r.stable = r.stability_sum < static_cast<double>(servers);
  return r;
}

/// (a/(a+1))^a, evaluated without cancellation for large a.
inline double optimal_ratio(int servers) {
  detail::require(servers >= 1, "servers must be positive");
  const double a = servers;
  return std::exp(a * std::log1p(-1.0 / (a + 1.0)));
}

/// Throughput-optimal operating point under the geometric (g = 1) ladder for
/// a stationarity budget k0: maximises a k0 (1 - h^(1/a)) h over h.
inline DesignPoint optimal_design(double k0_budget, int servers = 1) {
  detail::require(k0_budget > 0.0 && k0_budget < 1.0, "k0 budget must lie in (0,1)");
  DesignPoint d;
  d.k0_budget = k0_budget;
  d.servers = servers;
  d.h_star = optimal_ratio(servers);
  const double a = servers;
  const double sub_ratio = std::pow(d.h_star, 1.0 / a);
  d.p_minus1_per_server = k0_budget * (1.0 - sub_ratio);
  d.p_minus1_star = a * d.p_minus1_per_server;
  d.p0_star_aggregate = d.p_minus1_star * d.h_star;
  return d;
}

/// Sustainable aggregate P(0) for a full-group ratio h: a k0 (1 - h^(1/a)) h.
inline double sustainable_p0(double h, double k0_budget, int servers = 1) {
  const double a = servers;
  return a * k0_budget * (1.0 - std::pow(h, 1.0 / a)) * h;
}

/// Numerical counterpart of optimal_design: grid search plus golden-section
/// refinement of sustainable_p0 over h in (0,1).
inline numeric::ScalarMinimum maximize_sustainable_p0(double k0_budget, int servers = 1,
                                                      double grid_step = 1e-3,
                                                      double width = 1e-9) {
  detail::require(k0_budget > 0.0 && k0_budget < 1.0, "k0 budget must lie in (0,1)");
  detail::require(servers >= 1, "servers must be positive");
  const auto neg = [&](double h) { return -sustainable_p0(h, k0_budget, servers); };
  auto found = numeric::grid_then_golden(neg, 0.0, 1.0, grid_step, width);
  return {found.best.x, -found.best.value};
}

inline double classical_arq_throughput(double p0) {
  detail::require(p0 >= 0.0 && p0 <= 1.0, "p0 must lie in [0,1]");
  return 1.0 - p0;
}

/// CRC bits so that the undetected-error probability stays below eps1 with
/// servers + 1 decoders running in parallel.
inline int crc_overhead(double eps1, int servers = 1) {
  detail::require(eps1 > 0.0 && eps1 < 1.0, "eps1 must lie in (0,1)");
  detail::require(servers >= 1, "servers must be positive");
  const double bits = -std::log2(eps1) + std::log2(static_cast<double>(servers) + 1.0);
  return static_cast<int>(std::ceil(bits - 1e-12));
}

}  // namespace harqiso
