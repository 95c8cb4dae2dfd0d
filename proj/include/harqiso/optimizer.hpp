#pragma once

// Retransmission block-size optimisation. Given WER estimates taken at a base
// block length dn_bas, scaling the block by r rescales the per-step ratio to
// h^r and the ratio-of-ratios to g^(r^2); the optimiser trades the resulting
// ladder sum against an error-floor loss theta / r.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "harqiso/errors.hpp"
#include "harqiso/numeric.hpp"
#include "harqiso/wer_model.hpp"

namespace harqiso {

struct OptimizerInputs {
  double p0_hat = 0.0;
  double h_hat = 0.5;
  double g_hat = 1.0;
  double theta = 0.0;
  std::int64_t dn_bas = 1;
  double r_min = 0.1;
  double r_max = 8.0;

  void validate() const {
    detail::require(p0_hat > 0.0 && p0_hat <= 1.0, "p0_hat must lie in (0,1]");
    detail::require(h_hat > 0.0 && h_hat < 1.0, "h_hat must lie in (0,1)");
    detail::require(g_hat > 0.0 && g_hat <= 1.0, "g_hat must lie in (0,1]");
    detail::require(p0_hat / h_hat <= 1.0, "p0_hat / h_hat must be a probability");
    detail::require(theta >= 0.0 && std::isfinite(theta), "theta must be nonnegative");
    detail::require(dn_bas >= 1, "dn_bas must be positive");
    detail::require(r_min > 0.0 && r_min < r_max, "need 0 < r_min < r_max");
  }
};

struct CurvePoint {
  double r;
  double phi;
  double objective;
};

struct OptimizerResult {
  double r_star = 0.0;
  std::int64_t dn_star = 1;
  double objective_at_r_star = 0.0;
  bool at_bound = false;  // no interior minimum inside [r_min, r_max]
  std::vector<CurvePoint> curve;
};

/// Error-floor tail mass: the sum of P(i) from the first index whose WER falls
/// below `floor_threshold`.
inline double estimate_theta(const WerSeries& series, double floor_threshold = 0.01) {
  detail::require(floor_threshold > 0.0 && floor_threshold <= 1.0,
                  "floor threshold must lie in (0,1]");
  const auto last = series.last_index();
  for (std::int64_t i = -1; i < kSeriesMaxTerms; ++i) {
    if (last && i > *last) break;
    if (series.p(i) < floor_threshold) return sum_series(series, i);
  }
  throw ConvergenceError("series never falls below the floor threshold " +
                         std::to_string(floor_threshold));
}

/// phi(r) = P0 sum_n h^(rn) g^(r^2 n(n+1)/2) + P0 g^(r-1) / h^r.
inline double phi(double r, const OptimizerInputs& in) {
  detail::require(r > 0.0 && std::isfinite(r), "r must be positive");
  const double log_h = std::log(in.h_hat);
  const double log_g = std::log(in.g_hat);
  double sum = 0.0;
  for (std::int64_t n = 0; n < kSeriesMaxTerms; ++n) {
    const double dn = static_cast<double>(n);
    const double term = std::exp(r * dn * log_h + r * r * dn * (dn + 1.0) / 2.0 * log_g);
    sum += term;
    if (term < kSeriesTolerance) {
      return in.p0_hat * sum + in.p0_hat * std::exp((r - 1.0) * log_g - r * log_h);
    }
  }
  throw ConvergenceError("phi series did not decay at r = " + std::to_string(r));
}

inline double block_objective(double r, const OptimizerInputs& in) {
  return phi(r, in) + in.theta / r;
}

/// Nearest integer to r * dn_bas, at least 1.
inline std::int64_t scaled_block(double r_star, std::int64_t dn_bas) {
  detail::require(r_star > 0.0 && dn_bas >= 1, "scaled block needs r > 0 and dn_bas >= 1");
  return std::max<std::int64_t>(1, std::llround(r_star * static_cast<double>(dn_bas)));
}

/// Minimises phi(r) + theta / r on [r_min, r_max]: coarse grid (step <= 0.01)
/// followed by golden-section refinement of the best cell to width 1e-4.
inline OptimizerResult optimize_r(const OptimizerInputs& in) {
  in.validate();
  const auto objective = [&in](double r) {
    try {
      return block_objective(r, in);
    } catch (const ConvergenceError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const numeric::GridMinimum found = numeric::grid_then_golden(objective, in.r_min, in.r_max,
                                                               0.01, 1e-4);
  OptimizerResult out;
  out.r_star = found.best.x;
  out.objective_at_r_star = found.best.value;
  out.at_bound = found.at_bound;
  out.dn_star = scaled_block(out.r_star, in.dn_bas);
  out.curve.reserve(found.samples.size());
  for (const auto& s : found.samples) {
    out.curve.push_back({s.x, s.value - in.theta / s.x, s.value});
  }
  return out;
}

struct CalibrationResult {
  ChannelParams channel;
  double p_minus1 = 0.0;
  double p0 = 0.0;
};

/// Finds the SNR at which the analytic ladder of `geometry` sits closest to
/// the targets (P(-1), P(0)) in squared error. Both terms are monotone in A,
/// so the minimiser lies between the roots of P(-1) = target and
/// P(0) = target; the search bisects for those and refines between them.
inline CalibrationResult calibrate_operating_point(const CodeFamilyGeometry& geometry,
                                                   double target_p_minus1 = 0.5,
                                                   double target_p0 = 0.25) {
  geometry.validate();
  detail::require(geometry.dn >= 1, "calibration needs dn >= 1");
  detail::require(target_p0 > 0.0 && target_p0 < target_p_minus1 && target_p_minus1 < 1.0,
                  "calibration targets need 0 < p0 < p_minus1 < 1");

  // Below exp(R(-1)) - 1 the base code is above capacity.
  const double a_floor = std::expm1(geometry.rate_nat(-1)) * (1.0 + 1e-9);
  const double log_lo = std::log(std::max(1e-4, a_floor));
  const double log_hi = std::log(1e3);
  detail::require(log_lo < log_hi, "no SNR in [1e-4, 1e3] puts C(-1) below capacity");

  const auto p_at = [&geometry](double log_a, std::int64_t i) {
    return analytic_p(geometry, ChannelParams::from_linear(std::exp(log_a)), i);
  };
  const auto root_for = [&](std::int64_t i, double target) {
    const auto f = [&](double log_a) { return p_at(log_a, i) - target; };
    if (f(log_lo) <= 0.0) return log_lo;
    if (f(log_hi) >= 0.0) return log_hi;
    return numeric::bisect_root(f, log_lo, log_hi, 1e-12);
  };
  const double root_m1 = root_for(-1, target_p_minus1);
  const double root_0 = root_for(0, target_p0);
  const auto misfit = [&](double log_a) {
    const double e1 = p_at(log_a, -1) - target_p_minus1;
    const double e0 = p_at(log_a, 0) - target_p0;
    return e1 * e1 + e0 * e0;
  };
  const double lo = std::min(root_m1, root_0);
  const double hi = std::max(root_m1, root_0);
  const numeric::ScalarMinimum best =
      hi > lo ? numeric::golden_section_minimize(misfit, lo, hi, 1e-10)
              : numeric::ScalarMinimum{lo, misfit(lo)};

  CalibrationResult out{ChannelParams::from_linear(std::exp(best.x)), 0.0, 0.0};
  out.p_minus1 = analytic_p(geometry, out.channel, -1);
  out.p0 = analytic_p(geometry, out.channel, 0);
  if (std::abs(out.p_minus1 - target_p_minus1) > 0.2 || std::abs(out.p0 - target_p0) > 0.2) {
    throw DomainError("no SNR in [1e-4, 1e3] brings (P(-1), P(0)) within 0.2 of (" +
                      std::to_string(target_p_minus1) + ", " + std::to_string(target_p0) +
                      "); best reached (" + std::to_string(out.p_minus1) + ", " +
                      std::to_string(out.p0) + ")");
  }
  return out;
}

}  // namespace harqiso
