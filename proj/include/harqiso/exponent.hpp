#pragma once

// Random-coding and sphere-packing exponents for the channel family
// parameterised by a single per-coded-symbol SNR A. All rates are in nats per
// coded symbol.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "harqiso/errors.hpp"

namespace harqiso {

/// Per-coded-symbol power SNR, carried in both linear and dB form.
class ChannelParams {
 public:
  static ChannelParams from_linear(double a_linear) {
    detail::require(std::isfinite(a_linear) && a_linear > 0.0,
                    "channel SNR must be positive and finite, got " + std::to_string(a_linear));
    return ChannelParams(a_linear, 10.0 * std::log10(a_linear));
  }

  static ChannelParams from_db(double a_db) {
    detail::require(std::isfinite(a_db), "channel SNR in dB must be finite");
    return ChannelParams(std::pow(10.0, a_db / 10.0), a_db);
  }

  double linear() const { return a_linear_; }
  double db() const { return a_db_; }

 private:
  ChannelParams(double a_linear, double a_db) : a_linear_(a_linear), a_db_(a_db) {}

  double a_linear_;
  double a_db_;
};

struct ExponentPoint {
  double rho = 0.0;
  double beta = 1.0;
  double e_sp = 0.0;
  double r_nat = 0.0;
  double e0 = 0.0;
};

struct ChannelLandmarks {
  double r0 = 0.0;        // cutoff rate
  double r_crit = 0.0;    // critical rate
  double capacity = 0.0;
};

namespace detail {

inline void require_rho(double rho) {
  require(rho >= 0.0 && rho <= 1.0, "rho must lie in [0,1], got " + std::to_string(rho));
}

// beta - 1, in a form that stays exact at rho = 0 and free of cancellation for
// both tiny and huge A.
inline double beta_minus_one(double rho, double a) {
  const double t = a / (1.0 + rho);
  const double c = a / ((1.0 + rho) * (1.0 + rho));
  const double root = std::sqrt((1.0 - t) * (1.0 - t) + 4.0 * c);
  return 2.0 * (c - t) / (1.0 + t + root);
}

}  // namespace detail

/// The beta(rho) solution of the quadratic that parameterises the
/// sphere-packing curve. Lies in (0, 1] and equals 1 exactly at rho = 0.
inline double beta(double rho, const ChannelParams& channel) {
  detail::require_rho(rho);
  return 1.0 + detail::beta_minus_one(rho, channel.linear());
}

/// One point (E_sp, R_nat, E_0) of the parametric exponent curve.
inline ExponentPoint esp_point(double rho, const ChannelParams& channel) {
  detail::require_rho(rho);
  const double a = channel.linear();
  const double d = detail::beta_minus_one(rho, a);
  const double t = a / (1.0 + rho);
  if (!(1.0 + d + t > 0.0)) {
    throw DomainError("rate argument beta + A/(1+rho) is not positive");
  }
  ExponentPoint p;
  p.rho = rho;
  p.beta = 1.0 + d;
  p.e_sp = rho == 0.0 ? 0.0 : std::log1p(d) - (1.0 + rho) * d;
  p.r_nat = std::log1p(d + t);
  p.e0 = p.e_sp + rho * p.r_nat;
  return p;
}

inline ChannelLandmarks landmarks(const ChannelParams& channel) {
  const ExponentPoint top = esp_point(1.0, channel);
  ChannelLandmarks lm;
  lm.capacity = std::log1p(channel.linear());
  lm.r_crit = top.r_nat;
  lm.r0 = top.e0;
  return lm;
}

/// The rho at which the parametric curve passes through `r_nat`. Rates at or
/// below the critical rate map to rho = 1, where the exponent is the straight
/// line R0 - R.
inline double rho_for_rate(double r_nat, const ChannelParams& channel) {
  const ChannelLandmarks lm = landmarks(channel);
  detail::require(std::isfinite(r_nat) && r_nat >= 0.0,
                  "rate must be nonnegative, got " + std::to_string(r_nat));
  detail::require(r_nat < lm.capacity, "rate " + std::to_string(r_nat) +
                                           " nats is not below capacity " +
                                           std::to_string(lm.capacity));
  if (r_nat <= lm.r_crit) return 1.0;

  // r_nat(rho) is strictly decreasing on [0,1].
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double r_mid = esp_point(mid, channel).r_nat;
    if (r_mid == r_nat || hi - lo <= 1e-16) return mid;
    if (r_mid > r_nat) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Random-coding exponent E(R): R0 - R up to the critical rate, the
/// sphere-packing branch above it. Zero only in the limit R -> capacity.
inline double error_exponent(double r_nat, const ChannelParams& channel) {
  const ChannelLandmarks lm = landmarks(channel);
  const double rho = rho_for_rate(r_nat, channel);
  if (r_nat <= lm.r_crit) return lm.r0 - r_nat;
  // E0(rho) - rho R is stationary in rho, so residual rho error enters squared.
  return std::max(0.0, esp_point(rho, channel).e0 - rho * r_nat);
}

/// E_0 along the curve, replaced by the constant R0 on the straight-line
/// segment. This is the slope d(z E(z))/dz with z = 1/R.
inline double straight_line_e0(double r_nat, const ChannelParams& channel) {
  const ChannelLandmarks lm = landmarks(channel);
  const double rho = rho_for_rate(r_nat, channel);
  if (r_nat <= lm.r_crit) return lm.r0;
  return esp_point(rho, channel).e0;
}

/// Random coding bound on the word error probability of a length-n code.
inline double wer_bound(std::int64_t n_coded, double r_nat, const ChannelParams& channel) {
  detail::require(n_coded >= 1, "block length must be at least 1");
  const double e = error_exponent(r_nat, channel);
  return std::min(1.0, std::exp(-static_cast<double>(n_coded) * e));
}

}  // namespace harqiso
