#pragma once

// Scalar search helpers shared by the optimizers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "harqiso/errors.hpp"

namespace harqiso::numeric {

struct ScalarMinimum {
  double x = 0.0;
  double value = std::numeric_limits<double>::infinity();
};

/// Golden-section search for a minimum of a unimodal `f` on [lo, hi]. Stops
/// once the bracket is narrower than `width`.
template <typename F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double width) {
  detail::require(lo <= hi, "golden section bracket is inverted");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > width) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  ScalarMinimum best{mid, f(mid)};
  if (fc < best.value) best = {c, fc};
  if (fd < best.value) best = {d, fd};
  return best;
}

/// Root of a continuous `f` with f(lo) and f(hi) of opposite sign.
template <typename F>
double bisect_root(F&& f, double lo, double hi, double width, int max_iter = 200) {
  double f_lo = f(lo);
  for (int iter = 0; iter < max_iter && hi - lo > width; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct GridSample {
  double x;
  double value;
};

struct GridMinimum {
  ScalarMinimum best;
  std::vector<GridSample> samples;
  bool at_bound = false;  // coarse minimum sat on an end of the range
};

/// Evaluates `f` on a uniform grid with spacing at most `step`, then refines
/// the best cell by golden section to `width`. Nonfinite samples are skipped;
/// throws if every sample is nonfinite.
template <typename F>
GridMinimum grid_then_golden(F&& f, double lo, double hi, double step, double width) {
  detail::require(lo < hi, "search range is empty");
  detail::require(step > 0.0, "grid step must be positive");
  const auto cells = static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9));
  const std::size_t n = std::max<std::size_t>(cells, 1) + 1;
  GridMinimum out;
  out.samples.reserve(n);
  std::size_t best_k = n;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = k + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(k) /
                                                static_cast<double>(n - 1);
    const double v = f(x);
    out.samples.push_back({x, v});
    if (std::isfinite(v) && (best_k == n || v < out.samples[best_k].value)) best_k = k;
  }
  if (best_k == n) throw DomainError("objective is nonfinite over the whole search range");

  out.at_bound = best_k == 0 || best_k + 1 == n;
  const double a = out.samples[best_k == 0 ? 0 : best_k - 1].x;
  const double b = out.samples[best_k + 1 == n ? best_k : best_k + 1].x;
  out.best = {out.samples[best_k].x, out.samples[best_k].value};
  const auto guarded = [&f](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  const ScalarMinimum refined = golden_section_minimize(guarded, a, b, width);
  if (refined.value < out.best.value) out.best = refined;
  return out;
}

}  // namespace harqiso::numeric
