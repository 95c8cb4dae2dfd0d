#pragma once

// Word-error-probability ladders P(-1), P(0), P(1), ... of a rate-compatible
// code family C(-1) ⊂ C(0) ⊂ C(1) ⊂ ... where each member adds one
// retransmission group of dn coded symbols.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "harqiso/errors.hpp"
#include "harqiso/exponent.hpp"

namespace harqiso {

/// Truncation rule shared by every infinite sum over a series.
inline constexpr double kSeriesTolerance = 1e-15;
inline constexpr std::int64_t kSeriesMaxTerms = 1'000'000;

struct CodeFamilyGeometry {
  std::int64_t k_info = 0;   // K information bits
  std::int64_t dk = 0;       // CRC bits
  std::int64_t n_base = 0;   // coded bits of C(-1)
  std::int64_t dn = 0;       // coded bits per retransmission group
  std::optional<std::int64_t> m_groups;  // last member C(m); unbounded when empty

  static CodeFamilyGeometry make(std::int64_t k_info, std::int64_t dk, std::int64_t n_base,
                                 std::int64_t dn,
                                 std::optional<std::int64_t> m_groups = std::nullopt) {
    CodeFamilyGeometry g{k_info, dk, n_base, dn, m_groups};
    g.validate();
    return g;
  }

  std::int64_t k0() const { return k_info + dk; }

  void validate() const {
    detail::require(k_info >= 1, "k_info must be positive");
    detail::require(dk >= 0, "dk must be nonnegative");
    detail::require(n_base > k0(), "n_base must exceed k0 = k_info + dk");
    detail::require(dn >= 0, "dn must be nonnegative");
    detail::require(!m_groups || *m_groups >= 0, "m_groups must be nonnegative");
  }

  /// Coded length of C(i), i >= -1.
  std::int64_t coded_length(std::int64_t i) const { return n_base + (i + 1) * dn; }

  /// Binary information bits per code in nats: K1 = K0 ln 2.
  double k1() const { return static_cast<double>(k0()) * std::log(2.0); }

  /// Redundancy z(i) = 1 / R_nat of C(i).
  double redundancy(std::int64_t i) const {
    return static_cast<double>(coded_length(i)) / k1();
  }

  double rate_nat(std::int64_t i) const { return 1.0 / redundancy(i); }
};

/// P(C(i)) from the random coding bound applied to each family member.
inline double analytic_p(const CodeFamilyGeometry& geometry, const ChannelParams& channel,
                         std::int64_t i) {
  detail::require(i >= -1, "series index must be >= -1");
  const auto n = static_cast<double>(geometry.coded_length(i));
  return std::exp(-n * error_exponent(geometry.rate_nat(i), channel));
}

/// The (h, g) ladder: P(0) = P(-1) h and P(i) = P(i-1) h g^i for i >= 1, so
/// P(i) = P(-1) h^(i+1) g^(i(i+1)/2).
inline double geometric_p(double p_minus1, double h, double g, std::int64_t i) {
  detail::require(p_minus1 > 0.0 && p_minus1 <= 1.0, "p_minus1 must lie in (0,1]");
  detail::require(h > 0.0 && h < 1.0, "h must lie in (0,1)");
  detail::require(g > 0.0 && g <= 1.0, "g must lie in (0,1]");
  detail::require(i >= -1, "series index must be >= -1");
  if (i == -1) return p_minus1;
  const auto steps = static_cast<double>(i + 1);
  const double tri = static_cast<double>(i) * static_cast<double>(i + 1) / 2.0;
  return p_minus1 * std::pow(h, steps) * (g == 1.0 ? 1.0 : std::pow(g, tri));
}

struct RatioEstimate {
  double h_hat = 0.0;
  double g_hat = 0.0;
};

inline RatioEstimate estimate_ratios(double p_minus1, double p0, double p1) {
  detail::require(p_minus1 > p0 && p0 > p1 && p1 > 0.0,
                  "ratio estimation needs p_minus1 > p0 > p1 > 0");
  return {p0 / p_minus1, (p_minus1 * p1) / (p0 * p0)};
}

/// Small-step limit of P(i+1)/P(i) at redundancy z for an increment dz.
inline double predicted_ratio(double z, double dz, double k1, const ChannelParams& channel) {
  detail::require(z > 0.0 && std::isfinite(z), "redundancy z must be positive");
  detail::require(dz >= 0.0, "dz must be nonnegative");
  detail::require(k1 > 0.0, "k1 must be positive");
  return std::exp(-k1 * straight_line_e0(1.0 / z, channel) * dz);
}

enum class TailRule { geometric, truncate };

inline std::string to_string(TailRule rule) {
  return rule == TailRule::geometric ? "geometric" : "truncate";
}

/// An immutable WER ladder indexed from -1.
class WerSeries {
 public:
  struct Analytic {
    CodeFamilyGeometry geometry;
    ChannelParams channel;
  };
  struct Geometric {
    double p_minus1;
    double h;
    double g;
  };
  struct Table {
    std::vector<double> values;  // values[k] is P(k - 1)
    TailRule tail;
  };
  using Backing = std::variant<Analytic, Geometric, Table>;

  static WerSeries analytic(const CodeFamilyGeometry& geometry, const ChannelParams& channel) {
    geometry.validate();
    WerSeries s(Analytic{geometry, channel});
    // C(-1) must sit below capacity; later members only lower the rate.
    (void)s.p(-1);
    return s;
  }

  static WerSeries geometric(double p_minus1, double h, double g) {
    (void)geometric_p(p_minus1, h, g, -1);
    return WerSeries(Geometric{p_minus1, h, g});
  }

  static WerSeries table(std::vector<double> values, TailRule tail = TailRule::geometric) {
    detail::require(!values.empty(), "WER table is empty");
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double v = values[k];
      detail::require(v > 0.0 && v <= 1.0, "WER table value at index " +
                                               std::to_string(static_cast<long>(k) - 1) +
                                               " is outside (0,1]");
      if (k > 0) {
        const double prev = values[k - 1];
        detail::require(v < prev || (v == 1.0 && prev == 1.0),
                        "WER table must be strictly decreasing (index " +
                            std::to_string(static_cast<long>(k) - 1) + ")");
      }
    }
    detail::require(tail == TailRule::truncate || values.size() >= 2,
                    "geometric tail needs at least two table values");
    return WerSeries(Table{std::move(values), tail});
  }

  const Backing& backing() const { return backing_; }

  /// For finite ladders, the index past which the series is undefined (a
  /// bounded family) or identically zero (a truncated table). Sums stop here.
  std::optional<std::int64_t> last_index() const {
    if (const auto* a = std::get_if<Analytic>(&backing_); a && a->geometry.m_groups) {
      return *a->geometry.m_groups;
    }
    if (const auto* t = std::get_if<Table>(&backing_); t && t->tail == TailRule::truncate) {
      return static_cast<std::int64_t>(t->values.size()) - 1;
    }
    return std::nullopt;
  }

  double p(std::int64_t i) const {
    detail::require(i >= -1, "series index must be >= -1");
    return std::visit([i](const auto& b) { return eval(b, i); }, backing_);
  }

 private:
  explicit WerSeries(Backing b) : backing_(std::move(b)) {}

  static double eval(const Analytic& b, std::int64_t i) {
    if (b.geometry.m_groups && i > *b.geometry.m_groups) {
      throw DomainError("index " + std::to_string(i) + " is past the last family member C(" +
                        std::to_string(*b.geometry.m_groups) + ")");
    }
    return analytic_p(b.geometry, b.channel, i);
  }

  static double eval(const Geometric& b, std::int64_t i) {
    return geometric_p(b.p_minus1, b.h, b.g, i);
  }

  static double eval(const Table& b, std::int64_t i) {
    const auto k = static_cast<std::size_t>(i + 1);
    if (k < b.values.size()) return b.values[k];
    if (b.tail == TailRule::truncate) return 0.0;
    const std::size_t n = b.values.size();
    const double ratio = b.values[n - 1] / b.values[n - 2];
    return b.values[n - 1] * std::pow(ratio, static_cast<double>(k - (n - 1)));
  }

  Backing backing_;
};

/// Probability that the decode at C(i) fails given every earlier attempt
/// failed. Failure events are nested across the family.
inline double conditional_fail(const WerSeries& series, std::int64_t i) {
  detail::require(i >= 0, "conditional failure needs i >= 0");
  const double prev = series.p(i - 1);
  detail::require(prev > 0.0, "P(i-1) is zero; conditional failure undefined");
  return series.p(i) / prev;
}

/// Sum_{i >= from} weight(i) * P(i), truncated when the weighted term drops
/// below kSeriesTolerance or at the end of a finite ladder.
template <typename Weight>
double sum_series(const WerSeries& series, std::int64_t from, Weight weight) {
  const auto last = series.last_index();
  double total = 0.0;
  for (std::int64_t n = 0; n < kSeriesMaxTerms; ++n) {
    const std::int64_t i = from + n;
    if (last && i > *last) return total;
    const double term = weight(i) * series.p(i);
    total += term;
    if (std::abs(term) < kSeriesTolerance) return total;
  }
  throw ConvergenceError("series did not fall below " + std::to_string(kSeriesTolerance) +
                         " within " + std::to_string(kSeriesMaxTerms) + " terms");
}

inline double sum_series(const WerSeries& series, std::int64_t from = -1) {
  return sum_series(series, from, [](std::int64_t) { return 1.0; });
}

// ---------------------------------------------------------------------------
// WER table files: CSV with header `index,wer`, indices from -1 in steps of 1,
// and an optional final `tail=geometric|truncate` directive.

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw DomainError(where + ": cannot parse number '" + text + "'");
  }
}

}  // namespace detail

inline WerSeries read_wer_table(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  std::optional<TailRule> tail;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (!header_seen) {
      detail::require(text == "index,wer", where + ": expected header 'index,wer'");
      header_seen = true;
      continue;
    }
    detail::require(!tail, where + ": data after tail directive");
    if (text.rfind("tail=", 0) == 0) {
      const std::string rule = text.substr(5);
      if (rule == "geometric") {
        tail = TailRule::geometric;
      } else if (rule == "truncate") {
        tail = TailRule::truncate;
      } else {
        throw DomainError(where + ": unknown tail rule '" + rule + "'");
      }
      continue;
    }
    const auto comma = text.find(',');
    detail::require(comma != std::string::npos, where + ": expected 'index,wer'");
    const double index = detail::parse_double(detail::trim(text.substr(0, comma)), where);
    const double expected = static_cast<double>(values.size()) - 1.0;
    detail::require(index == expected,
                    where + ": index must be " + std::to_string(static_cast<long>(expected)));
    values.push_back(detail::parse_double(detail::trim(text.substr(comma + 1)), where));
  }
  detail::require(header_seen, "WER table has no header");
  return WerSeries::table(std::move(values), tail.value_or(TailRule::geometric));
}

inline WerSeries load_wer_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open WER table '" + path + "'");
  return read_wer_table(in);
}

}  // namespace harqiso
