#pragma once

// Tabular / record output shared by the CLI commands: CSV with a header row
// and RFC 4180 quoting, or JSON with insertion-ordered keys. Numbers carry at
// most 12 significant digits in both formats.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "harqiso/protocol_sim.hpp"
#include "harqiso/queueing.hpp"

namespace harqiso::report {

using Json = nlohmann::ordered_json;
using Value = std::variant<std::int64_t, std::uint64_t, double, bool, std::string, Json>;

struct Report {
  std::vector<std::pair<std::string, Value>> fields;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;

  void add(std::string key, Value v) { fields.emplace_back(std::move(key), std::move(v)); }
  bool tabular() const { return !columns.empty(); }
};

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string to_text(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_number(x);
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, Json>) {
          return x.dump();
        } else {
          return std::to_string(x);
        }
      },
      v);
}

inline Json to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(x)) return nullptr;
          return std::strtod(format_number(x).c_str(), nullptr);
        } else {
          return Json(x);
        }
      },
      v);
}

inline void write_csv(const Report& r, std::ostream& out) {
  const auto line = [&out](const auto& cells, auto&& render) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) out << ',';
      out << csv_escape(render(c));
      first = false;
    }
    out << '\n';
  };
  if (r.tabular()) {
    line(r.columns, [](const std::string& s) { return s; });
    for (const auto& row : r.rows) line(row, [](const Value& v) { return to_text(v); });
    return;
  }
  line(r.fields, [](const auto& kv) { return kv.first; });
  line(r.fields, [](const auto& kv) { return to_text(kv.second); });
}

inline Json to_json(const Report& r) {
  Json j = Json::object();
  for (const auto& [k, v] : r.fields) j[k] = to_json(v);
  if (r.tabular()) {
    Json rows = Json::array();
    for (const auto& row : r.rows) {
      Json o = Json::object();
      for (std::size_t c = 0; c < r.columns.size() && c < row.size(); ++c) {
        o[r.columns[c]] = to_json(row[c]);
      }
      rows.push_back(std::move(o));
    }
    j["rows"] = std::move(rows);
  }
  return j;
}

inline void write_json(const Report& r, std::ostream& out) { out << to_json(r).dump(2) << '\n'; }

// ---------------------------------------------------------------------------

inline Report from(const StabilityReport& s) {
  Report r;
  r.add("lambda", s.lambda);
  r.add("mu", s.mu);
  r.add("t_out", s.t_out);
  r.add("stability_sum", s.stability_sum);
  r.add("servers", static_cast<std::int64_t>(s.servers));
  r.add("stable", s.stable);
  r.add("margin", s.margin);
  return r;
}

inline Report from(const SimMetrics& m) {
  Report r;
  r.add("slots", m.slots);
  r.add("arrivals", m.arrivals);
  r.add("delivered", m.delivered);
  r.add("dropped", m.dropped);
  r.add("undetected_errors", m.undetected_errors);
  r.add("decode_attempts", m.decode_attempts);
  r.add("in_system", m.in_system);
  r.add("throughput", m.throughput);
  r.add("mean_queue_len", m.mean_queue_len);
  r.add("max_queue_len", m.max_queue_len);
  r.add("warmup_slots", m.warmup_slots);
  r.add("mean_queue_len_steady", m.mean_queue_len_steady);
  r.add("mean_delay", m.mean_delay);
  Json hist = Json::object();
  for (const auto& [delay, count] : m.delay_histogram) hist[std::to_string(delay)] = count;
  r.add("delay_histogram", hist);
  r.add("eps0", m.eps0);
  r.add("t_eps0", m.t_eps0);
  r.add("queue_departures", m.queue_departures);
  r.add("busy_slots", m.busy_slots);
  r.add("service_rate_empirical", m.service_rate_empirical);
  r.add("service_rate_steady", m.service_rate_steady);
  r.add("mean_t_out_empirical", m.mean_t_out_empirical);
  Json per_server = Json::array();
  for (auto n : m.server_arrivals) per_server.push_back(n);
  r.add("server_arrivals", per_server);
  return r;
}

}  // namespace harqiso::report
