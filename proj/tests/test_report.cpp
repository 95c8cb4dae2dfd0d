#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "harqiso/report.hpp"

using namespace harqiso;
using namespace harqiso::report;

namespace {

// Minimal RFC 4180 reader for the round-trip checks.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows(1);
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      rows.back().push_back(cell);
      cell.clear();
    } else if (c == '\n') {
      rows.back().push_back(cell);
      cell.clear();
      rows.emplace_back();
    } else {
      cell += c;
    }
  }
  if (rows.back().empty()) rows.pop_back();
  return rows;
}

}  // namespace

TEST(FormatNumber, TwelveSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  EXPECT_EQ(format_number(123456789012345.0), "1.23456789012e+14");
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_number(-HUGE_VAL), "-inf");
}

TEST(CsvEscape, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("two\nlines"), "\"two\nlines\"");
}

TEST(WriteCsv, RecordIsHeaderPlusOneRow) {
  std::ostringstream out;
  write_csv(from(stability_check(WerSeries::geometric(0.4, 0.5, 1.0))), out);
  const auto rows = parse_csv(out.str());
  ASSERT_EQ(rows.size(), 2u);
  const std::vector<std::string> header{"lambda", "mu",     "t_out", "stability_sum",
                                        "servers", "stable", "margin"};
  EXPECT_EQ(rows[0], header);
  EXPECT_EQ(rows[1][0], "0.4");
  EXPECT_EQ(rows[1][3], "0.8");
  EXPECT_EQ(rows[1][4], "1");
  EXPECT_EQ(rows[1][5], "true");
}

TEST(WriteCsv, TableRoundTripsToTwelveDigits) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> exp10(-30.0, 30.0);
  Report r;
  r.columns = {"x", "label", "n"};
  std::vector<double> xs;
  for (int k = 0; k < 200; ++k) {
    const double x = std::pow(10.0, exp10(rng)) * (k % 2 ? -1.0 : 1.0);
    xs.push_back(x);
    r.rows.push_back({x, std::string(k % 3 ? "a,\"b\"" : "plain"), std::int64_t{k}});
  }
  std::ostringstream out;
  write_csv(r, out);
  const auto rows = parse_csv(out.str());
  ASSERT_EQ(rows.size(), 201u);
  for (int k = 0; k < 200; ++k) {
    const auto& row = rows[static_cast<std::size_t>(k) + 1];
    ASSERT_EQ(row.size(), 3u);
    EXPECT_NEAR(std::stod(row[0]) / xs[static_cast<std::size_t>(k)], 1.0, 1e-11);
    EXPECT_EQ(row[0], format_number(std::stod(row[0])));
    EXPECT_EQ(row[1], k % 3 ? "a,\"b\"" : "plain");
    EXPECT_EQ(std::stoi(row[2]), k);
  }
}

TEST(ToJson, KeysKeepInsertionOrder) {
  Report r;
  r.add("zeta", 1.0);
  r.add("alpha", std::string("x"));
  r.add("mid", true);
  const std::string text = to_json(r).dump();
  EXPECT_EQ(text, R"({"zeta":1.0,"alpha":"x","mid":true})");
}

TEST(ToJson, NumbersAreRoundedAndNonfiniteIsNull) {
  Report r;
  r.add("third", 1.0 / 3.0);
  r.add("bad", std::numeric_limits<double>::quiet_NaN());
  const Json j = to_json(r);
  EXPECT_EQ(j["third"].get<double>(), 0.333333333333);
  EXPECT_TRUE(j["bad"].is_null());
}

TEST(ToJson, SimMetricsCarriesEveryField) {
  SimConfig c{.series = WerSeries::geometric(0.45, 0.5, 1.0)};
  c.slots = 1000;
  const Json j = to_json(from(run(c)));
  for (const char* key :
       {"slots", "arrivals", "delivered", "dropped", "undetected_errors", "decode_attempts",
        "in_system", "throughput", "mean_queue_len", "max_queue_len", "warmup_slots",
        "mean_queue_len_steady", "mean_delay", "delay_histogram", "eps0", "t_eps0",
        "queue_departures", "busy_slots", "service_rate_empirical", "service_rate_steady",
        "mean_t_out_empirical", "server_arrivals"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.size(), 22u);
  EXPECT_EQ(j["slots"].get<std::int64_t>(), 1000);
  EXPECT_TRUE(j["delay_histogram"].is_object());
}

TEST(ToJson, TableBecomesRowsArray) {
  Report r;
  r.add("command", std::string("sweep"));
  r.columns = {"a", "b"};
  r.rows.push_back({1.5, std::string("x")});
  r.rows.push_back({2.5, std::string("y")});
  const Json j = to_json(r);
  ASSERT_TRUE(j["rows"].is_array());
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["rows"][1]["a"].get<double>(), 2.5);
  EXPECT_EQ(j["rows"][0]["b"].get<std::string>(), "x");
}
