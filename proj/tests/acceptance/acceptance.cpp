// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "harqiso/cli.hpp"
#include "harqiso/harqiso.hpp"

using namespace harqiso;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

SimConfig sim(WerSeries series, std::int64_t slots, int servers = 1, std::uint64_t seed = 2024) {
  SimConfig c{.series = std::move(series)};
  c.slots = slots;
  c.seed = seed;
  c.servers = servers;
  c.algorithm = servers == 1 ? Algorithm::A : Algorithm::B;
  return c;
}

Outcome exponent_identities() {
  Outcome o;
  for (int k = -30; k <= 30; ++k) {
    const auto ch = ChannelParams::from_linear(std::pow(10.0, k / 10.0));
    o.check(std::abs(beta(0.0, ch) - 1.0) <= 1e-12, fmt("beta(0, 1e%g) != 1", k / 10.0));
    o.check(esp_point(0.0, ch).e_sp == 0.0, fmt("E_sp(0) != 0 at 1e%g", k / 10.0));
  }
  const auto ch = ChannelParams::from_linear(0.3453);
  double worst_slope = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double rho = k / 100.0;
    const double d = 1e-5;
    const double slope = (esp_point(rho + d, ch).e0 - esp_point(rho - d, ch).e0) / (2.0 * d);
    worst_slope = std::max(worst_slope, std::abs(slope - esp_point(rho, ch).r_nat));
  }
  o.check(worst_slope <= 1e-6, fmt("dE0/drho off by %g", worst_slope));

  const ChannelLandmarks lm = landmarks(ch);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double r = lm.r_crit + (lm.capacity - lm.r_crit) * k / 50.0;
    double maxform = -1.0;
    for (int j = 0; j <= 10000; ++j) {
      const double rho = j / 10000.0;
      maxform = std::max(maxform, esp_point(rho, ch).e0 - rho * r);
    }
    worst = std::max(worst, std::abs(error_exponent(r, ch) - maxform));
  }
  o.check(worst <= 1e-6, fmt("parametric vs max-form off by %g", worst));
  if (o.ok) o.detail = fmt("slope err %.2g, max-form err %.2g over 50 rates", worst_slope, worst);
  return o;
}

Outcome closed_form_optima() {
  Outcome o;
  const double k0 = 0.8;
  const auto m = maximize_sustainable_p0(k0, 1);
  o.check(std::abs(m.x - 0.5) <= 1e-6, fmt("argmax h = %.9f", m.x));
  o.check(std::abs(m.value - k0 / 4.0) <= 1e-9, fmt("max = %.12f", m.value));
  for (int a : {1, 2, 3, 10}) {
    const double closed = std::pow(a / (a + 1.0), a);
    o.check(std::abs(optimal_ratio(a) - closed) <= 1e-12, fmt("h*(%g) mismatch", a));
    const auto num = maximize_sustainable_p0(k0, a);
    o.check(std::abs(num.x - closed) <= 1e-6, fmt("numeric h*(%g) = %.9f", a, num.x));
  }
  const double big = optimal_ratio(10000);
  o.check(std::abs(big - 0.3679) <= 1e-4, fmt("h*(1e4) = %.6f", big));
  if (o.ok) o.detail = fmt("h=%.7f value=%.10f, h*(1e4)=%.6f", m.x, m.value, big);
  return o;
}

Outcome crc_sizing() {
  Outcome o;
  const int a = crc_overhead(std::ldexp(1.0, -20), 1);
  const int b = crc_overhead(1e-6, 3);
  o.check(a == 21, fmt("(2^-20, 1) -> %g", a));
  o.check(b == 22, fmt("(1e-6, 3) -> %g", b));
  if (o.ok) o.detail = "21 and 22 bits";
  return o;
}

Outcome queueing_closed_forms() {
  Outcome o;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_mu = 0.0;
  double worst_sum = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double h = 0.05 + 0.9 * unit(rng);
    const double p = 0.05 + 0.95 * unit(rng);
    const WerSeries s = WerSeries::geometric(p, h, 1.0);
    worst_mu = std::max(worst_mu, std::abs(service_rate(s) - (1.0 - h)));
    worst_sum = std::max(worst_sum, std::abs(stability_check(s).stability_sum - p / (1.0 - h)));
  }
  o.check(worst_mu <= 1e-9, fmt("mu off by %g", worst_mu));
  o.check(worst_sum <= 1e-9, fmt("stability sum off by %g", worst_sum));
  double worst_phi = 0.0;
  for (int k = 0; k < 20; ++k) {
    OptimizerInputs in;
    in.h_hat = 0.3 + 0.4 * unit(rng);
    in.g_hat = 0.5 + 0.49 * unit(rng);
    in.p0_hat = in.h_hat * (0.05 + 0.9 * unit(rng));
    const double sum =
        stability_check(WerSeries::geometric(in.p0_hat / in.h_hat, in.h_hat, in.g_hat)).stability_sum;
    worst_phi = std::max(worst_phi, std::abs(phi(1.0, in) - sum));
  }
  o.check(worst_phi <= 1e-9, fmt("phi(1) off by %g", worst_phi));
  if (o.ok) o.detail = fmt("mu err %.2g, sum err %.2g, phi(1) err %.2g", worst_mu, worst_sum, worst_phi);
  return o;
}

Outcome simulation_vs_theory() {
  Outcome o;
  const SimMetrics m = run(sim(WerSeries::geometric(0.45, 0.5, 1.0), 1000000));
  o.check(std::abs(m.service_rate_empirical - 0.5) <= 0.01,
          fmt("service rate %.5f", m.service_rate_empirical));
  o.check(m.throughput >= 0.999, fmt("throughput %.6f", m.throughput));
  o.check(std::abs(m.mean_t_out_empirical - 2.0) <= 0.04,
          fmt("t_out %.5f", m.mean_t_out_empirical));
  const SimMetrics u = run(sim(WerSeries::geometric(0.55, 0.5, 1.0), 1000000));
  o.check(static_cast<double>(u.in_system) >= 0.03 * 1e6, fmt("unstable queue %g", u.in_system));
  if (o.ok) {
    o.detail = fmt("mu=%.4f t_out=%.4f throughput=%.6f", m.service_rate_empirical,
                   m.mean_t_out_empirical, m.throughput) +
               fmt(", unstable queue %g", static_cast<double>(u.in_system));
  }
  return o;
}

Outcome stability_dichotomy() {
  Outcome o;
  int correct = 0;
  std::string classes;
  for (double h : {0.3, 0.4, 0.5, 0.6, 0.7}) {
    for (double target : {0.9, 1.1}) {
      const WerSeries s = WerSeries::geometric(target * (1.0 - h), h, 1.0);
      const bool stable = stability_check(s).stable;
      const std::int64_t slots = 1000000;
      Simulator run_sim(sim(s, slots, 1, 7 + static_cast<std::uint64_t>(h * 100)));
      double first = 0.0;
      double second = 0.0;
      while (run_sim.slot() < slots) {
        run_sim.step();
        const auto len = static_cast<double>(run_sim.queue_length());
        (run_sim.slot() <= slots / 2 ? first : second) += len;
      }
      first /= static_cast<double>(slots / 2);
      second /= static_cast<double>(slots - slots / 2);
      const bool bounded = (first + second) / 2.0 < 50.0;
      const bool growing = !bounded && second > 1.5 * first &&
                           static_cast<double>(run_sim.queue_length()) > 1000.0;
      const bool right = stable ? bounded : growing;
      correct += right;
      classes += fmt(" h=%.1f/%.1f:", h, target) + (bounded ? "bounded" : growing ? "growing" : "?");
    }
  }
  o.check(correct == 10, fmt("%g/10 classified", correct));
  o.detail = fmt("%g/10 correct;", correct) + classes;
  return o;
}

Outcome multi_server() {
  Outcome o;
  for (int a : {2, 4}) {
    const double p = 0.6;
    SimConfig c = sim(WerSeries::geometric(p, std::pow(0.5, 1.0 / a), 1.0), 400000, a);
    c.empty_queue_boost = false;
    const SimMetrics m = run(c);
    const double expected = p / a;
    // round robin splits a Binomial(slots, p) count of queue entries a ways
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(c.slots)) / a;
    for (int s = 0; s < a; ++s) {
      const double rate = static_cast<double>(m.server_arrivals[static_cast<std::size_t>(s)]) /
                          static_cast<double>(c.slots);
      o.check(std::abs(rate - expected) <= 3.0 * sigma,
              fmt("a=%g server %g rate %.5f", a, s, rate));
    }
  }
  // a = 2 at h* = 4/9, 95% of the budget: subblock ratio 2/3
  const double p_minus1 = 2.0 * (1.0 / 3.0) * 0.95;
  const WerSeries ladder = WerSeries::geometric(p_minus1, 2.0 / 3.0, 1.0);
  const double p0 = ladder.p(1);
  o.check(p0 > 0.25, fmt("aggregate P0 %.4f", p0));
  o.check(stability_check(ladder, 2).stable, "two-server ladder not stable");
  const SimMetrics two = run(sim(ladder, 400000, 2));
  o.check(two.mean_queue_len_steady < 50.0 && two.throughput >= 0.999,
          fmt("two servers: queue %.1f throughput %.5f", two.mean_queue_len_steady, two.throughput));
  // the same (P(-1), P(0)) on one server violates the single-server bound
  const WerSeries single = WerSeries::geometric(p_minus1, 4.0 / 9.0, 1.0);
  o.check(!stability_check(single, 1).stable, "single-server ladder unexpectedly stable");
  const SimMetrics one = run(sim(single, 400000, 1));
  o.check(static_cast<double>(one.in_system) > 1000.0,
          fmt("single server queue %g", static_cast<double>(one.in_system)));
  if (o.ok) {
    o.detail = fmt("aggregate P0=%.4f > 0.25 stable with a=2 (queue %.2f); one server queue %g",
                   p0, two.mean_queue_len_steady, static_cast<double>(one.in_system));
  }
  return o;
}

Outcome optimizer_equivalence() {
  Outcome o;
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    OptimizerInputs in;
    in.h_hat = 0.3 + 0.4 * unit(rng);
    in.g_hat = 0.5 + 0.49 * unit(rng);
    in.p0_hat = in.h_hat * (0.2 + 0.6 * unit(rng));
    in.theta = 0.001 + 0.099 * unit(rng);
    double best_r = in.r_min;
    double best = HUGE_VAL;
    for (int j = 0; j <= 7900; ++j) {
      const double r = in.r_min + 1e-3 * j;
      const double v = block_objective(r, in);
      if (v < best) {
        best = v;
        best_r = r;
      }
    }
    worst = std::max(worst, std::abs(optimize_r(in).r_star - best_r));
  }
  o.check(worst <= 2e-3, fmt("worst |r' - brute| = %g", worst));
  OptimizerInputs fig;
  fig.p0_hat = 0.25;
  fig.h_hat = 0.5;
  fig.g_hat = 0.8;
  fig.theta = 0.02;
  const OptimizerResult res = optimize_r(fig);
  o.check(!res.at_bound, "Fig. 4 objective minimum at a bound");
  // unimodal: the sampled curve falls to the minimum and rises after it
  bool unimodal = true;
  for (std::size_t k = 1; k < res.curve.size(); ++k) {
    const bool before = res.curve[k].r <= res.r_star;
    const double d = res.curve[k].objective - res.curve[k - 1].objective;
    if (before ? d > 0.0 : (res.curve[k - 1].r >= res.r_star && d < 0.0)) unimodal = false;
  }
  o.check(unimodal, "objective curve not unimodal");
  if (o.ok) o.detail = fmt("worst gap %.2g over 20 instances; interior r'=%.4f", worst, res.r_star);
  return o;
}

Outcome g_effect() {
  Outcome o;
  double best_p0 = 0.0;
  for (int k = 1; k < 100000; ++k) {
    const double p = k * 1e-5;
    if (stability_check(WerSeries::geometric(p, 0.5, 0.8)).stability_sum <= 1.0) {
      best_p0 = std::max(best_p0, p * 0.5);
    }
  }
  o.check(best_p0 > 0.25, fmt("max stable P0 = %.5f", best_p0));
  if (o.ok) o.detail = fmt("max P0 with sum <= 1 is %.5f (> 0.25)", best_p0);
  return o;
}

std::string cli_output(const std::vector<std::string>& argv) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_main(argv, out, err);
  return std::to_string(code) + "\n" + out.str() + err.str();
}

Outcome determinism() {
  Outcome o;
  const std::vector<std::vector<std::string>> runs{
      {"simulate", "--p-1", "0.45", "--h", "0.5", "--slots", "200000", "--seed", "5", "--format",
       "json"},
      {"simulate", "--p-1", "0.6", "--h", "0.7", "--servers", "3", "--slots", "200000", "--dk",
       "5", "--seed", "6", "--format", "json"},
      {"sweep", "--k-info", "64", "--n-base", "192", "--dn", "16", "--snr-start", "-6",
       "--snr-stop", "-3.5", "--snr-step", "0.25", "--slots", "50000", "--seed", "8"},
  };
  for (const auto& argv : runs) {
    const std::string a = cli_output(argv);
    o.check(a.rfind("0\n", 0) == 0, argv[0] + " failed: " + a);
    o.check(a == cli_output(argv), argv[0] + " output differs between runs");
  }
  std::ostringstream t1;
  std::ostringstream t2;
  const SimConfig c = sim(WerSeries::geometric(0.5, 0.5, 0.8), 100000);
  const SimMetrics m1 = run(c, &t1, 1000);
  const SimMetrics m2 = run(c, &t2, 1000);
  o.check(m1 == m2 && t1.str() == t2.str(), "metrics or trace differ between runs");
  if (o.ok) o.detail = "2 simulate runs, 1 sweep, 1 trace: identical bytes";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "exponent identities", 1.0, exponent_identities},
      {2, "closed-form optima", 1.0, closed_form_optima},
      {3, "CRC sizing", 1.0, crc_sizing},
      {4, "queueing closed forms", 1.0, queueing_closed_forms},
      {5, "simulation vs theory", 30.0, simulation_vs_theory},
      {6, "stability dichotomy", 120.0, stability_dichotomy},
      {7, "multiple HARQ servers", 60.0, multi_server},
      {8, "optimizer oracle equivalence", 5.0, optimizer_equivalence},
      {9, "g-effect", 1.0, g_effect},
      {10, "determinism", 120.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_s) o.check(false, fmt("took %.2f s, limit %.0f s", secs, c.limit_s));
    failed += !o.ok;
    std::printf("%s criterion %2d  %-30s %7.2f s  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
