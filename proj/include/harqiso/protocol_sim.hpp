#pragma once

// Slotted simulation of isochronous HARQ-II transmission. Every slot carries
// one new packet on the normal channel and one retransmission group per HARQ
// server on the ARQ channel. Packets that fail to decode wait in a FCFS queue
// and gain one group per slot until they decode.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "harqiso/errors.hpp"
#include "harqiso/rng.hpp"
#include "harqiso/wer_model.hpp"

namespace harqiso {

enum class Algorithm { A, B };

inline std::string to_string(Algorithm a) { return a == Algorithm::A ? "A" : "B"; }

enum class DecodeOutcome { success, detected_failure };

struct Packet {
  std::uint64_t id = 0;
  std::int64_t arrival_slot = 0;
  double latent_draw = 0.0;     // one uniform couples all decode attempts
  std::int64_t code_index = -1; // last code the packet was decoded at
  std::int64_t decodes = 0;
  std::int64_t service_slots = 0;  // groups received while queued
  std::optional<std::int64_t> departed_slot;
};

/// Nested failure events: the packet fails at C(i) iff its latent draw is
/// below P(i), so recovery is monotone along the ladder.
inline DecodeOutcome decode_outcome(const Packet& packet, std::int64_t code_index,
                                    const WerSeries& series) {
  return packet.latent_draw < series.p(code_index) ? DecodeOutcome::detected_failure
                                                   : DecodeOutcome::success;
}

/// Round-robin placement of the k-th packet to enter any server queue.
inline int dispatch_b(std::uint64_t entry_ordinal, int servers) {
  detail::require(servers >= 1, "servers must be positive");
  return static_cast<int>(entry_ordinal % static_cast<std::uint64_t>(servers));
}

struct SimConfig {
  WerSeries series;
  Algorithm algorithm = Algorithm::A;
  int servers = 1;
  std::int64_t slots = 1;
  std::uint64_t seed = 1;
  int dk = 0;                                // CRC bits; 0 disables undetected errors
  double eps0 = 1e-3;                        // delay quantile level for t_eps0
  std::optional<std::size_t> queue_cap{};    // per server
  bool empty_queue_boost = true;
  double warmup_fraction = 0.01;

  void validate() const {
    detail::require(servers >= 1, "servers must be positive");
    detail::require(algorithm == Algorithm::B || servers == 1,
                    "algorithm A runs a single HARQ server");
    detail::require(slots >= 1, "slots must be positive");
    detail::require(dk >= 0 && dk <= 62, "dk must lie in [0, 62]");
    detail::require(eps0 > 0.0 && eps0 < 1.0, "eps0 must lie in (0,1)");
    detail::require(!queue_cap || *queue_cap >= 1, "queue cap must be positive");
    detail::require(warmup_fraction >= 0.0 && warmup_fraction < 1.0,
                    "warm-up fraction must lie in [0,1)");
  }
};

struct SimMetrics {
  std::int64_t slots = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t undetected_errors = 0;
  std::uint64_t decode_attempts = 0;
  std::uint64_t in_system = 0;
  double throughput = 0.0;
  double mean_queue_len = 0.0;
  std::uint64_t max_queue_len = 0;
  std::int64_t warmup_slots = 0;
  double mean_queue_len_steady = 0.0;
  double mean_delay = 0.0;
  std::map<std::int64_t, std::uint64_t> delay_histogram;
  double eps0 = 0.0;
  std::int64_t t_eps0 = 0;
  std::uint64_t queue_departures = 0;
  std::uint64_t busy_slots = 0;
  double service_rate_empirical = 0.0;
  double service_rate_steady = 0.0;
  double mean_t_out_empirical = 0.0;
  std::vector<std::uint64_t> server_arrivals;

  bool operator==(const SimMetrics&) const = default;
};

class Simulator {
 public:
  explicit Simulator(SimConfig config)
      : config_(std::move(config)),
        latent_(config_.seed, 0),
        undetected_(config_.seed, 1) {
    config_.validate();
    queues_.resize(static_cast<std::size_t>(config_.servers));
    server_arrivals_.assign(queues_.size(), 0);
    warmup_slots_ = static_cast<std::int64_t>(
        std::floor(config_.warmup_fraction * static_cast<double>(config_.slots)));
    undetected_p_ = config_.dk > 0 ? std::ldexp(1.0, -config_.dk) : 0.0;
  }

  /// Writes `slot,event,packet_id,code_index,queue_len` rows for slots below
  /// `max_slots`.
  void set_trace(std::ostream* out, std::int64_t max_slots) {
    trace_ = out;
    trace_slots_ = max_slots;
    if (trace_) *trace_ << "slot,event,packet_id,code_index,queue_len\n";
  }

  std::int64_t slot() const { return slot_; }
  const SimConfig& config() const { return config_; }
  const std::deque<Packet>& queue(int server) const {
    return queues_.at(static_cast<std::size_t>(server));
  }

  std::size_t queue_length() const {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.size();
    return n;
  }

  /// Advances one slot: retransmission groups to every non-empty queue head,
  /// then the new packet on the normal channel.
  void step() {
    const std::int64_t t = slot_;
    const bool steady = t >= warmup_slots_;
    bool all_empty = true;
    for (const auto& q : queues_) all_empty = all_empty && q.empty();

    for (auto& q : queues_) {
      if (q.empty()) continue;
      ++busy_slots_;
      if (steady) ++busy_slots_steady_;
      Packet& head = q.front();
      ++head.code_index;
      ++head.service_slots;
      trace(t, "retx", head);
      if (attempt(head) != Attempt::failure) {
        ++queue_departures_;
        if (steady) ++queue_departures_steady_;
        service_slots_total_ += static_cast<std::uint64_t>(head.service_slots);
        depart(head, t);
        q.pop_front();
      }
    }

    Packet fresh;
    fresh.id = arrivals_++;
    fresh.arrival_slot = t;
    fresh.latent_draw = latent_.next();
    // The idle ARQ channel extends the new packet straight to C(a-1).
    fresh.code_index = config_.empty_queue_boost && all_empty ? config_.servers - 1 : -1;
    trace(t, "tx", fresh);
    if (attempt(fresh) != Attempt::failure) {
      depart(fresh, t);
    } else {
      const int server = dispatch_b(queue_entries_++, config_.servers);
      auto& q = queues_[static_cast<std::size_t>(server)];
      if (config_.queue_cap && q.size() >= *config_.queue_cap) {
        ++dropped_;
        trace(t, "drop", fresh);
      } else {
        ++server_arrivals_[static_cast<std::size_t>(server)];
        q.push_back(fresh);
        trace(t, "enqueue", fresh);
      }
    }

    const std::size_t len = queue_length();
    queue_len_sum_ += static_cast<double>(len);
    if (steady) queue_len_sum_steady_ += static_cast<double>(len);
    max_queue_len_ = std::max<std::uint64_t>(max_queue_len_, len);
    ++slot_;
  }

  void run_to_end() {
    while (slot_ < config_.slots) step();
  }

  SimMetrics metrics() const {
    SimMetrics m;
    m.slots = slot_;
    m.arrivals = arrivals_;
    m.delivered = delivered_;
    m.dropped = dropped_;
    m.undetected_errors = undetected_errors_;
    m.decode_attempts = decode_attempts_;
    m.in_system = queue_length();
    m.throughput = slot_ > 0 ? static_cast<double>(delivered_) / static_cast<double>(slot_) : 0.0;
    m.mean_queue_len = slot_ > 0 ? queue_len_sum_ / static_cast<double>(slot_) : 0.0;
    m.max_queue_len = max_queue_len_;
    m.warmup_slots = warmup_slots_;
    const std::int64_t steady_slots = slot_ - std::min(slot_, warmup_slots_);
    m.mean_queue_len_steady =
        steady_slots > 0 ? queue_len_sum_steady_ / static_cast<double>(steady_slots) : 0.0;
    m.mean_delay = delivered_ > 0 ? delay_sum_ / static_cast<double>(delivered_) : 0.0;
    m.delay_histogram = delay_histogram_;
    m.eps0 = config_.eps0;
    m.t_eps0 = delay_quantile(config_.eps0);
    m.queue_departures = queue_departures_;
    m.busy_slots = busy_slots_;
    m.service_rate_empirical =
        busy_slots_ > 0 ? static_cast<double>(queue_departures_) / static_cast<double>(busy_slots_)
                        : 0.0;
    m.service_rate_steady = busy_slots_steady_ > 0
                                ? static_cast<double>(queue_departures_steady_) /
                                      static_cast<double>(busy_slots_steady_)
                                : 0.0;
    m.mean_t_out_empirical = queue_departures_ > 0
                                 ? static_cast<double>(service_slots_total_) /
                                       static_cast<double>(queue_departures_)
                                 : 0.0;
    m.server_arrivals = server_arrivals_;
    return m;
  }

 private:
  enum class Attempt { success, failure, undetected };

  double ladder(std::int64_t i) {
    const auto k = static_cast<std::size_t>(i + 1);
    while (ladder_.size() <= k) {
      ladder_.push_back(config_.series.p(static_cast<std::int64_t>(ladder_.size()) - 1));
    }
    return ladder_[k];
  }

  Attempt attempt(Packet& p) {
    ++p.decodes;
    ++decode_attempts_;
    if (!(p.latent_draw < ladder(p.code_index))) return Attempt::success;
    // A detected failure slips past the CRC with probability 2^-dk.
    if (undetected_p_ > 0.0 && undetected_.next() < undetected_p_) {
      ++undetected_errors_;
      trace(slot_, "undetected", p);
      return Attempt::undetected;
    }
    return Attempt::failure;
  }

  void depart(Packet& p, std::int64_t t) {
    p.departed_slot = t;
    ++delivered_;
    const std::int64_t delay = t - p.arrival_slot;
    ++delay_histogram_[delay];
    delay_sum_ += static_cast<double>(delay);
    trace(t, "depart", p);
  }

  std::int64_t delay_quantile(double eps0) const {
    if (delivered_ == 0) return 0;
    const double need = (1.0 - eps0) * static_cast<double>(delivered_);
    std::uint64_t cum = 0;
    for (const auto& [delay, count] : delay_histogram_) {
      cum += count;
      if (static_cast<double>(cum) >= need - 1e-9) return delay;
    }
    return delay_histogram_.rbegin()->first;
  }

  void trace(std::int64_t t, const char* event, const Packet& p) {
    if (!trace_ || t >= trace_slots_) return;
    *trace_ << t << ',' << event << ',' << p.id << ',' << p.code_index << ','
            << queue_length() << '\n';
  }

  SimConfig config_;
  UniformStream latent_;
  UniformStream undetected_;
  double undetected_p_ = 0.0;
  std::vector<double> ladder_;
  std::vector<std::deque<Packet>> queues_;
  std::vector<std::uint64_t> server_arrivals_;

  std::int64_t slot_ = 0;
  std::int64_t warmup_slots_ = 0;
  std::uint64_t arrivals_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t undetected_errors_ = 0;
  std::uint64_t decode_attempts_ = 0;
  std::uint64_t queue_entries_ = 0;
  std::uint64_t queue_departures_ = 0;
  std::uint64_t queue_departures_steady_ = 0;
  std::uint64_t busy_slots_ = 0;
  std::uint64_t busy_slots_steady_ = 0;
  std::uint64_t service_slots_total_ = 0;
  std::uint64_t max_queue_len_ = 0;
  double queue_len_sum_ = 0.0;
  double queue_len_sum_steady_ = 0.0;
  double delay_sum_ = 0.0;
  std::map<std::int64_t, std::uint64_t> delay_histogram_;

  std::ostream* trace_ = nullptr;
  std::int64_t trace_slots_ = 0;
};

/// Runs `config.slots` slots from a fresh state. Deterministic in the seed.
inline SimMetrics run(const SimConfig& config, std::ostream* trace = nullptr,
                      std::int64_t trace_slots = 0) {
  Simulator sim(config);
  if (trace) sim.set_trace(trace, trace_slots);
  sim.run_to_end();
  return sim.metrics();
}

}  // namespace harqiso
