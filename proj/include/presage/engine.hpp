#ifndef PRESAGE_ENGINE_HPP
#define PRESAGE_ENGINE_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "presage/mdl.hpp"

namespace presage::engine {

enum class MessageSign : std::uint8_t { positive, anti };

// Timestamped short-term prediction exchanged between processes. An anti
// message equals its positive twin except for the sign.
struct VirtualMessage {
    std::uint64_t id = 0;
    std::string src;
    std::string dst;
    double send_ts = 0.0;  // sender LVT at send
    double recv_ts = 0.0;  // receiver LVT on processing, >= send_ts
    double value = 0.0;    // predicted load, messages/second
    MessageSign sign = MessageSign::positive;

    VirtualMessage make_anti() const;
};

struct StateEntry {
    double lvt = 0.0;
    double value = 0.0;
    bool committed = false;       // true once wallclock has reached lvt
    std::uint64_t cause = 0;      // id of the message that produced it
};

enum class VerifyOutcome { in_tolerance, out_of_tolerance };

struct VerifyResult {
    VerifyOutcome outcome = VerifyOutcome::out_of_tolerance;
    std::optional<double> predicted;
    std::vector<VirtualMessage> anti_messages;  // from a tolerance rollback
    bool rolled_back = false;
};

// Per-node optimistic process: caches predictions in a state queue ahead of
// wallclock, forwards transformed messages downstream and rolls back on
// stragglers, anti-messages or tolerance violations.
class LogicalProcess {
public:
    std::string id;
    double tolerance = 500.0;                       // theta, messages/second
    std::function<double(double)> model;            // input -> output; identity if unset
    std::vector<std::string> downstream;
    double link_latency = 1.0;

    double lvt = 0.0;
    std::vector<StateEntry> state_queue;            // strictly ordered by lvt
    std::vector<VirtualMessage> pending;            // delivered, not yet processed
    std::vector<VirtualMessage> processed;          // retained for rollback
    struct SavedSend {
        VirtualMessage msg;
        std::uint64_t cause = 0;                    // processed message behind the send
    };
    std::vector<SavedSend> saved_sends;
    std::uint64_t rollback_count = 0;

    // Delivers one message, then drains every pending message whose receive
    // time lies within the optimism window [.., wallclock + window]. Returns
    // messages to route: forwards plus any rollback anti-messages.
    std::vector<VirtualMessage> process(const VirtualMessage& m, double wallclock,
                                        double window, std::uint64_t& id_counter);

    // Processes pending messages that the sliding window has newly admitted.
    std::vector<VirtualMessage> drain(double wallclock, double window,
                                      std::uint64_t& id_counter);

    // Removes uncommitted state entries with lvt > to_time, rewinds lvt and
    // returns one anti message per saved send with send_ts > to_time.
    // Causality rollbacks re-pend the undone input messages for re-execution;
    // tolerance rollbacks discard them (their downstream effects are being
    // cancelled by the antis). Throws std::logic_error when to_time lies
    // below the last committed entry.
    enum class RollbackKind { causality, tolerance };
    std::vector<VirtualMessage> rollback(double to_time,
                                         RollbackKind kind = RollbackKind::causality);

    // Compares the real value against the cached prediction at `wallclock`.
    // In tolerance: the matching entry is committed once wallclock reaches
    // its lvt. Out of tolerance with a prediction present: tolerance rollback
    // to wallclock, then a committed entry re-primed from the real value.
    VerifyResult verify(double real_value, double wallclock, double step);

    // Value of the state entry with the greatest lvt within
    // [t - step/2, t + step/2]; absent when no entry lies in the window.
    std::optional<double> query_prediction(double t, double step) const;

    // Marks entries with lvt <= wallclock committed; reports them in order.
    void commit_up_to(double wallclock, std::vector<StateEntry>* newly_committed = nullptr);

    // Every entry that transitioned to committed, in transition order; the
    // engine drains this once per tick for the event log.
    std::vector<StateEntry> commit_log;

    // Discards committed entries, saved sends and processed messages older
    // than gvt - step. Returns the number of state entries freed.
    std::size_t fossil_collect(double gvt, double step);

    // Per-event processing cost proxy accumulated by process(); the engine
    // samples and resets these each tick.
    std::uint64_t events_processed = 0;
    double cost_accumulator = 0.0;

    // Invoked after every rollback with (to_time, anti count).
    std::function<void(double, std::size_t)> on_rollback;

private:
    void execute(const VirtualMessage& m, std::vector<VirtualMessage>& out,
                 std::uint64_t& id_counter);
    void insert_entry(double entry_lvt, double value, std::uint64_t cause);
    void mark_committed(StateEntry& entry);
};

// Edge process: observes real samples, extrapolates and injects predictions.
class DrivingProcess {
public:
    std::string id;
    std::string target;                 // first logical process
    mdl::Hypothesis hypothesis;
    double step = 20.0;                 // prediction step, seconds
    double ratio = 1.0;                 // virtual messages per real observation
    double generation_cap = 500.0;      // max emissions per tick
    double lvt = 0.0;
    std::size_t history_limit = 1024;

    std::deque<mdl::TimedSample> history;

    // Appends the observation and emits up to `ratio` predictions, each
    // advancing lvt by `step`, stopping at the sliding window edge
    // (lvt + step > wallclock + window).
    std::vector<VirtualMessage> observe(double wallclock, double value, double window,
                                        std::uint64_t& id_counter);

private:
    double emission_credit_ = 0.0;
};

struct ThetaSchedule {
    double start = 500.0;
    double factor = 0.8;      // multiplicative tightening
    double interval = 300.0;  // seconds between tightenings

    double at(double wallclock) const;
};

enum class WorkloadKind {
    constant,
    linear,
    linear_noise,
    sine,
    random_walk,
    two_phase,
    csv,
};

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::random_walk;
    double base = 1000.0;
    double slope = 0.0;       // linear
    double amplitude = 0.0;   // sine, two_phase jitter
    double period = 600.0;    // sine
    double noise = 0.0;       // linear_noise, sine
    double sigma = 2.0;       // random_walk
    double low = 0.0;         // two_phase quiet level
    double segment = 200.0;   // two_phase segment length, seconds
    std::string file;         // csv
};

struct TopologySpec {
    int chain = 5;            // AN-1 .. AN-<chain>
    double latency = 1.0;     // ticks per hop
};

struct ScenarioConfig {
    double lambda = 200.0;    // sliding window lookahead, seconds
    double step = 20.0;       // virtual message prediction step, seconds
    ThetaSchedule tolerance;
    double ratio = 1.0;
    double generation_rate = 0.5;  // virtual messages per millisecond (per-tick cap)
    TopologySpec topology;
    WorkloadSpec workload;
    std::uint64_t seed = 1;
    bool fossil_collection = true;
    int duration = 3600;      // ticks (1 s simulated each)
    std::size_t smoothing = 8;
    std::string report_node;  // defaults to the last chain node

    void validate() const;
};

struct Event {
    int tick = 0;
    std::string type;
    std::string src;
    std::string dst;
    double ts = 0.0;
    double value = 0.0;
    std::string sign;
};

struct VerifyRecord {
    std::string node;
    std::optional<double> predicted;
    double actual = 0.0;
    bool in_tolerance = false;
};

struct TickStats {
    int tick = 0;
    double theta = 0.0;
    double workload_value = 0.0;
    std::vector<double> lvt;              // per node
    std::vector<std::size_t> queue_len;   // state queue sizes per node
    std::vector<VerifyRecord> verifies;
    std::uint64_t events_processed = 0;
    double cost_sum = 0.0;
    std::uint64_t cum_virtual = 0;
    std::uint64_t cum_anti = 0;
    std::uint64_t cum_rollbacks = 0;
    std::uint64_t fossil_freed = 0;
};

struct EventTrace {
    double lambda = 0.0;
    double step = 0.0;
    double tolerance_interval = 0.0;
    int duration = 0;
    std::vector<std::string> node_ids;
    std::string report_node;
    std::vector<Event> events;
    std::vector<TickStats> ticks;
    std::vector<double> workload;

    // Committed (lvt, value) sequence per node, from commit events.
    std::vector<std::pair<double, double>> committed(const std::string& node) const;
};

// Deterministic given the seed. Wallclock advances in 1 s ticks; each tick
// feeds the driving process, delivers in-flight messages ordered by
// (recv_ts, sender, id), verifies real traffic against tolerance, commits
// reached entries and optionally fossil-collects.
EventTrace run(const ScenarioConfig& config);

// One JSON object per line: tick, type, src, dst, ts, value, sign.
std::string to_jsonl(const std::vector<Event>& events);

std::vector<double> generate_workload(const WorkloadSpec& spec, std::uint64_t seed,
                                      int duration);

}  // namespace presage::engine

#endif
