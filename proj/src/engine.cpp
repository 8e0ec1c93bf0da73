#include "presage/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "presage/io.hpp"

namespace presage::engine {

VirtualMessage VirtualMessage::make_anti() const {
    VirtualMessage a = *this;
    a.sign = MessageSign::anti;
    return a;
}

namespace {

double apply_model(const std::function<double(double)>& model, double v) {
    return model ? model(v) : v;
}

}  // namespace

std::vector<VirtualMessage> LogicalProcess::process(const VirtualMessage& m, double wallclock,
                                                    double window,
                                                    std::uint64_t& id_counter) {
    if (m.dst != id) {
        throw std::invalid_argument("message for " + m.dst + " delivered to " + id);
    }
    std::vector<VirtualMessage> out;
    if (m.sign == MessageSign::anti) {
        auto pit = std::find_if(pending.begin(), pending.end(),
                                [&](const VirtualMessage& p) { return p.id == m.id; });
        if (pit != pending.end()) {
            // twin not yet processed: both vanish, no rollback
            pending.erase(pit);
            return out;
        }
        auto it = std::find_if(processed.begin(), processed.end(),
                               [&](const VirtualMessage& p) { return p.id == m.id; });
        if (it == processed.end()) {
            // the twin was already discarded by a tolerance rollback here;
            // its effects are gone, so the anti has nothing left to cancel
            return out;
        }
        VirtualMessage twin = *it;
        if (twin.recv_ts < lvt) {
            auto antis = rollback(twin.recv_ts, RollbackKind::causality);
            out.insert(out.end(), antis.begin(), antis.end());
        }
        // cancel the twin's own effects
        processed.erase(std::find_if(processed.begin(), processed.end(),
                                     [&](const VirtualMessage& p) { return p.id == m.id; }));
        auto eit = std::find_if(state_queue.begin(), state_queue.end(),
                                [&](const StateEntry& e) { return e.cause == twin.id; });
        if (eit != state_queue.end()) {
            if (eit->committed) {
                throw std::logic_error("anti-message cancels a committed entry at " + id);
            }
            state_queue.erase(eit);
        }
        for (auto sit = saved_sends.begin(); sit != saved_sends.end();) {
            if (sit->cause == twin.id) {
                out.push_back(sit->msg.make_anti());
                sit = saved_sends.erase(sit);
            } else {
                ++sit;
            }
        }
    } else {
        if (m.recv_ts < lvt) {
            auto antis = rollback(m.recv_ts, RollbackKind::causality);  // straggler
            out.insert(out.end(), antis.begin(), antis.end());
        }
        pending.push_back(m);
    }
    auto more = drain(wallclock, window, id_counter);
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

std::vector<VirtualMessage> LogicalProcess::drain(double wallclock, double window,
                                                  std::uint64_t& id_counter) {
    std::vector<VirtualMessage> out;
    const double horizon = wallclock + window;
    for (;;) {
        auto best = pending.end();
        for (auto it = pending.begin(); it != pending.end(); ++it) {
            if (it->recv_ts > horizon) {
                continue;  // outside the optimism window, wait for wallclock
            }
            if (best == pending.end() || it->recv_ts < best->recv_ts ||
                (it->recv_ts == best->recv_ts &&
                 (it->src < best->src || (it->src == best->src && it->id < best->id)))) {
                best = it;
            }
        }
        if (best == pending.end()) {
            break;
        }
        VirtualMessage m = *best;
        pending.erase(best);
        if (m.recv_ts < lvt) {
            auto antis = rollback(m.recv_ts, RollbackKind::causality);
            out.insert(out.end(), antis.begin(), antis.end());
        }
        execute(m, out, id_counter);
    }
    return out;
}

void LogicalProcess::execute(const VirtualMessage& m, std::vector<VirtualMessage>& out,
                             std::uint64_t& id_counter) {
    double v = apply_model(model, m.value);
    insert_entry(m.recv_ts, v, m.id);
    lvt = m.recv_ts;
    ++events_processed;
    cost_accumulator += static_cast<double>(state_queue.size());
    for (const auto& next : downstream) {
        VirtualMessage fwd;
        fwd.id = ++id_counter;
        fwd.src = id;
        fwd.dst = next;
        fwd.send_ts = m.recv_ts;
        fwd.recv_ts = m.recv_ts + link_latency;
        fwd.value = v;
        fwd.sign = MessageSign::positive;
        saved_sends.push_back({fwd, m.id});
        out.push_back(fwd);
    }
    processed.push_back(m);
}

void LogicalProcess::insert_entry(double entry_lvt, double value, std::uint64_t cause) {
    auto it = std::lower_bound(state_queue.begin(), state_queue.end(), entry_lvt,
                               [](const StateEntry& e, double t) { return e.lvt < t; });
    if (it != state_queue.end() && it->lvt == entry_lvt) {
        if (it->committed) {
            throw std::logic_error("refinement of a committed entry at " + id);
        }
        it->value = value;  // refined prediction for the same virtual time
        it->cause = cause;
        return;
    }
    state_queue.insert(it, StateEntry{entry_lvt, value, false, cause});
}

std::vector<VirtualMessage> LogicalProcess::rollback(double to_time, RollbackKind kind) {
    if (!(to_time < lvt)) {
        throw std::invalid_argument("rollback target must precede lvt");
    }
    for (auto it = state_queue.rbegin(); it != state_queue.rend(); ++it) {
        if (it->committed) {
            if (it->lvt > to_time) {
                throw std::logic_error("rollback below the committed horizon at " + id);
            }
            break;  // entries are ordered; earlier commits are safe
        }
    }
    std::erase_if(state_queue,
                  [&](const StateEntry& e) { return !e.committed && e.lvt > to_time; });
    std::vector<VirtualMessage> antis;
    for (auto it = saved_sends.begin(); it != saved_sends.end();) {
        if (it->msg.send_ts > to_time) {
            antis.push_back(it->msg.make_anti());
            it = saved_sends.erase(it);
        } else {
            ++it;
        }
    }
    for (auto it = processed.begin(); it != processed.end();) {
        if (it->recv_ts > to_time) {
            if (kind == RollbackKind::causality) {
                pending.push_back(*it);  // re-executed once the queue drains
            }
            it = processed.erase(it);
        } else {
            ++it;
        }
    }
    lvt = to_time;
    ++rollback_count;
    if (on_rollback) {
        on_rollback(to_time, antis.size());
    }
    return antis;
}

VerifyResult LogicalProcess::verify(double real_value, double wallclock, double step) {
    VerifyResult r;
    r.predicted = query_prediction(wallclock, step);
    if (!r.predicted) {
        // nothing predicted counts as a failed prediction; with nothing
        // processed there is also nothing to roll back or correct
        r.outcome = VerifyOutcome::out_of_tolerance;
        return r;
    }
    if (std::abs(real_value - *r.predicted) <= tolerance) {
        r.outcome = VerifyOutcome::in_tolerance;
        // commit the matching entry once wallclock has reached it
        for (auto& e : state_queue) {
            if (e.lvt > wallclock) {
                break;
            }
            mark_committed(e);
        }
        return r;
    }
    r.outcome = VerifyOutcome::out_of_tolerance;
    if (lvt > wallclock) {
        r.anti_messages = rollback(wallclock, RollbackKind::tolerance);
        r.rolled_back = true;
    }
    // re-prime from the observed real value
    insert_entry(wallclock, real_value, 0);
    for (auto& e : state_queue) {
        if (e.lvt == wallclock) {
            mark_committed(e);
        }
    }
    if (lvt < wallclock) {
        lvt = wallclock;
    }
    return r;
}

std::optional<double> LogicalProcess::query_prediction(double t, double step) const {
    const double lo = t - step / 2.0;
    const double hi = t + step / 2.0;
    const StateEntry* best = nullptr;
    for (const auto& e : state_queue) {
        if (e.lvt < lo) {
            continue;
        }
        if (e.lvt > hi) {
            break;
        }
        // nearest entry to t; the earlier one on a tie
        if (!best || std::abs(e.lvt - t) < std::abs(best->lvt - t)) {
            best = &e;
        }
    }
    if (!best) {
        return std::nullopt;
    }
    return best->value;
}

void LogicalProcess::mark_committed(StateEntry& entry) {
    if (!entry.committed) {
        entry.committed = true;
        commit_log.push_back(entry);
    }
}

void LogicalProcess::commit_up_to(double wallclock, std::vector<StateEntry>* newly_committed) {
    for (auto& e : state_queue) {
        if (e.lvt > wallclock) {
            break;
        }
        if (!e.committed) {
            mark_committed(e);
            if (newly_committed) {
                newly_committed->push_back(e);
            }
        }
    }
}

std::size_t LogicalProcess::fossil_collect(double gvt, double step) {
    const double horizon = gvt - step;
    std::size_t before = state_queue.size();
    std::erase_if(state_queue,
                  [&](const StateEntry& e) { return e.committed && e.lvt < horizon; });
    std::size_t freed = before - state_queue.size();
    std::erase_if(saved_sends,
                  [&](const SavedSend& s) { return s.msg.send_ts < horizon; });
    std::erase_if(processed,
                  [&](const VirtualMessage& m) { return m.recv_ts < horizon; });
    return freed;
}

std::vector<VirtualMessage> DrivingProcess::observe(double wallclock, double value,
                                                    double window,
                                                    std::uint64_t& id_counter) {
    history.push_back({wallclock, value});
    while (history.size() > history_limit) {
        history.pop_front();
    }
    std::vector<VirtualMessage> out;
    emission_credit_ = std::min(emission_credit_, 1.0) + ratio;
    std::vector<mdl::TimedSample> h(history.begin(), history.end());
    while (emission_credit_ >= 1.0 &&
           static_cast<double>(out.size()) < generation_cap) {
        if (lvt + step > wallclock + window) {
            break;  // sliding window lookahead edge
        }
        double recv = lvt + step;
        VirtualMessage m;
        m.id = ++id_counter;
        m.src = id;
        m.dst = target;
        m.send_ts = lvt;
        m.recv_ts = recv;
        m.value = mdl::predicted_value_at(hypothesis, h, recv);
        m.sign = MessageSign::positive;
        out.push_back(std::move(m));
        lvt = recv;
        emission_credit_ -= 1.0;
    }
    return out;
}

double ThetaSchedule::at(double wallclock) const {
    if (factor == 1.0 || interval <= 0.0 || wallclock <= 0.0) {
        return start;
    }
    double steps = std::floor(wallclock / interval);
    return start * std::pow(factor, steps);
}

void ScenarioConfig::validate() const {
    if (!(lambda > step && step > 0.0)) {
        throw std::invalid_argument("scenario requires lambda > step > 0");
    }
    if (duration < 1) {
        throw std::invalid_argument("scenario duration must be at least one tick");
    }
    if (topology.chain < 1) {
        throw std::invalid_argument("topology chain must have at least one node");
    }
    if (!(topology.latency > 0.0)) {
        throw std::invalid_argument("link latency must be positive");
    }
    if (ratio < 0.0) {
        throw std::invalid_argument("virtual:real ratio must be >= 0");
    }
    if (generation_rate < 0.0) {
        throw std::invalid_argument("generation rate must be >= 0");
    }
    if (smoothing < 1) {
        throw std::invalid_argument("smoothing window must be >= 1");
    }
    if (!(tolerance.start > 0.0) || !(tolerance.factor > 0.0) ||
        !(tolerance.interval > 0.0)) {
        throw std::invalid_argument("tolerance schedule values must be positive");
    }
    if (workload.kind == WorkloadKind::csv && workload.file.empty()) {
        throw std::invalid_argument("csv workload requires a file path");
    }
    if (!report_node.empty()) {
        bool found = false;
        for (int i = 1; i <= topology.chain; ++i) {
            if (report_node == "AN-" + std::to_string(i)) {
                found = true;
            }
        }
        if (!found) {
            throw std::invalid_argument("report node " + report_node + " is not in the chain");
        }
    }
}

std::vector<double> generate_workload(const WorkloadSpec& spec, std::uint64_t seed,
                                      int duration) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(duration));
    std::mt19937_64 rng(seed);
    auto uniform01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    auto gauss = [&] {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) {
            s += uniform01();
        }
        return s - 6.0;
    };
    double walk = spec.base;
    for (int t = 0; t < duration; ++t) {
        double v = 0.0;
        switch (spec.kind) {
            case WorkloadKind::constant:
                v = spec.base;
                break;
            case WorkloadKind::linear:
                v = spec.base + spec.slope * t;
                break;
            case WorkloadKind::linear_noise:
                v = spec.base + spec.slope * t + spec.noise * (2.0 * uniform01() - 1.0);
                break;
            case WorkloadKind::sine:
                v = spec.base +
                    spec.amplitude * std::sin(2.0 * M_PI * t / spec.period) +
                    spec.noise * (2.0 * uniform01() - 1.0);
                break;
            case WorkloadKind::random_walk:
                walk += spec.sigma * gauss();
                if (walk < 0.0) {
                    walk = 0.0;
                }
                v = walk;
                break;
            case WorkloadKind::two_phase: {
                int seg = static_cast<int>(std::floor(t / spec.segment));
                if (seg % 2 == 0) {
                    v = spec.low;
                } else {
                    v = spec.base + spec.amplitude * (2.0 * uniform01() - 1.0);
                }
                break;
            }
            case WorkloadKind::csv: {
                // handled below; placeholder keeps the loop uniform
                v = 0.0;
                break;
            }
        }
        out.push_back(std::max(0.0, v));
    }
    if (spec.kind == WorkloadKind::csv) {
        auto series = io::read_timed_csv(spec.file);
        if (static_cast<int>(series.size()) < duration) {
            throw std::invalid_argument("workload trace holds fewer samples than the run");
        }
        for (int t = 0; t < duration; ++t) {
            out[static_cast<std::size_t>(t)] = std::max(0.0, series[t].value);
        }
    }
    return out;
}

std::vector<std::pair<double, double>> EventTrace::committed(const std::string& node) const {
    std::vector<std::pair<double, double>> out;
    for (const auto& e : events) {
        if (e.type == "commit" && e.src == node) {
            out.emplace_back(e.ts, e.value);
        }
    }
    return out;
}

namespace {

struct PoolOrder {
    bool operator()(const VirtualMessage& a, const VirtualMessage& b) const {
        if (a.recv_ts != b.recv_ts) return a.recv_ts < b.recv_ts;
        if (a.src != b.src) return a.src < b.src;
        if (a.id != b.id) return a.id < b.id;
        return static_cast<int>(a.sign) < static_cast<int>(b.sign);
    }
};

}  // namespace

EventTrace run(const ScenarioConfig& config) {
    config.validate();
    const int n = config.topology.chain;
    const double lambda = config.lambda;
    const double step = config.step;

    EventTrace trace;
    trace.lambda = lambda;
    trace.step = step;
    trace.tolerance_interval = config.tolerance.interval;
    trace.duration = config.duration;
    trace.workload = generate_workload(config.workload, config.seed, config.duration);

    std::vector<LogicalProcess> lps(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& lp = lps[static_cast<std::size_t>(i)];
        lp.id = "AN-" + std::to_string(i + 1);
        lp.link_latency = config.topology.latency;
        lp.tolerance = config.tolerance.start;
        if (i + 1 < n) {
            lp.downstream.push_back("AN-" + std::to_string(i + 2));
        }
        trace.node_ids.push_back(lp.id);
    }
    trace.report_node = config.report_node.empty() ? trace.node_ids.back()
                                                   : config.report_node;

    DrivingProcess dp;
    dp.id = "DP-1";
    dp.target = "AN-1";
    dp.hypothesis.window = static_cast<std::uint16_t>(config.smoothing);
    dp.hypothesis.step_size = step;
    dp.step = step;
    dp.ratio = config.ratio;
    dp.generation_cap = config.generation_rate * 1000.0;  // msgs/ms over a 1 s tick

    std::uint64_t id_counter = 0;
    std::uint64_t cum_virtual = 0;
    std::uint64_t cum_anti = 0;
    std::set<VirtualMessage, PoolOrder> pool;
    int current_tick = 0;

    auto record = [&](std::string type, std::string src, std::string dst, double ts,
                      double value, std::string sign) {
        trace.events.push_back(Event{current_tick, std::move(type), std::move(src),
                                     std::move(dst), ts, value, std::move(sign)});
    };

    for (auto& lp : lps) {
        lp.on_rollback = [&record, &lp](double to_time, std::size_t antis) {
            record("rollback", lp.id, "", to_time, static_cast<double>(antis), "");
        };
    }

    auto route = [&](const std::vector<VirtualMessage>& msgs) {
        for (const auto& m : msgs) {
            if (m.sign == MessageSign::positive) {
                ++cum_virtual;
                record("send", m.src, m.dst, m.recv_ts, m.value, "positive");
                pool.insert(m);
            } else {
                ++cum_anti;
                record("send", m.src, m.dst, m.recv_ts, m.value, "anti");
                auto twin = std::find_if(pool.begin(), pool.end(), [&](const VirtualMessage& p) {
                    return p.id == m.id && p.sign == MessageSign::positive;
                });
                if (twin != pool.end()) {
                    // twin still in flight: both vanish before delivery
                    record("annihilate", m.src, m.dst, m.recv_ts, m.value, "anti");
                    pool.erase(twin);
                } else {
                    pool.insert(m);
                }
            }
        }
    };

    auto lp_by_id = [&](const std::string& node) -> LogicalProcess& {
        for (auto& lp : lps) {
            if (lp.id == node) {
                return lp;
            }
        }
        throw std::invalid_argument("message routed to unknown node " + node);
    };

    auto drain_pool = [&](double wallclock) {
        while (!pool.empty()) {
            VirtualMessage m = *pool.begin();
            pool.erase(pool.begin());
            record("deliver", m.src, m.dst, m.recv_ts, m.value,
                   m.sign == MessageSign::positive ? "positive" : "anti");
            route(lp_by_id(m.dst).process(m, wallclock, lambda, id_counter));
        }
    };

    double theta_prev = -1.0;
    for (int t = 0; t < config.duration; ++t) {
        current_tick = t;
        const double wallclock = t;
        TickStats ts;
        ts.tick = t;

        double theta = config.tolerance.at(wallclock);
        if (theta != theta_prev) {
            record("tolerance", "", "", wallclock, theta, "");
            for (auto& lp : lps) {
                lp.tolerance = theta;
            }
            theta_prev = theta;
        }
        ts.theta = theta;

        double sample = trace.workload[static_cast<std::size_t>(t)];
        ts.workload_value = sample;
        record("observe", dp.id, "", wallclock, sample, "");
        route(dp.observe(wallclock, sample, lambda, id_counter));

        // the window slid forward one tick: admit deferred messages
        for (auto& lp : lps) {
            route(lp.drain(wallclock, lambda, id_counter));
        }
        drain_pool(wallclock);

        // verify nodes observing real traffic
        for (int k = 0; k < n; ++k) {
            auto& lp = lps[static_cast<std::size_t>(k)];
            double offset = static_cast<double>(k) * config.topology.latency;
            if (wallclock < offset) {
                continue;
            }
            double real = trace.workload[static_cast<std::size_t>(
                t - static_cast<int>(offset))];
            VerifyResult vr = lp.verify(real, wallclock, step);
            bool ok = vr.outcome == VerifyOutcome::in_tolerance;
            ts.verifies.push_back({lp.id, vr.predicted, real, ok});
            record(ok ? "verify_ok" : "verify_oot", lp.id, "", wallclock,
                   vr.predicted ? *vr.predicted - real : 0.0, "");
            if (!ok && vr.predicted) {
                // prediction falsified: restart the pipeline from reality
                if (dp.lvt > wallclock) {
                    dp.lvt = wallclock;
                    record("reset", dp.id, "", wallclock, real, "");
                }
            }
            route(vr.anti_messages);
            drain_pool(wallclock);
        }

        for (auto& lp : lps) {
            lp.commit_up_to(wallclock);
            for (const auto& e : lp.commit_log) {
                record("commit", lp.id, "", e.lvt, e.value, "");
            }
            lp.commit_log.clear();
        }

        if (config.fossil_collection) {
            std::size_t freed = 0;
            for (auto& lp : lps) {
                freed += lp.fossil_collect(wallclock, step);
            }
            ts.fossil_freed = freed;
            if (freed > 0) {
                record("fossil", "", "", wallclock, static_cast<double>(freed), "");
            }
        }

        std::uint64_t cum_rollbacks = 0;
        for (auto& lp : lps) {
            ts.lvt.push_back(lp.lvt);
            ts.queue_len.push_back(lp.state_queue.size());
            ts.events_processed += lp.events_processed;
            ts.cost_sum += lp.cost_accumulator;
            lp.events_processed = 0;
            lp.cost_accumulator = 0.0;
            cum_rollbacks += lp.rollback_count;
        }
        ts.cum_virtual = cum_virtual;
        ts.cum_anti = cum_anti;
        ts.cum_rollbacks = cum_rollbacks;
        trace.ticks.push_back(std::move(ts));
    }
    return trace;
}

std::string to_jsonl(const std::vector<Event>& events) {
    std::string out;
    for (const auto& e : events) {
        nlohmann::json j;
        j["tick"] = e.tick;
        j["type"] = e.type;
        j["src"] = e.src;
        j["dst"] = e.dst;
        j["ts"] = e.ts;
        j["value"] = e.value;
        j["sign"] = e.sign;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace presage::engine
