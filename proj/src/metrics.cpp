#include "presage/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "presage/complexity.hpp"

namespace presage::metrics {

namespace {

std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) {
            ++j;
        }
        double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("spearman: series lengths differ");
    }
    if (xs.size() < 2) {
        return std::nullopt;
    }
    auto rx = average_ranks(xs);
    auto ry = average_ranks(ys);
    const double n = static_cast<double>(rx.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mx;
        double dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return std::nullopt;  // zero variance: rank correlation undefined
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<MetricSeries> derive_metrics(const engine::EventTrace& trace) {
    if (trace.ticks.empty() || trace.node_ids.empty()) {
        throw std::invalid_argument("derive_metrics: trace is incomplete");
    }
    if (trace.report_node.empty()) {
        throw std::invalid_argument("derive_metrics: trace lacks a report node");
    }
    std::size_t report = trace.node_ids.size();
    for (std::size_t i = 0; i < trace.node_ids.size(); ++i) {
        if (trace.node_ids[i] == trace.report_node) {
            report = i;
        }
    }
    if (report == trace.node_ids.size()) {
        throw std::invalid_argument("derive_metrics: report node missing from trace");
    }

    MetricSeries tolerance{"tolerance", {}};
    MetricSeries out_of_tolerance{"out_of_tolerance", {}};
    MetricSeries prediction_error{"prediction_error", {}};
    MetricSeries lookahead{"expected_lookahead", {}};
    MetricSeries speedup{"speedup", {}};
    MetricSeries virtual_messages{"virtual_messages", {}};
    MetricSeries anti_messages{"anti_messages", {}};
    MetricSeries task_time{"task_time", {}};

    // interval accumulators
    std::size_t interval_verifies = 0;
    std::size_t interval_oot = 0;
    std::uint64_t interval_events = 0;
    double interval_cost = 0.0;
    double interval_end = kReportingIntervalS;

    double theta_prev = -1.0;
    std::uint64_t anti_base = 0;

    for (const auto& ts : trace.ticks) {
        const double t = static_cast<double>(ts.tick);
        if (ts.lvt.size() != trace.node_ids.size()) {
            throw std::invalid_argument("derive_metrics: tick snapshot is incomplete");
        }

        tolerance.samples.emplace_back(t, ts.theta);
        if (theta_prev >= 0.0 && ts.theta < theta_prev) {
            anti_base = trace.ticks[static_cast<std::size_t>(ts.tick) - 1].cum_anti;
        }
        theta_prev = ts.theta;

        double lvt = ts.lvt[report];
        lookahead.samples.emplace_back(t, std::max(0.0, lvt - t));
        if (t > 0.0 && lvt > 0.0) {
            speedup.samples.emplace_back(t, lvt / t);
        }
        virtual_messages.samples.emplace_back(t, static_cast<double>(ts.cum_virtual));
        anti_messages.samples.emplace_back(t,
                                           static_cast<double>(ts.cum_anti - anti_base));

        for (const auto& v : ts.verifies) {
            if (v.node != trace.report_node) {
                continue;
            }
            ++interval_verifies;
            if (!v.in_tolerance) {
                ++interval_oot;
            }
            if (v.predicted) {
                prediction_error.samples.emplace_back(t, *v.predicted - v.actual);
            }
        }
        interval_events += ts.events_processed;
        interval_cost += ts.cost_sum;

        if (t + 1.0 >= interval_end) {
            if (interval_verifies > 0) {
                out_of_tolerance.samples.emplace_back(
                    interval_end, static_cast<double>(interval_oot) /
                                      static_cast<double>(interval_verifies));
            }
            if (interval_events > 0) {
                task_time.samples.emplace_back(
                    interval_end, interval_cost / static_cast<double>(interval_events));
            }
            interval_verifies = interval_oot = 0;
            interval_events = 0;
            interval_cost = 0.0;
            interval_end += kReportingIntervalS;
        }
    }

    return {tolerance,  out_of_tolerance, prediction_error, lookahead,
            speedup,    virtual_messages, anti_messages,    task_time};
}

ComplexityErrorJoin complexity_error_join(std::span<const mdl::TimedSample> workload,
                                          const MetricSeries& errors, double window) {
    if (!(window > 0.0)) {
        throw std::invalid_argument("complexity_error_join: window must be positive");
    }
    ComplexityErrorJoin join;
    if (workload.empty()) {
        throw std::runtime_error("complexity_error_join: fewer than 3 complete windows");
    }
    const double t0 = workload.front().t;
    complexity::FixedWidthCodec codec(32);
    for (double start = t0;; start += window) {
        double end = start + window;
        std::vector<double> values;
        for (const auto& s : workload) {
            if (s.t >= start && s.t < end) {
                values.push_back(s.value);
            }
        }
        if (values.empty() || workload.back().t < end - 1.0) {
            break;  // incomplete trailing window
        }
        double err_sum = 0.0;
        std::size_t err_count = 0;
        for (const auto& [t, e] : errors.samples) {
            if (t >= start && t < end) {
                err_sum += std::abs(e);
                ++err_count;
            }
        }
        if (err_count == 0) {
            continue;
        }
        auto estimates = complexity::windowed_complexity(values, values.size(), codec);
        join.pairs.push_back({start, estimates.front().density,
                              err_sum / static_cast<double>(err_count)});
    }
    if (join.pairs.size() < 3) {
        throw std::runtime_error("complexity_error_join: fewer than 3 complete windows");
    }
    std::vector<double> density, err;
    for (const auto& p : join.pairs) {
        density.push_back(p.density);
        err.push_back(p.mean_abs_error);
    }
    join.rho = spearman(density, err);
    return join;
}

}  // namespace presage::metrics
