#ifndef PRESAGE_METRICS_HPP
#define PRESAGE_METRICS_HPP

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "presage/engine.hpp"
#include "presage/mdl.hpp"

namespace presage::metrics {

struct MetricSeries {
    std::string name;
    std::vector<std::pair<double, double>> samples;  // (wallclock_s, value)
};

// Spearman rank correlation with average ranks on ties; absent when either
// side has zero rank variance.
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

inline constexpr double kReportingIntervalS = 30.0;

// Derives the measured series from a run trace:
//   tolerance, out_of_tolerance, prediction_error, expected_lookahead,
//   speedup, virtual_messages, anti_messages, task_time.
// Node-local series come from the trace's report node; message counters are
// global, and anti_messages resets at every tolerance tightening.
std::vector<MetricSeries> derive_metrics(const engine::EventTrace& trace);

struct ComplexityErrorJoin {
    struct Pair {
        double window_start = 0.0;
        double density = 0.0;
        double mean_abs_error = 0.0;
    };
    std::vector<Pair> pairs;
    std::optional<double> rho;
};

// Pairs the windowed complexity density of the workload with the windowed
// mean absolute prediction error, one pair per `window`-second slice, and
// reports their Spearman correlation. Fewer than 3 complete windows is an
// insufficient-data error.
ComplexityErrorJoin complexity_error_join(std::span<const mdl::TimedSample> workload,
                                          const MetricSeries& errors, double window);

}  // namespace presage::metrics

#endif
