#include <doctest.h>

#include <algorithm>
#include <random>

#include "presage/metrics.hpp"

using namespace presage;
using namespace presage::metrics;

namespace {

// rank by counting, average on ties: the exhaustive oracle for small sets
std::vector<double> brute_ranks(const std::vector<double>& xs) {
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::size_t below = 0, equal = 0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (xs[j] < xs[i]) {
                ++below;
            } else if (xs[j] == xs[i]) {
                ++equal;
            }
        }
        ranks[i] = below + (equal + 1) / 2.0;
    }
    return ranks;
}

double brute_spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    auto rx = brute_ranks(xs);
    auto ry = brute_ranks(ys);
    double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

engine::EventTrace synthetic_trace(int ticks, const std::string& node,
                                   double lookahead = 0.0) {
    engine::EventTrace trace;
    trace.lambda = 200.0;
    trace.step = 20.0;
    trace.tolerance_interval = 300.0;
    trace.duration = ticks;
    trace.node_ids = {node};
    trace.report_node = node;
    for (int t = 0; t < ticks; ++t) {
        engine::TickStats ts;
        ts.tick = t;
        ts.theta = 500.0;
        ts.lvt = {static_cast<double>(t) + lookahead};
        ts.queue_len = {1};
        ts.events_processed = 1;
        ts.cost_sum = 1.0;
        trace.ticks.push_back(ts);
    }
    return trace;
}

}  // namespace

TEST_CASE("spearman matches exhaustive rank computation") {
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 3 + rng() % 6;  // <= 8 points
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < n; ++i) {
            xs.push_back(static_cast<double>(rng() % 10));
            ys.push_back(static_cast<double>(rng() % 10));
        }
        auto got = spearman(xs, ys);
        bool x_const = std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
        bool y_const = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
        if (x_const || y_const) {
            CHECK_FALSE(got.has_value());
            continue;
        }
        REQUIRE(got.has_value());
        CHECK(*got == doctest::Approx(brute_spearman(xs, ys)).epsilon(1e-12));
    }
}

TEST_CASE("spearman endpoints") {
    std::vector<double> inc{1, 2, 3, 4, 5};
    std::vector<double> dec{9, 7, 5, 3, 1};
    CHECK(*spearman(inc, inc) == doctest::Approx(1.0));
    CHECK(*spearman(inc, dec) == doctest::Approx(-1.0));
    std::vector<double> flat{2, 2, 2, 2, 2};
    CHECK_FALSE(spearman(inc, flat).has_value());
    CHECK_THROWS_AS(spearman(inc, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("lockstep trace yields unit speedup and zero lookahead") {
    auto trace = synthetic_trace(100, "AN-1");
    auto series = derive_metrics(trace);
    auto find = [&](const std::string& name) -> const MetricSeries& {
        for (const auto& s : series) {
            if (s.name == name) {
                return s;
            }
        }
        throw std::runtime_error("missing series " + name);
    };
    for (const auto& [t, v] : find("expected_lookahead").samples) {
        (void)t;
        CHECK(v == 0.0);
    }
    for (const auto& [t, v] : find("speedup").samples) {
        (void)t;
        CHECK(v == doctest::Approx(1.0));
    }
    CHECK(find("tolerance").samples.size() == 100);

    engine::EventTrace empty;
    CHECK_THROWS_AS(derive_metrics(empty), std::invalid_argument);
}

TEST_CASE("out-of-tolerance proportion per interval") {
    auto trace = synthetic_trace(30, "AN-1");
    // 8 verifies in the interval, 2 out of tolerance
    for (int i = 0; i < 8; ++i) {
        engine::VerifyRecord v;
        v.node = "AN-1";
        v.predicted = 10.0;
        v.actual = 10.0;
        v.in_tolerance = i >= 2;
        trace.ticks[static_cast<std::size_t>(i)].verifies.push_back(v);
    }
    auto series = derive_metrics(trace);
    for (const auto& s : series) {
        if (s.name == "out_of_tolerance") {
            REQUIRE(s.samples.size() == 1);
            CHECK(s.samples[0].second == doctest::Approx(0.25));
            CHECK(s.samples[0].second >= 0.0);
            CHECK(s.samples[0].second <= 1.0);
        }
    }
}

TEST_CASE("anti-message counter resets at each tightening") {
    auto trace = synthetic_trace(100, "AN-1");
    for (int t = 0; t < 100; ++t) {
        auto& ts = trace.ticks[static_cast<std::size_t>(t)];
        ts.theta = t < 50 ? 500.0 : 400.0;
        ts.cum_anti = static_cast<std::uint64_t>(t);
    }
    auto series = derive_metrics(trace);
    for (const auto& s : series) {
        if (s.name == "anti_messages") {
            CHECK(s.samples[49].second == doctest::Approx(49.0));
            CHECK(s.samples[50].second == doctest::Approx(1.0));  // reset
            CHECK(s.samples[99].second == doctest::Approx(50.0));
        }
    }
}

TEST_CASE("complexity-error join pairs windows") {
    // workload: alternating quiet / noisy 200 s segments
    std::mt19937_64 rng(89);
    mdl::Series workload;
    MetricSeries errors{"prediction_error", {}};
    for (int t = 0; t < 1200; ++t) {
        bool noisy = (t / 200) % 2 == 1;
        double v = noisy ? 1000.0 + static_cast<double>(rng() % 1000) : 0.0;
        workload.push_back({static_cast<double>(t), v});
        errors.samples.emplace_back(static_cast<double>(t),
                                    noisy ? static_cast<double>(rng() % 200) : 0.0);
    }
    auto join = complexity_error_join(workload, errors, 200.0);
    REQUIRE(join.pairs.size() == 6);
    REQUIRE(join.rho.has_value());
    CHECK(*join.rho > 0.5);

    // reversing the error sign flips the correlation
    MetricSeries negated{"prediction_error", {}};
    for (std::size_t i = 0; i < errors.samples.size(); ++i) {
        // rank of |e| vs density reversed by pairing density with -|e|
        negated.samples.emplace_back(errors.samples[i].first, 0.0);
    }
    std::vector<double> density, err;
    for (const auto& p : join.pairs) {
        density.push_back(p.density);
        err.push_back(-p.mean_abs_error);
    }
    auto flipped = spearman(density, err);
    REQUIRE(flipped.has_value());
    CHECK(*flipped == doctest::Approx(-*join.rho));
}

TEST_CASE("ranges hold on a live run") {
    engine::ScenarioConfig cfg;
    cfg.duration = 900;
    cfg.seed = 3;
    cfg.workload.kind = engine::WorkloadKind::random_walk;
    cfg.workload.base = 1500.0;
    cfg.workload.sigma = 10.0;
    auto trace = engine::run(cfg);
    auto series = derive_metrics(trace);
    for (const auto& s : series) {
        if (s.name == "out_of_tolerance") {
            for (const auto& [t, v] : s.samples) {
                (void)t;
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        } else if (s.name == "speedup") {
            for (const auto& [t, v] : s.samples) {
                (void)t;
                CHECK(v > 0.0);
            }
        } else if (s.name == "expected_lookahead") {
            for (const auto& [t, v] : s.samples) {
                (void)t;
                CHECK(v >= 0.0);
                CHECK(v <= cfg.lambda);
            }
        }
        // wallclock strictly increasing in every series
        for (std::size_t i = 1; i < s.samples.size(); ++i) {
            CHECK(s.samples[i].first > s.samples[i - 1].first);
        }
    }
}

TEST_CASE("join guards undefined correlations and short inputs") {
    mdl::Series workload;
    MetricSeries errors{"prediction_error", {}};
    for (int t = 0; t < 900; ++t) {
        workload.push_back({static_cast<double>(t), 7.0});
        errors.samples.emplace_back(static_cast<double>(t), 0.0);
    }
    auto join = complexity_error_join(workload, errors, 200.0);
    CHECK_FALSE(join.rho.has_value());  // zero variance on both sides

    mdl::Series tiny(workload.begin(), workload.begin() + 300);
    CHECK_THROWS_AS(complexity_error_join(tiny, errors, 200.0), std::runtime_error);
}
