#include "presage/cli.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "presage/anet.hpp"
#include "presage/engine.hpp"
#include "presage/io.hpp"
#include "presage/kmap.hpp"
#include "presage/mdl.hpp"
#include "presage/metrics.hpp"
#include "presage/scenario.hpp"

namespace presage::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write " + path.string());
    }
    f << content;
}

std::string csv_of_series(const metrics::MetricSeries& series) {
    std::string out = "wallclock_s,value\n";
    for (const auto& [t, v] : series.samples) {
        out += io::format_double(t);
        out += ',';
        out += io::format_double(v);
        out += '\n';
    }
    return out;
}

int run_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed,
                 const std::vector<std::string>& overrides, std::ostream& out) {
    engine::ScenarioConfig config = scenario::load_scenario(scenario_path);
    for (const auto& o : overrides) {
        scenario::apply_override(config, o);
    }
    if (seed) {
        config.seed = *seed;
    }
    config.validate();

    engine::EventTrace trace = engine::run(config);
    auto series = metrics::derive_metrics(trace);

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "events.jsonl", engine::to_jsonl(trace.events));
    for (const auto& s : series) {
        write_file(fs::path(out_dir) / (s.name + ".csv"), csv_of_series(s));
    }

    const metrics::MetricSeries* errors = nullptr;
    for (const auto& s : series) {
        if (s.name == "prediction_error") {
            errors = &s;
        }
    }
    mdl::Series workload;
    for (std::size_t t = 0; t < trace.workload.size(); ++t) {
        workload.push_back({static_cast<double>(t), trace.workload[t]});
    }
    try {
        auto join = metrics::complexity_error_join(workload, *errors, trace.lambda);
        std::string csv = "window_start_s,density,mean_abs_error\n";
        for (const auto& p : join.pairs) {
            csv += io::format_double(p.window_start);
            csv += ',';
            csv += io::format_double(p.density);
            csv += ',';
            csv += io::format_double(p.mean_abs_error);
            csv += '\n';
        }
        write_file(fs::path(out_dir) / "complexity_error.csv", csv);
    } catch (const std::runtime_error& e) {
        out << "note: complexity_error.csv skipped: " << e.what() << "\n";
    }

    std::uint64_t rollbacks = trace.ticks.empty() ? 0 : trace.ticks.back().cum_rollbacks;
    std::uint64_t vmsgs = trace.ticks.empty() ? 0 : trace.ticks.back().cum_virtual;
    std::uint64_t antis = trace.ticks.empty() ? 0 : trace.ticks.back().cum_anti;
    out << "simulated " << config.duration << " s on " << config.topology.chain
        << " nodes: " << vmsgs << " virtual messages, " << antis << " anti-messages, "
        << rollbacks << " rollbacks\n";
    out << "outputs in " << out_dir << "\n";
    return kExitOk;
}

int run_mdl(const std::string& trace_path, const std::string& grid_flag,
            std::ostream& out) {
    mdl::Series data = io::read_timed_csv(trace_path);
    std::vector<std::size_t> grid;
    std::stringstream gs(grid_flag);
    std::string item;
    while (std::getline(gs, item, ',')) {
        if (!item.empty()) {
            grid.push_back(std::stoull(item));
        }
    }
    if (grid.empty()) {
        throw std::invalid_argument("--grid must list at least one window");
    }
    auto [selected, selected_bits] = mdl::select_hypothesis(grid, data);
    auto values = mdl::rounded_values(data);
    out << "  w   sum|error|   description_length_bits\n";
    for (std::size_t w : grid) {
        mdl::Hypothesis h;
        h.window = static_cast<std::uint16_t>(w);
        auto residuals = mdl::coding_residuals(h, values);
        std::uint64_t abs_sum = 0;
        for (auto r : residuals) {
            abs_sum += static_cast<std::uint64_t>(r < 0 ? -r : r);
        }
        std::size_t bits = mdl::description_length(h, data);
        out << (w == selected.window ? "* " : "  ") << std::setw(3) << w << "  "
            << std::setw(11) << abs_sum << "  " << std::setw(10) << bits << "\n";
    }
    out << "selected w = " << selected.window << " (" << selected_bits << " bits)\n";
    return kExitOk;
}

std::string transit_csv(const anet::PacketTransit& transit) {
    std::string csv = "link_id,load_bytes,transit_s\n";
    for (const auto& [link, load] : transit.link_load_bytes) {
        csv += std::to_string(link);
        csv += ',';
        csv += io::format_double(load);
        csv += ',';
        csv += io::format_double(transit.link_transit_s.at(link));
        csv += '\n';
    }
    return csv;
}

int run_pidemo(std::uint64_t precision, const std::string& capacity_flag,
               const std::string& out_dir, std::ostream& out) {
    std::vector<double> capacities{100.0, 100.0, 1000.0, 1000.0};
    if (!capacity_flag.empty()) {
        std::vector<double> cs;
        std::stringstream ss(capacity_flag);
        std::string item;
        while (std::getline(ss, item, ',')) {
            cs.push_back(std::stod(item));
        }
        if (cs.size() != capacities.size()) {
            throw std::invalid_argument("--capacity expects 4 comma-separated values");
        }
        capacities = cs;
    }

    anet::Topology topo;
    for (int i = 0; i <= 4; ++i) {
        topo.nodes["n" + std::to_string(i)] = anet::NodeSpec{1e6};
    }
    for (int i = 1; i <= 4; ++i) {
        topo.links[i] = anet::LinkSpec{"n" + std::to_string(i - 1), "n" + std::to_string(i),
                                       capacities[static_cast<std::size_t>(i - 1)]};
    }

    auto algorithmic = anet::make_algorithmic(anet::parse_expr("div($0,$1)"),
                                              {Rational(22), Rational(7)});
    auto static_packet = anet::evaluate(algorithmic, precision);

    std::vector<std::vector<int>> routes{{1, 2, 3, 4}, {4, 3, 2, 1}};
    std::vector<anet::ExprPacket> packets{algorithmic, static_packet};
    auto result = anet::transmit(topo, routes, packets);

    out << "pi estimate, " << precision << " digits: algorithmic packet "
        << algorithmic.size_bytes() << " B vs static packet " << static_packet.size_bytes()
        << " B\n";
    out << "link  capacity_Bps  algo_load_B  static_load_B  algo_transit_s  static_transit_s\n";
    for (int i = 1; i <= 4; ++i) {
        const auto& alg = result.per_packet[0];
        const auto& sta = result.per_packet[1];
        auto get = [&](const std::map<int, double>& m) {
            auto it = m.find(i);
            return it == m.end() ? 0.0 : it->second;
        };
        out << std::setw(4) << i << "  " << std::setw(12)
            << capacities[static_cast<std::size_t>(i - 1)] << "  " << std::setw(11)
            << get(alg.link_load_bytes) << "  " << std::setw(13) << get(sta.link_load_bytes)
            << "  " << std::setw(14) << get(alg.link_transit_s) << "  " << std::setw(16)
            << get(sta.link_transit_s) << "\n";
    }
    out << "node  processing_s(algorithmic)\n";
    for (const auto& [node, s] : result.per_packet[0].node_processing_s) {
        out << std::setw(4) << node << "  " << s << "\n";
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "algorithmic_links.csv",
                   transit_csv(result.per_packet[0]));
        write_file(fs::path(out_dir) / "static_links.csv", transit_csv(result.per_packet[1]));
        out << "link CSVs in " << out_dir << "\n";
    }
    return kExitOk;
}

int run_kmap(const std::string& graph_path, const std::string& mode_flag,
             const std::string& out_dir, std::ostream& out, std::ostream& err) {
    std::ifstream f(graph_path);
    if (!f) {
        throw std::invalid_argument("cannot open graph " + graph_path);
    }
    std::stringstream buf;
    buf << f.rdbuf();
    std::vector<std::string> warnings;
    kmap::KMapGraph graph = kmap::parse_kmap_file(
        buf.str(), fs::path(graph_path).parent_path().string(), &warnings);
    for (const auto& w : warnings) {
        err << "warning: " << w << "\n";
    }

    kmap::SurfaceMode mode;
    if (mode_flag == "path") {
        mode = kmap::SurfaceMode::path_height;
    } else if (mode_flag == "flow") {
        mode = kmap::SurfaceMode::flow_level;
    } else {
        throw std::invalid_argument("--mode must be path or flow");
    }

    fs::create_directories(out_dir);

    auto matrix = kmap::min_complexity_paths(graph);
    {
        std::string csv = "from";
        for (const auto& id : matrix.ids) {
            csv += "," + id;
        }
        csv += '\n';
        for (std::size_t i = 0; i < matrix.ids.size(); ++i) {
            csv += matrix.ids[i];
            for (std::size_t j = 0; j < matrix.ids.size(); ++j) {
                csv += ',';
                csv += matrix.cost[i][j]
                           ? io::format_double(rational_to_double(*matrix.cost[i][j]))
                           : "inf";
            }
            csv += '\n';
        }
        write_file(fs::path(out_dir) / "min_paths.csv", csv);
    }
    {
        // per-edge totals across all independent pairwise max-flows
        std::map<std::pair<std::string, std::string>, Rational> totals;
        for (const auto& a : graph.nodes()) {
            for (const auto& b : graph.nodes()) {
                if (a.id == b.id) {
                    continue;
                }
                auto flow = kmap::insecurity_flow(graph, a.id, b.id);
                for (const auto& [u, v, f] : flow.edge_flows) {
                    totals[{u, v}] += f;
                }
            }
        }
        std::string csv = "u,v,flow\n";
        for (const auto& [key, f] : totals) {
            csv += key.first + "," + key.second + "," +
                   io::format_double(rational_to_double(f)) + "\n";
        }
        write_file(fs::path(out_dir) / "flows.csv", csv);
    }
    {
        auto levels = kmap::insecurity_levels(graph);
        std::string csv = "node,level\n";
        for (const auto& [node, level] : levels) {
            csv += node + "," + io::format_double(rational_to_double(level)) + "\n";
        }
        write_file(fs::path(out_dir) / "levels.csv", csv);
    }
    {
        auto surface = kmap::export_surface(graph, mode);
        std::string csv = "node,x,y,height\n";
        for (const auto& s : surface) {
            csv += s.node + "," + io::format_double(s.x) + "," + io::format_double(s.y) +
                   "," + (s.infinite ? "inf" : io::format_double(s.height)) + "\n";
        }
        write_file(fs::path(out_dir) / "surface.csv", csv);
    }
    out << "kmap outputs in " << out_dir << "\n";
    return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"optimistic network load prediction over a simulated active network"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    auto* simulate = app.add_subcommand("simulate", "run a scenario and export metrics");
    simulate->add_option("scenario", scenario_path, "scenario file")->required();
    simulate->add_option("--out", out_dir, "output directory");
    std::uint64_t seed_value = 0;
    auto* seed_opt = simulate->add_option("--seed", seed_value, "override the RNG seed");
    simulate->add_option("--set", overrides, "override scenario keys (section.key=value)");

    std::string trace_path;
    std::string grid = "1,2,4,8,16,32";
    auto* mdl_cmd = app.add_subcommand("mdl", "score prediction hypotheses on a trace");
    mdl_cmd->add_option("trace", trace_path, "CSV trace (time_s,value)")->required();
    mdl_cmd->add_option("--grid", grid, "comma-separated smoothing windows");

    std::uint64_t precision = 1000;
    std::string capacity;
    std::string pidemo_out;
    auto* pidemo = app.add_subcommand("pidemo",
                                      "algorithmic vs static transmission of a pi estimate");
    pidemo->add_option("--precision", precision, "digits of the static payload");
    pidemo->add_option("--capacity", capacity, "override the 4 link capacities");
    pidemo->add_option("--out", pidemo_out, "also write per-link CSVs here");

    std::string graph_path;
    std::string mode = "path";
    std::string kmap_out = "out";
    auto* kmap_cmd = app.add_subcommand("kmap", "complexity-map vulnerability analysis");
    kmap_cmd->add_option("graph", graph_path, "graph spec file")->required();
    kmap_cmd->add_option("--mode", mode, "surface mode: path | flow");
    kmap_cmd->add_option("--out", kmap_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return kExitConfig;
    }

    try {
        if (*simulate) {
            if (seed_opt->count() > 0) {
                seed = seed_value;
            }
            return run_simulate(scenario_path, out_dir, seed, overrides, out);
        }
        if (*mdl_cmd) {
            return run_mdl(trace_path, grid, out);
        }
        if (*pidemo) {
            return run_pidemo(precision, capacity, pidemo_out, out);
        }
        if (*kmap_cmd) {
            return run_kmap(graph_path, mode, kmap_out, out, err);
        }
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}

}  // namespace presage::cli
