#include "presage/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace presage::scenario {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& value) {
    if (value == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("scenario key " + key + ": malformed number '" +
                                    value + "'");
    }
}

bool to_switch(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1") {
        return true;
    }
    if (value == "off" || value == "false" || value == "0") {
        return false;
    }
    throw std::invalid_argument("scenario key " + key + ": expected on/off");
}

engine::WorkloadKind to_workload_kind(const std::string& value) {
    if (value == "constant") return engine::WorkloadKind::constant;
    if (value == "linear") return engine::WorkloadKind::linear;
    if (value == "linear_noise") return engine::WorkloadKind::linear_noise;
    if (value == "sine") return engine::WorkloadKind::sine;
    if (value == "random_walk") return engine::WorkloadKind::random_walk;
    if (value == "two_phase") return engine::WorkloadKind::two_phase;
    if (value == "csv") return engine::WorkloadKind::csv;
    throw std::invalid_argument("unknown workload kind '" + value + "'");
}

void apply_key(engine::ScenarioConfig& config, const std::string& section,
               const std::string& key, const std::string& value,
               const std::string& base_dir) {
    auto full = section + "." + key;
    if (section == "seed") {
        if (key == "seed") {
            config.seed = std::stoull(value);
            return;
        }
    } else if (section == "run") {
        if (key == "duration") {
            config.duration = static_cast<int>(to_number(full, value));
            return;
        }
        if (key == "report_node") {
            config.report_node = value;
            return;
        }
    } else if (section == "window") {
        if (key == "lambda") {
            config.lambda = to_number(full, value);
            return;
        }
        if (key == "step") {
            config.step = to_number(full, value);
            return;
        }
    } else if (section == "tolerance") {
        if (key == "start") {
            config.tolerance.start = to_number(full, value);
            return;
        }
        if (key == "factor") {
            config.tolerance.factor = to_number(full, value);
            return;
        }
        if (key == "interval") {
            config.tolerance.interval = to_number(full, value);
            return;
        }
    } else if (section == "messages") {
        if (key == "ratio") {
            config.ratio = to_number(full, value);
            return;
        }
        if (key == "generation_rate") {
            config.generation_rate = to_number(full, value);
            return;
        }
    } else if (section == "topology") {
        if (key == "chain") {
            config.topology.chain = static_cast<int>(to_number(full, value));
            return;
        }
        if (key == "latency") {
            config.topology.latency = to_number(full, value);
            return;
        }
    } else if (section == "prediction") {
        if (key == "smoothing") {
            config.smoothing = static_cast<std::size_t>(to_number(full, value));
            return;
        }
    } else if (section == "workload") {
        if (key == "kind") {
            config.workload.kind = to_workload_kind(value);
            return;
        }
        if (key == "base") {
            config.workload.base = to_number(full, value);
            return;
        }
        if (key == "slope") {
            config.workload.slope = to_number(full, value);
            return;
        }
        if (key == "amplitude") {
            config.workload.amplitude = to_number(full, value);
            return;
        }
        if (key == "period") {
            config.workload.period = to_number(full, value);
            return;
        }
        if (key == "noise") {
            config.workload.noise = to_number(full, value);
            return;
        }
        if (key == "sigma") {
            config.workload.sigma = to_number(full, value);
            return;
        }
        if (key == "low") {
            config.workload.low = to_number(full, value);
            return;
        }
        if (key == "segment") {
            config.workload.segment = to_number(full, value);
            return;
        }
        if (key == "file") {
            std::filesystem::path p(value);
            config.workload.file =
                p.is_absolute() || base_dir.empty() ? value : base_dir + "/" + value;
            return;
        }
    } else if (section == "fossil") {
        if (key == "enabled") {
            config.fossil_collection = to_switch(full, value);
            return;
        }
    } else {
        throw std::invalid_argument("scenario: unknown section [" + section + "]");
    }
    throw std::invalid_argument("scenario: unknown key " + full);
}

}  // namespace

engine::ScenarioConfig parse_scenario(std::string_view text, const std::string& base_dir) {
    engine::ScenarioConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("scenario line " + std::to_string(lineno) +
                                            ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("scenario line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        if (section.empty()) {
            throw std::invalid_argument("scenario line " + std::to_string(lineno) +
                                        ": key outside a section");
        }
        apply_key(config, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
                  base_dir);
    }
    return config;
}

engine::ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw std::invalid_argument("cannot open scenario " + path);
    }
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_scenario(buf.str(), std::filesystem::path(path).parent_path().string());
}

void apply_override(engine::ScenarioConfig& config, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw std::invalid_argument("override must be section.key=value: " + assignment);
    }
    std::string key = trim(assignment.substr(0, eq));
    std::string value = trim(assignment.substr(eq + 1));
    auto dot = key.find('.');
    if (dot == std::string::npos) {
        throw std::invalid_argument("override must be section.key=value: " + assignment);
    }
    apply_key(config, key.substr(0, dot), key.substr(dot + 1), value, "");
}

}  // namespace presage::scenario
