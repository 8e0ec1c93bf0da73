#include "presage/kmap.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace presage::kmap {

void ObservationTrace::validate() const {
    if (records.empty()) {
        throw std::domain_error("observation trace is empty");
    }
    std::size_t total_bits = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        Direction expected = i % 2 == 0 ? Direction::in : Direction::out;
        if (records[i].direction != expected) {
            throw std::domain_error("trace records must alternate IN/OUT per pair");
        }
        total_bits += records[i].bits.size();
    }
    if (slice) {
        auto [opstart, opend] = *slice;
        if (!(opstart < opend && opend <= total_bits)) {
            throw std::domain_error("trace slice must satisfy opstart < opend <= total bits");
        }
    }
}

std::vector<double> trace_density(const ObservationTrace& tr, std::size_t k,
                                  const complexity::ComplexityEstimator& estimator) {
    tr.validate();
    if (k == 0) {
        throw std::domain_error("trace_density: k must be >= 1");
    }
    if (tr.pair_count() < k) {
        throw std::domain_error("trace_density: trace holds fewer than k pairs");
    }
    std::vector<double> out;
    out.reserve(k);
    BitString concat;
    for (std::size_t n = 0; n < k; ++n) {
        concat.append(tr.records[2 * n].bits);
        concat.append(tr.records[2 * n + 1].bits);
        if (tr.slice) {
            auto [opstart, opend] = *tr.slice;
            if (opstart >= concat.size()) {
                throw std::domain_error("trace slice starts past observed bits");
            }
            BitString sliced = concat.substr(opstart, std::min(opend, concat.size()));
            out.push_back(estimator.estimate(sliced).density);
        } else {
            out.push_back(estimator.estimate(concat).density);
        }
    }
    return out;
}

std::vector<double> trace_density(const ObservationTrace& tr, std::size_t k) {
    return trace_density(tr, k, complexity::EntropyEstimator{});
}

ObservationTrace parse_trace(std::string_view text, std::string component) {
    ObservationTrace tr;
    tr.component = std::move(component);
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string flag, hex;
        if (!(ls >> flag)) {
            continue;
        }
        if (!(ls >> hex)) {
            throw std::invalid_argument("trace record missing hex payload");
        }
        ObservationRecord rec;
        if (flag == "IN" || flag == "in") {
            rec.direction = Direction::in;
        } else if (flag == "OUT" || flag == "out") {
            rec.direction = Direction::out;
        } else {
            throw std::invalid_argument("trace direction must be IN or OUT, got " + flag);
        }
        rec.bits = BitString::from_hex(hex);
        tr.records.push_back(std::move(rec));
    }
    tr.validate();
    return tr;
}

void KMapGraph::add_node(std::string id, double x, double y) {
    if (index_.count(id)) {
        throw std::invalid_argument("duplicate node id: " + id);
    }
    index_[id] = nodes_.size();
    nodes_.push_back({std::move(id), x, y});
}

bool KMapGraph::set_edge(const std::string& from, const std::string& to, Rational density) {
    if (!has_node(from) || !has_node(to)) {
        throw std::invalid_argument("edge references unknown node: " + from + " -> " + to);
    }
    if (to == kStartNode) {
        throw std::invalid_argument("START admits no incoming edges");
    }
    if (!(density > 0)) {
        throw std::domain_error("edge density must be positive: " + from + " -> " + to);
    }
    auto [it, inserted] = edges_.insert_or_assign({from, to}, std::move(density));
    (void)it;
    return inserted;
}

bool KMapGraph::has_node(const std::string& id) const {
    return index_.count(id) > 0;
}

const KMapNode& KMapGraph::node(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw std::invalid_argument("unknown node: " + id);
    }
    return nodes_[it->second];
}

KMapGraph build_kmap(std::span<const KMapNode> layout, std::span<const EdgeSpec> edges,
                     std::vector<std::string>* warnings) {
    KMapGraph g;
    for (const auto& n : layout) {
        g.add_node(n.id, n.x, n.y);
    }
    for (const auto& e : edges) {
        Rational density;
        if (std::holds_alternative<Rational>(e.weight)) {
            density = std::get<Rational>(e.weight);
        } else {
            const auto& tr = std::get<ObservationTrace>(e.weight);
            auto densities = trace_density(tr, tr.pair_count());
            density = rational_from_double(densities.back());
        }
        if (!g.set_edge(e.from, e.to, density) && warnings) {
            warnings->push_back("duplicate edge " + e.from + " -> " + e.to +
                                ": last definition wins");
        }
    }
    return g;
}

const std::optional<Rational>& CostMatrix::at(const std::string& u,
                                              const std::string& v) const {
    auto iu = std::find(ids.begin(), ids.end(), u);
    auto iv = std::find(ids.begin(), ids.end(), v);
    if (iu == ids.end() || iv == ids.end()) {
        throw std::invalid_argument("unknown node in cost matrix lookup");
    }
    return cost[static_cast<std::size_t>(iu - ids.begin())]
               [static_cast<std::size_t>(iv - ids.begin())];
}

CostMatrix min_complexity_paths(const KMapGraph& g) {
    const auto& nodes = g.nodes();
    const std::size_t n = nodes.size();
    CostMatrix m;
    m.ids.reserve(n);
    for (const auto& node : nodes) {
        m.ids.push_back(node.id);
    }
    m.cost.assign(n, std::vector<std::optional<Rational>>(n));
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        index[m.ids[i]] = i;
        m.cost[i][i] = Rational(0);
    }
    for (const auto& [key, density] : g.edges()) {
        std::size_t u = index[key.first];
        std::size_t v = index[key.second];
        if (u == v) {
            continue;  // self-loop never improves a path
        }
        if (!m.cost[u][v] || density < *m.cost[u][v]) {
            m.cost[u][v] = density;
        }
    }
    // Floyd-Warshall over exact rationals
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!m.cost[i][k]) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (!m.cost[k][j]) {
                    continue;
                }
                Rational via = *m.cost[i][k] + *m.cost[k][j];
                if (!m.cost[i][j] || via < *m.cost[i][j]) {
                    m.cost[i][j] = via;
                }
            }
        }
    }
    return m;
}

namespace {

struct FlowNetwork {
    std::vector<std::string> ids;
    std::map<std::string, std::size_t> index;
    // cap[u][v]: conductance 1/density; flow[u][v]: net flow
    std::vector<std::vector<Rational>> cap;
    std::vector<std::vector<Rational>> flow;

    explicit FlowNetwork(const KMapGraph& g) {
        for (const auto& node : g.nodes()) {
            index[node.id] = ids.size();
            ids.push_back(node.id);
        }
        cap.assign(ids.size(), std::vector<Rational>(ids.size(), Rational(0)));
        flow.assign(ids.size(), std::vector<Rational>(ids.size(), Rational(0)));
        for (const auto& [key, density] : g.edges()) {
            cap[index[key.first]][index[key.second]] += Rational(1) / density;
        }
    }

    Rational max_flow(std::size_t s, std::size_t t) {
        const std::size_t n = ids.size();
        Rational total(0);
        while (true) {
            // BFS over positive residual capacity
            std::vector<std::size_t> parent(n, n);
            std::deque<std::size_t> queue{s};
            parent[s] = s;
            while (!queue.empty() && parent[t] == n) {
                std::size_t u = queue.front();
                queue.pop_front();
                for (std::size_t v = 0; v < n; ++v) {
                    if (parent[v] == n && cap[u][v] - flow[u][v] > 0) {
                        parent[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if (parent[t] == n) {
                break;
            }
            Rational push;
            bool first = true;
            for (std::size_t v = t; v != s; v = parent[v]) {
                Rational residual = cap[parent[v]][v] - flow[parent[v]][v];
                if (first || residual < push) {
                    push = residual;
                    first = false;
                }
            }
            for (std::size_t v = t; v != s; v = parent[v]) {
                flow[parent[v]][v] += push;
                flow[v][parent[v]] -= push;
            }
            total += push;
        }
        return total;
    }
};

}  // namespace

FlowResult insecurity_flow(const KMapGraph& g, const std::string& s, const std::string& t) {
    if (!g.has_node(s) || !g.has_node(t)) {
        throw std::domain_error("insecurity_flow: source or sink absent from graph");
    }
    if (s == t) {
        throw std::domain_error("insecurity_flow: source equals sink");
    }
    FlowNetwork net(g);
    FlowResult result;
    result.value = net.max_flow(net.index[s], net.index[t]);
    for (const auto& [key, density] : g.edges()) {
        (void)density;
        Rational f = net.flow[net.index[key.first]][net.index[key.second]];
        if (f < 0) {
            f = 0;  // net flow ran along the antiparallel edge
        }
        result.edge_flows.emplace_back(key.first, key.second, f);
    }
    return result;
}

std::map<std::string, Rational> insecurity_levels(const KMapGraph& g) {
    std::map<std::string, Rational> levels;
    const auto& nodes = g.nodes();
    for (const auto& node : nodes) {
        levels[node.id] = Rational(0);
    }
    for (const auto& a : nodes) {
        for (const auto& b : nodes) {
            if (a.id == b.id) {
                continue;
            }
            FlowNetwork net(g);
            Rational v = net.max_flow(net.index.at(a.id), net.index.at(b.id));
            levels[a.id] += v;  // outbound for a
            levels[b.id] += v;  // inbound for b
        }
    }
    return levels;
}

std::vector<SurfaceSample> export_surface(const KMapGraph& g, SurfaceMode mode) {
    std::vector<SurfaceSample> out;
    if (mode == SurfaceMode::path_height) {
        if (!g.has_node(kStartNode)) {
            throw std::domain_error("PATH_HEIGHT surface requires a START node");
        }
        CostMatrix m = min_complexity_paths(g);
        for (const auto& node : g.nodes()) {
            SurfaceSample s{node.id, node.x, node.y, 0.0, false};
            if (node.id == kStartNode) {
                s.infinite = true;  // the infinite mountain in the center
            } else {
                const auto& c = m.at(kStartNode, node.id);
                if (c) {
                    s.height = rational_to_double(*c);
                } else {
                    s.infinite = true;
                }
            }
            out.push_back(std::move(s));
        }
        return out;
    }
    auto levels = insecurity_levels(g);
    for (const auto& node : g.nodes()) {
        SurfaceSample s{node.id, node.x, node.y, -rational_to_double(levels[node.id]), false};
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

KMapGraph parse_kmap_file(std::string_view text, const std::string& base_dir,
                          std::vector<std::string>* warnings) {
    std::vector<KMapNode> layout;
    std::vector<EdgeSpec> edges;
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
                throw std::invalid_argument("graph line " + std::to_string(lineno) +
                                            ": malformed section header");
            }
            section = line.substr(1, line.size() - 2);
            if (section != "nodes" && section != "edges") {
                throw std::invalid_argument("graph: unknown section [" + section + "]");
            }
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("graph line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section == "nodes") {
            auto comma = value.find(',');
            if (comma == std::string::npos) {
                throw std::invalid_argument("graph line " + std::to_string(lineno) +
                                            ": node position must be 'x, y'");
            }
            KMapNode n;
            n.id = key;
            n.x = std::stod(trim(value.substr(0, comma)));
            n.y = std::stod(trim(value.substr(comma + 1)));
            layout.push_back(std::move(n));
        } else if (section == "edges") {
            auto arrow = key.find("->");
            if (arrow == std::string::npos) {
                throw std::invalid_argument("graph line " + std::to_string(lineno) +
                                            ": edge key must be 'from -> to'");
            }
            EdgeSpec e;
            e.from = trim(key.substr(0, arrow));
            e.to = trim(key.substr(arrow + 2));
            if (value.rfind("trace:", 0) == 0) {
                std::string path = trim(value.substr(6));
                std::string full = base_dir.empty() ? path : base_dir + "/" + path;
                std::ifstream f(full);
                if (!f) {
                    throw std::invalid_argument("graph: cannot open trace file " + full);
                }
                std::stringstream buf;
                buf << f.rdbuf();
                e.weight = parse_trace(buf.str(), e.from + "->" + e.to);
            } else {
                e.weight = rational_from_decimal(value);
            }
            edges.push_back(std::move(e));
        } else {
            throw std::invalid_argument("graph: key outside a section");
        }
    }
    return build_kmap(layout, edges, warnings);
}

}  // namespace presage::kmap
