#ifndef PRESAGE_KMAP_HPP
#define PRESAGE_KMAP_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "presage/bitstring.hpp"
#include "presage/complexity.hpp"
#include "presage/rational.hpp"

namespace presage::kmap {

inline constexpr const char* kStartNode = "START";

enum class Direction { in, out };

struct ObservationRecord {
    Direction direction = Direction::in;
    BitString bits;
};

// Bit-level I/O observations of one component. Records alternate IN/OUT per
// observation pair, starting with IN. The optional slice restricts density
// measurement to bit offsets [opstart, opend).
struct ObservationTrace {
    std::string component;
    std::vector<ObservationRecord> records;
    std::optional<std::pair<std::size_t, std::size_t>> slice;

    std::size_t pair_count() const { return records.size() / 2; }
    void validate() const;
};

// For n = 1..k, concatenates the first n IN/OUT pairs and returns the
// complexity density of the (optionally sliced) string.
std::vector<double> trace_density(const ObservationTrace& tr, std::size_t k);
std::vector<double> trace_density(const ObservationTrace& tr, std::size_t k,
                                  const complexity::ComplexityEstimator& estimator);

// One "direction flag + hex bytes" record per line, e.g. "IN a1ff03".
ObservationTrace parse_trace(std::string_view text, std::string component = "");

struct KMapNode {
    std::string id;
    double x = 0.0;
    double y = 0.0;
};

struct EdgeSpec {
    std::string from;
    std::string to;
    std::variant<Rational, ObservationTrace> weight;
};

// Directed graph of components; edge weights are complexity densities
// (positive, finite), kept as exact rationals. START, when present, is the
// attacker's outside state and admits no incoming edges.
class KMapGraph {
public:
    void add_node(std::string id, double x, double y);
    // Returns false when it replaced an existing edge (last write wins).
    bool set_edge(const std::string& from, const std::string& to, Rational density);

    bool has_node(const std::string& id) const;
    const std::vector<KMapNode>& nodes() const { return nodes_; }
    const std::map<std::pair<std::string, std::string>, Rational>& edges() const {
        return edges_;
    }
    const KMapNode& node(const std::string& id) const;

private:
    std::vector<KMapNode> nodes_;  // insertion order
    std::map<std::string, std::size_t> index_;
    std::map<std::pair<std::string, std::string>, Rational> edges_;
};

// Assembles a graph; trace-valued edges take the density of the full
// concatenation. Duplicate edges are last-write-wins, reported in *warnings.
KMapGraph build_kmap(std::span<const KMapNode> layout, std::span<const EdgeSpec> edges,
                     std::vector<std::string>* warnings = nullptr);

// All-pairs minimum path cost, summing edge densities. cost[u][v] is empty
// when v is unreachable from u; cost[u][u] = 0.
struct CostMatrix {
    std::vector<std::string> ids;
    std::vector<std::vector<std::optional<Rational>>> cost;

    const std::optional<Rational>& at(const std::string& u, const std::string& v) const;
};

CostMatrix min_complexity_paths(const KMapGraph& g);

// Max flow with conductance capacities (1/density), exact rationals.
struct FlowResult {
    Rational value;
    std::vector<std::tuple<std::string, std::string, Rational>> edge_flows;
};

FlowResult insecurity_flow(const KMapGraph& g, const std::string& s, const std::string& t);

// Sum of independent pairwise max-flow values into and out of each node.
std::map<std::string, Rational> insecurity_levels(const KMapGraph& g);

enum class SurfaceMode { path_height, flow_level };

struct SurfaceSample {
    std::string node;
    double x = 0.0;
    double y = 0.0;
    double height = 0.0;
    bool infinite = false;
};

// PATH_HEIGHT: minimum path cost from START (START itself and unreachable
// nodes are infinite). FLOW_LEVEL: negated insecurity level, so more insecure
// nodes plot lower. One sample per node, no interpolation.
std::vector<SurfaceSample> export_surface(const KMapGraph& g, SurfaceMode mode);

// Structured text: [nodes] id = x, y and [edges] from -> to = density or
// trace:<path> (resolved against base_dir).
KMapGraph parse_kmap_file(std::string_view text, const std::string& base_dir,
                          std::vector<std::string>* warnings = nullptr);

}  // namespace presage::kmap

#endif
