#ifndef PRESAGE_ANET_HPP
#define PRESAGE_ANET_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "presage/rational.hpp"

namespace presage::anet {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tiny expression language carried by algorithmic packets:
//   expr := number | $<k> | add(e,e) | sub(e,e) | mul(e,e) | div(e,e)
//         | digits(e, n)
// digits(e, n) truncates e's decimal expansion to n significant digits.
enum class ExprOp : std::uint8_t {
    literal = 'L',
    arg = 'G',
    add = 'A',
    sub = 'S',
    mul = 'M',
    divide = 'D',
    digits = 'X',
};

struct Expr {
    ExprOp op = ExprOp::literal;
    Rational literal;                      // literal
    std::size_t arg_index = 0;             // arg
    std::uint64_t digit_count = 0;         // digits
    std::vector<Expr> children;

    std::size_t operation_count() const;   // operator nodes (binary ops + digits)
    std::size_t serialized_bytes() const;  // 1-byte opcodes, 8-byte literals
};

Expr parse_expr(std::string_view text);
std::string format_expr(const Expr& e);

// Evaluates exactly over rationals. Unbound $k or division by zero raise
// EvalError.
Rational eval_expr(const Expr& e, std::span<const Rational> args);

// Truncating decimal expansion: the first `significant_digits` digits,
// counted from the first nonzero digit, never rounded; trailing fractional
// zeros trimmed ("3.142857", "0.3333", "5").
std::string decimal_expansion(const Rational& v, std::uint64_t significant_digits);

enum class PacketForm : std::uint8_t {
    algorithmic,  // code + args, no payload
    static_data,  // pre-evaluated decimal payload, no code
};

struct ExprPacket {
    PacketForm form = PacketForm::static_data;
    Expr code;                    // meaningful only when algorithmic
    std::vector<Rational> args;
    std::string payload;          // decimal string when static

    std::size_t size_bytes() const;       // serialized size
    std::vector<std::uint8_t> serialize() const;
};

ExprPacket make_algorithmic(Expr code, std::vector<Rational> args);

// RUN: evaluates an algorithmic packet into a static one holding the decimal
// expansion to `precision` significant digits. Static packets pass through
// unchanged.
ExprPacket evaluate(const ExprPacket& p, std::uint64_t precision);

struct NodeSpec {
    double processing_rate = 1e6;  // operations/second
};

struct LinkSpec {
    std::string from;
    std::string to;
    double capacity = 0.0;  // bytes/second, > 0
};

struct Topology {
    std::map<std::string, NodeSpec> nodes;
    std::map<int, LinkSpec> links;  // unique ids

    void validate() const;
};

// Structured text: [nodes] id = rate, [links] id = from to capacity.
Topology parse_topology(std::string_view text);

struct PacketTransit {
    std::map<int, double> link_load_bytes;
    std::map<int, double> link_transit_s;
    std::map<std::string, double> node_processing_s;
};

struct TransmitResult {
    std::vector<PacketTransit> per_packet;
    PacketTransit total;
};

// Each packet adds size_bytes of load to every link on its route; per-link
// transit time is size/capacity, and every node the route touches charges
// operation_count/processing_rate (zero for static packets).
TransmitResult transmit(const Topology& topo, std::span<const std::vector<int>> routes,
                        std::span<const ExprPacket> packets);

}  // namespace presage::anet

#endif
