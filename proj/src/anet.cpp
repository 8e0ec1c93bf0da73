#include "presage/anet.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <sstream>

namespace presage::anet {

namespace {

struct Lexer {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
    }
    bool eof() {
        skip_ws();
        return pos >= text.size();
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    void expect(char c) {
        if (peek() != c) {
            throw ParseError(std::string("expected '") + c + "' in expression");
        }
        ++pos;
    }
};

Expr parse_node(Lexer& lex);

std::string parse_ident(Lexer& lex) {
    lex.skip_ws();
    std::size_t start = lex.pos;
    while (lex.pos < lex.text.size() &&
           std::isalpha(static_cast<unsigned char>(lex.text[lex.pos]))) {
        ++lex.pos;
    }
    if (lex.pos == start) {
        throw ParseError("expected identifier");
    }
    return std::string(lex.text.substr(start, lex.pos - start));
}

Expr parse_number(Lexer& lex) {
    lex.skip_ws();
    std::size_t start = lex.pos;
    if (lex.pos < lex.text.size() && (lex.text[lex.pos] == '+' || lex.text[lex.pos] == '-')) {
        ++lex.pos;
    }
    while (lex.pos < lex.text.size() &&
           (std::isdigit(static_cast<unsigned char>(lex.text[lex.pos])) ||
            lex.text[lex.pos] == '.')) {
        ++lex.pos;
    }
    if (lex.pos == start) {
        throw ParseError("expected number");
    }
    Expr e;
    e.op = ExprOp::literal;
    try {
        e.literal = rational_from_decimal(lex.text.substr(start, lex.pos - start));
    } catch (const std::invalid_argument& ex) {
        throw ParseError(ex.what());
    }
    return e;
}

std::uint64_t parse_count(Lexer& lex) {
    lex.skip_ws();
    std::size_t start = lex.pos;
    while (lex.pos < lex.text.size() &&
           std::isdigit(static_cast<unsigned char>(lex.text[lex.pos]))) {
        ++lex.pos;
    }
    if (lex.pos == start) {
        throw ParseError("expected integer count");
    }
    return std::stoull(std::string(lex.text.substr(start, lex.pos - start)));
}

Expr parse_node(Lexer& lex) {
    char c = lex.peek();
    if (c == '$') {
        ++lex.pos;
        Expr e;
        e.op = ExprOp::arg;
        e.arg_index = static_cast<std::size_t>(parse_count(lex));
        return e;
    }
    if (c == '+' || c == '-' || std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        return parse_number(lex);
    }
    std::string name = parse_ident(lex);
    ExprOp op;
    if (name == "add") {
        op = ExprOp::add;
    } else if (name == "sub") {
        op = ExprOp::sub;
    } else if (name == "mul") {
        op = ExprOp::mul;
    } else if (name == "div") {
        op = ExprOp::divide;
    } else if (name == "digits") {
        op = ExprOp::digits;
    } else {
        throw ParseError("unknown function: " + name);
    }
    Expr e;
    e.op = op;
    lex.expect('(');
    e.children.push_back(parse_node(lex));
    lex.expect(',');
    if (op == ExprOp::digits) {
        e.digit_count = parse_count(lex);
        if (e.digit_count == 0) {
            throw ParseError("digits() requires a positive count");
        }
    } else {
        e.children.push_back(parse_node(lex));
    }
    lex.expect(')');
    return e;
}

}  // namespace

Expr parse_expr(std::string_view text) {
    Lexer lex{text};
    Expr e = parse_node(lex);
    if (!lex.eof()) {
        throw ParseError("trailing characters after expression");
    }
    return e;
}

std::string format_expr(const Expr& e) {
    switch (e.op) {
        case ExprOp::literal: {
            std::ostringstream os;
            os << e.literal;
            return os.str();
        }
        case ExprOp::arg:
            return "$" + std::to_string(e.arg_index);
        case ExprOp::add:
            return "add(" + format_expr(e.children[0]) + "," + format_expr(e.children[1]) + ")";
        case ExprOp::sub:
            return "sub(" + format_expr(e.children[0]) + "," + format_expr(e.children[1]) + ")";
        case ExprOp::mul:
            return "mul(" + format_expr(e.children[0]) + "," + format_expr(e.children[1]) + ")";
        case ExprOp::divide:
            return "div(" + format_expr(e.children[0]) + "," + format_expr(e.children[1]) + ")";
        case ExprOp::digits:
            return "digits(" + format_expr(e.children[0]) + "," +
                   std::to_string(e.digit_count) + ")";
    }
    return "";
}

std::size_t Expr::operation_count() const {
    std::size_t n = (op == ExprOp::literal || op == ExprOp::arg) ? 0 : 1;
    for (const auto& c : children) {
        n += c.operation_count();
    }
    return n;
}

std::size_t Expr::serialized_bytes() const {
    switch (op) {
        case ExprOp::literal:
            return 1 + 8;
        case ExprOp::arg:
            return 1 + 1;
        case ExprOp::digits:
            return 1 + children[0].serialized_bytes() + 8;
        default:
            return 1 + children[0].serialized_bytes() + children[1].serialized_bytes();
    }
}

Rational eval_expr(const Expr& e, std::span<const Rational> args) {
    switch (e.op) {
        case ExprOp::literal:
            return e.literal;
        case ExprOp::arg:
            if (e.arg_index >= args.size()) {
                throw EvalError("argument $" + std::to_string(e.arg_index) + " is unbound");
            }
            return args[e.arg_index];
        case ExprOp::add:
            return eval_expr(e.children[0], args) + eval_expr(e.children[1], args);
        case ExprOp::sub:
            return eval_expr(e.children[0], args) - eval_expr(e.children[1], args);
        case ExprOp::mul:
            return eval_expr(e.children[0], args) * eval_expr(e.children[1], args);
        case ExprOp::divide: {
            Rational d = eval_expr(e.children[1], args);
            if (d == 0) {
                throw EvalError("division by zero");
            }
            return eval_expr(e.children[0], args) / d;
        }
        case ExprOp::digits: {
            Rational v = eval_expr(e.children[0], args);
            return rational_from_decimal(decimal_expansion(v, e.digit_count));
        }
    }
    throw EvalError("corrupt expression tree");
}

std::string decimal_expansion(const Rational& v, std::uint64_t significant_digits) {
    if (significant_digits == 0) {
        throw std::domain_error("decimal expansion needs at least one digit");
    }
    if (v == 0) {
        return "0";
    }
    std::string sign = v < 0 ? "-" : "";
    Rational a = v < 0 ? Rational(-v) : v;
    BigInt num = boost::multiprecision::numerator(a);
    BigInt den = boost::multiprecision::denominator(a);
    BigInt ipart = num / den;
    BigInt rem = num % den;

    std::string istr = ipart.str();
    if (ipart > 0) {
        if (istr.size() >= significant_digits) {
            // truncate within the integer part, pad back to magnitude
            std::string kept = istr.substr(0, significant_digits);
            kept.append(istr.size() - significant_digits, '0');
            return sign + kept;
        }
        std::uint64_t frac_digits = significant_digits - istr.size();
        std::string frac;
        for (std::uint64_t i = 0; i < frac_digits && rem != 0; ++i) {
            rem *= 10;
            BigInt d = rem / den;
            rem %= den;
            frac.push_back(static_cast<char>('0' + d.convert_to<int>()));
        }
        while (!frac.empty() && frac.back() == '0') {
            frac.pop_back();
        }
        return frac.empty() ? sign + istr : sign + istr + "." + frac;
    }

    // 0.xxx: leading zeros do not count as significant
    std::string frac;
    std::uint64_t significant = 0;
    bool seen_nonzero = false;
    while (rem != 0 && significant < significant_digits) {
        rem *= 10;
        BigInt d = rem / den;
        rem %= den;
        char digit = static_cast<char>('0' + d.convert_to<int>());
        frac.push_back(digit);
        if (digit != '0') {
            seen_nonzero = true;
        }
        if (seen_nonzero) {
            ++significant;
        }
    }
    while (!frac.empty() && frac.back() == '0') {
        frac.pop_back();
    }
    return frac.empty() ? "0" : sign + "0." + frac;
}

std::size_t ExprPacket::size_bytes() const {
    return serialize().size();
}

std::vector<std::uint8_t> ExprPacket::serialize() const {
    std::vector<std::uint8_t> out;
    if (form == PacketForm::static_data) {
        out.push_back('P');  // passive/static marker
        out.insert(out.end(), payload.begin(), payload.end());
        return out;
    }
    out.push_back('Q');  // algorithmic marker
    out.push_back(static_cast<std::uint8_t>(args.size()));
    for (const auto& arg : args) {
        // literals travel as 8-byte floats
        double d = rational_to_double(arg);
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(d));
        std::memcpy(&bits, &d, sizeof(d));
        for (int i = 56; i >= 0; i -= 8) {
            out.push_back(static_cast<std::uint8_t>(bits >> i));
        }
    }
    // prefix (Polish) walk
    std::vector<const Expr*> stack{&code};
    while (!stack.empty()) {
        const Expr* e = stack.back();
        stack.pop_back();
        out.push_back(static_cast<std::uint8_t>(e->op));
        switch (e->op) {
            case ExprOp::literal: {
                double d = rational_to_double(e->literal);
                std::uint64_t bits;
                std::memcpy(&bits, &d, sizeof(d));
                for (int i = 56; i >= 0; i -= 8) {
                    out.push_back(static_cast<std::uint8_t>(bits >> i));
                }
                break;
            }
            case ExprOp::arg:
                out.push_back(static_cast<std::uint8_t>(e->arg_index));
                break;
            case ExprOp::digits:
                for (int i = 56; i >= 0; i -= 8) {
                    out.push_back(static_cast<std::uint8_t>(e->digit_count >> i));
                }
                stack.push_back(&e->children[0]);
                break;
            default:
                // push right first so it pops after left
                stack.push_back(&e->children[1]);
                stack.push_back(&e->children[0]);
                break;
        }
    }
    return out;
}

ExprPacket make_algorithmic(Expr code, std::vector<Rational> args) {
    ExprPacket p;
    p.form = PacketForm::algorithmic;
    p.code = std::move(code);
    p.args = std::move(args);
    return p;
}

ExprPacket evaluate(const ExprPacket& p, std::uint64_t precision) {
    if (precision == 0) {
        throw std::domain_error("evaluate: precision must be >= 1");
    }
    if (p.form == PacketForm::static_data) {
        return p;  // idempotent
    }
    Rational v = eval_expr(p.code, p.args);
    ExprPacket out;
    out.form = PacketForm::static_data;
    out.payload = decimal_expansion(v, precision);
    return out;
}

void Topology::validate() const {
    for (const auto& [id, link] : links) {
        if (!(link.capacity > 0.0)) {
            throw std::invalid_argument("link " + std::to_string(id) +
                                        " must have positive capacity");
        }
        if (!nodes.count(link.from) || !nodes.count(link.to)) {
            throw std::invalid_argument("link " + std::to_string(id) +
                                        " references an unknown node");
        }
    }
}

Topology parse_topology(std::string_view text) {
    Topology topo;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("topology line " + std::to_string(lineno) +
                                            ": malformed section header");
            }
            section = line.substr(1, line.size() - 2);
            if (section != "nodes" && section != "links") {
                throw std::invalid_argument("topology: unknown section [" + section + "]");
            }
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("topology line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        if (section == "nodes") {
            NodeSpec n;
            n.processing_rate = std::stod(value);
            topo.nodes[key] = n;
        } else if (section == "links") {
            std::istringstream vs(value);
            LinkSpec l;
            if (!(vs >> l.from >> l.to >> l.capacity)) {
                throw std::invalid_argument("topology line " + std::to_string(lineno) +
                                            ": expected 'from to capacity'");
            }
            int id = std::stoi(key);
            if (topo.links.count(id)) {
                throw std::invalid_argument("topology: duplicate link id " + key);
            }
            topo.links[id] = l;
        } else {
            throw std::invalid_argument("topology: key outside a section");
        }
    }
    topo.validate();
    return topo;
}

TransmitResult transmit(const Topology& topo, std::span<const std::vector<int>> routes,
                        std::span<const ExprPacket> packets) {
    if (routes.size() != packets.size()) {
        throw std::invalid_argument("transmit: one route per packet required");
    }
    topo.validate();
    TransmitResult result;
    result.per_packet.resize(packets.size());
    for (std::size_t i = 0; i < packets.size(); ++i) {
        const auto& packet = packets[i];
        PacketTransit& pt = result.per_packet[i];
        double size = static_cast<double>(packet.size_bytes());
        std::size_t ops =
            packet.form == PacketForm::algorithmic ? packet.code.operation_count() : 0;
        std::vector<std::string> visited;
        for (std::size_t j = 0; j < routes[i].size(); ++j) {
            int link_id = routes[i][j];
            auto it = topo.links.find(link_id);
            if (it == topo.links.end()) {
                throw std::invalid_argument("transmit: unknown link id " +
                                            std::to_string(link_id));
            }
            const LinkSpec& link = it->second;
            pt.link_load_bytes[link_id] += size;
            pt.link_transit_s[link_id] += size / link.capacity;
            if (j == 0) {
                visited.push_back(link.from);
            }
            visited.push_back(link.to);
        }
        std::sort(visited.begin(), visited.end());
        visited.erase(std::unique(visited.begin(), visited.end()), visited.end());
        for (const auto& node : visited) {
            double rate = topo.nodes.at(node).processing_rate;
            pt.node_processing_s[node] += static_cast<double>(ops) / rate;
        }
        for (const auto& [id, v] : pt.link_load_bytes) {
            result.total.link_load_bytes[id] += v;
        }
        for (const auto& [id, v] : pt.link_transit_s) {
            result.total.link_transit_s[id] += v;
        }
        for (const auto& [id, v] : pt.node_processing_s) {
            result.total.node_processing_s[id] += v;
        }
    }
    return result;
}

}  // namespace presage::anet
