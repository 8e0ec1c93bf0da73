#include "presage/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace presage::io {

mdl::Series read_timed_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw std::invalid_argument("cannot open " + path);
    }
    return parse_timed_csv(f, path);
}

mdl::Series parse_timed_csv(std::istream& in, const std::string& origin) {
    mdl::Series series;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected 'time_s,value'");
        }
        std::string a = line.substr(0, comma);
        std::string b = line.substr(comma + 1);
        if (lineno == 1 && !a.empty() &&
            !std::isdigit(static_cast<unsigned char>(a.front())) && a.front() != '-' &&
            a.front() != '+' && a.front() != '.') {
            continue;  // header row
        }
        try {
            series.push_back({std::stod(a), std::stod(b)});
        } catch (const std::exception&) {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": malformed number");
        }
    }
    if (series.empty()) {
        throw std::invalid_argument(origin + ": no samples");
    }
    return series;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec <= 16; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(probe, "%lf", &back);
        if (back == v) {
            return probe;
        }
    }
    return buf;
}

}  // namespace presage::io
