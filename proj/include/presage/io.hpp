#ifndef PRESAGE_IO_HPP
#define PRESAGE_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "presage/mdl.hpp"

namespace presage::io {

// CSV with columns time_s,value; a header row is skipped when present.
mdl::Series read_timed_csv(const std::string& path);
mdl::Series parse_timed_csv(std::istream& in, const std::string& origin);

// Shortest round-trip formatting for doubles, stable across runs.
std::string format_double(double v);

}  // namespace presage::io

#endif
