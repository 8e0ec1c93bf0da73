#ifndef PRESAGE_RATIONAL_HPP
#define PRESAGE_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace presage {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Exact conversion: every finite double is a dyadic rational.
Rational rational_from_double(double v);

// Parses a plain decimal ("-12.5", "0.3") exactly as p / 10^k.
Rational rational_from_decimal(std::string_view text);

double rational_to_double(const Rational& v);

}  // namespace presage

#endif
