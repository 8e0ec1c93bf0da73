#include "presage/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace presage {

Rational rational_from_double(double v) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument("cannot convert non-finite value to rational");
    }
    if (v == 0.0) {
        return Rational(0);
    }
    int exp = 0;
    double mant = std::frexp(v, &exp);  // v = mant * 2^exp, |mant| in [0.5, 1)
    // 53 doublings make the mantissa integral
    BigInt num = static_cast<std::int64_t>(std::ldexp(mant, 53));
    exp -= 53;
    Rational r(num);
    if (exp > 0) {
        r *= Rational(BigInt(1) << exp);
    } else if (exp < 0) {
        r /= Rational(BigInt(1) << -exp);
    }
    return r;
}

Rational rational_from_decimal(std::string_view text) {
    std::size_t i = 0;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        negative = text[i] == '-';
        ++i;
    }
    BigInt num = 0;
    BigInt den = 1;
    bool any_digit = false;
    bool seen_point = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '.') {
            if (seen_point) {
                throw std::invalid_argument("malformed decimal literal");
            }
            seen_point = true;
        } else if (c >= '0' && c <= '9') {
            num = num * 10 + (c - '0');
            if (seen_point) {
                den *= 10;
            }
            any_digit = true;
        } else {
            throw std::invalid_argument("malformed decimal literal");
        }
    }
    if (!any_digit) {
        throw std::invalid_argument("malformed decimal literal");
    }
    Rational r(num, den);
    return negative ? -r : r;
}

double rational_to_double(const Rational& v) {
    return v.convert_to<double>();
}

}  // namespace presage
