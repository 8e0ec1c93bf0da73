#include "presage/complexity.hpp"

#include <cmath>
#include <stdexcept>

namespace presage::complexity {

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error("binary_entropy: p must lie in [0, 1]");
    }
    if (p == 0.0 || p == 1.0) {
        return 0.0;
    }
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

ComplexityEstimate estimate_complexity(const BitString& x) {
    if (x.empty()) {
        throw std::domain_error("estimate_complexity: empty string (log2(0) undefined)");
    }
    const double length = static_cast<double>(x.size());
    const double p = static_cast<double>(x.ones()) / length;
    ComplexityEstimate est;
    est.source_length = x.size();
    est.khat = length * binary_entropy(p) + std::log2(length);
    est.density = est.khat / length;
    return est;
}

double complexity_density(const BitString& x) {
    return estimate_complexity(x).density;
}

ComplexityEstimate EntropyEstimator::estimate(const BitString& x) const {
    return estimate_complexity(x);
}

FixedWidthCodec::FixedWidthCodec(unsigned width_bits) : width_(width_bits) {
    if (width_ == 0 || width_ > 64) {
        throw std::invalid_argument("FixedWidthCodec: width must be 1..64 bits");
    }
}

void FixedWidthCodec::append(double sample, BitString& out) const {
    out.append_int(std::llround(sample), width_);
}

std::vector<ComplexityEstimate> windowed_complexity(std::span<const double> samples,
                                                    std::size_t window,
                                                    const SampleCodec& codec,
                                                    const ComplexityEstimator& estimator) {
    if (window == 0) {
        throw std::domain_error("windowed_complexity: window must be >= 1");
    }
    if (window > samples.size()) {
        throw std::domain_error("windowed_complexity: window exceeds series length");
    }
    std::vector<ComplexityEstimate> out;
    out.reserve(samples.size() / window);
    for (std::size_t start = 0; start + window <= samples.size(); start += window) {
        BitString bits;
        for (std::size_t i = 0; i < window; ++i) {
            codec.append(samples[start + i], bits);
        }
        out.push_back(estimator.estimate(bits));
    }
    return out;
}

std::vector<ComplexityEstimate> windowed_complexity(std::span<const double> samples,
                                                    std::size_t window,
                                                    const SampleCodec& codec) {
    return windowed_complexity(samples, window, codec, EntropyEstimator{});
}

}  // namespace presage::complexity
