#ifndef PRESAGE_COMPLEXITY_HPP
#define PRESAGE_COMPLEXITY_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "presage/bitstring.hpp"

namespace presage::complexity {

struct ComplexityEstimate {
    double khat = 0.0;              // estimated complexity, bits
    double density = 0.0;           // khat / source_length
    std::size_t source_length = 0;  // bits
};

// H(p) = -p log2 p - (1-p) log2 (1-p), with 0 log2 0 := 0.
// Throws std::domain_error outside [0, 1].
double binary_entropy(double p);

// Entropy-of-ones estimator: K(x) ~= l(x) H(x#1 / l(x)) + log2 l(x).
// Throws std::domain_error on the empty string.
ComplexityEstimate estimate_complexity(const BitString& x);

// estimate_complexity(x).khat / l(x).
double complexity_density(const BitString& x);

// Estimator behind estimate_complexity, swappable for a compressor-backed
// implementation behind the same contract.
class ComplexityEstimator {
public:
    virtual ~ComplexityEstimator() = default;
    virtual ComplexityEstimate estimate(const BitString& x) const = 0;
};

class EntropyEstimator final : public ComplexityEstimator {
public:
    ComplexityEstimate estimate(const BitString& x) const override;
};

// Serializes numeric samples for bit-level measurement.
class SampleCodec {
public:
    virtual ~SampleCodec() = default;
    virtual void append(double sample, BitString& out) const = 0;
};

// Fixed-width two's-complement integers, most significant bit first.
// Samples are rounded to the nearest integer before encoding.
class FixedWidthCodec final : public SampleCodec {
public:
    explicit FixedWidthCodec(unsigned width_bits = 32);
    void append(double sample, BitString& out) const override;
    unsigned width() const { return width_; }

private:
    unsigned width_;
};

// Slices `samples` into successive non-overlapping windows of `window`
// samples (trailing partial window dropped), serializes each through `codec`
// and estimates its complexity. Throws std::domain_error when window is 0 or
// exceeds the series length.
std::vector<ComplexityEstimate> windowed_complexity(std::span<const double> samples,
                                                    std::size_t window,
                                                    const SampleCodec& codec,
                                                    const ComplexityEstimator& estimator);
std::vector<ComplexityEstimate> windowed_complexity(std::span<const double> samples,
                                                    std::size_t window,
                                                    const SampleCodec& codec);

}  // namespace presage::complexity

#endif
