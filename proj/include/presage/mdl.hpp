#ifndef PRESAGE_MDL_HPP
#define PRESAGE_MDL_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "presage/bitstring.hpp"

namespace presage::mdl {

// Malformed or truncated packet bits.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class HypothesisFamily : std::uint8_t {
    linear_extrapolation = 1,
};

// A predictor: running-average smoothing of width `window` followed by linear
// extrapolation through the last two smoothed samples. Doubles as the code
// half of an active packet.
struct Hypothesis {
    HypothesisFamily family = HypothesisFamily::linear_extrapolation;
    std::uint16_t window = 1;  // running-average length, >= 1
    double step_size = 1.0;    // seconds per prediction step, > 0
};

struct TimedSample {
    double t = 0.0;      // seconds, strictly increasing within a series
    double value = 0.0;  // load (messages/second) or generic real
};

using Series = std::vector<TimedSample>;

// Running average: sample i becomes the mean of the last min(i+1, w) values.
// Timestamps are unchanged. w = 0 is a domain error.
Series smooth(std::span<const TimedSample> history, std::size_t w);

// Smooths with h.window, fits a line through the last two smoothed samples
// (slope 0 if only one) and evaluates it at `t`.
double predicted_value_at(const Hypothesis& h, std::span<const TimedSample> history, double t);

// Emits `steps` samples at t_last + k * h.step_size, k = 1..steps, along the
// extrapolation line. steps = 0 yields an empty series.
Series predict(const Hypothesis& h, std::span<const TimedSample> history, std::size_t steps);

// E_i = round(actual_i) - round(predicted_i). Series must have equal lengths
// and matching timestamps.
std::vector<std::int64_t> residual(std::span<const TimedSample> actual,
                                   std::span<const TimedSample> predicted);

// llround of every sample value; values must fit a 32-bit integer.
std::vector<std::int64_t> rounded_values(std::span<const TimedSample> data);

// In-sample one-step-ahead coding residuals r_1..r_{n-1}: the prediction at
// index i uses only values[0..i-1], smoothed with h.window, extrapolated one
// index forward (zero slope when a single prior sample exists). values[0] is
// transmitted verbatim and produces no residual.
std::vector<std::int64_t> coding_residuals(const Hypothesis& h,
                                           std::span<const std::int64_t> values);

// Residual bit codec: zigzag to naturals, Elias gamma, with a run-length
// escape (gamma(1), then gamma(run)) for runs of >= 8 zero residuals.
void encode_residuals(std::span<const std::int64_t> residuals, BitString& out);
std::vector<std::int64_t> decode_residuals(BitReader& in);

// --- Packet wire format (bit-exact; see docs/packet-format.md) ------------

inline constexpr std::uint16_t kPacketMagic = 0xAC7E;
inline constexpr std::uint8_t kPacketVersion = 1;
inline constexpr std::size_t kHeaderBits = 32;          // magic 16 + version 8 + flags 8
inline constexpr std::size_t kHypothesisCodeBits = 56;  // family 8 + window 16 + step 32
inline constexpr unsigned kSampleBits = 32;

enum class PacketMode : std::uint8_t {
    passive = 0,  // raw fixed-width samples, no code section
    active = 1,   // hypothesis code + residual-coded samples
};

struct PacketHeader {
    std::uint16_t magic = kPacketMagic;
    std::uint8_t version = kPacketVersion;
    std::uint8_t flags = 0;  // bit 0: 1 = active, 0 = passive
};

struct ActivePacket {
    PacketHeader header;
    BitString code;  // encoded hypothesis, empty when passive
    BitString data;  // residual stream (active) or raw samples (passive)

    PacketMode mode() const;
    std::size_t total_length() const;  // header + l(code) + l(data), bits

    BitString to_bits() const;
    static ActivePacket from_bits(const BitString& bits);
};

BitString encode_hypothesis(const Hypothesis& h);
Hypothesis decode_hypothesis(BitReader& in);

// l(code(h)) + l(residual stream) + header bits for the rounded data.
std::size_t description_length(const Hypothesis& h, std::span<const TimedSample> data);

// Scans the window grid and returns the hypothesis minimizing
// description_length, ties broken by the smallest window.
std::pair<Hypothesis, std::size_t> select_hypothesis(std::span<const std::size_t> window_grid,
                                                     std::span<const TimedSample> data);

ActivePacket encode_packet(const Hypothesis& h, std::span<const TimedSample> data,
                           PacketMode mode);

// Reconstructs the rounded integer sample values exactly.
std::vector<std::int64_t> decode_packet(const ActivePacket& p);

}  // namespace presage::mdl

#endif
