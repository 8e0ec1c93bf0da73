#include "presage/mdl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace presage::mdl {

namespace {

void check_series(std::span<const TimedSample> history) {
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (!(history[i].t > history[i - 1].t)) {
            throw std::invalid_argument("series timestamps must be strictly increasing");
        }
    }
}

std::int64_t round_checked(double value) {
    if (!(value >= -2147483648.5 && value < 2147483647.5)) {
        throw std::out_of_range("sample value does not fit a 32-bit integer");
    }
    std::int64_t r = std::llround(value);
    if (r < std::numeric_limits<std::int32_t>::min() ||
        r > std::numeric_limits<std::int32_t>::max()) {
        throw std::out_of_range("sample value does not fit a 32-bit integer");
    }
    return r;
}

// Mean of values[end-count .. end-1].
double window_mean(std::span<const std::int64_t> values, std::size_t end, std::size_t count) {
    double sum = 0.0;
    for (std::size_t i = end - count; i < end; ++i) {
        sum += static_cast<double>(values[i]);
    }
    return sum / static_cast<double>(count);
}

void encode_gamma(std::uint64_t v, BitString& out) {
    // v >= 1: floor(log2 v) zeros, then v in binary (leading 1 first).
    unsigned n = static_cast<unsigned>(std::bit_width(v));
    for (unsigned i = 0; i + 1 < n; ++i) {
        out.push_back(false);
    }
    out.append_uint(v, n);
}

std::uint64_t decode_gamma(BitReader& in) {
    unsigned zeros = 0;
    while (!in.read_bit()) {
        if (++zeros > 63) {
            throw FormatError("gamma code too long");
        }
    }
    std::uint64_t v = 1;
    for (unsigned i = 0; i < zeros; ++i) {
        v = (v << 1) | (in.read_bit() ? 1u : 0u);
    }
    return v;
}

std::uint64_t zigzag(std::int64_t v) {
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

std::int64_t unzigzag(std::uint64_t v) {
    return static_cast<std::int64_t>((v >> 1) ^ (~(v & 1) + 1));
}

constexpr std::uint64_t kRunEscape = 1;   // gamma(1), followed by gamma(run length)
constexpr std::size_t kMinRun = 8;        // shortest zero run worth escaping

}  // namespace

Series smooth(std::span<const TimedSample> history, std::size_t w) {
    if (w == 0) {
        throw std::domain_error("smooth: window must be >= 1");
    }
    if (history.empty()) {
        throw std::domain_error("smooth: history must not be empty");
    }
    check_series(history);
    Series out;
    out.reserve(history.size());
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::size_t count = std::min(i + 1, w);
        double sum = 0.0;
        for (std::size_t j = i + 1 - count; j <= i; ++j) {
            sum += history[j].value;
        }
        out.push_back({history[i].t, sum / static_cast<double>(count)});
    }
    return out;
}

double predicted_value_at(const Hypothesis& h, std::span<const TimedSample> history, double t) {
    if (history.empty()) {
        throw std::domain_error("predict: history must not be empty");
    }
    check_series(history);
    const std::size_t n = history.size();
    const std::size_t w = h.window == 0 ? 1 : h.window;
    auto mean_tail = [&](std::size_t end) {
        std::size_t count = std::min(end, w);
        double sum = 0.0;
        for (std::size_t i = end - count; i < end; ++i) {
            sum += history[i].value;
        }
        return sum / static_cast<double>(count);
    };
    double s_last = mean_tail(n);
    if (n == 1) {
        return s_last;
    }
    double s_prev = mean_tail(n - 1);
    double slope = (s_last - s_prev) / (history[n - 1].t - history[n - 2].t);
    return s_last + slope * (t - history[n - 1].t);
}

Series predict(const Hypothesis& h, std::span<const TimedSample> history, std::size_t steps) {
    if (!(h.step_size > 0.0)) {
        throw std::domain_error("predict: step size must be positive");
    }
    Series out;
    if (steps == 0) {
        if (history.empty()) {
            throw std::domain_error("predict: history must not be empty");
        }
        return out;
    }
    out.reserve(steps);
    double t_last = history.empty() ? 0.0 : history.back().t;
    for (std::size_t k = 1; k <= steps; ++k) {
        double t = t_last + static_cast<double>(k) * h.step_size;
        out.push_back({t, predicted_value_at(h, history, t)});
    }
    return out;
}

std::vector<std::int64_t> residual(std::span<const TimedSample> actual,
                                   std::span<const TimedSample> predicted) {
    if (actual.size() != predicted.size()) {
        throw std::invalid_argument("residual: series lengths differ");
    }
    std::vector<std::int64_t> out;
    out.reserve(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i].t != predicted[i].t) {
            throw std::invalid_argument("residual: timestamps do not align");
        }
        out.push_back(std::llround(actual[i].value) - std::llround(predicted[i].value));
    }
    return out;
}

std::vector<std::int64_t> rounded_values(std::span<const TimedSample> data) {
    std::vector<std::int64_t> out;
    out.reserve(data.size());
    for (const auto& s : data) {
        out.push_back(round_checked(s.value));
    }
    return out;
}

std::vector<std::int64_t> coding_residuals(const Hypothesis& h,
                                           std::span<const std::int64_t> values) {
    if (values.empty()) {
        throw std::domain_error("coding_residuals: empty value sequence");
    }
    const std::size_t w = h.window == 0 ? 1 : h.window;
    std::vector<std::int64_t> res;
    res.reserve(values.size() > 0 ? values.size() - 1 : 0);
    std::vector<double> smoothed;
    smoothed.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i >= 1) {
            double p = (i == 1) ? smoothed[0] : 2.0 * smoothed[i - 1] - smoothed[i - 2];
            res.push_back(values[i] - std::llround(p));
        }
        std::size_t count = std::min(i + 1, w);
        smoothed.push_back(window_mean(values, i + 1, count));
    }
    return res;
}

void encode_residuals(std::span<const std::int64_t> residuals, BitString& out) {
    std::size_t i = 0;
    while (i < residuals.size()) {
        if (residuals[i] == 0) {
            std::size_t run = 0;
            while (i + run < residuals.size() && residuals[i + run] == 0) {
                ++run;
            }
            if (run >= kMinRun) {
                encode_gamma(kRunEscape, out);
                encode_gamma(run, out);
                i += run;
                continue;
            }
        }
        encode_gamma(zigzag(residuals[i]) + 2, out);
        ++i;
    }
}

std::vector<std::int64_t> decode_residuals(BitReader& in) {
    std::vector<std::int64_t> out;
    while (!in.at_end()) {
        std::uint64_t v;
        try {
            v = decode_gamma(in);
        } catch (const std::out_of_range&) {
            throw FormatError("truncated residual stream");
        }
        if (v == kRunEscape) {
            std::uint64_t run;
            try {
                run = decode_gamma(in);
            } catch (const std::out_of_range&) {
                throw FormatError("truncated run length");
            }
            if (run < kMinRun) {
                throw FormatError("invalid zero-run length");
            }
            out.insert(out.end(), static_cast<std::size_t>(run), 0);
        } else {
            out.push_back(unzigzag(v - 2));
        }
    }
    return out;
}

PacketMode ActivePacket::mode() const {
    return (header.flags & 1u) ? PacketMode::active : PacketMode::passive;
}

std::size_t ActivePacket::total_length() const {
    return kHeaderBits + code.size() + data.size();
}

BitString ActivePacket::to_bits() const {
    BitString out;
    out.append_uint(header.magic, 16);
    out.append_uint(header.version, 8);
    out.append_uint(header.flags, 8);
    out.append(code);
    out.append(data);
    return out;
}

ActivePacket ActivePacket::from_bits(const BitString& bits) {
    if (bits.size() < kHeaderBits) {
        throw FormatError("packet shorter than header");
    }
    ActivePacket p;
    p.header.magic = static_cast<std::uint16_t>(bits.read_uint(0, 16));
    p.header.version = static_cast<std::uint8_t>(bits.read_uint(16, 8));
    p.header.flags = static_cast<std::uint8_t>(bits.read_uint(24, 8));
    if (p.header.magic != kPacketMagic) {
        throw FormatError("bad packet magic");
    }
    if (p.header.version != kPacketVersion) {
        throw FormatError("unsupported packet version");
    }
    if (p.header.flags > 1) {
        throw FormatError("unknown packet flags");
    }
    std::size_t code_bits = p.mode() == PacketMode::active ? kHypothesisCodeBits : 0;
    if (bits.size() < kHeaderBits + code_bits) {
        throw FormatError("truncated hypothesis code");
    }
    p.code = bits.substr(kHeaderBits, kHeaderBits + code_bits);
    p.data = bits.substr(kHeaderBits + code_bits, bits.size());
    return p;
}

BitString encode_hypothesis(const Hypothesis& h) {
    if (h.window == 0) {
        throw std::domain_error("hypothesis window must be >= 1");
    }
    if (!(h.step_size > 0.0)) {
        throw std::domain_error("hypothesis step size must be positive");
    }
    BitString out;
    out.append_uint(static_cast<std::uint8_t>(h.family), 8);
    out.append_uint(h.window, 16);
    out.append_uint(std::bit_cast<std::uint32_t>(static_cast<float>(h.step_size)), 32);
    return out;
}

Hypothesis decode_hypothesis(BitReader& in) {
    Hypothesis h;
    std::uint64_t family;
    try {
        family = in.read_uint(8);
        h.window = static_cast<std::uint16_t>(in.read_uint(16));
        h.step_size = static_cast<double>(
            std::bit_cast<float>(static_cast<std::uint32_t>(in.read_uint(32))));
    } catch (const std::out_of_range&) {
        throw FormatError("truncated hypothesis code");
    }
    if (family != static_cast<std::uint64_t>(HypothesisFamily::linear_extrapolation)) {
        throw FormatError("unknown hypothesis family");
    }
    if (h.window == 0 || !(h.step_size > 0.0)) {
        throw FormatError("invalid hypothesis parameters");
    }
    h.family = HypothesisFamily::linear_extrapolation;
    return h;
}

namespace {

// Verbatim first sample, then the residual stream of the closed-loop
// one-step-ahead predictions.
BitString encode_value_stream(const Hypothesis& h, std::span<const std::int64_t> values) {
    BitString out;
    out.append_int(values[0], kSampleBits);
    auto res = coding_residuals(h, values);
    encode_residuals(res, out);
    return out;
}

std::vector<std::int64_t> decode_value_stream(const Hypothesis& h, const BitString& data) {
    BitReader in(data);
    std::vector<std::int64_t> values;
    std::int64_t first;
    try {
        first = in.read_int(kSampleBits);
    } catch (const std::out_of_range&) {
        throw FormatError("truncated sample payload");
    }
    values.push_back(first);
    auto residuals = decode_residuals(in);
    const std::size_t w = h.window == 0 ? 1 : h.window;
    std::vector<double> smoothed;
    smoothed.push_back(static_cast<double>(first));
    for (std::size_t k = 0; k < residuals.size(); ++k) {
        std::size_t i = k + 1;  // index of the value being reconstructed
        double p = (i == 1) ? smoothed[0] : 2.0 * smoothed[i - 1] - smoothed[i - 2];
        std::int64_t v = std::llround(p) + residuals[k];
        values.push_back(v);
        std::size_t count = std::min(i + 1, w);
        smoothed.push_back(window_mean(values, i + 1, count));
    }
    return values;
}

}  // namespace

std::size_t description_length(const Hypothesis& h, std::span<const TimedSample> data) {
    if (data.empty()) {
        throw std::domain_error("description_length: empty series");
    }
    check_series(data);
    auto values = rounded_values(data);
    return kHeaderBits + kHypothesisCodeBits + encode_value_stream(h, values).size();
}

std::pair<Hypothesis, std::size_t> select_hypothesis(std::span<const std::size_t> window_grid,
                                                     std::span<const TimedSample> data) {
    if (window_grid.empty()) {
        throw std::domain_error("select_hypothesis: empty grid");
    }
    std::vector<std::size_t> grid(window_grid.begin(), window_grid.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    Hypothesis best;
    std::size_t best_bits = 0;
    bool have = false;
    for (std::size_t w : grid) {
        if (w == 0 || w > std::numeric_limits<std::uint16_t>::max()) {
            throw std::domain_error("select_hypothesis: window out of range");
        }
        Hypothesis h;
        h.window = static_cast<std::uint16_t>(w);
        std::size_t bits = description_length(h, data);
        if (!have || bits < best_bits) {
            best = h;
            best_bits = bits;
            have = true;
        }
    }
    return {best, best_bits};
}

ActivePacket encode_packet(const Hypothesis& h, std::span<const TimedSample> data,
                           PacketMode mode) {
    if (data.empty()) {
        throw std::domain_error("encode_packet: empty series");
    }
    check_series(data);
    auto values = rounded_values(data);
    ActivePacket p;
    p.header.flags = mode == PacketMode::active ? 1 : 0;
    if (mode == PacketMode::active) {
        p.code = encode_hypothesis(h);
        p.data = encode_value_stream(h, values);
    } else {
        for (std::int64_t v : values) {
            p.data.append_int(v, kSampleBits);
        }
    }
    return p;
}

std::vector<std::int64_t> decode_packet(const ActivePacket& p) {
    if (p.header.magic != kPacketMagic) {
        throw FormatError("bad packet magic");
    }
    if (p.header.version != kPacketVersion) {
        throw FormatError("unsupported packet version");
    }
    if (p.mode() == PacketMode::passive) {
        if (p.data.size() % kSampleBits != 0) {
            throw FormatError("passive payload is not a whole number of samples");
        }
        std::vector<std::int64_t> values;
        BitReader in(p.data);
        while (!in.at_end()) {
            values.push_back(in.read_int(kSampleBits));
        }
        return values;
    }
    BitReader code(p.code);
    Hypothesis h = decode_hypothesis(code);
    if (!code.at_end()) {
        throw FormatError("trailing bits after hypothesis code");
    }
    if (p.data.empty()) {
        throw FormatError("active packet carries no samples");
    }
    return decode_value_stream(h, p.data);
}

}  // namespace presage::mdl
