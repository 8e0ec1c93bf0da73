#include "presage/bitstring.hpp"

#include <bit>
#include <stdexcept>

namespace presage {

BitString BitString::from_ascii(std::string_view zeros_and_ones) {
    BitString out;
    for (char c : zeros_and_ones) {
        if (c == '0') {
            out.push_back(false);
        } else if (c == '1') {
            out.push_back(true);
        } else {
            throw std::invalid_argument("bit literal may contain only '0' and '1'");
        }
    }
    return out;
}

static int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

BitString BitString::from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
        throw std::invalid_argument("hex literal must cover whole bytes");
    }
    BitString out;
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_digit(hex[i]);
        int lo = hex_digit(hex[i + 1]);
        if (hi < 0 || lo < 0) {
            throw std::invalid_argument("invalid hex digit");
        }
        out.append_uint(static_cast<std::uint64_t>(hi << 4 | lo), 8);
    }
    return out;
}

void BitString::push_back(bool bit) {
    if (size_ % 8 == 0) {
        bytes_.push_back(0);
    }
    if (bit) {
        bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (size_ % 8));
        ++ones_;
    }
    ++size_;
}

void BitString::append(const BitString& other) {
    for (std::size_t i = 0; i < other.size_; ++i) {
        push_back(other.bit(i));
    }
}

void BitString::append_uint(std::uint64_t value, unsigned width) {
    if (width > 64) {
        throw std::invalid_argument("field width exceeds 64 bits");
    }
    for (unsigned i = width; i-- > 0;) {
        push_back((value >> i) & 1u);
    }
}

void BitString::append_int(std::int64_t value, unsigned width) {
    if (width == 0 || width > 64) {
        throw std::invalid_argument("field width out of range");
    }
    if (width < 64) {
        std::int64_t lo = -(std::int64_t{1} << (width - 1));
        std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;
        if (value < lo || value > hi) {
            throw std::out_of_range("value does not fit field width");
        }
    }
    append_uint(static_cast<std::uint64_t>(value), width);
}

bool BitString::bit(std::size_t index) const {
    if (index >= size_) {
        throw std::out_of_range("bit index out of range");
    }
    return (bytes_[index / 8] >> (7 - index % 8)) & 1u;
}

std::uint64_t BitString::read_uint(std::size_t index, unsigned width) const {
    if (width > 64) {
        throw std::invalid_argument("field width exceeds 64 bits");
    }
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) {
        v = (v << 1) | (bit(index + i) ? 1u : 0u);
    }
    return v;
}

std::size_t BitString::recount_ones() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < bytes_.size(); ++i) {
        n += static_cast<std::size_t>(std::popcount(bytes_[i]));
    }
    if (!bytes_.empty()) {
        // mask tail padding in the last byte
        unsigned used = size_ % 8 == 0 ? 8 : static_cast<unsigned>(size_ % 8);
        std::uint8_t mask = static_cast<std::uint8_t>(0xFFu << (8 - used));
        n += static_cast<std::size_t>(std::popcount(static_cast<std::uint8_t>(bytes_.back() & mask)));
    }
    return n;
}

BitString BitString::substr(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size_) {
        throw std::out_of_range("substring range out of bounds");
    }
    BitString out;
    for (std::size_t i = begin; i < end; ++i) {
        out.push_back(bit(i));
    }
    return out;
}

std::string BitString::to_ascii() const {
    std::string s;
    s.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) {
        s.push_back(bit(i) ? '1' : '0');
    }
    return s;
}

bool BitString::operator==(const BitString& other) const {
    if (size_ != other.size_ || ones_ != other.ones_) {
        return false;
    }
    for (std::size_t i = 0; i < size_; ++i) {
        if (bit(i) != other.bit(i)) {
            return false;
        }
    }
    return true;
}

bool BitReader::read_bit() {
    if (pos_ >= bits_->size()) {
        throw std::out_of_range("bit stream exhausted");
    }
    return bits_->bit(pos_++);
}

std::uint64_t BitReader::read_uint(unsigned width) {
    if (width > 64) {
        throw std::invalid_argument("field width exceeds 64 bits");
    }
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) {
        v = (v << 1) | (read_bit() ? 1u : 0u);
    }
    return v;
}

std::int64_t BitReader::read_int(unsigned width) {
    std::uint64_t raw = read_uint(width);
    if (width == 0 || width == 64) {
        return static_cast<std::int64_t>(raw);
    }
    // sign-extend
    std::uint64_t sign = std::uint64_t{1} << (width - 1);
    if (raw & sign) {
        raw |= ~((sign << 1) - 1);
    }
    return static_cast<std::int64_t>(raw);
}

}  // namespace presage
