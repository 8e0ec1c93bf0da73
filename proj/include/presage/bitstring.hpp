#ifndef PRESAGE_BITSTRING_HPP
#define PRESAGE_BITSTRING_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace presage {

// Finite bit sequence, packed most-significant-bit-first within each byte.
// The count of set bits is kept alongside the raw bits so length, ones and
// zeros are all O(1).
class BitString {
public:
    BitString() = default;

    // Parses a literal of '0'/'1' characters.
    static BitString from_ascii(std::string_view zeros_and_ones);
    // Parses whole bytes of hex, most significant bit first.
    static BitString from_hex(std::string_view hex);

    void push_back(bool bit);
    void append(const BitString& other);
    // Appends the low `width` bits of `value`, most significant bit first.
    void append_uint(std::uint64_t value, unsigned width);
    // Two's-complement append; throws std::out_of_range if `value` does not
    // fit in `width` bits.
    void append_int(std::int64_t value, unsigned width);

    bool bit(std::size_t index) const;
    std::uint64_t read_uint(std::size_t index, unsigned width) const;

    std::size_t size() const { return size_; }   // l(x)
    bool empty() const { return size_ == 0; }
    std::size_t ones() const { return ones_; }   // x#1
    std::size_t zeros() const { return size_ - ones_; }

    // Recomputes the ones count from the raw bits (invariant check).
    std::size_t recount_ones() const;

    // Bits in [begin, end).
    BitString substr(std::size_t begin, std::size_t end) const;

    std::string to_ascii() const;

    bool operator==(const BitString& other) const;

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t size_ = 0;
    std::size_t ones_ = 0;
};

// Sequential read cursor; reads past the end throw std::out_of_range.
class BitReader {
public:
    explicit BitReader(const BitString& bits) : bits_(&bits) {}

    bool read_bit();
    std::uint64_t read_uint(unsigned width);
    std::int64_t read_int(unsigned width);

    std::size_t remaining() const { return bits_->size() - pos_; }
    bool at_end() const { return pos_ == bits_->size(); }

private:
    const BitString* bits_;
    std::size_t pos_ = 0;
};

}  // namespace presage

#endif
