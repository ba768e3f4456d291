#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace moeliga {

/// Fixed-length bit vector; bit i set means feature i is selected.
class Chromosome {
public:
    Chromosome() = default;
    explicit Chromosome(std::size_t length, bool value = false) : bits_(length, value ? 1 : 0) {}

    /// Builds a chromosome from a string of '0'/'1' characters, feature 0 first.
    static Chromosome from_string(std::string_view s) {
        Chromosome c(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '0' && s[i] != '1') throw Error("chromosome string must contain only 0/1");
            c.bits_[i] = s[i] == '1' ? 1 : 0;
        }
        return c;
    }

    static Chromosome from_indices(std::size_t length, const std::vector<std::size_t>& active) {
        Chromosome c(length);
        for (std::size_t i : active) {
            if (i >= length) throw Error("active index out of range");
            c.bits_[i] = 1;
        }
        return c;
    }

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }

    bool test(std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool value = true) { bits_[i] = value ? 1 : 0; }
    void flip(std::size_t i) { bits_[i] ^= 1; }

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }
    bool none() const noexcept { return count() == 0; }

    std::vector<std::size_t> active_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i]) out.push_back(i);
        return out;
    }

    std::string to_string() const {
        std::string s(bits_.size(), '0');
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i]) s[i] = '1';
        return s;
    }

    /// Hex form read as an unsigned integer whose bit i is feature i
    /// (most significant digit first, ceil(N/4) digits).
    std::string to_hex() const {
        static constexpr char digits[] = "0123456789abcdef";
        const std::size_t n_digits = std::max<std::size_t>(1, (bits_.size() + 3) / 4);
        std::string out(n_digits, '0');
        for (std::size_t d = 0; d < n_digits; ++d) {
            unsigned nibble = 0;
            for (std::size_t b = 0; b < 4; ++b) {
                const std::size_t i = d * 4 + b;
                if (i < bits_.size() && bits_[i]) nibble |= 1u << b;
            }
            out[n_digits - 1 - d] = digits[nibble];
        }
        return out;
    }

    static Chromosome from_hex(std::string_view hex, std::size_t length) {
        if (hex.size() > 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) hex.remove_prefix(2);
        if (hex.empty()) throw Error("empty hex bitmask");
        Chromosome c(length);
        const std::size_t n_digits = hex.size();
        for (std::size_t d = 0; d < n_digits; ++d) {
            const char ch = hex[n_digits - 1 - d];
            unsigned nibble = 0;
            if (ch >= '0' && ch <= '9') nibble = static_cast<unsigned>(ch - '0');
            else if (ch >= 'a' && ch <= 'f') nibble = static_cast<unsigned>(ch - 'a' + 10);
            else if (ch >= 'A' && ch <= 'F') nibble = static_cast<unsigned>(ch - 'A' + 10);
            else throw Error("invalid hex digit in bitmask");
            for (std::size_t b = 0; b < 4; ++b) {
                if (!(nibble & (1u << b))) continue;
                const std::size_t i = d * 4 + b;
                if (i >= length) throw Error("hex bitmask has bits beyond the chromosome length");
                c.bits_[i] = 1;
            }
        }
        return c;
    }

    /// Number of positions where the two chromosomes differ.
    std::size_t hamming(const Chromosome& other) const {
        if (other.size() != size()) throw Error("hamming distance needs equal lengths");
        std::size_t d = 0;
        for (std::size_t i = 0; i < bits_.size(); ++i) d += (bits_[i] != other.bits_[i]);
        return d;
    }

    Chromosome operator&(const Chromosome& other) const {
        if (other.size() != size()) throw Error("mask lengths differ");
        Chromosome c(size());
        for (std::size_t i = 0; i < bits_.size(); ++i) c.bits_[i] = bits_[i] & other.bits_[i];
        return c;
    }

    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    friend bool operator==(const Chromosome&, const Chromosome&) = default;
    /// Lexicographic over feature positions, feature 0 first.
    friend std::strong_ordering operator<=>(const Chromosome& a, const Chromosome& b) {
        return a.bits_ <=> b.bits_;
    }

private:
    std::vector<std::uint8_t> bits_;
};

struct ChromosomeHash {
    std::size_t operator()(const Chromosome& c) const noexcept {
        std::uint64_t h = 0x84222325cbf29ce4ULL ^ c.size();
        std::uint64_t word = 0;
        std::size_t filled = 0;
        for (std::uint8_t b : c.bits()) {
            word = (word << 1) | b;
            if (++filled == 64) {
                h = detail::splitmix64(h ^ word);
                word = 0;
                filled = 0;
            }
        }
        h = detail::splitmix64(h ^ word ^ (static_cast<std::uint64_t>(filled) << 56));
        return static_cast<std::size_t>(h);
    }
};

/// Guarantees at least one active bit by switching on a uniformly drawn position.
inline void repair(Chromosome& c, Rng& rng) {
    if (c.empty() || !c.none()) return;
    std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
    c.set(pick(rng));
}

}  // namespace moeliga
