// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qrng/rng.hpp"

namespace qrng {

// Thrown when a file does not look like one of ours (bad magic, no header).
class StreamFormatError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a file carries our header but its body is damaged
// (truncated payload, nonzero padding bits, inconsistent sizes).
class StreamCorruptionError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Packed bit sequence, the common currency between all modules.
//
// Bit i lives in 64-bit word i/64 at position i%64; serialized byte j holds
// bits 8j..8j+7 with the lowest-numbered bit in the least significant
// position. Unused bits past size() are kept at zero at all times.
class BitStream {
  public:
    BitStream() = default;

    /// Zero-filled stream of the given length.
    explicit BitStream(std::uint64_t bit_count)
        : bit_count_(bit_count), words_((bit_count + 63) / 64, 0) {}

    static BitStream filled(std::uint64_t bit_count, bool value) {
        BitStream s(bit_count);
        if (value && bit_count > 0) {
            for (auto& w : s.words_) w = ~0ULL;
            s.clear_padding();
        }
        return s;
    }

    /// Parse "0100110..."; character i becomes bit i.
    static BitStream from_string(std::string_view text) {
        BitStream s;
        s.reserve_bits(text.size());
        for (char c : text) {
            if (c != '0' && c != '1') throw std::invalid_argument("BitStream::from_string: not a 0/1 string");
            s.push_back(c == '1');
        }
        return s;
    }

    std::uint64_t size() const { return bit_count_; }
    bool empty() const { return bit_count_ == 0; }

    bool bit(std::uint64_t i) const {
        check_index(i);
        return (words_[i >> 6] >> (i & 63)) & 1ULL;
    }

    void set_bit(std::uint64_t i, bool value) {
        check_index(i);
        const std::uint64_t mask = 1ULL << (i & 63);
        if (value)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    void push_back(bool value) {
        if ((bit_count_ & 63) == 0) words_.push_back(0);
        if (value) words_.back() |= 1ULL << (bit_count_ & 63);
        ++bit_count_;
    }

    /// Append the low `count` bits of `word`, lowest bit first.
    void append_low_bits(std::uint64_t word, unsigned count) {
        if (count > 64) throw std::invalid_argument("append_low_bits: count > 64");
        if (count == 0) return;
        if (count < 64) word &= (1ULL << count) - 1;
        const unsigned used = bit_count_ & 63;
        if (used == 0) {
            words_.push_back(word);
        } else {
            words_.back() |= word << used;
            if (count > 64 - used) words_.push_back(word >> (64 - used));
        }
        bit_count_ += count;
    }

    void append(const BitStream& other) {
        std::uint64_t remaining = other.bit_count_;
        for (std::uint64_t w = 0; remaining > 0; ++w) {
            const unsigned take = remaining >= 64 ? 64u : static_cast<unsigned>(remaining);
            append_low_bits(other.words_[w], take);
            remaining -= take;
        }
    }

    /// 64 bits starting at `pos`, zero-padded past the end of the stream.
    std::uint64_t word_at(std::uint64_t pos) const {
        const std::uint64_t q = pos >> 6;
        const unsigned r = static_cast<unsigned>(pos & 63);
        if (q >= words_.size()) return 0;
        std::uint64_t w = words_[q] >> r;
        if (r != 0 && q + 1 < words_.size()) w |= words_[q + 1] << (64 - r);
        return w;
    }

    /// The `count` bits (<= 64) starting at `pos` as an integer, lowest bit first.
    std::uint64_t peek_bits(std::uint64_t pos, unsigned count) const {
        if (count > 64) throw std::invalid_argument("peek_bits: count > 64");
        if (pos + count > bit_count_) throw std::out_of_range("peek_bits: past end of stream");
        std::uint64_t w = word_at(pos);
        if (count < 64) w &= (1ULL << count) - 1;
        return w;
    }

    std::uint64_t ones() const {
        std::uint64_t n = 0;
        for (std::uint64_t w : words_) n += std::popcount(w);
        return n;
    }

    std::uint64_t zeros() const { return bit_count_ - ones(); }

    std::span<const std::uint64_t> words() const { return words_; }

    /// Mutable word storage for bulk writers. The stream is resized to
    /// `bit_count` zeroed bits first; writers must keep padding bits zero.
    std::uint64_t* resize_for_overwrite(std::uint64_t bit_count) {
        bit_count_ = bit_count;
        words_.assign((bit_count + 63) / 64, 0);
        return words_.data();
    }

    void reserve_bits(std::uint64_t bit_count) { words_.reserve((bit_count + 63) / 64); }

    std::string to_string() const {
        std::string s(bit_count_, '0');
        for (std::uint64_t i = 0; i < bit_count_; ++i)
            if (bit(i)) s[i] = '1';
        return s;
    }

    bool operator==(const BitStream&) const = default;

  private:
    void check_index(std::uint64_t i) const {
        if (i >= bit_count_) throw std::out_of_range("BitStream: bit index out of range");
    }

    void clear_padding() {
        const unsigned used = bit_count_ & 63;
        if (used != 0 && !words_.empty()) words_.back() &= (1ULL << used) - 1;
    }

    std::uint64_t bit_count_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Number of ones among bits [begin, end).
std::uint64_t popcount_range(const BitStream& bits, std::uint64_t begin, std::uint64_t end);

/// Sum over i in [0, size-lag) of bit(i) AND bit(i+lag), word-parallel.
std::uint64_t popcount_and_shifted(const BitStream& bits, std::uint64_t lag);

/// i.i.d. unbiased bits expanded from a seed; handy for tests and benchmarks.
BitStream random_bitstream(std::uint64_t seed, std::uint64_t bit_count);

/// FNV-1a over the bit count and payload bytes; a cheap fingerprint for
/// golden-output checks, not a cryptographic hash.
std::uint64_t stream_digest(const BitStream& bits);

// --- stream files ---------------------------------------------------------
//
// Layout: 8-byte magic "QRBS0001", bit count as a 64-bit little-endian
// unsigned, then ceil(bit_count/8) payload bytes packed as described on
// BitStream. Padding bits in the final byte must be zero.

inline constexpr char kStreamMagic[8] = {'Q', 'R', 'B', 'S', '0', '0', '0', '1'};

std::uint64_t write_stream(const BitStream& bits, std::ostream& out);
std::uint64_t write_stream(const BitStream& bits, const std::filesystem::path& path);
BitStream read_stream(std::istream& in);
BitStream read_stream(const std::filesystem::path& path);

/// Headerless payload, for export to external test batteries. A raw file
/// has no bit count of its own; reading infers 8 bits per byte.
void write_raw(const BitStream& bits, const std::filesystem::path& path);
BitStream read_raw(const std::filesystem::path& path);

// Incremental writer for long runs: chunks may end at any bit position and
// the result is byte-identical to a single-shot write_stream of the
// concatenation. The header is patched with the final count on finish().
class StreamFileWriter {
  public:
    explicit StreamFileWriter(const std::filesystem::path& path);
    ~StreamFileWriter();

    StreamFileWriter(const StreamFileWriter&) = delete;
    StreamFileWriter& operator=(const StreamFileWriter&) = delete;

    void append(const BitStream& chunk);
    /// Flush, patch the header, close. Returns total bytes written.
    std::uint64_t finish();

  private:
    std::filesystem::path path_;
    std::unique_ptr<std::ofstream> out_;
    std::uint64_t partial_ = 0;
    unsigned partial_bits_ = 0;
    std::uint64_t bit_count_ = 0;
    bool finished_ = false;
};

}  // namespace qrng
