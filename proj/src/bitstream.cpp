// SPDX-License-Identifier: Apache-2.0
#include "qrng/bitstream.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace qrng {

namespace {

constexpr std::uint64_t kHeaderBytes = 16;

std::uint64_t low_mask(unsigned bits) {
    return bits >= 64 ? ~0ULL : (1ULL << bits) - 1;
}

void put_u64_le(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b.data(), 8);
}

std::uint64_t get_u64_le(const unsigned char* b) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

std::uint64_t popcount_range(const BitStream& bits, std::uint64_t begin, std::uint64_t end) {
    if (begin > end || end > bits.size()) throw std::out_of_range("popcount_range: bad range");
    if (begin == end) return 0;
    const auto words = bits.words();
    const std::uint64_t first = begin >> 6;
    const std::uint64_t last = (end - 1) >> 6;
    if (first == last) {
        std::uint64_t w = words[first] >> (begin & 63);
        return std::popcount(w & low_mask(static_cast<unsigned>(end - begin)));
    }
    std::uint64_t n = std::popcount(words[first] >> (begin & 63));
    for (std::uint64_t q = first + 1; q < last; ++q) n += std::popcount(words[q]);
    const unsigned tail = static_cast<unsigned>(((end - 1) & 63) + 1);
    n += std::popcount(words[last] & low_mask(tail));
    return n;
}

std::uint64_t popcount_and_shifted(const BitStream& bits, std::uint64_t lag) {
    if (lag >= bits.size()) return 0;
    const std::uint64_t overlap = bits.size() - lag;
    const auto words = bits.words();
    const std::uint64_t* w = words.data();
    const std::uint64_t nwords = words.size();
    const std::uint64_t ql = lag >> 6;
    const unsigned r = static_cast<unsigned>(lag & 63);

    std::uint64_t full = overlap / 64;  // whole-word iterations
    std::uint64_t cross = 0;
    std::uint64_t i = 0;
    if (r == 0) {
        for (; i < full; ++i) cross += std::popcount(w[i] & w[ql + i]);
    } else {
        // stop one short whenever the straddling read would run off the end
        const std::uint64_t safe = (ql + full < nwords) ? full : (full > 0 ? full - 1 : 0);
        for (; i < safe; ++i) {
            const std::uint64_t b = (w[ql + i] >> r) | (w[ql + i + 1] << (64 - r));
            cross += std::popcount(w[i] & b);
        }
    }
    // remaining bits (peeled straddle and/or partial tail word)
    for (std::uint64_t off = i * 64; off < overlap; off += 64) {
        const unsigned take = overlap - off >= 64 ? 64u : static_cast<unsigned>(overlap - off);
        const std::uint64_t a = bits.word_at(off);
        const std::uint64_t b = bits.word_at(off + lag);
        cross += std::popcount(a & b & low_mask(take));
    }
    return cross;
}

std::uint64_t stream_digest(const BitStream& bits) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](unsigned char byte) {
        h ^= byte;
        h *= 0x100000001B3ULL;
    };
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>((bits.size() >> (8 * i)) & 0xFF));
    const std::uint64_t nbytes = (bits.size() + 7) / 8;
    const auto words = bits.words();
    for (std::uint64_t j = 0; j < nbytes; ++j)
        mix(static_cast<unsigned char>((words[j >> 3] >> (8 * (j & 7))) & 0xFF));
    return h;
}

BitStream random_bitstream(std::uint64_t seed, std::uint64_t bit_count) {
    BitStream s;
    std::uint64_t* w = s.resize_for_overwrite(bit_count);
    SplitMix64 g(seed);
    const std::uint64_t nwords = (bit_count + 63) / 64;
    for (std::uint64_t i = 0; i < nwords; ++i) w[i] = g();
    if (bit_count & 63) w[nwords - 1] &= low_mask(static_cast<unsigned>(bit_count & 63));
    return s;
}

std::uint64_t write_stream(const BitStream& bits, std::ostream& out) {
    out.write(kStreamMagic, 8);
    put_u64_le(out, bits.size());
    const std::uint64_t nbytes = (bits.size() + 7) / 8;
    const auto words = bits.words();
    std::array<char, 8192> buf;
    std::uint64_t written = 0;
    while (written < nbytes) {
        const std::uint64_t chunk = std::min<std::uint64_t>(buf.size(), nbytes - written);
        for (std::uint64_t j = 0; j < chunk; ++j) {
            const std::uint64_t byte_index = written + j;
            buf[j] = static_cast<char>((words[byte_index >> 3] >> (8 * (byte_index & 7))) & 0xFF);
        }
        out.write(buf.data(), static_cast<std::streamsize>(chunk));
        written += chunk;
    }
    if (!out) throw std::runtime_error("write_stream: output stream failure");
    return kHeaderBytes + nbytes;
}

std::uint64_t write_stream(const BitStream& bits, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_stream: cannot open " + path.string());
    const std::uint64_t n = write_stream(bits, f);
    f.close();
    if (!f) throw std::runtime_error("write_stream: failed writing " + path.string());
    return n;
}

BitStream read_stream(std::istream& in) {
    std::array<unsigned char, 16> header;
    in.read(reinterpret_cast<char*>(header.data()), header.size());
    const auto got = in.gcount();
    if (got < 8 || std::memcmp(header.data(), kStreamMagic, 8) != 0)
        throw StreamFormatError("read_stream: bad magic, not a QRBS0001 stream");
    if (got < 16) throw StreamCorruptionError("read_stream: truncated header");
    const std::uint64_t bit_count = get_u64_le(header.data() + 8);
    const std::uint64_t nbytes = (bit_count + 7) / 8;

    BitStream s;
    std::uint64_t* w = s.resize_for_overwrite(bit_count);
    std::array<char, 8192> buf;
    std::uint64_t read_bytes = 0;
    while (read_bytes < nbytes) {
        const std::uint64_t chunk = std::min<std::uint64_t>(buf.size(), nbytes - read_bytes);
        in.read(buf.data(), static_cast<std::streamsize>(chunk));
        if (static_cast<std::uint64_t>(in.gcount()) != chunk)
            throw StreamCorruptionError("read_stream: truncated payload");
        for (std::uint64_t j = 0; j < chunk; ++j) {
            const std::uint64_t byte_index = read_bytes + j;
            w[byte_index >> 3] |=
                static_cast<std::uint64_t>(static_cast<unsigned char>(buf[j])) << (8 * (byte_index & 7));
        }
        read_bytes += chunk;
    }
    if (bit_count & 63) {
        const std::uint64_t nwords = (bit_count + 63) / 64;
        const std::uint64_t pad = w[nwords - 1] & ~low_mask(static_cast<unsigned>(bit_count & 63));
        if (pad != 0) throw StreamCorruptionError("read_stream: nonzero padding bits");
    }
    return s;
}

BitStream read_stream(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_stream: cannot open " + path.string());
    BitStream s = read_stream(f);
    // no trailing garbage allowed in a stream file
    f.peek();
    if (!f.eof()) throw StreamCorruptionError("read_stream: trailing bytes in " + path.string());
    return s;
}

void write_raw(const BitStream& bits, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_raw: cannot open " + path.string());
    const std::uint64_t nbytes = (bits.size() + 7) / 8;
    const auto words = bits.words();
    std::array<char, 8192> buf;
    std::uint64_t written = 0;
    while (written < nbytes) {
        const std::uint64_t chunk = std::min<std::uint64_t>(buf.size(), nbytes - written);
        for (std::uint64_t j = 0; j < chunk; ++j) {
            const std::uint64_t byte_index = written + j;
            buf[j] = static_cast<char>((words[byte_index >> 3] >> (8 * (byte_index & 7))) & 0xFF);
        }
        f.write(buf.data(), static_cast<std::streamsize>(chunk));
        written += chunk;
    }
    if (!f) throw std::runtime_error("write_raw: failed writing " + path.string());
}

BitStream read_raw(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("read_raw: cannot open " + path.string());
    const std::uint64_t nbytes = static_cast<std::uint64_t>(f.tellg());
    f.seekg(0);
    BitStream s;
    std::uint64_t* w = s.resize_for_overwrite(nbytes * 8);
    std::array<char, 8192> buf;
    std::uint64_t read_bytes = 0;
    while (read_bytes < nbytes) {
        const std::uint64_t chunk = std::min<std::uint64_t>(buf.size(), nbytes - read_bytes);
        f.read(buf.data(), static_cast<std::streamsize>(chunk));
        if (static_cast<std::uint64_t>(f.gcount()) != chunk)
            throw std::runtime_error("read_raw: short read from " + path.string());
        for (std::uint64_t j = 0; j < chunk; ++j) {
            const std::uint64_t byte_index = read_bytes + j;
            w[byte_index >> 3] |=
                static_cast<std::uint64_t>(static_cast<unsigned char>(buf[j])) << (8 * (byte_index & 7));
        }
        read_bytes += chunk;
    }
    return s;
}

StreamFileWriter::StreamFileWriter(const std::filesystem::path& path)
    : path_(path), out_(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc)) {
    if (!*out_) throw std::runtime_error("StreamFileWriter: cannot open " + path.string());
    out_->write(kStreamMagic, 8);
    put_u64_le(*out_, 0);  // patched on finish()
}

StreamFileWriter::~StreamFileWriter() = default;

void StreamFileWriter::append(const BitStream& chunk) {
    if (finished_) throw std::logic_error("StreamFileWriter: append after finish");
    const auto words = chunk.words();
    std::uint64_t remaining = chunk.size();
    std::array<char, 8192> buf;
    unsigned buffered = 0;
    auto emit_word = [&](std::uint64_t w) {
        for (int i = 0; i < 8; ++i) buf[buffered++] = static_cast<char>((w >> (8 * i)) & 0xFF);
        if (buffered == buf.size()) {
            out_->write(buf.data(), buffered);
            buffered = 0;
        }
    };
    for (std::uint64_t wi = 0; remaining > 0; ++wi) {
        const unsigned take = remaining >= 64 ? 64u : static_cast<unsigned>(remaining);
        const std::uint64_t w = words[wi];
        partial_ |= w << partial_bits_;
        if (partial_bits_ + take >= 64) {
            emit_word(partial_);
            const unsigned consumed = 64 - partial_bits_;
            partial_ = consumed < 64 ? w >> consumed : 0;
            partial_bits_ = partial_bits_ + take - 64;
        } else {
            partial_bits_ += take;
        }
        bit_count_ += take;
        remaining -= take;
    }
    if (buffered > 0) out_->write(buf.data(), buffered);
    if (!*out_) throw std::runtime_error("StreamFileWriter: write failure on " + path_.string());
}

std::uint64_t StreamFileWriter::finish() {
    if (finished_) throw std::logic_error("StreamFileWriter: finish called twice");
    finished_ = true;
    const unsigned tail_bytes = (partial_bits_ + 7) / 8;
    for (unsigned i = 0; i < tail_bytes; ++i) {
        const char b = static_cast<char>((partial_ >> (8 * i)) & 0xFF);
        out_->write(&b, 1);
    }
    out_->seekp(8);
    put_u64_le(*out_, bit_count_);
    out_->close();
    if (!*out_) throw std::runtime_error("StreamFileWriter: failed finishing " + path_.string());
    return kHeaderBytes + (bit_count_ + 7) / 8;
}

}  // namespace qrng
