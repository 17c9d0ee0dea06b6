// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qrng/bitstream.hpp"

namespace qrng {

// Random bit matrix over GF(2) used as the seeded extractor. Rows are the
// output dimension, columns the input dimension; rows <= cols so every
// cycle compresses. Rows are stored word-padded with zero padding bits.
struct ExtractionMatrix {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint64_t seed = 0;  // 0 means externally supplied
    std::vector<std::uint64_t> row_words;

    std::uint32_t words_per_row() const { return (cols + 63) / 64; }

    bool bit(std::uint32_t r, std::uint32_t c) const {
        return (row_words[static_cast<std::uint64_t>(r) * words_per_row() + (c >> 6)] >>
                (c & 63)) &
               1ULL;
    }

    /// Fraction of ones over the rows x cols area.
    double one_density() const;
};

/// Deterministic matrix expansion: row-major fill from SplitMix64(seed),
/// one 64-bit engine output per storage word, lowest bit first; padding
/// bits past `cols` are cleared. Bit-exact on every platform.
ExtractionMatrix matrix_from_seed(std::uint64_t seed, std::uint32_t rows, std::uint32_t cols);

// Matrix file layout: magic "QRXMAT01", rows and cols as 16-bit
// little-endian, seed as 64-bit little-endian, then row-major packed rows,
// each padded to a byte boundary, bits LSB-first within each byte.
inline constexpr char kMatrixMagic[8] = {'Q', 'R', 'X', 'M', 'A', 'T', '0', '1'};

void write_matrix(const ExtractionMatrix& matrix, const std::filesystem::path& path);
ExtractionMatrix read_matrix(const std::filesystem::path& path);

/// FNV-1a fingerprint of dimensions, seed and row bytes.
std::uint64_t matrix_digest(const ExtractionMatrix& matrix);

/// One extraction cycle: output bit r is the GF(2) inner product of matrix
/// row r with x. |x| must equal cols.
BitStream extract_block(const ExtractionMatrix& matrix, const BitStream& x);

/// Extraction over consecutive disjoint cols-bit blocks of `source`; the
/// trailing partial block is discarded (its size goes to *discarded_bits).
/// The result is independent of `workers`.
BitStream extract_stream(const ExtractionMatrix& matrix, const BitStream& source,
                         unsigned workers = 1, std::uint64_t* discarded_bits = nullptr);

/// Extractable-bit budget for an n-bit input under conditional-probability
/// bound delta: floor(-n log2(1-delta)).
std::uint64_t max_extractable(double delta, std::uint32_t n);

struct ThroughputSample {
    unsigned workers = 1;
    double seconds = 0.0;
    std::uint64_t input_bits = 0;
    std::uint64_t output_bits = 0;

    double output_gbps() const { return output_bits / seconds / 1e9; }
    double input_gbps() const { return input_bits / seconds / 1e9; }
};

/// Repeatedly extract an in-memory stream for at least `duration` seconds.
ThroughputSample measure_throughput(const ExtractionMatrix& matrix, double duration,
                                    unsigned workers);

}  // namespace qrng
