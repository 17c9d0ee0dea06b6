// SPDX-License-Identifier: Apache-2.0
#include "qrng/extractor.hpp"

#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "qrng/rng.hpp"

#if defined(__AVX512F__) && defined(__AVX512VPOPCNTDQ__) && defined(__BMI2__)
#define QRNG_EXTRACTOR_AVX512 1
#include <immintrin.h>
#endif

namespace qrng {

namespace {

// generic kernel: one input block -> `rows` output bits appended to out
void extract_block_words(const ExtractionMatrix& m, const std::uint64_t* x, BitStream& out) {
    const std::uint32_t wpr = m.words_per_row();
    const std::uint64_t* row = m.row_words.data();
    std::uint64_t word = 0;
    unsigned filled = 0;
    for (std::uint32_t r = 0; r < m.rows; ++r, row += wpr) {
        std::uint64_t acc = 0;
        for (std::uint32_t w = 0; w < wpr; ++w) acc ^= row[w] & x[w];
        word |= static_cast<std::uint64_t>(std::popcount(acc) & 1) << filled;
        if (++filled == 64) {
            out.append_low_bits(word, 64);
            word = 0;
            filled = 0;
        }
    }
    if (filled > 0) out.append_low_bits(word, filled);
}

// block range [first, last) of `source`, written at the matching offset of
// the preallocated output words; used by every worker of extract_stream
void extract_range(const ExtractionMatrix& m, const std::uint64_t* in, std::uint64_t* out,
                   std::uint64_t first, std::uint64_t last) {
    const std::uint32_t wpr = m.words_per_row();

#ifdef QRNG_EXTRACTOR_AVX512
    // fast path for the shipped geometry: 512-bit blocks, rows a multiple
    // of 64. Eight blocks are processed per pass, lane b of every vector
    // holding block b; one VPOPCNTQ gives eight parity bits per row.
    if (m.cols == 512 && m.rows % 64 == 0) {
        const __m512i gather_idx = _mm512_setr_epi64(0, 8, 16, 24, 32, 40, 48, 56);
        const __m512i ones = _mm512_set1_epi64(1);
        const std::uint32_t out_words = m.rows / 64;
        std::uint64_t b = first;
        for (; b + 8 <= last; b += 8) {
            const std::uint64_t* base = in + b * 8;
            const __m512i t0 = _mm512_i64gather_epi64(gather_idx, base + 0, 8);
            const __m512i t1 = _mm512_i64gather_epi64(gather_idx, base + 1, 8);
            const __m512i t2 = _mm512_i64gather_epi64(gather_idx, base + 2, 8);
            const __m512i t3 = _mm512_i64gather_epi64(gather_idx, base + 3, 8);
            const __m512i t4 = _mm512_i64gather_epi64(gather_idx, base + 4, 8);
            const __m512i t5 = _mm512_i64gather_epi64(gather_idx, base + 5, 8);
            const __m512i t6 = _mm512_i64gather_epi64(gather_idx, base + 6, 8);
            const __m512i t7 = _mm512_i64gather_epi64(gather_idx, base + 7, 8);
            const std::uint64_t* row = m.row_words.data();
            for (std::uint32_t ow = 0; ow < out_words; ++ow) {
                std::array<std::uint64_t, 64> masks;
                for (unsigned r = 0; r < 64; ++r, row += 8) {
                    __m512i acc = _mm512_and_si512(_mm512_set1_epi64(row[0]), t0);
                    acc = _mm512_xor_si512(acc, _mm512_and_si512(_mm512_set1_epi64(row[1]), t1));
                    acc = _mm512_xor_si512(acc, _mm512_and_si512(_mm512_set1_epi64(row[2]), t2));
                    acc = _mm512_xor_si512(acc, _mm512_and_si512(_mm512_set1_epi64(row[3]), t3));
                    acc = _mm512_xor_si512(acc, _mm512_and_si512(_mm512_set1_epi64(row[4]), t4));
                    acc = _mm512_xor_si512(acc, _mm512_and_si512(_mm512_set1_epi64(row[5]), t5));
                    acc = _mm512_xor_si512(acc, _mm512_and_si512(_mm512_set1_epi64(row[6]), t6));
                    acc = _mm512_xor_si512(acc, _mm512_and_si512(_mm512_set1_epi64(row[7]), t7));
                    const __m512i pc = _mm512_popcnt_epi64(acc);
                    masks[r] = static_cast<std::uint64_t>(_mm512_test_epi64_mask(pc, ones));
                }
                // masks is a 64x8 bit matrix (row r, block lane b);
                // transpose into one output word per block
                std::array<std::uint64_t, 8> ow_bits{};
                for (unsigned r8 = 0; r8 < 64; r8 += 8) {
                    std::uint64_t q = 0;
                    for (unsigned i = 0; i < 8; ++i) q |= masks[r8 + i] << (8 * i);
                    for (unsigned lane = 0; lane < 8; ++lane) {
                        const std::uint64_t bits =
                            _pext_u64(q, 0x0101010101010101ULL << lane);
                        ow_bits[lane] |= bits << r8;
                    }
                }
                for (unsigned lane = 0; lane < 8; ++lane)
                    out[(b + lane) * out_words + ow] = ow_bits[lane];
            }
        }
        // leftover blocks fall through to the scalar loop below
        first = b;
    }
#endif

    const std::uint32_t out_words = (m.rows + 63) / 64;
    const std::uint64_t* row_base = m.row_words.data();
    for (std::uint64_t b = first; b < last; ++b) {
        const std::uint64_t* x = in + b * wpr;
        const std::uint64_t* row = row_base;
        for (std::uint32_t ow = 0; ow < out_words; ++ow) {
            const unsigned nr = std::min<std::uint32_t>(64, m.rows - ow * 64);
            std::uint64_t word = 0;
            for (unsigned r = 0; r < nr; ++r, row += wpr) {
                std::uint64_t acc = 0;
                for (std::uint32_t w = 0; w < wpr; ++w) acc ^= row[w] & x[w];
                word |= static_cast<std::uint64_t>(std::popcount(acc) & 1) << r;
            }
            out[b * out_words + ow] = word;
        }
    }
}

void validate_dims(std::uint32_t rows, std::uint32_t cols) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("ExtractionMatrix: dimensions must be positive");
    if (rows > cols)
        throw std::invalid_argument("ExtractionMatrix: rows must not exceed cols (no expansion)");
    if (cols > 65535) throw std::invalid_argument("ExtractionMatrix: cols exceeds 16-bit range");
}

void put_u16_le(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF)};
    out.write(b, 2);
}

void put_u64_le(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

}  // namespace

double ExtractionMatrix::one_density() const {
    std::uint64_t ones = 0;
    for (const std::uint64_t w : row_words) ones += std::popcount(w);
    return static_cast<double>(ones) /
           (static_cast<double>(rows) * static_cast<double>(cols));
}

ExtractionMatrix matrix_from_seed(std::uint64_t seed, std::uint32_t rows, std::uint32_t cols) {
    validate_dims(rows, cols);
    ExtractionMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.seed = seed;
    const std::uint32_t wpr = m.words_per_row();
    m.row_words.resize(static_cast<std::uint64_t>(rows) * wpr);
    SplitMix64 g(seed);
    const std::uint64_t pad_mask =
        (cols & 63) ? ((1ULL << (cols & 63)) - 1) : ~0ULL;
    for (std::uint32_t r = 0; r < rows; ++r) {
        std::uint64_t* row = m.row_words.data() + static_cast<std::uint64_t>(r) * wpr;
        for (std::uint32_t w = 0; w < wpr; ++w) row[w] = g();
        row[wpr - 1] &= pad_mask;
    }
    return m;
}

void write_matrix(const ExtractionMatrix& matrix, const std::filesystem::path& path) {
    validate_dims(matrix.rows, matrix.cols);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_matrix: cannot open " + path.string());
    f.write(kMatrixMagic, 8);
    put_u16_le(f, static_cast<std::uint16_t>(matrix.rows));
    put_u16_le(f, static_cast<std::uint16_t>(matrix.cols));
    put_u64_le(f, matrix.seed);
    const std::uint32_t row_bytes = (matrix.cols + 7) / 8;
    const std::uint32_t wpr = matrix.words_per_row();
    std::vector<char> buf(row_bytes);
    for (std::uint32_t r = 0; r < matrix.rows; ++r) {
        const std::uint64_t* row = matrix.row_words.data() + static_cast<std::uint64_t>(r) * wpr;
        for (std::uint32_t j = 0; j < row_bytes; ++j)
            buf[j] = static_cast<char>((row[j >> 3] >> (8 * (j & 7))) & 0xFF);
        f.write(buf.data(), row_bytes);
    }
    if (!f) throw std::runtime_error("write_matrix: failed writing " + path.string());
}

ExtractionMatrix read_matrix(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_matrix: cannot open " + path.string());
    std::array<unsigned char, 20> header;
    f.read(reinterpret_cast<char*>(header.data()), header.size());
    if (f.gcount() < 8 || std::memcmp(header.data(), kMatrixMagic, 8) != 0)
        throw StreamFormatError("read_matrix: bad magic, not a QRXMAT01 file");
    if (f.gcount() < 20) throw StreamCorruptionError("read_matrix: truncated header");

    ExtractionMatrix m;
    m.rows = static_cast<std::uint32_t>(header[8]) | (static_cast<std::uint32_t>(header[9]) << 8);
    m.cols = static_cast<std::uint32_t>(header[10]) | (static_cast<std::uint32_t>(header[11]) << 8);
    m.seed = 0;
    for (int i = 0; i < 8; ++i) m.seed |= static_cast<std::uint64_t>(header[12 + i]) << (8 * i);
    validate_dims(m.rows, m.cols);

    const std::uint32_t row_bytes = (m.cols + 7) / 8;
    const std::uint32_t wpr = m.words_per_row();
    m.row_words.assign(static_cast<std::uint64_t>(m.rows) * wpr, 0);
    std::vector<char> buf(row_bytes);
    const std::uint64_t pad_mask = (m.cols & 63) ? ((1ULL << (m.cols & 63)) - 1) : ~0ULL;
    for (std::uint32_t r = 0; r < m.rows; ++r) {
        f.read(buf.data(), row_bytes);
        if (static_cast<std::uint32_t>(f.gcount()) != row_bytes)
            throw StreamCorruptionError("read_matrix: truncated payload");
        std::uint64_t* row = m.row_words.data() + static_cast<std::uint64_t>(r) * wpr;
        for (std::uint32_t j = 0; j < row_bytes; ++j)
            row[j >> 3] |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[j]))
                           << (8 * (j & 7));
        if ((row[wpr - 1] & ~pad_mask) != 0)
            throw StreamCorruptionError("read_matrix: nonzero row padding bits");
    }
    f.peek();
    if (!f.eof()) throw StreamCorruptionError("read_matrix: trailing bytes in " + path.string());
    return m;
}

std::uint64_t matrix_digest(const ExtractionMatrix& matrix) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](unsigned char byte) {
        h ^= byte;
        h *= 0x100000001B3ULL;
    };
    auto mix64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
    };
    mix64(matrix.rows);
    mix64(matrix.cols);
    mix64(matrix.seed);
    const std::uint32_t row_bytes = (matrix.cols + 7) / 8;
    const std::uint32_t wpr = matrix.words_per_row();
    for (std::uint32_t r = 0; r < matrix.rows; ++r) {
        const std::uint64_t* row = matrix.row_words.data() + static_cast<std::uint64_t>(r) * wpr;
        for (std::uint32_t j = 0; j < row_bytes; ++j)
            mix(static_cast<unsigned char>((row[j >> 3] >> (8 * (j & 7))) & 0xFF));
    }
    return h;
}

BitStream extract_block(const ExtractionMatrix& matrix, const BitStream& x) {
    validate_dims(matrix.rows, matrix.cols);
    if (x.size() != matrix.cols)
        throw std::invalid_argument("extract_block: input length does not match cols");
    BitStream out;
    out.reserve_bits(matrix.rows);
    extract_block_words(matrix, x.words().data(), out);
    return out;
}

BitStream extract_stream(const ExtractionMatrix& matrix, const BitStream& source,
                         unsigned workers, std::uint64_t* discarded_bits) {
    validate_dims(matrix.rows, matrix.cols);
    if (source.empty()) throw std::invalid_argument("extract_stream: empty source");
    if (source.size() < matrix.cols)
        throw std::invalid_argument("extract_stream: source shorter than one block");

    const std::uint64_t nblocks = source.size() / matrix.cols;
    if (discarded_bits) *discarded_bits = source.size() - nblocks * matrix.cols;

    // word-aligned geometry goes through the bulk (and parallel) path;
    // anything else takes the per-block route below
    if (matrix.cols % 64 != 0 || matrix.rows % 64 != 0) {
        const std::uint32_t wpr = matrix.words_per_row();
        const std::uint64_t tail_mask =
            (matrix.cols & 63) ? ((1ULL << (matrix.cols & 63)) - 1) : ~0ULL;
        std::vector<std::uint64_t> block(wpr);
        BitStream acc;
        acc.reserve_bits(nblocks * matrix.rows);
        for (std::uint64_t b = 0; b < nblocks; ++b) {
            const std::uint64_t base = b * matrix.cols;
            for (std::uint32_t w = 0; w < wpr; ++w) block[w] = source.word_at(base + 64ULL * w);
            block[wpr - 1] &= tail_mask;
            extract_block_words(matrix, block.data(), acc);
        }
        return acc;
    }

    BitStream out;
    std::uint64_t* out_words = out.resize_for_overwrite(nblocks * matrix.rows);
    const std::uint64_t* in_words = source.words().data();

    if (workers <= 1 || nblocks < 64) {
        extract_range(matrix, in_words, out_words, 0, nblocks);
    } else {
        std::vector<std::thread> pool;
        const unsigned nthreads = static_cast<unsigned>(std::min<std::uint64_t>(workers, nblocks));
        pool.reserve(nthreads);
        const std::uint64_t per = nblocks / nthreads;
        const std::uint64_t extra = nblocks % nthreads;
        std::uint64_t first = 0;
        for (unsigned t = 0; t < nthreads; ++t) {
            const std::uint64_t count = per + (t < extra ? 1 : 0);
            pool.emplace_back(extract_range, std::cref(matrix), in_words, out_words, first,
                              first + count);
            first += count;
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

std::uint64_t max_extractable(double delta, std::uint32_t n) {
    if (!(delta >= 0.0 && delta <= 0.5))
        throw std::domain_error("max_extractable: delta outside [0, 1/2]");
    return static_cast<std::uint64_t>(
        std::floor(-static_cast<double>(n) * std::log2(1.0 - delta)));
}

ThroughputSample measure_throughput(const ExtractionMatrix& matrix, double duration,
                                    unsigned workers) {
    if (!(duration > 0.0)) throw std::invalid_argument("measure_throughput: duration must be positive");
    // a work unit big enough to dominate thread startup, small enough to
    // respect the duration budget
    const std::uint64_t unit_blocks = 1 << 16;
    const BitStream input = random_bitstream(0x1234ABCD5678EF01ULL,
                                             unit_blocks * static_cast<std::uint64_t>(matrix.cols));
    ThroughputSample sample;
    sample.workers = workers;
    const auto t0 = std::chrono::steady_clock::now();
    double elapsed = 0.0;
    do {
        const BitStream out = extract_stream(matrix, input, workers);
        sample.input_bits += input.size();
        sample.output_bits += out.size();
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } while (elapsed < duration);
    sample.seconds = elapsed;
    return sample;
}

}  // namespace qrng
