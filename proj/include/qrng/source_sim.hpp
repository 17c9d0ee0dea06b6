// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qrng/bitstream.hpp"
#include "qrng/rng.hpp"

namespace qrng {

// Shipped defaults for the bandwidth filter and threshold offset, found by
// tools/qrng-calibrate against the reference operating point
// (n_bar=1000, m=40, sigma_n=610): raw-stream targets P0 = 0.4920 and
// R(1) = 0.13078.
inline constexpr double kCalibratedFilterBeta = 0.203369140625;
inline constexpr double kCalibratedThresholdOffset = -357.93333343165693;

// Physical and sampling parameters of the simulated light source and
// detector. Photon counts per detection window follow the m-mode thermal
// law; the detector adds Gaussian noise, a one-pole bandwidth filter and a
// mean-tracking threshold discriminator.
struct SourceParams {
    double n_bar = 1000.0;       // mean photons per mode
    std::uint32_t modes_m = 40;  // spectral/temporal modes on the detector
    double noise_sigma = 610.0;  // detector noise, photon-equivalent std-dev
    double filter_beta = kCalibratedFilterBeta;  // one-pole IIR coefficient, [0,1)
    double threshold_tau = 1e4;  // discriminator threshold EMA constant, samples
    double threshold_offset = kCalibratedThresholdOffset;  // photons, biases P0
    std::uint64_t rng_seed = 1;

    void validate() const;
};

// Detector output in photon-equivalent units.
using AnalogSample = double;

/// P(n) for a single thermal mode with mean occupation n_bar.
double pmf_single_mode(double n_bar, std::uint64_t n);

/// P(n) for m independent modes, n_bar photons per mode on average.
double pmf_multimode(double n_bar, std::uint64_t n, std::uint32_t m);

struct Moments {
    double mean;
    double variance;
};

/// Mean and variance of the m-mode photon number law.
Moments moments(double n_bar, std::uint32_t m);

// Photon counts for consecutive detection windows. The m-mode law is
// sampled exactly through its Gamma-Poisson mixture: intensity from
// Gamma(shape=m, scale=n_bar), then a Poisson count at that intensity.
class PhotonSampler {
  public:
    explicit PhotonSampler(const SourceParams& params);
    std::uint64_t next();

  private:
    SplitMix64 rng_;
    NormalSampler normal_;
    GammaSampler gamma_;
};

// Noise injection plus one-pole low-pass: y = (1-beta)*(x+g) + beta*y_prev,
// y0 equal to the first noisy sample. Models the finite receiver bandwidth
// that correlates successive samples.
class DetectorChain {
  public:
    explicit DetectorChain(const SourceParams& params);
    AnalogSample step(double x);

  private:
    SplitMix64 rng_;
    NormalSampler normal_;
    double beta_;
    double sigma_;
    double y_ = 0.0;
    bool primed_ = false;
};

// AC-coupled comparator: the threshold is an exponential moving average of
// the signal (time constant tau), plus a fixed offset; each sample emits 1
// when strictly above the previous threshold, 0 otherwise.
class Discriminator {
  public:
    explicit Discriminator(const SourceParams& params);
    bool step(AnalogSample y);

  private:
    double tau_;
    double offset_;
    double theta_ = 0.0;
    bool primed_ = false;
};

/// `count` i.i.d. photon counts, deterministic in params.rng_seed.
std::vector<std::uint64_t> sample_photon_counts(const SourceParams& params, std::size_t count);

/// Detector response for a run of photon counts.
std::vector<AnalogSample> detector_chain(std::span<const std::uint64_t> counts,
                                         const SourceParams& params);

/// Threshold discrimination of an analog run.
BitStream discriminate(std::span<const AnalogSample> analog, const SourceParams& params);

/// Full source -> detector -> discriminator pipeline, constant memory.
/// Bit-identical to composing the three stage functions above.
BitStream generate_raw_stream(const SourceParams& params, std::uint64_t bit_count);

// --- calibration -----------------------------------------------------------

struct RawStreamStats {
    double p0;  // zero-bit probability
    double r1;  // lag-1 serial correlation
};

/// P0 and R(1) of a fresh raw run at the given parameters.
RawStreamStats measure_raw(const SourceParams& params, std::uint64_t bit_count);

/// Bisect filter_beta in [0, 0.5] until R(1) hits target_r1 (monotone in beta).
double calibrate_filter_beta(SourceParams params, double target_r1, double tolerance,
                             std::uint64_t bit_count);

/// Bisect threshold_offset until P0 hits target_p0 (monotone in offset).
double calibrate_threshold_offset(SourceParams params, double target_p0, double tolerance,
                                  std::uint64_t bit_count);

struct CalibrationResult {
    double filter_beta;
    double threshold_offset;
    double achieved_r1;
    double achieved_p0;
};

/// Two rounds of coordinate descent over (filter_beta, threshold_offset).
CalibrationResult calibrate_source(SourceParams params, double target_p0, double target_r1,
                                   std::uint64_t bit_count);

}  // namespace qrng
