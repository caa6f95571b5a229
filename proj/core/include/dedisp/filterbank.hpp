#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dedisp/setup.hpp"

namespace dedisp {

/// Channelized time series: a channels x num_samples matrix of
/// single-precision samples, channel-major (row = channel, column = time).
/// Immutable after construction and shareable across threads.
struct Filterbank {
  ObservationSetup setup;
  std::uint32_t num_samples = 0;  // t, samples per channel
  std::vector<float> data;        // channels x num_samples

  float at(std::uint32_t channel, std::uint32_t sample) const {
    return data[static_cast<std::size_t>(channel) * num_samples + sample];
  }
  std::span<const float> channel(std::uint32_t ch) const {
    return {data.data() + static_cast<std::size_t>(ch) * num_samples, num_samples};
  }
};

/// A synthetic test pulse: a boxcar of `width` seconds arriving at the
/// highest-frequency channel at t0, swept across channels by the dispersion
/// delay of `dm`, on top of zero-mean Gaussian noise.
struct PulseSpec {
  double dm = 0.0;           // pc/cm^3
  double t0 = 0.0;           // s, arrival time at the highest frequency
  double width = 0.0;        // s, boxcar width
  float amplitude = 0.0f;    // added on top of noise
  float noise_sigma = 0.0f;  // stddev of the Gaussian noise
  std::uint64_t seed = 0;
};

/// Identity of the noise generator, recorded in output metadata.
inline constexpr const char* kNoiseRngId = "mt19937_64/box-muller";

/// Synthesizes a dispersed filterbank: channel ch carries the pulse over
/// sample columns j with j/s in [t0 + delay(ch), t0 + delay(ch) + width).
/// Bit-identical output for equal arguments and seed. Throws
/// std::invalid_argument when the sweep does not fit the time window.
Filterbank generate(const ObservationSetup& setup, std::uint32_t num_samples,
                    const PulseSpec& pulse);

/// Noise-only filterbank, used to feed benchmark runs.
Filterbank noise_filterbank(const ObservationSetup& setup, std::uint32_t num_samples,
                            float sigma, std::uint64_t seed);

/// Raw binary format: channel-major little-endian 32-bit floats, exactly
/// channels x num_samples x 4 bytes, no header. Round-trips bit-exactly.
Filterbank read_raw(const std::string& path, const ObservationSetup& setup,
                    std::uint32_t num_samples);
void write_raw(const Filterbank& fb, const std::string& path);

/// SIGPROC-style subset reader. The header is a sequence of length-prefixed
/// ASCII keywords with binary values, bracketed by HEADER_START/HEADER_END;
/// the payload is time-major 32-bit floats ordered highest frequency first,
/// transposed into the channel-major (lowest first) layout at ingestion.
/// Supported keywords: nchans, tsamp, fch1, foff, nbits (=32), nifs (=1).
/// Throws format_error (with byte offset) on anything else.
Filterbank read_sigproc(const std::string& path);

/// Same parser over an in-memory buffer.
Filterbank parse_sigproc(std::span<const std::uint8_t> bytes);

/// Writes the complementary subset: header with the six supported keywords,
/// payload time-major with channels reversed back to highest-first.
void write_sigproc(const Filterbank& fb, const std::string& path);

}  // namespace dedisp
