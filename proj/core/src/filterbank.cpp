#include "dedisp/filterbank.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <random>
#include <stdexcept>
#include <string>

#include "dedisp/errors.hpp"

namespace dedisp {

namespace {

// Gaussian deviates from a pinned generator: mt19937_64 raw draws mapped to
// uniforms via the top 53 bits, then the basic Box-Muller transform. Both
// halves of each pair are consumed, so the stream for a given seed is fixed.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

std::uint32_t sample_index(const Filterbank& fb, double position) {
  const double scaled = std::ceil(position * static_cast<double>(fb.setup.samples_per_second));
  if (scaled <= 0.0) return 0;
  if (scaled >= static_cast<double>(fb.num_samples)) return fb.num_samples;
  return static_cast<std::uint32_t>(scaled);
}

}  // namespace

Filterbank noise_filterbank(const ObservationSetup& setup, std::uint32_t num_samples,
                            float sigma, std::uint64_t seed) {
  setup.validate();
  if (num_samples == 0) throw std::invalid_argument("filterbank needs at least one sample");
  if (!std::isfinite(sigma) || sigma < 0.0f) {
    throw std::invalid_argument("noise sigma must be finite and non-negative");
  }
  Filterbank fb;
  fb.setup = setup;
  fb.num_samples = num_samples;
  fb.data.assign(static_cast<std::size_t>(setup.channels) * num_samples, 0.0f);
  if (sigma > 0.0f) {
    GaussianStream stream(seed);
    // Channel-major fill order; one stream per filterbank keeps the data a
    // pure function of (seed, shape, sigma).
    for (float& sample : fb.data) {
      sample = static_cast<float>(static_cast<double>(sigma) * stream.next());
    }
  }
  return fb;
}

Filterbank generate(const ObservationSetup& setup, std::uint32_t num_samples,
                    const PulseSpec& pulse) {
  if (!std::isfinite(pulse.dm) || pulse.dm < 0.0) {
    throw std::invalid_argument("pulse dm must be finite and non-negative");
  }
  if (!std::isfinite(pulse.t0)) throw std::invalid_argument("pulse t0 must be finite");
  if (!std::isfinite(pulse.width) || pulse.width <= 0.0) {
    throw std::invalid_argument("pulse width must be positive");
  }
  if (!std::isfinite(pulse.amplitude) || pulse.amplitude < 0.0f) {
    throw std::invalid_argument("pulse amplitude must be finite and non-negative");
  }
  Filterbank fb = noise_filterbank(setup, num_samples, pulse.noise_sigma, pulse.seed);

  const double f_high = setup.highest_frequency();
  const double duration =
      static_cast<double>(num_samples) / static_cast<double>(setup.samples_per_second);
  const double slowest_arrival =
      pulse.t0 + delay_seconds(pulse.dm, setup.channel_frequency(0), f_high) + pulse.width;
  if (!(slowest_arrival < duration)) {
    throw std::invalid_argument("pulse does not fit: t0 + delay + width reaches past the data");
  }

  for (std::uint32_t ch = 0; ch < setup.channels; ++ch) {
    const double delay = delay_seconds(pulse.dm, setup.channel_frequency(ch), f_high);
    const std::uint32_t first = sample_index(fb, pulse.t0 + delay);
    const std::uint32_t last = sample_index(fb, pulse.t0 + delay + pulse.width);
    float* row = fb.data.data() + static_cast<std::size_t>(ch) * num_samples;
    for (std::uint32_t j = first; j < last; ++j) row[j] += pulse.amplitude;
  }
  return fb;
}

void write_raw(const Filterbank& fb, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  std::vector<unsigned char> bytes(fb.data.size() * 4);
  for (std::size_t i = 0; i < fb.data.size(); ++i) {
    const std::uint32_t word = std::bit_cast<std::uint32_t>(fb.data[i]);
    bytes[4 * i + 0] = static_cast<unsigned char>(word & 0xff);
    bytes[4 * i + 1] = static_cast<unsigned char>((word >> 8) & 0xff);
    bytes[4 * i + 2] = static_cast<unsigned char>((word >> 16) & 0xff);
    bytes[4 * i + 3] = static_cast<unsigned char>((word >> 24) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

Filterbank read_raw(const std::string& path, const ObservationSetup& setup,
                    std::uint32_t num_samples) {
  setup.validate();
  if (num_samples == 0) throw std::invalid_argument("filterbank needs at least one sample");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::uint64_t expected =
      static_cast<std::uint64_t>(setup.channels) * num_samples * 4;
  if (bytes.size() != expected) {
    throw format_error("raw filterbank size mismatch: expected " + std::to_string(expected) +
                           " bytes, found " + std::to_string(bytes.size()),
                       bytes.size());
  }
  Filterbank fb;
  fb.setup = setup;
  fb.num_samples = num_samples;
  fb.data.resize(static_cast<std::size_t>(setup.channels) * num_samples);
  for (std::size_t i = 0; i < fb.data.size(); ++i) {
    const std::uint32_t word = static_cast<std::uint32_t>(bytes[4 * i]) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    fb.data[i] = std::bit_cast<float>(word);
    if (!std::isfinite(fb.data[i])) {
      throw format_error("non-finite sample in raw filterbank", 4 * i);
    }
  }
  return fb;
}

}  // namespace dedisp
