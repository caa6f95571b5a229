#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "dedisp/errors.hpp"
#include "dedisp/filterbank.hpp"
#include "dedisp/kernels.hpp"
#include "support/oracles.hpp"

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "dedisp_signal_test";
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// First sample index of the boxcar in one channel, straight from the window
// definition. Evaluated in double like the contract; the window edges are
// defined by the double value of the delay, not an ideal real number.
std::uint32_t onset_oracle(const dedisp::ObservationSetup& setup, const dedisp::PulseSpec& pulse,
                           std::uint32_t channel) {
  const double delay = dedisp::delay_seconds(pulse.dm, setup.channel_frequency(channel),
                                             setup.highest_frequency());
  return static_cast<std::uint32_t>(
      std::ceil((pulse.t0 + delay) * setup.samples_per_second));
}

}  // namespace

TEST_CASE("generate with no pulse energy is all zeros") {
  const dedisp::ObservationSetup setup = oracles::mini_setup();
  dedisp::PulseSpec pulse;
  pulse.width = 0.0625;
  pulse.amplitude = 0.0f;
  pulse.noise_sigma = 0.0f;
  const dedisp::Filterbank fb = dedisp::generate(setup, 128, pulse);
  for (const float sample : fb.data) CHECK(sample == 0.0f);
}

TEST_CASE("dm zero puts the boxcar at the same columns in every channel") {
  const dedisp::ObservationSetup setup = oracles::mini_setup();
  dedisp::PulseSpec pulse;
  pulse.dm = 0.0;
  pulse.t0 = 0.25;
  pulse.width = 0.125;
  pulse.amplitude = 2.0f;
  const dedisp::Filterbank fb = dedisp::generate(setup, 128, pulse);

  const std::uint32_t first = onset_oracle(setup, pulse, 0);
  for (std::uint32_t ch = 0; ch < setup.channels; ++ch) {
    for (std::uint32_t j = 0; j < fb.num_samples; ++j) {
      const bool inside = j >= first && j < first + 8;  // 0.125 s at 64 Hz
      CHECK(fb.at(ch, j) == (inside ? 2.0f : 0.0f));
    }
  }
}

TEST_CASE("every channel window matches the definition") {
  dedisp::ObservationSetup setup = oracles::mini_setup(200, 12, 0.5);
  dedisp::PulseSpec pulse;
  pulse.dm = 1.5;
  pulse.t0 = 0.1;
  pulse.width = 0.05;
  pulse.amplitude = 1.0f;
  const std::uint32_t t = 2000;
  const dedisp::Filterbank fb = dedisp::generate(setup, t, pulse);

  for (std::uint32_t ch = 0; ch < setup.channels; ++ch) {
    const double delay = dedisp::delay_seconds(pulse.dm, setup.channel_frequency(ch),
                                               setup.highest_frequency());
    const auto lo = static_cast<std::uint32_t>(
        std::ceil((pulse.t0 + delay) * setup.samples_per_second));
    const auto hi = static_cast<std::uint32_t>(
        std::ceil((pulse.t0 + delay + pulse.width) * setup.samples_per_second));
    for (std::uint32_t j = 0; j < t; ++j) {
      CHECK(fb.at(ch, j) == ((j >= lo && j < hi) ? 1.0f : 0.0f));
    }
  }
}

TEST_CASE("Apertif onset sweep spans the full-band delay") {
  const dedisp::ObservationSetup* apertif = dedisp::find_builtin("Apertif");
  REQUIRE(apertif != nullptr);
  dedisp::PulseSpec pulse;
  pulse.dm = 5.0;
  pulse.t0 = 0.1;
  pulse.width = 0.002;
  pulse.amplitude = 1.0f;
  const dedisp::Filterbank fb = dedisp::generate(*apertif, 2 * 20000, pulse);

  auto onset = [&](std::uint32_t ch) {
    for (std::uint32_t j = 0; j < fb.num_samples; ++j) {
      if (fb.at(ch, j) != 0.0f) return j;
    }
    return fb.num_samples;
  };
  const std::uint32_t sweep = onset(0) - onset(apertif->channels - 1);
  const long double full_delay =
      oracles::delay_seconds_ld(5.0, apertif->f_min, apertif->highest_frequency());
  CHECK(sweep == static_cast<std::uint32_t>(std::llround(full_delay * 20000)));
  // Frozen: the 1,024-channel band tops out at 1,716.67 MHz, giving 65
  // columns of sweep (a literal 1,720 MHz endpoint would give 66).
  CHECK(sweep == 65);
}

TEST_CASE("generate rejects a pulse that does not fit") {
  const dedisp::ObservationSetup setup = oracles::mini_setup();
  dedisp::PulseSpec pulse;
  pulse.t0 = 1.9;
  pulse.width = 0.2;
  pulse.amplitude = 1.0f;
  CHECK_THROWS_AS(dedisp::generate(setup, 128, pulse), std::invalid_argument);
  pulse.t0 = 0.0;
  pulse.width = -0.5;
  CHECK_THROWS_AS(dedisp::generate(setup, 128, pulse), std::invalid_argument);
}

TEST_CASE("generation is deterministic per seed") {
  const dedisp::ObservationSetup setup = oracles::mini_setup();
  dedisp::PulseSpec pulse;
  pulse.dm = 0.5;
  pulse.t0 = 0.2;
  pulse.width = 0.1;
  pulse.amplitude = 1.0f;
  pulse.noise_sigma = 0.7f;
  pulse.seed = 42;

  const dedisp::Filterbank a = dedisp::generate(setup, 192, pulse);
  const dedisp::Filterbank b = dedisp::generate(setup, 192, pulse);
  CHECK(a.data == b.data);

  pulse.seed = 43;
  const dedisp::Filterbank c = dedisp::generate(setup, 192, pulse);
  CHECK(a.data != c.data);
  CHECK(std::string(dedisp::kNoiseRngId) == "mt19937_64/box-muller");
}

TEST_CASE("noise has the requested moments, roughly") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(256, 64);
  const dedisp::Filterbank fb = dedisp::noise_filterbank(setup, 1024, 2.0f, 7);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const float sample : fb.data) {
    sum += sample;
    sum_sq += static_cast<double>(sample) * sample;
  }
  const double n = static_cast<double>(fb.data.size());
  const double mean = sum / n;
  const double stddev = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(mean) < 0.05);
  CHECK(stddev == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("scaling the input by a power of two scales the sums exactly") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(64, 16, 0.5);
  const dedisp::DelayTable table = dedisp::build_delay_table(setup, 4);
  dedisp::Filterbank fb = dedisp::noise_filterbank(setup, 128, 1.0f, 11);

  const dedisp::DedispersedSeries base = dedisp::dedisperse_reference(fb, table);
  for (const float alpha : {2.0f, 0.25f, 1024.0f}) {
    dedisp::Filterbank scaled = fb;
    for (float& sample : scaled.data) sample *= alpha;
    const dedisp::DedispersedSeries out = dedisp::dedisperse_reference(scaled, table);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      CHECK(out.data[i] == alpha * base.data[i]);
    }
  }
}

TEST_CASE("raw files round-trip bit-exactly") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(16, 4);
  const dedisp::Filterbank fb = dedisp::noise_filterbank(setup, 16, 1.5f, 3);
  const fs::path path = temp_dir() / "roundtrip.raw";
  dedisp::write_raw(fb, path.string());
  const dedisp::Filterbank back = dedisp::read_raw(path.string(), setup, 16);
  CHECK(back.data == fb.data);
  fs::remove(path);
}

TEST_CASE("raw layout is channel-major little-endian") {
  dedisp::Filterbank fb;
  fb.setup = oracles::mini_setup(2, 2);
  fb.num_samples = 2;
  fb.data = {1.0f, 2.0f, 3.0f, 4.0f};
  const fs::path path = temp_dir() / "layout.raw";
  dedisp::write_raw(fb, path.string());

  const std::vector<std::uint8_t> bytes = read_bytes(path);
  REQUIRE(bytes.size() == 16);
  const std::uint8_t expected[16] = {0, 0, 0x80, 0x3f, 0, 0, 0, 0x40,
                                     0, 0, 0x40, 0x40, 0, 0, 0x80, 0x40};
  for (int i = 0; i < 16; ++i) CHECK(bytes[i] == expected[i]);
  fs::remove(path);
}

TEST_CASE("raw reader rejects a size mismatch") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(16, 4);
  const fs::path path = temp_dir() / "short.raw";
  {
    std::ofstream out(path, std::ios::binary);
    out << "abc";
  }
  CHECK_THROWS_AS(dedisp::read_raw(path.string(), setup, 16), dedisp::format_error);
  fs::remove(path);
}

TEST_CASE("sigproc files round-trip through write and read") {
  dedisp::ObservationSetup setup = oracles::mini_setup(20000, 3, 0.25);
  setup.f_min = 1420.0;
  setup.channel_width = 0.29;
  const dedisp::Filterbank fb = dedisp::noise_filterbank(setup, 8, 1.0f, 5);

  const fs::path path = temp_dir() / "roundtrip.fil";
  dedisp::write_sigproc(fb, path.string());
  const dedisp::Filterbank back = dedisp::read_sigproc(path.string());

  CHECK(back.setup.samples_per_second == setup.samples_per_second);
  CHECK(back.setup.channels == setup.channels);
  CHECK(back.setup.f_min == doctest::Approx(setup.f_min).epsilon(1e-12));
  CHECK(back.setup.channel_width == doctest::Approx(setup.channel_width).epsilon(1e-12));
  CHECK(back.num_samples == fb.num_samples);
  CHECK(back.data == fb.data);  // float bits survive the transposes
  fs::remove(path);
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t word) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((word >> (8 * i)) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double value) {
  const auto word = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((word >> (8 * i)) & 0xff));
}

void put_keyword(std::vector<std::uint8_t>& out, const std::string& name) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
}

void put_f32(std::vector<std::uint8_t>& out, float value) {
  const auto word = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((word >> (8 * i)) & 0xff));
}

std::vector<std::uint8_t> minimal_header(std::int32_t nbits = 32, std::int32_t nifs = 1) {
  std::vector<std::uint8_t> bytes;
  put_keyword(bytes, "HEADER_START");
  put_keyword(bytes, "nchans");
  put_u32(bytes, 2);
  put_keyword(bytes, "tsamp");
  put_f64(bytes, 5e-5);
  put_keyword(bytes, "fch1");
  put_f64(bytes, 1720.0);
  put_keyword(bytes, "foff");
  put_f64(bytes, -0.29);
  put_keyword(bytes, "nbits");
  put_u32(bytes, static_cast<std::uint32_t>(nbits));
  put_keyword(bytes, "nifs");
  put_u32(bytes, static_cast<std::uint32_t>(nifs));
  put_keyword(bytes, "HEADER_END");
  return bytes;
}

}  // namespace

TEST_CASE("minimal sigproc fixture parses to a 2x4 filterbank") {
  std::vector<std::uint8_t> bytes = minimal_header();
  // Time-major payload, channel 0 = highest frequency: sample j carries
  // (high_j, low_j).
  for (float value : {10.f, 20.f, 11.f, 21.f, 12.f, 22.f, 13.f, 23.f}) put_f32(bytes, value);

  const dedisp::Filterbank fb = dedisp::parse_sigproc(bytes);
  CHECK(fb.setup.samples_per_second == 20000);
  CHECK(fb.setup.channels == 2);
  CHECK(fb.num_samples == 4);
  CHECK(fb.setup.channel_width == doctest::Approx(0.29));
  CHECK(fb.setup.f_min == doctest::Approx(1720.0 - 0.29));

  // Internal channel 0 is the lowest frequency = payload channel 1.
  const float low[4] = {20.f, 21.f, 22.f, 23.f};
  const float high[4] = {10.f, 11.f, 12.f, 13.f};
  for (std::uint32_t j = 0; j < 4; ++j) {
    CHECK(fb.at(0, j) == low[j]);
    CHECK(fb.at(1, j) == high[j]);
  }
}

TEST_CASE("sigproc parser reports precise failures") {
  SUBCASE("missing sentinel") {
    std::vector<std::uint8_t> bytes;
    put_keyword(bytes, "nchans");
    put_u32(bytes, 2);
    CHECK_THROWS_AS(dedisp::parse_sigproc(bytes), dedisp::format_error);
  }
  SUBCASE("nbits other than 32") {
    std::vector<std::uint8_t> bytes = minimal_header(8);
    for (int i = 0; i < 8; ++i) put_f32(bytes, 0.0f);
    CHECK_THROWS_AS(dedisp::parse_sigproc(bytes), dedisp::format_error);
  }
  SUBCASE("nifs other than 1") {
    std::vector<std::uint8_t> bytes = minimal_header(32, 2);
    CHECK_THROWS_AS(dedisp::parse_sigproc(bytes), dedisp::format_error);
  }
  SUBCASE("unknown keyword carries its byte offset") {
    std::vector<std::uint8_t> bytes;
    put_keyword(bytes, "HEADER_START");
    const std::size_t at = bytes.size();
    put_keyword(bytes, "machine_id");
    put_u32(bytes, 7);
    try {
      dedisp::parse_sigproc(bytes);
      CHECK(false);
    } catch (const dedisp::format_error& err) {
      CHECK(err.byte_offset() == at);
    }
  }
  SUBCASE("truncated data section") {
    std::vector<std::uint8_t> bytes = minimal_header();
    put_f32(bytes, 1.0f);  // one float is not a whole 2-channel sample... x3
    put_f32(bytes, 2.0f);
    put_f32(bytes, 3.0f);
    CHECK_THROWS_AS(dedisp::parse_sigproc(bytes), dedisp::format_error);
  }
  SUBCASE("empty data section") {
    const std::vector<std::uint8_t> bytes = minimal_header();
    CHECK_THROWS_AS(dedisp::parse_sigproc(bytes), dedisp::format_error);
  }
}

TEST_CASE("read_sigproc then write_raw equals the transposed payload") {
  std::vector<std::uint8_t> bytes = minimal_header();
  const float payload[8] = {10.f, 20.f, 11.f, 21.f, 12.f, 22.f, 13.f, 23.f};
  for (const float value : payload) put_f32(bytes, value);

  const dedisp::Filterbank fb = dedisp::parse_sigproc(bytes);
  const fs::path path = temp_dir() / "transposed.raw";
  dedisp::write_raw(fb, path.string());
  const std::vector<std::uint8_t> raw = read_bytes(path);

  std::vector<std::uint8_t> expected;
  for (const float value : {20.f, 21.f, 22.f, 23.f, 10.f, 11.f, 12.f, 13.f}) {
    put_f32(expected, value);
  }
  CHECK(raw == expected);
  fs::remove(path);
}
