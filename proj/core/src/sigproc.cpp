#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dedisp/errors.hpp"
#include "dedisp/filterbank.hpp"

namespace dedisp {

namespace {

// SIGPROC headers are a flat stream of (int32 length, ASCII name) keywords,
// each followed by its binary value, bracketed by HEADER_START / HEADER_END.
// Only the 32-bit float, single-IF subset is accepted here.
class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

  std::uint32_t read_u32(const char* what) {
    need(4, what);
    std::uint32_t word = 0;
    for (int i = 3; i >= 0; --i) {
      word = (word << 8) | bytes_[offset_ + static_cast<std::size_t>(i)];
    }
    offset_ += 4;
    return word;
  }

  std::int32_t read_i32(const char* what) { return static_cast<std::int32_t>(read_u32(what)); }

  double read_f64(const char* what) {
    need(8, what);
    std::uint64_t word = 0;
    for (int i = 7; i >= 0; --i) {
      word = (word << 8) | bytes_[offset_ + static_cast<std::size_t>(i)];
    }
    offset_ += 8;
    return std::bit_cast<double>(word);
  }

  std::string read_keyword() {
    const std::size_t at = offset_;
    const std::uint32_t len = read_u32("keyword length");
    if (len == 0 || len > 64) {
      throw format_error("implausible keyword length " + std::to_string(len), at);
    }
    need(len, "keyword text");
    std::string name(reinterpret_cast<const char*>(bytes_.data() + offset_), len);
    offset_ += len;
    return name;
  }

  std::span<const std::uint8_t> rest() const { return bytes_.subspan(offset_); }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw format_error(std::string("truncated while reading ") + what, offset_);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

float decode_f32le(const std::uint8_t* p) {
  std::uint32_t word = 0;
  for (int i = 3; i >= 0; --i) word = (word << 8) | p[i];
  return std::bit_cast<float>(word);
}

}  // namespace

Filterbank parse_sigproc(std::span<const std::uint8_t> bytes) {
  Cursor cur(bytes);
  if (cur.read_keyword() != "HEADER_START") {
    throw format_error("not a SIGPROC stream: missing HEADER_START", 0);
  }

  std::set<std::string> seen;
  std::int32_t nchans = 0;
  double tsamp = 0.0;
  double fch1 = 0.0;
  double foff = 0.0;

  while (true) {
    const std::size_t at = cur.offset();
    const std::string key = cur.read_keyword();
    if (key == "HEADER_END") break;
    if (!seen.insert(key).second) {
      throw format_error("duplicate header keyword '" + key + "'", at);
    }
    if (key == "nchans") {
      nchans = cur.read_i32("nchans");
      if (nchans < 1) throw format_error("nchans must be at least 1", at);
    } else if (key == "tsamp") {
      tsamp = cur.read_f64("tsamp");
      if (!std::isfinite(tsamp) || tsamp <= 0.0) {
        throw format_error("tsamp must be a positive time in seconds", at);
      }
    } else if (key == "fch1") {
      fch1 = cur.read_f64("fch1");
      if (!std::isfinite(fch1) || fch1 <= 0.0) {
        throw format_error("fch1 must be a positive frequency in MHz", at);
      }
    } else if (key == "foff") {
      foff = cur.read_f64("foff");
      if (!std::isfinite(foff) || foff >= 0.0) {
        throw format_error("foff must be negative (fch1 is the highest channel)", at);
      }
    } else if (key == "nbits") {
      const std::int32_t nbits = cur.read_i32("nbits");
      if (nbits != 32) {
        throw format_error("unsupported nbits " + std::to_string(nbits) + " (only 32)", at);
      }
    } else if (key == "nifs") {
      const std::int32_t nifs = cur.read_i32("nifs");
      if (nifs != 1) {
        throw format_error("unsupported nifs " + std::to_string(nifs) + " (only 1)", at);
      }
    } else {
      throw format_error("unsupported header keyword '" + key + "'", at);
    }
  }

  const std::size_t header_end = cur.offset();
  for (const char* required : {"nchans", "tsamp", "fch1", "foff"}) {
    if (!seen.contains(required)) {
      throw format_error(std::string("missing required keyword '") + required + "'", header_end);
    }
  }

  const double rate = std::round(1.0 / tsamp);
  if (!(rate >= 1.0) || rate > 4.0e9) {
    throw format_error("tsamp implies an unusable sampling rate", header_end);
  }

  ObservationSetup setup;
  setup.name = "sigproc";
  setup.samples_per_second = static_cast<std::uint32_t>(rate);
  setup.channels = static_cast<std::uint32_t>(nchans);
  setup.f_min = fch1 + static_cast<double>(nchans - 1) * foff;
  setup.channel_width = -foff;
  setup.dm_first = 0.0;
  setup.dm_step = 0.25;
  try {
    setup.validate();
  } catch (const std::invalid_argument& err) {
    throw format_error(std::string("header describes an invalid setup: ") + err.what(),
                       header_end);
  }

  const std::span<const std::uint8_t> payload = cur.rest();
  const std::uint64_t stride = static_cast<std::uint64_t>(setup.channels) * 4;
  if (payload.empty() || payload.size() % stride != 0) {
    throw format_error("data section must hold a whole, nonzero number of samples",
                       header_end + payload.size());
  }
  const std::uint64_t samples = payload.size() / stride;
  if (samples > 0xffffffffull) {
    throw format_error("data section longer than the supported sample count", header_end);
  }

  Filterbank fb;
  fb.setup = setup;
  fb.num_samples = static_cast<std::uint32_t>(samples);
  fb.data.resize(static_cast<std::size_t>(setup.channels) * fb.num_samples);
  // Payload is time-major with channel 0 at the highest frequency; internal
  // layout is channel-major with channel 0 at the lowest.
  for (std::uint32_t j = 0; j < fb.num_samples; ++j) {
    for (std::uint32_t k = 0; k < setup.channels; ++k) {
      const std::size_t src = static_cast<std::size_t>(j) * setup.channels + k;
      const float value = decode_f32le(payload.data() + src * 4);
      if (!std::isfinite(value)) {
        throw format_error("non-finite sample in data section", header_end + src * 4);
      }
      const std::uint32_t ch = setup.channels - 1 - k;
      fb.data[static_cast<std::size_t>(ch) * fb.num_samples + j] = value;
    }
  }
  return fb;
}

Filterbank read_sigproc(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_sigproc(bytes);
}

void write_sigproc(const Filterbank& fb, const std::string& path) {
  fb.setup.validate();
  std::vector<std::uint8_t> out;
  auto put_u32 = [&out](std::uint32_t word) {
    for (int i = 0; i < 4; ++i) {
      out.push_back(static_cast<std::uint8_t>((word >> (8 * i)) & 0xff));
    }
  };
  auto put_f64 = [&out](double value) {
    const std::uint64_t word = std::bit_cast<std::uint64_t>(value);
    for (int i = 0; i < 8; ++i) {
      out.push_back(static_cast<std::uint8_t>((word >> (8 * i)) & 0xff));
    }
  };
  auto put_keyword = [&](const std::string& name) {
    put_u32(static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
  };

  put_keyword("HEADER_START");
  put_keyword("nchans");
  put_u32(fb.setup.channels);
  put_keyword("tsamp");
  put_f64(1.0 / static_cast<double>(fb.setup.samples_per_second));
  put_keyword("fch1");
  put_f64(fb.setup.highest_frequency());
  put_keyword("foff");
  put_f64(-fb.setup.channel_width);
  put_keyword("nbits");
  put_u32(32);
  put_keyword("nifs");
  put_u32(1);
  put_keyword("HEADER_END");

  for (std::uint32_t j = 0; j < fb.num_samples; ++j) {
    for (std::uint32_t k = 0; k < fb.setup.channels; ++k) {
      const std::uint32_t ch = fb.setup.channels - 1 - k;
      const float value = fb.data[static_cast<std::size_t>(ch) * fb.num_samples + j];
      const std::uint32_t word = std::bit_cast<std::uint32_t>(value);
      for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((word >> (8 * i)) & 0xff));
      }
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("short write to " + path);
}

}  // namespace dedisp
