#include "dedisp/setup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dedisp/errors.hpp"

namespace dedisp {

namespace {

// Dispersion constant in MHz^2 pc^-1 cm^3 s, kept at the commonly printed
// value rather than the more precise 4148.808 so that results are
// reproducible against the same convention everywhere in this project.
constexpr double kDispersionConstant = 4150.0;

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw capacity_error(std::string("sizing overflow in ") + what);
  }
  return out;
}

}  // namespace

void ObservationSetup::validate() const {
  if (samples_per_second < 1) throw std::invalid_argument("samples_per_second must be >= 1");
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  if (!(f_min > 0.0) || !std::isfinite(f_min)) {
    throw std::invalid_argument("f_min must be positive and finite");
  }
  if (!(channel_width > 0.0) || !std::isfinite(channel_width)) {
    throw std::invalid_argument("channel_width must be positive and finite");
  }
  if (!(dm_step > 0.0) || !std::isfinite(dm_step)) {
    throw std::invalid_argument("dm_step must be positive and finite");
  }
  if (!(dm_first >= 0.0) || !std::isfinite(dm_first)) {
    throw std::invalid_argument("dm_first must be non-negative and finite");
  }
}

double delay_seconds(double dm, double f_channel_mhz, double f_highest_mhz) {
  if (!std::isfinite(dm) || !std::isfinite(f_channel_mhz) || !std::isfinite(f_highest_mhz)) {
    throw std::invalid_argument("delay_seconds: non-finite input");
  }
  if (dm < 0.0) throw std::invalid_argument("delay_seconds: dm must be non-negative");
  if (f_channel_mhz <= 0.0 || f_highest_mhz <= 0.0) {
    throw std::invalid_argument("delay_seconds: frequencies must be positive");
  }
  if (f_channel_mhz > f_highest_mhz) {
    throw std::invalid_argument("delay_seconds: channel frequency above the reference frequency");
  }
  const double inv_low = 1.0 / (f_channel_mhz * f_channel_mhz);
  const double inv_high = 1.0 / (f_highest_mhz * f_highest_mhz);
  return kDispersionConstant * dm * (inv_low - inv_high);
}

namespace {

DelayTable make_table_shell(const ObservationSetup& setup, std::uint32_t num_dms,
                            std::uint64_t memory_cap_bytes) {
  setup.validate();
  if (num_dms < 1) throw std::invalid_argument("num_dms must be >= 1");
  const std::uint64_t entries = checked_mul(num_dms, setup.channels, "delay table");
  const std::uint64_t bytes = checked_mul(entries, sizeof(std::uint32_t), "delay table");
  if (bytes > memory_cap_bytes) {
    throw capacity_error("delay table of " + std::to_string(bytes) +
                         " bytes exceeds the cap of " + std::to_string(memory_cap_bytes));
  }
  DelayTable table;
  table.setup = setup;
  table.num_dms = num_dms;
  table.shifts.assign(static_cast<std::size_t>(entries), 0u);
  table.max_delay = 0;
  return table;
}

}  // namespace

DelayTable build_delay_table(const ObservationSetup& setup, std::uint32_t num_dms,
                             std::uint64_t memory_cap_bytes) {
  DelayTable table = make_table_shell(setup, num_dms, memory_cap_bytes);
  const double f_high = setup.highest_frequency();
  const double rate = static_cast<double>(setup.samples_per_second);
  std::uint32_t max_delay = 0;
  for (std::uint32_t dm = 0; dm < num_dms; ++dm) {
    const double trial = setup.trial_dm(dm);
    std::uint32_t* row = table.shifts.data() + static_cast<std::size_t>(dm) * setup.channels;
    for (std::uint32_t ch = 0; ch < setup.channels; ++ch) {
      const double seconds = delay_seconds(trial, setup.channel_frequency(ch), f_high);
      // Half-away-from-zero; llround implements it for the non-negative range.
      const long long samples = std::llround(seconds * rate);
      row[ch] = static_cast<std::uint32_t>(samples);
      max_delay = std::max(max_delay, row[ch]);
    }
  }
  table.max_delay = max_delay;
  return table;
}

DelayTable build_zero_delay_table(const ObservationSetup& setup, std::uint32_t num_dms,
                                  std::uint64_t memory_cap_bytes) {
  return make_table_shell(setup, num_dms, memory_cap_bytes);
}

ProblemInstance instance_sizing(const ObservationSetup& setup, std::uint32_t num_dms) {
  setup.validate();
  if (num_dms < 1) throw std::invalid_argument("num_dms must be >= 1");

  // The largest shift sits at (last trial, channel 0).
  const double worst = delay_seconds(setup.trial_dm(num_dms - 1), setup.channel_frequency(0),
                                     setup.highest_frequency());
  const double worst_samples = worst * static_cast<double>(setup.samples_per_second);
  if (worst_samples >= 4294967295.0) {
    throw capacity_error("maximum shift does not fit 32 bits");
  }
  const auto max_delay = static_cast<std::uint32_t>(std::llround(worst_samples));

  ProblemInstance instance;
  instance.setup = setup;
  instance.num_dms = num_dms;
  instance.max_delay = max_delay;

  const std::uint64_t s = setup.samples_per_second;
  const std::uint64_t window = s + max_delay;  // cannot overflow: both 32-bit
  const std::uint64_t blocks = (window + s - 1) / s;
  instance.num_samples = checked_mul(blocks, s, "input length");
  instance.flop =
      checked_mul(checked_mul(num_dms, s, "flop count"), setup.channels, "flop count");
  return instance;
}

const std::vector<ObservationSetup>& builtin_setups() {
  // Field values as printed for the two telescopes; the reference frequency
  // of each setup is derived from f_min + (channels - 1) * channel_width.
  static const std::vector<ObservationSetup> setups = {
      ObservationSetup{"Apertif", 20000, 1024, 1420.0, 0.29, 0.0, 0.25},
      ObservationSetup{"LOFAR", 200000, 32, 138.0, 0.19, 0.0, 0.25},
  };
  return setups;
}

const ObservationSetup* find_builtin(std::string_view name) {
  for (const auto& setup : builtin_setups()) {
    if (setup.name == name) return &setup;
  }
  return nullptr;
}

ObservationSetup parse_setup_text(const std::string& text) {
  ObservationSetup setup;
  std::map<std::string, bool> seen = {
      {"name", false},          {"samples_per_second", false}, {"channels", false},
      {"f_min", false},         {"channel_width", false},      {"dm_first", false},
      {"dm_step", false},
  };

  std::istringstream stream(text);
  std::string line;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;

    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw format_error("setup line " + std::to_string(line_no) + " has no '='", line_offset);
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto key_end = key.find_last_not_of(" \t");
    key = key_end == std::string::npos ? "" : key.substr(0, key_end + 1);
    const auto value_begin = value.find_first_not_of(" \t");
    value = value_begin == std::string::npos ? "" : value.substr(value_begin);

    const auto it = seen.find(key);
    if (it == seen.end()) {
      throw format_error("unknown setup key '" + key + "'", line_offset);
    }
    if (it->second) {
      throw format_error("duplicate setup key '" + key + "'", line_offset);
    }
    it->second = true;

    try {
      if (key == "name") {
        setup.name = value;
      } else if (key == "samples_per_second") {
        setup.samples_per_second = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "channels") {
        setup.channels = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "f_min") {
        setup.f_min = std::stod(value);
      } else if (key == "channel_width") {
        setup.channel_width = std::stod(value);
      } else if (key == "dm_first") {
        setup.dm_first = std::stod(value);
      } else if (key == "dm_step") {
        setup.dm_step = std::stod(value);
      }
    } catch (const std::logic_error&) {
      throw format_error("bad value for setup key '" + key + "'", line_offset);
    }
  }

  for (const auto& [key, was_seen] : seen) {
    if (!was_seen) throw format_error("missing setup key '" + key + "'", offset);
  }
  try {
    setup.validate();
  } catch (const std::invalid_argument& e) {
    throw format_error(std::string("invalid setup: ") + e.what(), offset);
  }
  return setup;
}

ObservationSetup load_setup_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open setup file '" + path + "'", 0);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_setup_text(buffer.str());
}

ObservationSetup resolve_setup(const std::string& name_or_path) {
  if (const ObservationSetup* builtin = find_builtin(name_or_path)) return *builtin;
  return load_setup_file(name_or_path);
}

}  // namespace dedisp
