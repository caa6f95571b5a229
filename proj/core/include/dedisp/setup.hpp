#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dedisp {

/// One observational configuration: band geometry, sampling rate, and the
/// trial-DM grid. Channel i is centered at f_min + i * channel_width, so the
/// highest (reference) frequency is the center of channel channels-1.
/// Immutable once constructed; safe to share across threads.
struct ObservationSetup {
  std::string name;
  std::uint32_t samples_per_second = 0;
  std::uint32_t channels = 0;
  double f_min = 0.0;          // MHz, center frequency of channel 0
  double channel_width = 0.0;  // MHz, spacing between channel centers
  double dm_first = 0.0;       // pc/cm^3, first trial DM
  double dm_step = 0.0;        // pc/cm^3, increment between trials

  double channel_frequency(std::uint32_t channel) const {
    return f_min + static_cast<double>(channel) * channel_width;
  }
  double highest_frequency() const { return channel_frequency(channels - 1); }
  double trial_dm(std::uint32_t dm_index) const {
    return dm_first + static_cast<double>(dm_index) * dm_step;
  }

  /// Throws std::invalid_argument if any field is out of range.
  void validate() const;
};

/// Integer sample shifts for every (channel, trial DM) pair, precomputed from
/// the dispersion delay relative to the highest-frequency channel. Shifts are
/// non-increasing in channel index and non-decreasing in DM index; the last
/// channel always has shift zero.
struct DelayTable {
  ObservationSetup setup;
  std::uint32_t num_dms = 0;
  std::vector<std::uint32_t> shifts;  // num_dms x channels, DM-major
  std::uint32_t max_delay = 0;        // maximum entry, in samples

  std::uint32_t at(std::uint32_t channel, std::uint32_t dm) const {
    return shifts[static_cast<std::size_t>(dm) * setup.channels + channel];
  }
  const std::uint32_t* row(std::uint32_t dm) const {
    return shifts.data() + static_cast<std::size_t>(dm) * setup.channels;
  }
};

/// Problem geometry for one input instance (a trial-DM count). num_samples is
/// the per-channel input length needed to produce one second of output at the
/// largest delay; flop is the total number of single-precision additions.
struct ProblemInstance {
  ObservationSetup setup;
  std::uint32_t num_dms = 0;
  std::uint64_t num_samples = 0;  // multiple of samples_per_second
  std::uint64_t flop = 0;
  std::uint32_t max_delay = 0;
};

inline constexpr std::uint64_t kDefaultDelayTableCapBytes = std::uint64_t{1} << 30;

/// Dispersion delay in seconds of a frequency component relative to the
/// highest frequency, for one trial DM. Frequencies in MHz, computed in
/// double precision. Throws std::invalid_argument on negative or non-finite
/// inputs, or when f_channel_mhz > f_highest_mhz.
double delay_seconds(double dm, double f_channel_mhz, double f_highest_mhz);

/// Precomputes the shift table for num_dms trials of `setup`. Each entry is
/// delay_seconds(...) * samples_per_second rounded half away from zero.
/// Throws capacity_error when the table would exceed memory_cap_bytes.
DelayTable build_delay_table(const ObservationSetup& setup, std::uint32_t num_dms,
                             std::uint64_t memory_cap_bytes = kDefaultDelayTableCapBytes);

/// All-zero table of the same shape: every trial behaves like DM 0, so no
/// sample is shifted and reuse across trials is total.
DelayTable build_zero_delay_table(const ObservationSetup& setup, std::uint32_t num_dms,
                                  std::uint64_t memory_cap_bytes = kDefaultDelayTableCapBytes);

/// Sizing for one instance: input length, total additions, peak shift.
/// Throws capacity_error when the arithmetic overflows 64 bits.
ProblemInstance instance_sizing(const ObservationSetup& setup, std::uint32_t num_dms);

/// The two built-in telescope setups (Apertif, LOFAR).
const std::vector<ObservationSetup>& builtin_setups();

/// Built-in setup by name (case-sensitive); nullptr when absent.
const ObservationSetup* find_builtin(std::string_view name);

/// Parses a plain-text key=value setup description. Keys are exactly the
/// ObservationSetup field names; '#' starts a comment. Throws format_error.
ObservationSetup parse_setup_text(const std::string& text);

/// Loads a setup from a key=value file. Throws format_error.
ObservationSetup load_setup_file(const std::string& path);

/// Resolves a --setup argument: built-in name first, then file path.
ObservationSetup resolve_setup(const std::string& name_or_path);

}  // namespace dedisp
