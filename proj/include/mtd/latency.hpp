#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtd/rng.hpp"

namespace mtd {

/// A delay environment: clipped-Normal total delay with optional
/// single-frame inference spikes.
struct LatencySetting {
  std::string name;
  double mean_total_ms = 0.0;
  double std_total_ms = 0.0;
  double preprocess_fraction = 0.125;
  double spike_prob = 0.0;
  double spike_magnitude_ms = 0.0;
  double floor_ms = 1.0;

  void validate() const;
  friend bool operator==(const LatencySetting&, const LatencySetting&) = default;
};

// Default spike model of the presets: rare one-frame inference hiccups.
inline constexpr double kPresetSpikeProb = 0.01;
inline constexpr double kPresetSpikeMagnitudeMs = 10.0;
inline constexpr double kPresetFloorMs = 5.0;

// The four delay environments: none, low, medium, high.
LatencySetting preset(std::string_view name);
const std::vector<std::string>& preset_names();

struct LatencySample {
  double preprocess_ms = 0.0;  // P_t
  double inference_ms = 0.0;   // I_t

  double total_ms() const { return preprocess_ms + inference_ms; }
  friend bool operator==(const LatencySample&, const LatencySample&) = default;
};

// Draws one frame's delays. Consumes exactly two normal/uniform draws per call
// regardless of the setting so that streams stay aligned across settings.
LatencySample sample(const LatencySetting& setting, Rng& rng);

struct LatencyTrace {
  std::vector<LatencySample> samples;
  std::string source;  // "synthetic(...)" or "file(<path>)"

  std::size_t size() const { return samples.size(); }
  double median_total_ms() const;
};

// Text format: header `# mtd-trace v1`, then `frame_index, preprocess_ms,
// inference_ms` per line with at most 3 fractional digits.
void write_trace(std::ostream& out, const LatencyTrace& trace);
LatencyTrace read_trace(std::istream& in, std::string_view source = "<stream>");
void save_trace(const std::filesystem::path& path, const LatencyTrace& trace);
LatencyTrace load_trace(const std::filesystem::path& path);

// Constant-latency trace with isolated single-frame inference spikes. Each
// frame has P = fraction * base and I = base - P, plus spike_ms on I at the
// listed indices.
LatencyTrace synth_spike_trace(int n, double base_ms, std::span<const int> spike_frames,
                               double spike_ms, double fraction = 0.125);

LatencyTrace synthetic_trace(const LatencySetting& setting, std::uint64_t seed, int n);

}  // namespace mtd
