#include "mtd/latency.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mtd/errors.hpp"
#include "text_record.hpp"

namespace mtd {

void LatencySetting::validate() const {
  auto check = [this](bool ok, const char* what) {
    if (!ok) throw ConfigError("latency setting '" + name + "': " + what);
  };
  check(std::isfinite(mean_total_ms) && std::isfinite(std_total_ms), "non-finite parameters");
  check(floor_ms > 0.0, "floor_ms must be positive");
  check(mean_total_ms > floor_ms, "mean_total_ms must exceed floor_ms");
  check(std_total_ms >= 0.0, "std_total_ms must be non-negative");
  check(preprocess_fraction > 0.0 && preprocess_fraction < 1.0,
        "preprocess_fraction must lie in (0, 1)");
  check(spike_prob >= 0.0 && spike_prob <= 1.0, "spike_prob must lie in [0, 1]");
  check(spike_magnitude_ms >= 0.0, "spike_magnitude_ms must be non-negative");
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"none", "low", "medium", "high"};
  return names;
}

LatencySetting preset(std::string_view name) {
  // Mean and standard deviation of total per-frame delay, in milliseconds.
  struct Row {
    std::string_view name;
    double mean;
    double stddev;
  };
  static constexpr Row kRows[] = {
      {"none", 28.1, 2.1},
      {"low", 59.5, 3.24},
      {"medium", 68.7, 4.46},
      {"high", 89.8, 3.23},
  };
  for (const auto& row : kRows) {
    if (row.name == name) {
      return {std::string(row.name), row.mean, row.stddev, 0.125,
              kPresetSpikeProb, kPresetSpikeMagnitudeMs, kPresetFloorMs};
    }
  }
  throw ConfigError("unknown latency preset '" + std::string(name) + "'");
}

LatencySample sample(const LatencySetting& setting, Rng& rng) {
  const double z = rng.normal();
  const double u = rng.uniform();
  const double base = std::max(setting.floor_ms, setting.mean_total_ms + setting.std_total_ms * z);
  const double spike = u < setting.spike_prob ? setting.spike_magnitude_ms : 0.0;
  const double pre = setting.preprocess_fraction * base;
  return {pre, base - pre + spike};
}

double LatencyTrace::median_total_ms() const {
  if (samples.empty()) return 0.0;
  std::vector<double> totals;
  totals.reserve(samples.size());
  for (const auto& s : samples) totals.push_back(s.total_ms());
  std::sort(totals.begin(), totals.end());
  const auto mid = totals.size() / 2;
  return totals.size() % 2 == 1 ? totals[mid] : 0.5 * (totals[mid - 1] + totals[mid]);
}

namespace {

std::string format_ms(double v) {
  auto s = fmt::format("{:.3f}", v);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

void write_trace(std::ostream& out, const LatencyTrace& trace) {
  out << "# mtd-trace v1\n";
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const auto& s = trace.samples[i];
    out << i << ", " << format_ms(s.preprocess_ms) << ", " << format_ms(s.inference_ms) << '\n';
  }
}

LatencyTrace read_trace(std::istream& in, std::string_view source) {
  const std::string src(source);
  LatencyTrace trace;
  trace.source = "file(" + src + ")";
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (!header) {
      if (text != "# mtd-trace v1") throw ParseError(src, lineno, "expected header '# mtd-trace v1'");
      header = true;
      continue;
    }
    if (text.front() == '#') continue;
    const auto parts = detail::split(text, ',');
    if (parts.size() != 3) throw ParseError(src, lineno, "expected 'frame_index, preprocess_ms, inference_ms'");
    long long index = 0;
    if (!detail::parse_int(parts[0], index)) throw ParseError(src, lineno, "frame_index is not an integer");
    if (index != static_cast<long long>(trace.samples.size())) {
      throw ParseError(src, lineno, fmt::format("frame_index {} out of sequence", index));
    }
    LatencySample s;
    if (!detail::parse_double(parts[1], s.preprocess_ms)) throw ParseError(src, lineno, "preprocess_ms is not a number");
    if (!detail::parse_double(parts[2], s.inference_ms)) throw ParseError(src, lineno, "inference_ms is not a number");
    if (s.preprocess_ms <= 0.0) throw ParseError(src, lineno, "preprocess_ms must be positive");
    if (s.inference_ms <= 0.0) throw ParseError(src, lineno, "inference_ms must be positive");
    trace.samples.push_back(s);
  }
  if (!header) throw ParseError(src, lineno, "empty trace file");
  return trace;
}

void save_trace(const std::filesystem::path& path, const LatencyTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_trace(out, trace);
}

LatencyTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_trace(in, path.string());
}

LatencyTrace synth_spike_trace(int n, double base_ms, std::span<const int> spike_frames,
                               double spike_ms, double fraction) {
  if (n < 0) throw RangeError("trace length must be non-negative");
  if (!(base_ms > 0.0) || !(fraction > 0.0 && fraction < 1.0) || spike_ms < 0.0) {
    throw DomainError("spike trace needs base > 0, fraction in (0,1), spike >= 0");
  }
  const double pre = fraction * base_ms;
  LatencyTrace trace;
  trace.source = fmt::format("synthetic(spikes,n={},base={},spike={})", n, base_ms, spike_ms);
  trace.samples.assign(static_cast<std::size_t>(n), {pre, base_ms - pre});
  for (int idx : spike_frames) {
    if (idx < 0 || idx >= n) throw RangeError(fmt::format("spike index {} outside [0, {})", idx, n));
    trace.samples[static_cast<std::size_t>(idx)].inference_ms = base_ms - pre + spike_ms;
  }
  return trace;
}

LatencyTrace synthetic_trace(const LatencySetting& setting, std::uint64_t seed, int n) {
  setting.validate();
  Rng rng(seed);
  LatencyTrace trace;
  trace.source = fmt::format("synthetic({},seed={})", setting.name, seed);
  trace.samples.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) trace.samples.push_back(sample(setting, rng));
  return trace;
}

}  // namespace mtd
