#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mtd/delay_analysis.hpp"
#include "mtd/latency.hpp"
#include "mtd/timestep_router.hpp"
#include "mtd/world.hpp"

namespace mtd {

/// How a run picks its detection head each frame.
struct Policy {
  enum class Kind { kMtd, kDade, kStatic, kOracle };
  Kind kind = Kind::kMtd;
  double tau = 1.0;        // kMtd only
  int static_offset = 1;   // kStatic only

  static Policy mtd(double tau = 1.0) { return {Kind::kMtd, tau, 1}; }
  static Policy dade() { return {Kind::kDade, 1.0, 1}; }
  static Policy static_head(int offset) { return {Kind::kStatic, 1.0, offset}; }
  static Policy oracle() { return {Kind::kOracle, 1.0, 1}; }

  // Canonical spellings: "mtd", "mtd(1.05)", "dade", "static(2)", "oracle".
  static Policy parse(std::string_view text);
  std::string name() const;
  EstimatorId estimator() const;

  friend bool operator==(const Policy&, const Policy&) = default;
};

/// Where per-frame delays come from: a parametric setting or a recorded trace.
struct LatencySource {
  std::string name;
  std::variant<LatencySetting, LatencyTrace> source;
  bool cycle = false;  // replay only: wrap around instead of failing when exhausted

  static LatencySource from_setting(LatencySetting setting);
  static LatencySource from_trace(std::string name, LatencyTrace trace, bool cycle = false);

  bool is_trace() const { return std::holds_alternative<LatencyTrace>(source); }
  // Warm-up assumption for the first frame: the setting's mean total delay,
  // or the median total delay of a trace.
  double typical_total_ms() const;
};

struct StreamConfig {
  Policy policy;
  LatencySource latency;
  std::uint64_t seed = 0;
  double fps = 30.0;
  int duration_frames = 0;
  // Defaults to assume_mean(latency.typical_total_ms()).
  std::optional<WarmupPolicy> warmup;
};

struct EmittedOutput {
  double start_ms = 0.0;
  double emit_time_ms = 0.0;
  int source_frame = 0;
  int chosen_offset = 1;
  LatencySample latency;
  TrendEstimate trend;
  TimestepDecision decision;
  std::vector<Detection> detections;

  friend bool operator==(const EmittedOutput&, const EmittedOutput&) = default;
};

struct RunInfo {
  std::string policy;
  std::string setting;
  std::uint64_t seed = 0;
  double fps = 30.0;
  int duration_frames = 0;
  std::uint64_t world_fingerprint = 0;

  friend bool operator==(const RunInfo&, const RunInfo&) = default;
};

struct RunLog {
  RunInfo info;
  std::vector<EmittedOutput> outputs;  // ordered by emit time
  int processed_frames = 0;            // emitted by the end of the stream
  int skipped_frames = 0;              // never picked up
  int in_flight_frames = 0;            // started, emitted after the stream ended

  double end_time_ms() const { return info.duration_frames * 1000.0 / info.fps; }
  friend bool operator==(const RunLog&, const RunLog&) = default;
};

// Per-cell random streams. Neither depends on the policy, so every policy in
// a (setting, seed) cell sees the same delays and the same detection noise.
std::uint64_t latency_stream_seed(std::uint64_t seed, std::string_view setting);
std::uint64_t detection_stream_seed(std::uint64_t seed, std::string_view setting, int frame);

// Streams `world` through a single detector on a virtual clock. When idle the
// detector takes the newest captured frame, waiting for the next capture if
// it has already handled the newest one; frames captured while busy are
// dropped.
RunLog run_stream(const World& world, const HeadBank& bank, const StreamConfig& cfg);

// Cartesian product setting x seed x policy, in that nesting order.
std::vector<RunLog> run_matrix(const World& world, const HeadBank& bank,
                               const std::vector<Policy>& policies,
                               const std::vector<LatencySource>& settings,
                               const std::vector<std::uint64_t>& seeds);

}  // namespace mtd
