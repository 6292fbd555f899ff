#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtd/latency.hpp"
#include "mtd/sap_eval.hpp"
#include "mtd/stream.hpp"
#include "mtd/timestep_router.hpp"
#include "mtd/world.hpp"

namespace mtd {

struct SpikeTraceSpec {
  int frames = 2000;
  double base_ms = 28.0;
  double spike_ms = 60.0;
  double fraction = 0.125;
  // Either an explicit index list or a period: spikes at offset, offset+every, ...
  std::vector<int> spikes;
  int every = 0;
  int offset = 0;

  std::vector<int> spike_frames() const;
  friend bool operator==(const SpikeTraceSpec&, const SpikeTraceSpec&) = default;
};

/// One entry of the `latency` list, kept declarative so configs round-trip.
struct LatencySpec {
  enum class Kind { kPreset, kSpikeTrace, kTraceFile };
  Kind kind = Kind::kPreset;
  std::string name;
  std::string preset;       // kPreset
  LatencySetting setting;   // kPreset, overrides applied
  SpikeTraceSpec spike;     // kSpikeTrace
  std::string trace_file;   // kTraceFile, relative to the config file
  bool cycle = false;       // kTraceFile

  friend bool operator==(const LatencySpec&, const LatencySpec&) = default;
};

struct ExperimentConfig {
  int version = 1;
  std::uint64_t world_seed = 7;
  WorldSpec world;
  HeadBankParams heads;
  std::vector<LatencySpec> latency;
  double tau = 1.0;
  std::optional<WarmupPolicy> warmup;
  std::vector<Policy> policies;
  std::vector<double> tau_grid;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  std::string format = "csv";
  // Directory relative trace paths resolve against; not serialized.
  std::filesystem::path base_dir;

  bool operator==(const ExperimentConfig& other) const;
};

// Evenly spaced grid from..to inclusive, snapped to 1e-9 so that decimal
// values such as 1.00 come out exact.
std::vector<double> make_grid(double from, double to, double step);

ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(std::string_view text, std::string_view source = "<config>");
std::string serialize_config(const ExperimentConfig& cfg);

World build_world(const ExperimentConfig& cfg);
HeadBank build_bank(const ExperimentConfig& cfg);
std::vector<LatencySource> build_sources(const ExperimentConfig& cfg);

struct ReportRow {
  std::string policy;
  std::string setting;
  std::string seed;  // seed value, or "mean" for summary rows
  EvalResult result;
  int total_frames = 0;
  // Summary rows only: exact means of the count columns.
  struct MeanCounts {
    double missed_timesteps = 0.0;
    double processed_frames = 0.0;
    double total_frames = 0.0;
  };
  std::optional<MeanCounts> mean_counts;
};

// Mean-over-seeds rows per (policy, setting), in first-appearance order.
std::vector<ReportRow> summarize(const std::vector<ReportRow>& rows);
// AP values x100 with one decimal; counts as integers, or one decimal on summary rows.
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

struct SimulateOutput {
  std::filesystem::path world_file;
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> runlogs;
};

// Writes world.txt, one run log per (setting, seed, policy) cell and
// manifest.txt into `out_dir`.
SimulateOutput cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// As cmd_simulate, with every cell's delays replayed from a trace file.
SimulateOutput cmd_replay(const ExperimentConfig& cfg, const std::filesystem::path& trace_path,
                          bool cycle, const std::filesystem::path& out_dir);

// Evaluates run logs against a world; writes report.csv with one row per log
// followed by mean-over-seeds summary rows.
std::vector<ReportRow> cmd_evaluate(const std::vector<std::filesystem::path>& runlogs,
                                    const World& world, const std::filesystem::path& out_dir);

// Run logs listed in a manifest written by cmd_simulate.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);

// tau_grid.csv: one row per tau, one miss-count column per setting and an
// argmin footer.
TauTable cmd_grid_search(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct CompareRow {
  std::string setting;
  std::string policy;
  int processed_frames = 0;  // summed over seeds
  int total_frames = 0;      // summed over seeds
  int missed_timesteps = 0;  // summed over seeds
  std::optional<double> decrease_percent;  // vs the first policy; empty for it
  EvalResult mean;           // seed-averaged
};

// compare.csv with miss counts, decrease percent against the first listed
// policy and the sAP family; per-frame series under series/.
std::vector<CompareRow> cmd_compare(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace mtd
