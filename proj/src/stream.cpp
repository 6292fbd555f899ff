#include "mtd/stream.hpp"

#include <fmt/format.h>

#include <cmath>

#include "mtd/errors.hpp"
#include "mtd/rng.hpp"
#include "text_record.hpp"

namespace mtd {

Policy Policy::parse(std::string_view text) {
  const auto t = detail::trim(text);
  auto argument = [&](std::string_view prefix) -> std::optional<std::string_view> {
    if (t.size() < prefix.size() + 2 || t.substr(0, prefix.size()) != prefix ||
        t[prefix.size()] != '(' || t.back() != ')') {
      return std::nullopt;
    }
    return t.substr(prefix.size() + 1, t.size() - prefix.size() - 2);
  };
  if (t == "mtd") return mtd();
  if (t == "dade") return dade();
  if (t == "oracle") return oracle();
  if (auto arg = argument("mtd")) {
    double tau = 0.0;
    if (!detail::parse_double(*arg, tau) || !(tau > 0.0)) {
      throw ConfigError("policy '" + std::string(t) + "': tau must be a positive number");
    }
    return mtd(tau);
  }
  if (auto arg = argument("static")) {
    long long k = 0;
    if (!detail::parse_int(*arg, k) || k < 1) {
      throw ConfigError("policy '" + std::string(t) + "': offset must be a positive integer");
    }
    return static_head(static_cast<int>(k));
  }
  throw ConfigError("unknown policy '" + std::string(t) + "'");
}

std::string Policy::name() const {
  switch (kind) {
    case Kind::kMtd: return fmt::format("mtd({})", tau);
    case Kind::kDade: return "dade";
    case Kind::kStatic: return fmt::format("static({})", static_offset);
    case Kind::kOracle: return "oracle";
  }
  return "?";
}

EstimatorId Policy::estimator() const {
  switch (kind) {
    case Kind::kMtd: return EstimatorId::kMtd;
    case Kind::kDade: return EstimatorId::kDade;
    case Kind::kStatic: return EstimatorId::kStatic;
    case Kind::kOracle: return EstimatorId::kOracle;
  }
  return EstimatorId::kMtd;
}

LatencySource LatencySource::from_setting(LatencySetting setting) {
  setting.validate();
  auto name = setting.name;
  return {std::move(name), std::move(setting), false};
}

LatencySource LatencySource::from_trace(std::string name, LatencyTrace trace, bool cycle) {
  if (trace.samples.empty()) throw ConfigError("latency trace '" + name + "' is empty");
  return {std::move(name), std::move(trace), cycle};
}

double LatencySource::typical_total_ms() const {
  if (const auto* s = std::get_if<LatencySetting>(&source)) return s->mean_total_ms;
  return std::get<LatencyTrace>(source).median_total_ms();
}

std::uint64_t latency_stream_seed(std::uint64_t seed, std::string_view setting) {
  return derive_seed(seed, fmt::format("latency:{}", setting));
}

std::uint64_t detection_stream_seed(std::uint64_t seed, std::string_view setting, int frame) {
  return derive_seed(seed, fmt::format("heads:{}", setting), static_cast<std::uint64_t>(frame));
}

namespace {

// Yields one latency sample per processed frame, in processing order.
class LatencyFeed {
 public:
  LatencyFeed(const LatencySource& src, std::uint64_t seed)
      : src_(src), rng_(latency_stream_seed(seed, src.name)) {}

  LatencySample next() {
    if (const auto* setting = std::get_if<LatencySetting>(&src_.source)) {
      return sample(*setting, rng_);
    }
    const auto& samples = std::get<LatencyTrace>(src_.source).samples;
    if (index_ >= samples.size()) {
      if (!src_.cycle) {
        throw ConfigError(fmt::format("latency trace '{}' exhausted after {} frames", src_.name,
                                      samples.size()));
      }
      index_ = 0;
    }
    return samples[index_++];
  }

 private:
  const LatencySource& src_;
  Rng rng_;
  std::size_t index_ = 0;
};

}  // namespace

RunLog run_stream(const World& world, const HeadBank& bank, const StreamConfig& cfg) {
  if (cfg.fps != world.fps() || cfg.duration_frames != world.duration_frames()) {
    throw ConfigError(fmt::format("stream config ({} fps, {} frames) does not match world ({} fps, {} frames)",
                                  cfg.fps, cfg.duration_frames, world.fps(), world.duration_frames()));
  }
  if (cfg.policy.kind == Policy::Kind::kStatic &&
      (cfg.policy.static_offset < 1 || cfg.policy.static_offset > bank.size())) {
    throw ConfigError(fmt::format("static head {} outside bank of {} heads", cfg.policy.static_offset,
                                  bank.size()));
  }
  if (const auto* s = std::get_if<LatencySetting>(&cfg.latency.source)) s->validate();

  TrendEstimatorConfig est_cfg;
  est_cfg.tau = cfg.policy.kind == Policy::Kind::kMtd ? cfg.policy.tau : 1.0;
  est_cfg.warmup = cfg.warmup.value_or(WarmupPolicy::assume_mean(cfg.latency.typical_total_ms()));
  est_cfg.validate();

  RunLog log;
  log.info = {cfg.policy.name(), cfg.latency.name, cfg.seed, world.fps(), world.duration_frames(),
              world.fingerprint()};

  const int frames = world.duration_frames();
  const double interval = world.frame_interval_ms();
  const double end_time = world.capture_time_ms(frames);
  LatencyFeed feed(cfg.latency, cfg.seed);
  std::vector<LatencySample> history;

  double now = 0.0;
  int last = -1;
  while (last + 1 < frames) {
    const double ready = std::max(now, world.capture_time_ms(last + 1));
    if (ready >= end_time) break;
    const int frame = world.current_frame_at(ready);

    EmittedOutput out;
    out.start_ms = ready;
    out.source_frame = frame;
    out.latency = feed.next();
    const double actual = actual_delay_trend(out.latency.preprocess_ms, out.latency.inference_ms);

    // Only P_t and the history are visible when the route is chosen.
    if (cfg.policy.kind == Policy::Kind::kOracle) {
      out.trend = {frame, actual, std::nullopt, EstimatorId::kOracle};
    } else {
      out.trend = estimate_for_frame(history, out.latency.preprocess_ms, est_cfg,
                                     cfg.policy.estimator(), frame);
    }

    Rng det_rng(detection_stream_seed(cfg.seed, cfg.latency.name, frame));
    if (cfg.policy.kind == Policy::Kind::kStatic) {
      out.decision.frame_index = frame;
      out.decision.estimated_n = target_timestep(out.trend.estimated_ms, interval);
      out.decision.chosen_offset = cfg.policy.static_offset;
      out.detections =
          simulate_head_detections(world, frame, bank.head(cfg.policy.static_offset), det_rng);
    } else {
      auto routed = route_and_detect(world, frame, bank, out.trend, interval, det_rng);
      out.decision = routed.decision;
      out.detections = std::move(routed.detections);
    }
    out.chosen_offset = out.decision.chosen_offset;
    out.trend.actual_ms = actual;
    out.decision.fill_actual(target_timestep(actual, interval));
    out.emit_time_ms = ready + out.latency.preprocess_ms + out.latency.inference_ms;

    if (out.emit_time_ms <= end_time) {
      ++log.processed_frames;
    } else {
      ++log.in_flight_frames;
    }
    history.push_back(out.latency);
    now = out.emit_time_ms;
    last = frame;
    log.outputs.push_back(std::move(out));
  }
  log.skipped_frames = frames - log.processed_frames - log.in_flight_frames;
  return log;
}

std::vector<RunLog> run_matrix(const World& world, const HeadBank& bank,
                               const std::vector<Policy>& policies,
                               const std::vector<LatencySource>& settings,
                               const std::vector<std::uint64_t>& seeds) {
  if (policies.empty() || settings.empty() || seeds.empty()) {
    throw ConfigError("run matrix needs at least one policy, setting and seed");
  }
  std::vector<RunLog> logs;
  logs.reserve(policies.size() * settings.size() * seeds.size());
  for (const auto& setting : settings) {
    for (const auto seed : seeds) {
      for (const auto& policy : policies) {
        StreamConfig cfg{policy, setting, seed, world.fps(), world.duration_frames(), std::nullopt};
        logs.push_back(run_stream(world, bank, cfg));
      }
    }
  }
  return logs;
}

}  // namespace mtd
