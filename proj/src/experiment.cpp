#include "mtd/experiment.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mtd/errors.hpp"
#include "mtd/runlog_io.hpp"
#include "text_record.hpp"

namespace fs = std::filesystem;

namespace mtd {

std::vector<int> SpikeTraceSpec::spike_frames() const {
  if (!spikes.empty()) return spikes;
  std::vector<int> out;
  if (every > 0) {
    for (int i = offset; i < frames; i += every) out.push_back(i);
  }
  return out;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return version == o.version && world_seed == o.world_seed && world == o.world &&
         heads == o.heads && latency == o.latency && tau == o.tau && warmup == o.warmup &&
         policies == o.policies && tau_grid == o.tau_grid && seeds == o.seeds &&
         output_dir == o.output_dir && format == o.format;
}

std::vector<double> make_grid(double from, double to, double step) {
  if (!(step > 0.0) || to < from) throw ConfigError("grid needs step > 0 and to >= from");
  const auto n = static_cast<int>(std::floor((to - from) / step + 1e-9)) + 1;
  std::vector<double> grid;
  for (int i = 0; i < n; ++i) grid.push_back(std::round((from + step * i) * 1e9) / 1e9);
  return grid;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

class ConfigReader {
 public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    throw ParseError(source_, line_of(node), what);
  }

  int line_of(const YAML::Node& node) const {
    const auto mark = node.Mark();
    return mark.is_null() ? 0 : mark.line + 1;
  }

  void require_map(const YAML::Node& node, std::string_view ctx) const {
    if (!node.IsMap()) fail(node, fmt::format("'{}' must be a mapping", ctx));
  }

  void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                  std::string_view ctx) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(kv.first, ctx.empty() ? fmt::format("unknown key '{}'", key)
                                   : fmt::format("unknown key '{}' in '{}'", key, ctx));
      }
    }
  }

  template <typename T>
  T as(const YAML::Node& node, std::string_view key) const {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, fmt::format("key '{}' has the wrong type", key));
    }
  }

  template <typename T>
  void read(const YAML::Node& map, std::string_view key, T& out) const {
    if (const auto n = map[std::string(key)]) out = as<T>(n, key);
  }

  void read_range(const YAML::Node& map, std::string_view key, Range& out) const {
    if (const auto n = map[std::string(key)]) {
      if (!n.IsSequence() || n.size() != 2) fail(n, fmt::format("key '{}' must be [min, max]", key));
      out = {as<double>(n[0], key), as<double>(n[1], key)};
    }
  }

  void read_int_range(const YAML::Node& map, std::string_view key, IntRange& out) const {
    if (const auto n = map[std::string(key)]) {
      if (!n.IsSequence() || n.size() != 2) fail(n, fmt::format("key '{}' must be [min, max]", key));
      out = {as<int>(n[0], key), as<int>(n[1], key)};
    }
  }

  void read_ramp(const YAML::Node& map, std::string_view key, double& base, double& step) const {
    if (const auto n = map[std::string(key)]) {
      if (!n.IsSequence() || n.size() != 2) fail(n, fmt::format("key '{}' must be [base, step]", key));
      base = as<double>(n[0], key);
      step = as<double>(n[1], key);
    }
  }

  // Runs a semantic check and reports its failure at `node`.
  template <typename F>
  void validated(const YAML::Node& node, F&& f) const {
    try {
      f();
    } catch (const ConfigError& e) {
      fail(node, e.what());
    } catch (const DomainError& e) {
      fail(node, e.what());
    } catch (const RangeError& e) {
      fail(node, e.what());
    }
  }

 private:
  std::string source_;
};

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

void parse_world(const ConfigReader& r, const YAML::Node& node, ExperimentConfig& cfg) {
  r.require_map(node, "world");
  r.check_keys(node,
               {"seed", "fps", "duration_frames", "num_objects", "num_classes", "scene", "mixed_sizes",
                "small_side", "medium_side", "large_side", "speed", "max_size_rate", "lifetime",
                "first_spawn_frame"},
               "world");
  auto& w = cfg.world;
  r.read(node, "seed", cfg.world_seed);
  r.read(node, "fps", w.fps);
  r.read(node, "duration_frames", w.duration_frames);
  r.read(node, "num_objects", w.num_objects);
  r.read(node, "num_classes", w.num_classes);
  if (const auto scene = node["scene"]) {
    if (!scene.IsSequence() || scene.size() != 2) r.fail(scene, "key 'scene' must be [width, height]");
    w.scene_width = r.as<double>(scene[0], "scene");
    w.scene_height = r.as<double>(scene[1], "scene");
  }
  r.read(node, "mixed_sizes", w.mixed_sizes);
  r.read_range(node, "small_side", w.small_side);
  r.read_range(node, "medium_side", w.medium_side);
  r.read_range(node, "large_side", w.large_side);
  r.read_range(node, "speed", w.speed);
  r.read(node, "max_size_rate", w.max_size_rate);
  r.read_int_range(node, "lifetime", w.lifetime);
  r.read(node, "first_spawn_frame", w.first_spawn_frame);
  r.validated(node, [&] { w.validate(); });
}

void parse_heads(const ConfigReader& r, const YAML::Node& node, ExperimentConfig& cfg) {
  r.require_map(node, "heads");
  r.check_keys(node,
               {"count", "center_noise", "scale_noise", "miss_prob", "false_positive_rate",
                "base_score", "score_penalty"},
               "heads");
  auto& h = cfg.heads;
  r.read(node, "count", h.count);
  r.read_ramp(node, "center_noise", h.center_noise_base, h.center_noise_step);
  r.read_ramp(node, "scale_noise", h.scale_noise_base, h.scale_noise_step);
  r.read_ramp(node, "miss_prob", h.miss_prob_base, h.miss_prob_step);
  r.read(node, "false_positive_rate", h.false_positive_rate);
  r.read(node, "base_score", h.base_score);
  r.read(node, "score_penalty", h.score_penalty);
  r.validated(node, [&] { HeadBank::ramp(h); });
}

LatencySpec parse_latency_entry(const ConfigReader& r, const YAML::Node& node) {
  r.require_map(node, "latency entry");
  LatencySpec spec;
  if (node["preset"]) {
    r.check_keys(node,
                 {"preset", "name", "mean_ms", "std_ms", "preprocess_fraction", "spike_prob", "spike_ms",
                  "floor_ms"},
                 "latency");
    spec.kind = LatencySpec::Kind::kPreset;
    spec.preset = r.as<std::string>(node["preset"], "preset");
    r.validated(node["preset"], [&] { spec.setting = preset(spec.preset); });
    spec.name = spec.preset;
    r.read(node, "name", spec.name);
    auto& s = spec.setting;
    r.read(node, "mean_ms", s.mean_total_ms);
    r.read(node, "std_ms", s.std_total_ms);
    r.read(node, "preprocess_fraction", s.preprocess_fraction);
    r.read(node, "spike_prob", s.spike_prob);
    r.read(node, "spike_ms", s.spike_magnitude_ms);
    r.read(node, "floor_ms", s.floor_ms);
    s.name = spec.name;
    r.validated(node, [&] { s.validate(); });
  } else if (const auto st = node["spike_trace"]) {
    r.check_keys(node, {"spike_trace", "name"}, "latency");
    r.require_map(st, "spike_trace");
    r.check_keys(st, {"frames", "base_ms", "spike_ms", "fraction", "spikes", "every", "offset"},
                 "spike_trace");
    spec.kind = LatencySpec::Kind::kSpikeTrace;
    spec.name = "spikes";
    r.read(node, "name", spec.name);
    auto& sp = spec.spike;
    r.read(st, "frames", sp.frames);
    r.read(st, "base_ms", sp.base_ms);
    r.read(st, "spike_ms", sp.spike_ms);
    r.read(st, "fraction", sp.fraction);
    r.read(st, "spikes", sp.spikes);
    r.read(st, "every", sp.every);
    r.read(st, "offset", sp.offset);
    if (sp.every < 0 || sp.offset < 0) r.fail(st, "'every' and 'offset' must be non-negative");
    r.validated(st, [&] {
      const auto frames = sp.spike_frames();
      synth_spike_trace(sp.frames, sp.base_ms, frames, sp.spike_ms, sp.fraction);
    });
  } else if (const auto tf = node["trace_file"]) {
    r.check_keys(node, {"trace_file", "name", "cycle"}, "latency");
    spec.kind = LatencySpec::Kind::kTraceFile;
    spec.trace_file = r.as<std::string>(tf, "trace_file");
    spec.name = fs::path(spec.trace_file).stem().string();
    r.read(node, "name", spec.name);
    r.read(node, "cycle", spec.cycle);
  } else {
    r.fail(node, "latency entry needs one of 'preset', 'spike_trace' or 'trace_file'");
  }
  if (!valid_name(spec.name)) {
    r.fail(node, fmt::format("latency name '{}' may only use letters, digits, '_', '-', '.'", spec.name));
  }
  return spec;
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text, std::string_view source) {
  const ConfigReader r{std::string(source)};
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(std::string(source), e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ParseError(std::string(source), 1, "config must be a mapping");
  r.check_keys(root,
               {"version", "world", "heads", "latency", "tau", "warmup", "policies", "tau_grid", "seeds",
                "output"},
               "");

  ExperimentConfig cfg;
  if (!root["version"]) throw ParseError(std::string(source), 1, "missing key 'version'");
  cfg.version = r.as<int>(root["version"], "version");
  if (cfg.version != 1) r.fail(root["version"], fmt::format("unsupported config version {}", cfg.version));

  if (const auto n = root["world"]) parse_world(r, n, cfg);
  if (const auto n = root["heads"]) parse_heads(r, n, cfg);

  if (const auto n = root["tau"]) {
    cfg.tau = r.as<double>(n, "tau");
    if (!(cfg.tau > 0.0)) r.fail(n, fmt::format("key 'tau' must be positive, got {}", cfg.tau));
  }

  if (const auto n = root["warmup"]) {
    if (n.IsScalar() && n.Scalar() == "latest") {
      cfg.warmup = WarmupPolicy::use_latest();
    } else if (n.IsMap()) {
      r.check_keys(n, {"assume_mean"}, "warmup");
      if (!n["assume_mean"]) r.fail(n, "warmup mapping needs 'assume_mean'");
      const double v = r.as<double>(n["assume_mean"], "assume_mean");
      if (!(v > 0.0)) r.fail(n, "key 'assume_mean' must be positive");
      cfg.warmup = WarmupPolicy::assume_mean(v);
    } else {
      r.fail(n, "key 'warmup' must be 'latest' or {assume_mean: <ms>}");
    }
  }

  if (const auto n = root["latency"]) {
    if (!n.IsSequence() || n.size() == 0) r.fail(n, "key 'latency' must be a non-empty list");
    std::set<std::string> names;
    for (const auto& entry : n) {
      auto spec = parse_latency_entry(r, entry);
      if (!names.insert(spec.name).second) r.fail(entry, fmt::format("duplicate latency name '{}'", spec.name));
      cfg.latency.push_back(std::move(spec));
    }
  } else {
    for (const auto& name : preset_names()) {
      LatencySpec spec;
      spec.name = spec.preset = name;
      spec.setting = preset(name);
      cfg.latency.push_back(spec);
    }
  }

  if (const auto n = root["policies"]) {
    if (!n.IsSequence() || n.size() == 0) r.fail(n, "key 'policies' must be a non-empty list");
    for (const auto& p : n) {
      const auto text = r.as<std::string>(p, "policies");
      Policy policy;
      r.validated(p, [&] { policy = Policy::parse(text); });
      if (detail::trim(text) == "mtd") policy.tau = cfg.tau;
      cfg.policies.push_back(policy);
    }
  } else {
    cfg.policies = {Policy::mtd(cfg.tau), Policy::dade()};
  }
  for (const auto& p : cfg.policies) {
    if (p.kind == Policy::Kind::kStatic && p.static_offset > cfg.heads.count) {
      r.fail(root["policies"], fmt::format("policy '{}' needs more than {} heads", p.name(), cfg.heads.count));
    }
  }

  if (const auto n = root["tau_grid"]) {
    if (n.IsSequence()) {
      for (const auto& t : n) {
        const double v = r.as<double>(t, "tau_grid");
        if (!(v > 0.0)) r.fail(t, "tau_grid values must be positive");
        cfg.tau_grid.push_back(v);
      }
      if (cfg.tau_grid.empty()) r.fail(n, "key 'tau_grid' must not be empty");
    } else if (n.IsMap()) {
      r.check_keys(n, {"from", "to", "step"}, "tau_grid");
      if (!n["from"] || !n["to"] || !n["step"]) r.fail(n, "tau_grid needs 'from', 'to' and 'step'");
      const double from = r.as<double>(n["from"], "from");
      if (!(from > 0.0)) r.fail(n, "tau_grid values must be positive");
      r.validated(n, [&] {
        cfg.tau_grid = make_grid(from, r.as<double>(n["to"], "to"), r.as<double>(n["step"], "step"));
      });
    } else {
      r.fail(n, "key 'tau_grid' must be a list or {from, to, step}");
    }
  } else {
    cfg.tau_grid = make_grid(0.70, 1.30, 0.05);
  }

  if (const auto n = root["seeds"]) {
    if (!n.IsSequence() || n.size() == 0) r.fail(n, "key 'seeds' must be a non-empty list");
    for (const auto& s : n) cfg.seeds.push_back(r.as<std::uint64_t>(s, "seeds"));
  } else {
    cfg.seeds = {1};
  }

  if (const auto n = root["output"]) {
    r.require_map(n, "output");
    r.check_keys(n, {"dir", "format"}, "output");
    r.read(n, "dir", cfg.output_dir);
    r.read(n, "format", cfg.format);
    if (cfg.format != "csv") r.fail(n["format"], fmt::format("unsupported format '{}'", cfg.format));
  }
  return cfg;
}

ExperimentConfig parse_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config_text(ss.str(), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

namespace {

std::string num(double v) { return fmt::format("{}", v); }

void emit_pair(YAML::Emitter& e, const char* key, double a, double b) {
  e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << num(a) << num(b) << YAML::EndSeq;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "version" << YAML::Value << cfg.version;

  const auto& w = cfg.world;
  e << YAML::Key << "world" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "seed" << YAML::Value << cfg.world_seed;
  e << YAML::Key << "fps" << YAML::Value << num(w.fps);
  e << YAML::Key << "duration_frames" << YAML::Value << w.duration_frames;
  e << YAML::Key << "num_objects" << YAML::Value << w.num_objects;
  e << YAML::Key << "num_classes" << YAML::Value << w.num_classes;
  emit_pair(e, "scene", w.scene_width, w.scene_height);
  e << YAML::Key << "mixed_sizes" << YAML::Value << w.mixed_sizes;
  emit_pair(e, "small_side", w.small_side.min, w.small_side.max);
  emit_pair(e, "medium_side", w.medium_side.min, w.medium_side.max);
  emit_pair(e, "large_side", w.large_side.min, w.large_side.max);
  emit_pair(e, "speed", w.speed.min, w.speed.max);
  e << YAML::Key << "max_size_rate" << YAML::Value << num(w.max_size_rate);
  e << YAML::Key << "lifetime" << YAML::Value << YAML::Flow << YAML::BeginSeq << w.lifetime.min
    << w.lifetime.max << YAML::EndSeq;
  e << YAML::Key << "first_spawn_frame" << YAML::Value << w.first_spawn_frame;
  e << YAML::EndMap;

  const auto& h = cfg.heads;
  e << YAML::Key << "heads" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "count" << YAML::Value << h.count;
  emit_pair(e, "center_noise", h.center_noise_base, h.center_noise_step);
  emit_pair(e, "scale_noise", h.scale_noise_base, h.scale_noise_step);
  emit_pair(e, "miss_prob", h.miss_prob_base, h.miss_prob_step);
  e << YAML::Key << "false_positive_rate" << YAML::Value << num(h.false_positive_rate);
  e << YAML::Key << "base_score" << YAML::Value << num(h.base_score);
  e << YAML::Key << "score_penalty" << YAML::Value << num(h.score_penalty);
  e << YAML::EndMap;

  e << YAML::Key << "latency" << YAML::Value << YAML::BeginSeq;
  for (const auto& l : cfg.latency) {
    e << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << l.name;
    switch (l.kind) {
      case LatencySpec::Kind::kPreset: {
        const auto& s = l.setting;
        e << YAML::Key << "preset" << YAML::Value << l.preset;
        e << YAML::Key << "mean_ms" << YAML::Value << num(s.mean_total_ms);
        e << YAML::Key << "std_ms" << YAML::Value << num(s.std_total_ms);
        e << YAML::Key << "preprocess_fraction" << YAML::Value << num(s.preprocess_fraction);
        e << YAML::Key << "spike_prob" << YAML::Value << num(s.spike_prob);
        e << YAML::Key << "spike_ms" << YAML::Value << num(s.spike_magnitude_ms);
        e << YAML::Key << "floor_ms" << YAML::Value << num(s.floor_ms);
        break;
      }
      case LatencySpec::Kind::kSpikeTrace: {
        const auto& sp = l.spike;
        e << YAML::Key << "spike_trace" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << "frames" << YAML::Value << sp.frames;
        e << YAML::Key << "base_ms" << YAML::Value << num(sp.base_ms);
        e << YAML::Key << "spike_ms" << YAML::Value << num(sp.spike_ms);
        e << YAML::Key << "fraction" << YAML::Value << num(sp.fraction);
        if (!sp.spikes.empty()) {
          e << YAML::Key << "spikes" << YAML::Value << YAML::Flow << sp.spikes;
        }
        e << YAML::Key << "every" << YAML::Value << sp.every;
        e << YAML::Key << "offset" << YAML::Value << sp.offset;
        e << YAML::EndMap;
        break;
      }
      case LatencySpec::Kind::kTraceFile:
        e << YAML::Key << "trace_file" << YAML::Value << l.trace_file;
        e << YAML::Key << "cycle" << YAML::Value << l.cycle;
        break;
    }
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;

  e << YAML::Key << "tau" << YAML::Value << num(cfg.tau);
  if (cfg.warmup) {
    if (cfg.warmup->kind == WarmupPolicy::Kind::kUseLatest) {
      e << YAML::Key << "warmup" << YAML::Value << "latest";
    } else {
      e << YAML::Key << "warmup" << YAML::Value << YAML::BeginMap << YAML::Key << "assume_mean"
        << YAML::Value << num(cfg.warmup->value_ms) << YAML::EndMap;
    }
  }
  e << YAML::Key << "policies" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& p : cfg.policies) e << p.name();
  e << YAML::EndSeq;
  e << YAML::Key << "tau_grid" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double t : cfg.tau_grid) e << num(t);
  e << YAML::EndSeq;
  e << YAML::Key << "seeds" << YAML::Value << YAML::Flow << cfg.seeds;
  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dir" << YAML::Value << cfg.output_dir;
  e << YAML::Key << "format" << YAML::Value << cfg.format;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Builders

World build_world(const ExperimentConfig& cfg) { return gen_world(cfg.world_seed, cfg.world); }

HeadBank build_bank(const ExperimentConfig& cfg) { return HeadBank::ramp(cfg.heads); }

std::vector<LatencySource> build_sources(const ExperimentConfig& cfg) {
  std::vector<LatencySource> sources;
  for (const auto& l : cfg.latency) {
    switch (l.kind) {
      case LatencySpec::Kind::kPreset:
        sources.push_back(LatencySource::from_setting(l.setting));
        break;
      case LatencySpec::Kind::kSpikeTrace: {
        const auto& sp = l.spike;
        const auto frames = sp.spike_frames();
        sources.push_back(LatencySource::from_trace(
            l.name, synth_spike_trace(sp.frames, sp.base_ms, frames, sp.spike_ms, sp.fraction)));
        break;
      }
      case LatencySpec::Kind::kTraceFile: {
        const fs::path p = fs::path(l.trace_file).is_absolute() ? fs::path(l.trace_file)
                                                                : cfg.base_dir / l.trace_file;
        sources.push_back(LatencySource::from_trace(l.name, load_trace(p), l.cycle));
        break;
      }
    }
  }
  return sources;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string pct(double v) { return fmt::format("{:.1f}", v * 100.0); }

std::string file_token(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '(') {
      out += '-';
    } else if (c != ')') {
      out += c;
    }
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<ReportRow> summarize(const std::vector<ReportRow>& rows) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const ReportRow*>> groups;
  for (const auto& row : rows) {
    const auto key = std::make_pair(row.policy, row.setting);
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(&row);
  }
  std::vector<ReportRow> out;
  for (const auto& key : order) {
    const auto& members = groups[key];
    const double n = static_cast<double>(members.size());
    ReportRow mean{key.first, key.second, "mean", {}, 0, std::nullopt};
    auto& r = mean.result;
    double missed = 0.0;
    double processed = 0.0;
    double total = 0.0;
    for (const auto* m : members) {
      r.sap += m->result.sap / n;
      r.sap50 += m->result.sap50 / n;
      r.sap75 += m->result.sap75 / n;
      r.sap_s += m->result.sap_s / n;
      r.sap_m += m->result.sap_m / n;
      r.sap_l += m->result.sap_l / n;
      missed += m->result.missed_timesteps;
      processed += m->result.processed_frames;
      total += m->total_frames;
    }
    r.missed_timesteps = static_cast<int>(std::lround(missed / n));
    r.processed_frames = static_cast<int>(std::lround(processed / n));
    mean.total_frames = static_cast<int>(std::lround(total / n));
    mean.mean_counts = ReportRow::MeanCounts{missed / n, processed / n, total / n};
    out.push_back(mean);
  }
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "policy,setting,seed,sAP,sAP50,sAP75,sAP_S,sAP_M,sAP_L,missed_timesteps,processed_frames,total_frames\n";
  for (const auto& row : rows) {
    const auto& r = row.result;
    const auto counts = row.mean_counts
                            ? fmt::format("{:.1f},{:.1f},{:.1f}", row.mean_counts->missed_timesteps,
                                          row.mean_counts->processed_frames, row.mean_counts->total_frames)
                            : fmt::format("{},{},{}", r.missed_timesteps, r.processed_frames, row.total_frames);
    out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", row.policy, row.setting, row.seed, pct(r.sap),
                       pct(r.sap50), pct(r.sap75), pct(r.sap_s), pct(r.sap_m), pct(r.sap_l), counts);
  }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

SimulateOutput write_matrix(const World& world, const std::vector<RunLog>& logs, const fs::path& out_dir) {
  ensure_dir(out_dir);
  SimulateOutput result;
  result.world_file = out_dir / "world.txt";
  save_world(result.world_file, world);
  result.manifest = out_dir / "manifest.txt";
  auto manifest = open_out(result.manifest);
  manifest << "# mtd-manifest v1\n";
  manifest << "world file=world.txt\n";
  for (const auto& log : logs) {
    const auto name = fmt::format("runlog_{}_{}_s{}.txt", file_token(log.info.setting),
                                  file_token(log.info.policy), log.info.seed);
    save_runlog(out_dir / name, log);
    result.runlogs.push_back(out_dir / name);
    manifest << fmt::format("runlog file={} policy={} setting={} seed={}\n", name, log.info.policy,
                            log.info.setting, log.info.seed);
  }
  return result;
}

std::vector<RunLog> run_config_matrix(const ExperimentConfig& cfg, const World& world, const HeadBank& bank,
                                      const std::vector<LatencySource>& sources) {
  std::vector<RunLog> logs;
  for (const auto& setting : sources) {
    for (const auto seed : cfg.seeds) {
      for (const auto& policy : cfg.policies) {
        const StreamConfig sc{policy, setting, seed, world.fps(), world.duration_frames(), cfg.warmup};
        logs.push_back(run_stream(world, bank, sc));
      }
    }
  }
  return logs;
}

}  // namespace

SimulateOutput cmd_simulate(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const World world = build_world(cfg);
  const HeadBank bank = build_bank(cfg);
  return write_matrix(world, run_config_matrix(cfg, world, bank, build_sources(cfg)), out_dir);
}

SimulateOutput cmd_replay(const ExperimentConfig& cfg, const fs::path& trace_path, bool cycle,
                          const fs::path& out_dir) {
  const World world = build_world(cfg);
  const HeadBank bank = build_bank(cfg);
  auto name = trace_path.stem().string();
  if (!valid_name(name)) name = "replay";
  const std::vector<LatencySource> sources{LatencySource::from_trace(name, load_trace(trace_path), cycle)};
  return write_matrix(world, run_config_matrix(cfg, world, bank, sources), out_dir);
}

std::vector<fs::path> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + manifest.string());
  std::vector<fs::path> paths;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (!header) {
      if (text != "# mtd-manifest v1") throw ParseError(manifest.string(), lineno, "expected '# mtd-manifest v1'");
      header = true;
      continue;
    }
    const auto rec = detail::parse_record(text, manifest.string(), lineno);
    if (rec.kind == "runlog") paths.push_back(manifest.parent_path() / rec.get("file"));
  }
  if (!header) throw ParseError(manifest.string(), lineno, "empty manifest");
  return paths;
}

std::vector<ReportRow> cmd_evaluate(const std::vector<fs::path>& runlogs, const World& world,
                                    const fs::path& out_dir) {
  if (runlogs.empty()) throw ConfigError("no run logs to evaluate");
  std::vector<ReportRow> rows;
  for (const auto& path : runlogs) {
    const RunLog log = load_runlog(path);
    rows.push_back({log.info.policy, log.info.setting, std::to_string(log.info.seed), evaluate(log, world),
                    world.duration_frames(), std::nullopt});
  }
  auto all = rows;
  for (auto& s : summarize(rows)) all.push_back(std::move(s));
  ensure_dir(out_dir);
  auto out = open_out(out_dir / "report.csv");
  write_report_csv(out, all);
  return all;
}

TauTable cmd_grid_search(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const World world = build_world(cfg);
  const HeadBank bank = build_bank(cfg);
  const TauTable table = grid_search_tau(world, bank, build_sources(cfg), cfg.tau_grid, cfg.seeds);

  ensure_dir(out_dir);
  auto out = open_out(out_dir / "tau_grid.csv");
  out << "tau";
  for (const auto& s : table.settings) out << ',' << s;
  out << '\n';
  for (std::size_t i = 0; i < table.taus.size(); ++i) {
    out << fmt::format("{:.2f}", table.taus[i]);
    for (int m : table.misses[i]) out << ',' << m;
    out << '\n';
  }
  out << "argmin";
  for (std::size_t s = 0; s < table.settings.size(); ++s) {
    std::string cell;
    for (auto idx : table.argmin(s)) {
      if (!cell.empty()) cell += ';';
      cell += fmt::format("{:.2f}", table.taus[idx]);
    }
    out << ',' << cell;
  }
  out << '\n';
  out << "# missed timesteps summed over seeds " << fmt::format("{}", fmt::join(cfg.seeds, ";")) << '\n';
  out << "# reference hardware traces: minimum at tau=1.00 with 45/10/1162/2 misses (none/low/medium/high)\n";
  return table;
}

std::vector<CompareRow> cmd_compare(const ExperimentConfig& cfg, const fs::path& out_dir) {
  if (cfg.policies.size() < 2) throw ConfigError("compare needs at least two policies");
  const World world = build_world(cfg);
  const HeadBank bank = build_bank(cfg);
  const auto sources = build_sources(cfg);
  const auto logs = run_config_matrix(cfg, world, bank, sources);

  ensure_dir(out_dir / "series");
  std::vector<CompareRow> rows;
  std::size_t li = 0;
  for (const auto& setting : sources) {
    std::vector<CompareRow> block(cfg.policies.size());
    std::vector<std::vector<ReportRow>> per_policy(cfg.policies.size());
    for (const auto seed : cfg.seeds) {
      for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
        const RunLog& log = logs[li++];
        const auto r = evaluate(log, world);
        per_policy[p].push_back({log.info.policy, setting.name, std::to_string(seed), r, world.duration_frames(), std::nullopt});
        block[p].processed_frames += log.processed_frames;
        block[p].total_frames += world.duration_frames();
        block[p].missed_timesteps += r.missed_timesteps;

        auto series = open_out(out_dir / "series" /
                               fmt::format("{}_{}_s{}.csv", file_token(setting.name), file_token(log.info.policy), seed));
        series << "source_frame,start_ms,emit_ms,preprocess_ms,inference_ms,estimated_ms,actual_ms,n,m,offset,missed\n";
        for (const auto& o : log.outputs) {
          series << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", o.source_frame, o.start_ms, o.emit_time_ms,
                                o.latency.preprocess_ms, o.latency.inference_ms, o.trend.estimated_ms,
                                o.trend.actual_ms.value_or(0.0), o.decision.estimated_n,
                                o.decision.actual_m.value_or(-1), o.chosen_offset, o.decision.missed ? 1 : 0);
        }
      }
    }
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
      auto& row = block[p];
      row.setting = setting.name;
      row.policy = cfg.policies[p].name();
      row.mean = summarize(per_policy[p]).front().result;
      if (p > 0) {
        const int base = block[0].missed_timesteps;
        row.decrease_percent = base == 0 ? 0.0 : 100.0 * (base - row.missed_timesteps) / base;
      }
      rows.push_back(row);
    }
  }

  auto out = open_out(out_dir / "compare.csv");
  out << "setting,policy,processed_frames,missed_timesteps,decrease_percent,sAP,sAP50,sAP75,sAP_S,sAP_M,sAP_L\n";
  for (const auto& row : rows) {
    const auto& r = row.mean;
    out << fmt::format("{},{},{}/{},{},{},{},{},{},{},{},{}\n", row.setting, row.policy, row.processed_frames,
                       row.total_frames, row.missed_timesteps,
                       row.decrease_percent ? fmt::format("{:.1f}%", *row.decrease_percent) : std::string(),
                       pct(r.sap), pct(r.sap50), pct(r.sap75), pct(r.sap_s), pct(r.sap_m), pct(r.sap_l));
  }
  return rows;
}

}  // namespace mtd
