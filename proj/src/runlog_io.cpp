#include "mtd/runlog_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "mtd/errors.hpp"
#include "text_record.hpp"

namespace mtd {

namespace {

std::string format_detections(const std::vector<Detection>& dets) {
  std::string s;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto& d = dets[i];
    if (i > 0) s += ';';
    s += fmt::format("{}:{},{},{},{},{}", d.class_id, d.box.x1, d.box.y1, d.box.x2, d.box.y2, d.score);
  }
  return s;
}

std::vector<Detection> parse_detections(const detail::Record& rec) {
  std::vector<Detection> dets;
  const auto& text = rec.get("dets");
  if (text.empty()) return dets;
  for (auto item : detail::split(text, ';')) {
    const auto colon = item.find(':');
    long long cls = 0;
    if (colon == std::string_view::npos || !detail::parse_int(item.substr(0, colon), cls)) {
      rec.fail("malformed detection '" + std::string(item) + "'");
    }
    const auto nums = detail::split(item.substr(colon + 1), ',');
    double v[5];
    if (nums.size() != 5) rec.fail("detection needs x1,y1,x2,y2,score");
    for (int i = 0; i < 5; ++i) {
      if (!detail::parse_double(nums[i], v[i])) rec.fail("detection has a non-numeric field");
    }
    dets.push_back({static_cast<int>(cls), {v[0], v[1], v[2], v[3]}, v[4]});
  }
  return dets;
}

std::uint64_t parse_u64(const detail::Record& rec, std::string_view key, int base) {
  const auto& s = rec.get(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    rec.fail("field '" + std::string(key) + "' is not an unsigned integer");
  }
  return v;
}

}  // namespace

void write_runlog(std::ostream& out, const RunLog& log) {
  const auto& info = log.info;
  out << "# mtd-runlog v1\n";
  out << fmt::format("run policy={} setting={} seed={} fps={} duration={} world={:016x}\n", info.policy,
                     info.setting, info.seed, info.fps, info.duration_frames, info.world_fingerprint);
  for (const auto& o : log.outputs) {
    const auto& d = o.decision;
    out << fmt::format(
        "out start={} emit={} src={} off={} P={} I={} est={} D={} AD={} n={} m={} missed={} dets={}\n",
        o.start_ms, o.emit_time_ms, o.source_frame, o.chosen_offset, o.latency.preprocess_ms,
        o.latency.inference_ms, to_string(o.trend.estimator), o.trend.estimated_ms,
        o.trend.actual_ms ? fmt::format("{}", *o.trend.actual_ms) : std::string("-"), d.estimated_n,
        d.actual_m ? fmt::format("{}", *d.actual_m) : std::string("-"), d.missed ? 1 : 0,
        format_detections(o.detections));
  }
  out << fmt::format("summary processed={} skipped={} inflight={}\n", log.processed_frames,
                     log.skipped_frames, log.in_flight_frames);
}

RunLog read_runlog(std::istream& in, std::string_view source) {
  const std::string src(source);
  RunLog log;
  std::string line;
  int lineno = 0;
  bool header = false;
  bool have_run = false;
  bool have_summary = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (!header) {
      if (text != "# mtd-runlog v1") throw ParseError(src, lineno, "expected header '# mtd-runlog v1'");
      header = true;
      continue;
    }
    if (text.front() == '#') continue;
    const auto rec = detail::parse_record(text, src, lineno);
    if (have_summary) rec.fail("record after summary");
    if (rec.kind == "run") {
      auto& info = log.info;
      info.policy = rec.get("policy");
      info.setting = rec.get("setting");
      info.seed = parse_u64(rec, "seed", 10);
      info.fps = rec.get_double("fps");
      info.duration_frames = static_cast<int>(rec.get_int("duration"));
      info.world_fingerprint = parse_u64(rec, "world", 16);
      have_run = true;
    } else if (rec.kind == "out") {
      if (!have_run) rec.fail("output before run record");
      EmittedOutput o;
      o.start_ms = rec.get_double("start");
      o.emit_time_ms = rec.get_double("emit");
      o.source_frame = static_cast<int>(rec.get_int("src"));
      o.chosen_offset = static_cast<int>(rec.get_int("off"));
      o.latency = {rec.get_double("P"), rec.get_double("I")};
      try {
        o.trend.estimator = estimator_from_string(rec.get("est"));
      } catch (const ConfigError& e) {
        rec.fail(e.what());
      }
      o.trend.frame_index = o.source_frame;
      o.trend.estimated_ms = rec.get_double("D");
      if (rec.get("AD") != "-") o.trend.actual_ms = rec.get_double("AD");
      o.decision.frame_index = o.source_frame;
      o.decision.estimated_n = static_cast<int>(rec.get_int("n"));
      o.decision.chosen_offset = o.chosen_offset;
      if (rec.get("m") != "-") o.decision.actual_m = static_cast<int>(rec.get_int("m"));
      o.decision.missed = rec.get_int("missed") != 0;
      o.detections = parse_detections(rec);
      log.outputs.push_back(std::move(o));
    } else if (rec.kind == "summary") {
      log.processed_frames = static_cast<int>(rec.get_int("processed"));
      log.skipped_frames = static_cast<int>(rec.get_int("skipped"));
      log.in_flight_frames = static_cast<int>(rec.get_int("inflight"));
      have_summary = true;
    } else {
      rec.fail("unknown record kind '" + rec.kind + "'");
    }
  }
  if (!header) throw ParseError(src, lineno, "empty run log");
  if (!have_run || !have_summary) throw ParseError(src, lineno, "truncated run log");
  return log;
}

void save_runlog(const std::filesystem::path& path, const RunLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_runlog(out, log);
}

RunLog load_runlog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_runlog(in, path.string());
}

}  // namespace mtd
