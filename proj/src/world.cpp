#include "mtd/world.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "mtd/errors.hpp"
#include "mtd/rng.hpp"
#include "text_record.hpp"

namespace mtd {

AreaClass area_class(const Box2D& box) {
  const double a = box.area();
  if (a < kSmallAreaLimit) return AreaClass::kSmall;
  if (a > kLargeAreaLimit) return AreaClass::kLarge;
  return AreaClass::kMedium;
}

std::string_view to_string(AreaClass cls) {
  switch (cls) {
    case AreaClass::kSmall: return "S";
    case AreaClass::kMedium: return "M";
    case AreaClass::kLarge: return "L";
  }
  return "?";
}

Box2D advance(const Box2D& box, Vec2 velocity, Vec2 size_rate, double frames) {
  const Vec2 c = box.center();
  return Box2D::from_center({c.x + velocity.x * frames, c.y + velocity.y * frames},
                            box.width() + size_rate.x * frames,
                            box.height() + size_rate.y * frames);
}

Box2D clip(const Box2D& box, const Box2D& bounds) {
  Box2D out{std::max(box.x1, bounds.x1), std::max(box.y1, bounds.y1),
            std::min(box.x2, bounds.x2), std::min(box.y2, bounds.y2)};
  if (!out.valid()) return {out.x1, out.y1, out.x1, out.y1};
  return out;
}

void WorldSpec::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid world spec: ") + what);
  };
  check(std::isfinite(fps) && fps > 0.0, "fps must be positive");
  check(duration_frames > 0, "duration_frames must be positive");
  check(num_objects >= 0, "num_objects must be non-negative");
  check(num_classes >= 1, "num_classes must be at least 1");
  check(scene_width > 0.0 && scene_height > 0.0, "scene bounds must be non-empty");
  for (const Range* r : {&small_side, &medium_side, &large_side}) {
    check(r->min > 0.0 && r->min <= r->max, "side ranges need 0 < min <= max");
  }
  check(small_side.max * small_side.max < kSmallAreaLimit,
        "small_side.max must keep boxes below 32^2");
  check(medium_side.min * medium_side.min >= kSmallAreaLimit &&
            medium_side.max * medium_side.max <= kLargeAreaLimit,
        "medium_side must keep boxes within [32^2, 96^2]");
  check(large_side.min * large_side.min > kLargeAreaLimit,
        "large_side.min must keep boxes above 96^2");
  check(large_side.max < scene_width && large_side.max < scene_height,
        "largest side must fit inside the scene");
  check(speed.min >= 0.0 && speed.min <= speed.max, "speed range needs 0 <= min <= max");
  check(max_size_rate >= 0.0, "max_size_rate must be non-negative");
  check(lifetime.min >= 1 && lifetime.min <= lifetime.max,
        "lifetime range needs 1 <= min <= max");
  check(first_spawn_frame >= 0 && first_spawn_frame < duration_frames,
        "first_spawn_frame must lie inside the stream");
}

World::World(double fps, int duration_frames, Box2D scene_bounds, std::uint64_t seed,
             std::vector<TrackedObject> objects)
    : fps_(fps),
      duration_frames_(duration_frames),
      bounds_(scene_bounds),
      seed_(seed),
      objects_(std::move(objects)) {
  if (!(std::isfinite(fps_) && fps_ > 0.0)) throw ConfigError("world fps must be positive");
  if (duration_frames_ <= 0) throw ConfigError("world duration must be positive");
  if (!bounds_.valid()) throw ConfigError("world scene bounds are empty");
  std::unordered_set<int> ids;
  for (const auto& obj : objects_) {
    if (!ids.insert(obj.object_id).second) {
      throw ConfigError(fmt::format("duplicate object id {}", obj.object_id));
    }
    const auto& life = obj.lifetime;
    if (life.first < 0 || life.first > life.last || life.last >= duration_frames_) {
      throw ConfigError(fmt::format("object {} has a lifetime outside the stream", obj.object_id));
    }
    // Extent is linear in the frame index, so both ends suffice.
    if (!obj.box_at(life.first).valid() || !obj.box_at(life.last).valid()) {
      throw ConfigError(fmt::format("object {} degenerates during its lifetime", obj.object_id));
    }
  }
  std::sort(objects_.begin(), objects_.end(),
            [](const auto& a, const auto& b) { return a.object_id < b.object_id; });
}

double World::capture_time_ms(int frame_index) const {
  return static_cast<double>(frame_index) * 1000.0 / fps_;
}

FrameGT World::gt_at_frame(int frame_index) const {
  if (frame_index < 0 || frame_index >= duration_frames_) {
    throw RangeError(fmt::format("frame {} outside [0, {})", frame_index, duration_frames_));
  }
  FrameGT gt;
  gt.frame_index = frame_index;
  gt.capture_time_ms = capture_time_ms(frame_index);
  for (const auto& obj : objects_) {
    if (!obj.lifetime.contains(frame_index)) continue;
    const Box2D b = clip(obj.box_at(frame_index), bounds_);
    if (b.valid()) gt.boxes.push_back({obj.object_id, obj.class_id, b});
  }
  return gt;
}

int World::current_frame_at(double wall_ms) const {
  if (!(wall_ms >= 0.0)) throw RangeError(fmt::format("negative wall time {}", wall_ms));
  const double q = wall_ms * fps_ / 1000.0;
  if (q >= static_cast<double>(duration_frames_)) return duration_frames_ - 1;
  auto n = static_cast<int>(std::floor(q));
  // Rounding in the division can land one off an exact capture instant.
  if (n + 1 < duration_frames_ && capture_time_ms(n + 1) <= wall_ms) ++n;
  if (n > 0 && capture_time_ms(n) > wall_ms) --n;
  return std::clamp(n, 0, duration_frames_ - 1);
}

std::uint64_t World::fingerprint() const {
  std::ostringstream os;
  write_world(os, *this);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

World gen_world(std::uint64_t seed, const WorldSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(seed, "world"));
  const Box2D bounds{0.0, 0.0, spec.scene_width, spec.scene_height};
  std::vector<TrackedObject> objects;
  objects.reserve(static_cast<std::size_t>(spec.num_objects));

  for (int i = 0; i < spec.num_objects; ++i) {
    const Range& side = !spec.mixed_sizes ? spec.medium_side
                        : i % 3 == 0      ? spec.small_side
                        : i % 3 == 1      ? spec.medium_side
                                          : spec.large_side;
    const double w = rng.uniform(side.min, side.max);
    const double h = rng.uniform(side.min, side.max);
    const int class_id = rng.uniform_int(0, spec.num_classes - 1);

    const int first = rng.uniform_int(spec.first_spawn_frame, spec.duration_frames - 1);
    const int length = rng.uniform_int(spec.lifetime.min, spec.lifetime.max);
    const int last = std::min(spec.duration_frames - 1, first + length - 1);

    const Vec2 center{rng.uniform(w * 0.5, spec.scene_width - w * 0.5),
                      rng.uniform(h * 0.5, spec.scene_height - h * 0.5)};
    const double speed = rng.uniform(spec.speed.min, spec.speed.max);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec2 velocity{speed * std::cos(heading), speed * std::sin(heading)};

    Vec2 size_rate{rng.uniform(-1.0, 1.0) * spec.max_size_rate,
                   rng.uniform(-1.0, 1.0) * spec.max_size_rate};
    // Keep the extrapolated extent positive from frame 0 through `last`.
    auto positive = [&](double extent, double rate) {
      return extent - rate * first > 1.0 && extent + rate * (last - first) > 1.0;
    };
    if (!positive(w, size_rate.x) || !positive(h, size_rate.y)) size_rate = {};

    const Box2D at_first = Box2D::from_center(center, w, h);
    objects.push_back({i, class_id, advance(at_first, velocity, size_rate, -first), velocity,
                       size_rate, {first, last}});
  }
  return World(spec.fps, spec.duration_frames, bounds, seed, std::move(objects));
}

void write_world(std::ostream& out, const World& world) {
  const auto& b = world.scene_bounds();
  out << "# mtd-world v1\n";
  out << fmt::format("world fps={} duration={} bounds={},{},{},{} seed={}\n", world.fps(),
                     world.duration_frames(), b.x1, b.y1, b.x2, b.y2, world.seed());
  for (const auto& o : world.objects()) {
    const auto& x = o.box_at_frame0;
    out << fmt::format(
        "object id={} class={} box={},{},{},{} vel={},{} size_rate={},{} life={},{}\n",
        o.object_id, o.class_id, x.x1, x.y1, x.x2, x.y2, o.velocity.x, o.velocity.y,
        o.size_rate.x, o.size_rate.y, o.lifetime.first, o.lifetime.last);
  }
}

World read_world(std::istream& in, std::string_view source) {
  std::string line;
  int lineno = 0;
  bool header = false;
  bool have_world = false;
  double fps = 0.0;
  int duration = 0;
  Box2D bounds;
  std::uint64_t seed = 0;
  std::vector<TrackedObject> objects;

  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (!header) {
      if (text != "# mtd-world v1") {
        throw ParseError(std::string(source), lineno, "expected header '# mtd-world v1'");
      }
      header = true;
      continue;
    }
    if (text.front() == '#') continue;
    const auto rec = detail::parse_record(text, source, lineno);
    if (rec.kind == "world") {
      fps = rec.get_double("fps");
      duration = static_cast<int>(rec.get_int("duration"));
      const auto v = rec.get_doubles("bounds", 4);
      bounds = {v[0], v[1], v[2], v[3]};
      const auto& s = rec.get("seed");
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
      if (ec != std::errc() || ptr != s.data() + s.size()) rec.fail("field 'seed' is not a seed");
      have_world = true;
    } else if (rec.kind == "object") {
      TrackedObject o;
      o.object_id = static_cast<int>(rec.get_int("id"));
      o.class_id = static_cast<int>(rec.get_int("class"));
      const auto box = rec.get_doubles("box", 4);
      o.box_at_frame0 = {box[0], box[1], box[2], box[3]};
      const auto vel = rec.get_doubles("vel", 2);
      o.velocity = {vel[0], vel[1]};
      const auto sr = rec.get_doubles("size_rate", 2);
      o.size_rate = {sr[0], sr[1]};
      const auto life = rec.get_doubles("life", 2);
      o.lifetime = {static_cast<int>(life[0]), static_cast<int>(life[1])};
      objects.push_back(o);
    } else {
      rec.fail("unknown record kind '" + rec.kind + "'");
    }
  }
  if (!header) throw ParseError(std::string(source), lineno, "empty world file");
  if (!have_world) throw ParseError(std::string(source), lineno, "missing world record");
  return World(fps, duration, bounds, seed, std::move(objects));
}

void save_world(const std::filesystem::path& path, const World& world) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_world(out, world);
}

World load_world(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_world(in, path.string());
}

}  // namespace mtd
