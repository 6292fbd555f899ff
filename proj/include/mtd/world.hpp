#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace mtd {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Axis-aligned box in scene coordinates (pixel-equivalent units).
struct Box2D {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {(x1 + x2) * 0.5, (y1 + y2) * 0.5}; }
  bool valid() const { return x1 < x2 && y1 < y2; }

  static Box2D from_center(Vec2 c, double w, double h) {
    return {c.x - w * 0.5, c.y - h * 0.5, c.x + w * 0.5, c.y + h * 0.5};
  }

  friend bool operator==(const Box2D&, const Box2D&) = default;
};

// COCO size classes. Boundary areas 32^2 and 96^2 belong to kMedium.
enum class AreaClass { kSmall, kMedium, kLarge };

inline constexpr double kSmallAreaLimit = 32.0 * 32.0;
inline constexpr double kLargeAreaLimit = 96.0 * 96.0;

AreaClass area_class(const Box2D& box);
std::string_view to_string(AreaClass cls);

// Advances a box by `frames` steps of constant center velocity and size rate.
// No clipping; composes additively in `frames`.
Box2D advance(const Box2D& box, Vec2 velocity, Vec2 size_rate, double frames);

// Intersection of a box with the scene; an empty intersection has zero area.
Box2D clip(const Box2D& box, const Box2D& bounds);

struct FrameSpan {
  int first = 0;
  int last = 0;

  bool contains(int frame) const { return frame >= first && frame <= last; }
  friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
};

struct TrackedObject {
  int object_id = 0;
  int class_id = 0;
  // Motion-model reference state at frame 0. For objects born later this is
  // the linear extrapolation back to frame 0 and may lie outside the scene.
  Box2D box_at_frame0;
  Vec2 velocity;   // units per frame
  Vec2 size_rate;  // width/height change per frame
  FrameSpan lifetime;

  Box2D box_at(int frame) const {
    return advance(box_at_frame0, velocity, size_rate, frame);
  }

  friend bool operator==(const TrackedObject&, const TrackedObject&) = default;
};

struct GtBox {
  int object_id = 0;
  int class_id = 0;
  Box2D box;

  friend bool operator==(const GtBox&, const GtBox&) = default;
};

struct FrameGT {
  int frame_index = 0;
  double capture_time_ms = 0.0;
  std::vector<GtBox> boxes;  // ordered by object_id
};

struct Range {
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const Range&, const Range&) = default;
};

struct IntRange {
  int min = 0;
  int max = 0;

  friend bool operator==(const IntRange&, const IntRange&) = default;
};

/// Parameters for synthetic world generation.
struct WorldSpec {
  double fps = 30.0;
  int duration_frames = 2000;
  int num_objects = 100;
  int num_classes = 3;
  double scene_width = 1280.0;
  double scene_height = 720.0;
  // Assign objects round-robin to the small/medium/large classes. Otherwise
  // every side length is drawn from `medium_side`.
  bool mixed_sizes = true;
  Range small_side{8.0, 28.0};
  Range medium_side{40.0, 90.0};
  Range large_side{110.0, 220.0};
  Range speed{0.5, 6.0};  // center speed, units per frame
  double max_size_rate = 0.0;
  IntRange lifetime{100, 400};
  // Earliest frame at which an object may appear.
  int first_spawn_frame = 0;

  void validate() const;
  friend bool operator==(const WorldSpec&, const WorldSpec&) = default;
};

/// Immutable synthetic scene. The inter-frame time is derived from fps.
class World {
 public:
  World(double fps, int duration_frames, Box2D scene_bounds, std::uint64_t seed,
        std::vector<TrackedObject> objects);

  double fps() const { return fps_; }
  int duration_frames() const { return duration_frames_; }
  const Box2D& scene_bounds() const { return bounds_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<TrackedObject>& objects() const { return objects_; }

  double frame_interval_ms() const { return 1000.0 / fps_; }
  // j * T, computed as j * 1000 / fps so integral instants stay exact.
  double capture_time_ms(int frame_index) const;

  FrameGT gt_at_frame(int frame_index) const;
  // Index of the most recently captured frame at `wall_ms`, clamped to the
  // stream. Capture instants map to their own frame.
  int current_frame_at(double wall_ms) const;

  // FNV-1a over the serialized form; identifies the world inside run logs.
  std::uint64_t fingerprint() const;

 private:
  double fps_;
  int duration_frames_;
  Box2D bounds_;
  std::uint64_t seed_;
  std::vector<TrackedObject> objects_;
};

World gen_world(std::uint64_t seed, const WorldSpec& spec);

// Line-delimited text: `# mtd-world v1`, a `world` header record, then one
// `object` record per tracked object. Numbers use shortest round-trip form.
void write_world(std::ostream& out, const World& world);
World read_world(std::istream& in, std::string_view source = "<stream>");
void save_world(const std::filesystem::path& path, const World& world);
World load_world(const std::filesystem::path& path);

}  // namespace mtd
