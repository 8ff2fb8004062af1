#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfftrack {

/// Raised for malformed input values (bad indices, empty poses, NaN coordinates).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

double dot(Vec2 a, Vec2 b);
double norm(Vec2 a);

/// Index of a joint class, validated against the skeleton's joint count.
class JointId {
public:
    JointId(int index, int joint_count);

    int index() const { return index_; }
    operator int() const { return index_; }

private:
    int index_;
};

/// A detected or annotated 2D body joint in image pixel coordinates.
struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double confidence = 1.0;

    Keypoint() = default;
    Keypoint(double x, double y, double confidence = 1.0);

    Vec2 position() const { return {x, y}; }
    friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// One person in one frame. Absent joints are std::nullopt.
///
/// `id` carries the persistent ground-truth identity for annotations and is
/// empty for raw detections.
struct Pose {
    std::vector<std::optional<Keypoint>> joints;
    std::optional<int> id;

    Pose() = default;
    explicit Pose(std::size_t joint_count) : joints(joint_count) {}

    std::size_t joint_count() const { return joints.size(); }
    std::size_t present_count() const;
    bool empty() const { return present_count() == 0; }
    bool has(std::size_t j) const { return j < joints.size() && joints[j].has_value(); }
    const Keypoint& at(std::size_t j) const;

    friend bool operator==(const Pose&, const Pose&) = default;
};

struct FramePoses {
    int index = 0;
    std::vector<Pose> poses;

    friend bool operator==(const FramePoses&, const FramePoses&) = default;
};

/// Rejects poses without any joint and checks strictly increasing frame indices.
void validate_frames(const std::vector<FramePoses>& frames, std::size_t joint_count);

struct TrackEntry {
    int frame = 0;
    Pose pose;

    friend bool operator==(const TrackEntry&, const TrackEntry&) = default;
};

struct Track {
    int id = 0;
    int birth_frame = 0;
    std::vector<TrackEntry> entries;

    std::size_t length() const { return entries.size(); }
    int last_frame() const { return entries.back().frame; }
    const Pose& last_pose() const { return entries.back().pose; }
    const Pose* pose_at(int frame) const;

    friend bool operator==(const Track&, const Track&) = default;
};

class TrackSet {
public:
    TrackSet() = default;

    const std::vector<Track>& tracks() const { return tracks_; }
    int next_id() const { return next_id_; }
    std::size_t size() const { return tracks_.size(); }
    bool empty() const { return tracks_.empty(); }

    /// Starts a new track with a fresh id and returns that id.
    int start(int frame, Pose pose);
    void extend(std::size_t track_index, int frame, Pose pose);

    /// Adds a track with an explicit id (used by readers). Throws on duplicates.
    void insert(Track track);
    void keep_if(const std::function<bool(const Track&)>& predicate);
    /// Raises next_id to at least `next`.
    void reserve_ids(int next);

    /// Indices of tracks whose last entry is at `frame`.
    std::vector<std::size_t> alive_at(int frame) const;

    /// Throws std::logic_error if ids collide or next_id is not past every id.
    void check_invariants() const;

    friend bool operator==(const TrackSet&, const TrackSet&) = default;

private:
    std::vector<Track> tracks_;
    int next_id_ = 0;
};

/// Joint layout and evaluation constants for a skeleton.
struct SkeletonConfig {
    std::vector<std::string> joint_names;
    std::pair<int, int> head_pair{0, 0};
    std::vector<double> oks_kappas;

    std::size_t joint_count() const { return joint_names.size(); }
    void validate() const;

    /// 15-joint PoseTrack layout: head pair (head_top, neck), COCO falloffs.
    static SkeletonConfig posetrack15();

    friend bool operator==(const SkeletonConfig&, const SkeletonConfig&) = default;
};

struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Axis-aligned hull of the present joints, padded on every side by
/// `pad_fraction * max(width, height)`.
BBox pose_bbox(const Pose& pose, double pad_fraction = 0.0);

struct Displacement {
    Vec2 direction;  // unit length, or (0,0) for zero motion
    double length = 0.0;
};

Displacement joint_displacement(const Keypoint& prev, const Keypoint& curr);

}  // namespace tfftrack
