#include "tfftrack/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace tfftrack {

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

JointId::JointId(int index, int joint_count) : index_(index) {
    if (index < 0 || index >= joint_count) {
        throw InputError("joint index " + std::to_string(index) + " outside [0, " +
                         std::to_string(joint_count) + ")");
    }
}

Keypoint::Keypoint(double x_, double y_, double confidence_) : x(x_), y(y_), confidence(confidence_) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
        throw InputError("keypoint coordinates must be finite");
    }
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
        throw InputError("keypoint confidence must lie in [0, 1]");
    }
}

std::size_t Pose::present_count() const {
    return static_cast<std::size_t>(
        std::count_if(joints.begin(), joints.end(), [](const auto& j) { return j.has_value(); }));
}

const Keypoint& Pose::at(std::size_t j) const {
    if (!has(j)) {
        throw InputError("joint " + std::to_string(j) + " not present");
    }
    return *joints[j];
}

void validate_frames(const std::vector<FramePoses>& frames, std::size_t joint_count) {
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& frame = frames[i];
        if (frame.index < 0) {
            throw InputError("negative frame index");
        }
        if (i > 0 && frame.index <= frames[i - 1].index) {
            throw InputError("frame indices must be strictly increasing (frame " +
                             std::to_string(frame.index) + ")");
        }
        for (const auto& pose : frame.poses) {
            if (pose.joint_count() != joint_count) {
                throw InputError("pose in frame " + std::to_string(frame.index) + " has " +
                                 std::to_string(pose.joint_count()) + " joints, expected " +
                                 std::to_string(joint_count));
            }
            if (pose.empty()) {
                throw InputError("empty pose in frame " + std::to_string(frame.index));
            }
        }
    }
}

const Pose* Track::pose_at(int frame) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), frame,
                               [](const TrackEntry& e, int f) { return e.frame < f; });
    if (it == entries.end() || it->frame != frame) {
        return nullptr;
    }
    return &it->pose;
}

int TrackSet::start(int frame, Pose pose) {
    Track track;
    track.id = next_id_++;
    track.birth_frame = frame;
    track.entries.push_back({frame, std::move(pose)});
    tracks_.push_back(std::move(track));
    return tracks_.back().id;
}

void TrackSet::extend(std::size_t track_index, int frame, Pose pose) {
    if (track_index >= tracks_.size()) {
        throw InputError("track index out of range");
    }
    auto& track = tracks_[track_index];
    if (frame <= track.last_frame()) {
        throw InputError("track entries must advance in time");
    }
    track.entries.push_back({frame, std::move(pose)});
}

void TrackSet::insert(Track track) {
    if (track.entries.empty()) {
        throw InputError("track " + std::to_string(track.id) + " has no entries");
    }
    for (const auto& t : tracks_) {
        if (t.id == track.id) {
            throw InputError("duplicate track id " + std::to_string(track.id));
        }
    }
    next_id_ = std::max(next_id_, track.id + 1);
    tracks_.push_back(std::move(track));
}

void TrackSet::keep_if(const std::function<bool(const Track&)>& predicate) {
    std::erase_if(tracks_, [&](const Track& t) { return !predicate(t); });
}

void TrackSet::reserve_ids(int next) { next_id_ = std::max(next_id_, next); }

std::vector<std::size_t> TrackSet::alive_at(int frame) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        if (tracks_[i].last_frame() == frame) {
            out.push_back(i);
        }
    }
    return out;
}

void TrackSet::check_invariants() const {
    std::set<int> seen;
    for (const auto& t : tracks_) {
        if (!seen.insert(t.id).second) {
            throw std::logic_error("duplicate track id " + std::to_string(t.id));
        }
        if (t.id >= next_id_) {
            throw std::logic_error("next_id must exceed every track id");
        }
        if (t.entries.empty()) {
            throw std::logic_error("empty track");
        }
    }
}

void SkeletonConfig::validate() const {
    const int j = static_cast<int>(joint_count());
    if (j == 0) {
        throw InputError("skeleton has no joints");
    }
    JointId(head_pair.first, j);
    JointId(head_pair.second, j);
    if (oks_kappas.size() != joint_names.size()) {
        throw InputError("oks_kappas must have one entry per joint");
    }
    for (double k : oks_kappas) {
        if (!(k > 0.0)) {
            throw InputError("oks_kappas must be positive");
        }
    }
}

SkeletonConfig SkeletonConfig::posetrack15() {
    // COCO per-keypoint sigmas; the OKS falloff constant is twice the sigma.
    constexpr std::array<double, 17> coco_sigmas{0.026, 0.025, 0.025, 0.035, 0.035, 0.079,
                                                 0.079, 0.072, 0.072, 0.062, 0.062, 0.107,
                                                 0.107, 0.087, 0.087, 0.089, 0.089};
    const double mean_sigma =
        std::accumulate(coco_sigmas.begin(), coco_sigmas.end(), 0.0) / coco_sigmas.size();
    const double nose = 0.026, shoulder = 0.079, elbow = 0.072, wrist = 0.062;
    const double hip = 0.107, knee = 0.087, ankle = 0.089;

    SkeletonConfig s;
    s.joint_names = {"right_ankle", "right_knee",    "right_hip",   "left_hip",   "left_knee",
                     "left_ankle",  "right_wrist",   "right_elbow", "right_shoulder",
                     "left_shoulder", "left_elbow", "left_wrist",  "neck",       "nose",
                     "head_top"};
    const std::vector<double> sigmas{ankle, knee,  hip,   hip,      knee,       ankle,
                                     wrist, elbow, shoulder, shoulder, elbow, wrist,
                                     mean_sigma, nose, mean_sigma};
    s.oks_kappas.reserve(sigmas.size());
    for (double sigma : sigmas) {
        s.oks_kappas.push_back(2.0 * sigma);
    }
    s.head_pair = {14, 12};
    return s;
}

BBox pose_bbox(const Pose& pose, double pad_fraction) {
    if (!(pad_fraction >= 0.0)) {
        throw InputError("pad_fraction must be non-negative");
    }
    bool any = false;
    BBox box;
    for (const auto& joint : pose.joints) {
        if (!joint) continue;
        if (!any) {
            box = {joint->x, joint->y, joint->x, joint->y};
            any = true;
        } else {
            box.x_min = std::min(box.x_min, joint->x);
            box.y_min = std::min(box.y_min, joint->y);
            box.x_max = std::max(box.x_max, joint->x);
            box.y_max = std::max(box.y_max, joint->y);
        }
    }
    if (!any) {
        throw InputError("empty pose");
    }
    const double pad = pad_fraction * std::max(box.width(), box.height());
    return {box.x_min - pad, box.y_min - pad, box.x_max + pad, box.y_max + pad};
}

Displacement joint_displacement(const Keypoint& prev, const Keypoint& curr) {
    const Vec2 d = curr.position() - prev.position();
    const double length = norm(d);
    if (length == 0.0) {
        return {{0.0, 0.0}, 0.0};
    }
    return {{d.x / length, d.y / length}, length};
}

}  // namespace tfftrack
