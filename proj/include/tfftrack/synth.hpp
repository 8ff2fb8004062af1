#pragma once

#include <cstdint>
#include <vector>

#include "tfftrack/annotation.hpp"
#include "tfftrack/core.hpp"
#include "tfftrack/flowfield.hpp"
#include "tfftrack/similarity.hpp"

namespace tfftrack {

enum class MotionModel { Linear, Sinusoidal, Crossing, RandomWalk };

std::string_view to_string(MotionModel model);
MotionModel parse_motion_model(std::string_view name);

struct MotionSpec {
    MotionModel model = MotionModel::Linear;
    double speed_min = 2.0;  // px/frame
    double speed_max = 6.0;
    double amplitude = 20.0;  // sinusoidal lateral swing, px
    double period = 30.0;     // sinusoidal period, frames
    int cross_frame = -1;     // crossing pairs meet here; -1 = middle frame

    friend bool operator==(const MotionSpec&, const MotionSpec&) = default;
};

struct Occlusion {
    int person = 0;
    int first_frame = 0;
    int last_frame = 0;
    std::vector<int> joints;  // empty = whole person

    friend bool operator==(const Occlusion&, const Occlusion&) = default;
};

struct ScenarioConfig {
    int persons = 3;
    int frames = 30;
    GridDims image{320, 240};
    MotionSpec motion;
    std::vector<MotionSpec> person_motions;  // optional per-person overrides
    double scale_min = 60.0;  // person height, px
    double scale_max = 100.0;
    double articulation = 0.04;  // limb swing amplitude as a fraction of height
    std::vector<Occlusion> occlusions;
    std::vector<IgnoreRegion> ignore_regions;
    std::uint64_t seed = 0;
    SkeletonConfig skeleton = SkeletonConfig::posetrack15();

    void validate() const;
    const MotionSpec& motion_for(int person) const;
};

struct NoiseConfig {
    double jitter_sigma = 0.0;       // px
    double drop_prob = 0.0;          // per joint
    double spurious_rate = 0.0;      // mean false poses per frame
    double field_angular_sigma = 0.0;  // radians, per field pixel
    double field_dropout = 0.0;      // probability of losing a whole joint ribbon

    void validate() const;
    friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

/// Per-joint-class scalar maps with values in [0, 1].
struct BeliefMap {
    GridDims dims;
    std::vector<std::vector<double>> maps;  // [joint][y * width + x]

    double at(std::size_t joint, int x, int y) const {
        return maps[joint][static_cast<std::size_t>(y) * dims.width + x];
    }
};

/// Synthetic ground truth: every identity is visible in every frame unless
/// occluded. Deterministic in the seed.
SequenceAnnotation generate_sequence(const ScenarioConfig& config);

/// Anchor (pelvis center) of a person in a frame, as used by generate_sequence.
/// Exposed for tests of the motion models.
std::vector<std::vector<Vec2>> scenario_anchors(const ScenarioConfig& config);

/// Jitter, joint drops and spurious skeletons. Output poses carry no
/// identity and come in shuffled order within each frame.
std::vector<FramePoses> corrupt_detections(const SequenceAnnotation& gt, const NoiseConfig& noise,
                                           std::uint64_t seed);

/// Stand-in for a learned field predictor: ground-truth fields for the
/// identities present in both frames, optionally corrupted by per-pixel
/// rotation noise and ribbon dropout.
FlowFieldStack oracle_tff(const FramePoses& gt_prev, const FramePoses& gt_curr, std::size_t joint_count,
                          GridDims image, double sigma, const NoiseConfig& noise, std::uint64_t seed,
                          double scale = 1.0);

/// Dense flow: each moving joint's displacement splatted with Gaussian
/// weights over a disk of `radius` pixels around its previous location.
FlowGrid oracle_optical_flow(const FramePoses& gt_prev, const FramePoses& gt_curr, GridDims image,
                             double radius);

BeliefMap render_beliefmaps(const FramePoses& poses, std::size_t joint_count, GridDims image, double peak_sigma);

/// Belief threshold below which peaks are discarded.
constexpr double kDefaultTauNms = 0.2;

/// Local maxima (8-neighborhood) at or above tau_nms, per joint class. A
/// plateau of equal values counts once, at its smallest (x, y) pixel.
std::vector<std::vector<Keypoint>> nms_detect(const BeliefMap& map, double tau_nms);

/// Keeps only detected joints whose belief peak survives NMS at tau_nms
/// (within 1.5 px of the joint).
std::vector<FramePoses> nms_filter(const std::vector<FramePoses>& detections, std::size_t joint_count,
                                   GridDims image, double tau_nms, double peak_sigma = 2.0);

/// Template skeleton around the anchor for a person of the given height.
Pose template_pose(const SkeletonConfig& skeleton, Vec2 anchor, double height, double swing = 0.0);

}  // namespace tfftrack
