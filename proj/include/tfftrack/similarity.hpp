#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "tfftrack/core.hpp"
#include "tfftrack/flowfield.hpp"

namespace tfftrack {

enum class PotentialKind { TFF, IoU, PCKh, OKS, OpticalFlow };

std::string_view to_string(PotentialKind kind);
/// Accepts the CLI spellings: tff, iou, pckh, oks, flow.
PotentialKind parse_potential_kind(std::string_view name);
/// Display name used in report tables ("TFF", "IoU", ..., "OpticalFlow").
std::string_view display_name(PotentialKind kind);

/// Dense optical flow: per-pixel displacement (in pixels) from the previous
/// frame to the current one.
struct FlowGrid {
    GridField displacement;

    GridDims dims() const { return displacement.dims(); }
    friend bool operator==(const FlowGrid&, const FlowGrid&) = default;
};

struct SimilarityParams {
    double tau_delta = 2.0;
    int quadrature_steps = 10;
    double sigma_flow = 30.0;
    double pckh_threshold = 0.5;

    void validate() const;
};

/// Mean projection of the field onto the unit direction prev -> curr along the
/// connecting segment, midpoint rule with `steps` samples. `scale` converts
/// image coordinates to grid cells.
double flow_aggregate(const GridField& field, const Keypoint& prev, const Keypoint& curr, int steps,
                      double scale = 1.0);

/// 1 for joints that moved less than tau_delta, the flow aggregate otherwise.
double joint_potential(const GridField& field, const Keypoint& prev, const Keypoint& curr,
                       const SimilarityParams& params, double scale = 1.0);

/// Sum of joint potentials over joints present in both poses.
double person_potential(const Pose& prev, const Pose& curr, const FlowFieldStack& fields,
                        const SimilarityParams& params);

double iou_potential(const Pose& prev, const Pose& curr, double pad_fraction = 0.0);

/// Fraction of shared joints within `threshold` head sizes. The head size is
/// measured on `prev`.
double pckh_potential(const Pose& prev, const Pose& curr, const SkeletonConfig& skeleton,
                      double threshold = 0.5);

/// COCO-style keypoint similarity with object scale sqrt(area of prev's box).
double oks_potential(const Pose& prev, const Pose& curr, const SkeletonConfig& skeleton);

/// Sum over shared joints of exp(-|curr - (prev + f(prev))|^2 / sigma_flow^2).
double optical_flow_potential(const Pose& prev, const Pose& curr, const FlowGrid& flow, double sigma_flow);

/// Head segment length of a pose, or nullopt when either head joint is missing.
std::optional<double> head_size(const Pose& pose, const SkeletonConfig& skeleton);

}  // namespace tfftrack
