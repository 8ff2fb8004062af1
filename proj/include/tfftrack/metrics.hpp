#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfftrack/annotation.hpp"
#include "tfftrack/core.hpp"

namespace tfftrack {

/// Raw CLEAR-MOT event counts. Ratios are derived, never accumulated.
struct MotCounts {
    std::int64_t true_positives = 0;
    std::int64_t false_positives = 0;
    std::int64_t misses = 0;
    std::int64_t id_switches = 0;
    std::int64_t gt_count = 0;
    double distance_sum = 0.0;  // normalized distances of matched pairs

    MotCounts& operator+=(const MotCounts& other);

    /// 1 - (misses + false positives + switches) / gt; NaN without ground truth.
    double mota() const;
    /// 1 - mean normalized distance of matched pairs; NaN without matches.
    double motp() const;
    double precision() const;
    double recall() const;

    friend bool operator==(const MotCounts&, const MotCounts&) = default;
};

struct MotReport {
    std::vector<std::string> joint_names;
    std::vector<MotCounts> per_joint;
    MotCounts total;
};

/// PCKh distance gate used for both tracking and mAP evaluation.
constexpr double kDefaultEvalGate = 0.5;

/// Per frame and joint class, matches predictions to ground truth by
/// minimum-distance assignment within `gate` head sizes and counts CLEAR-MOT
/// events. Unmatched predictions inside ignore regions are not false positives.
MotReport evaluate_mot(const TrackSet& predicted, const SequenceAnnotation& gt, double gate = kDefaultEvalGate);

struct MapReport {
    std::vector<std::string> joint_names;
    std::vector<double> per_joint_ap;  // NaN for joint classes without ground truth
    double mean_ap = 0.0;
};

/// Average precision per joint class with confidence-ordered greedy matching
/// and all-point interpolation; the total is the mean over classes with
/// ground truth.
MapReport evaluate_map(const std::vector<FramePoses>& predicted, const SequenceAnnotation& gt,
                       double gate = kDefaultEvalGate);

/// Area under the precision/recall curve (all-point interpolation) for
/// detections given as true-positive flags in descending confidence order.
double average_precision(const std::vector<bool>& sorted_hits, std::int64_t gt_count);

/// Frames of a track set, one pose per track per frame.
std::vector<FramePoses> frames_from_tracks(const TrackSet& tracks);

/// Column group of a joint name in the report table (Head, Shou, Elb, Wri,
/// Hip, Knee, Ankl), or an empty string when the joint matches none.
std::string joint_group(const std::string& joint_name);

/// Aligned plain-text table: one row per metric, columns per joint group plus Total.
std::string format_mot_table(const MotReport& report);

}  // namespace tfftrack
