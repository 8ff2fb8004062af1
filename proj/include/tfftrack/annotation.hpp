#pragma once

#include <vector>

#include "tfftrack/core.hpp"
#include "tfftrack/flowfield.hpp"

namespace tfftrack {

/// Rectangular unannotated area, active on frames [first_frame, last_frame].
struct IgnoreRegion {
    int first_frame = 0;
    int last_frame = 0;
    BBox box;

    friend bool operator==(const IgnoreRegion&, const IgnoreRegion&) = default;
};

/// Ground-truth multi-person sequence. Every pose carries its identity.
struct SequenceAnnotation {
    SkeletonConfig skeleton = SkeletonConfig::posetrack15();
    GridDims image{640, 480};
    std::vector<FramePoses> frames;
    std::vector<IgnoreRegion> ignore_regions;

    /// Binary mask for one frame; 0 inside every active ignore region.
    IgnoreMask ignore_mask(int frame) const;
    bool ignored(int frame, double x, double y) const;
    const FramePoses* frame(int index) const;

    /// Checks skeleton, frame ordering, identities (present and unique per frame).
    void validate() const;

    friend bool operator==(const SequenceAnnotation&, const SequenceAnnotation&) = default;
};

}  // namespace tfftrack
