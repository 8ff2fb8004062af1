#include "tfftrack/annotation.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace tfftrack {

IgnoreMask SequenceAnnotation::ignore_mask(int frame) const {
    IgnoreMask mask(image);
    for (const auto& region : ignore_regions) {
        if (frame >= region.first_frame && frame <= region.last_frame) {
            mask.mark_ignored(region.box);
        }
    }
    return mask;
}

bool SequenceAnnotation::ignored(int frame, double x, double y) const {
    return std::any_of(ignore_regions.begin(), ignore_regions.end(), [&](const IgnoreRegion& r) {
        return frame >= r.first_frame && frame <= r.last_frame && x >= r.box.x_min && x <= r.box.x_max &&
               y >= r.box.y_min && y <= r.box.y_max;
    });
}

const FramePoses* SequenceAnnotation::frame(int index) const {
    auto it = std::lower_bound(frames.begin(), frames.end(), index,
                               [](const FramePoses& f, int i) { return f.index < i; });
    return (it != frames.end() && it->index == index) ? &*it : nullptr;
}

void SequenceAnnotation::validate() const {
    skeleton.validate();
    if (image.width < 1 || image.height < 1) {
        throw InputError("image dimensions must be positive");
    }
    validate_frames(frames, skeleton.joint_count());
    for (const auto& f : frames) {
        std::set<int> ids;
        for (const auto& pose : f.poses) {
            if (!pose.id) {
                throw InputError("ground-truth pose without identity in frame " + std::to_string(f.index));
            }
            if (!ids.insert(*pose.id).second) {
                throw InputError("duplicate identity " + std::to_string(*pose.id) + " in frame " +
                                 std::to_string(f.index));
            }
        }
    }
}

}  // namespace tfftrack
