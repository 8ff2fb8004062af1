#include "tfftrack/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "tfftrack/matching.hpp"
#include "tfftrack/similarity.hpp"

namespace tfftrack {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(double num, double den) { return den > 0.0 ? num / den : kNaN; }

/// Head size per (frame, identity); poses without both head joints fall back
/// to the sequence mean.
class HeadSizes {
public:
    explicit HeadSizes(const SequenceAnnotation& gt) : skeleton_(gt.skeleton) {
        double sum = 0.0;
        int n = 0;
        for (const auto& f : gt.frames) {
            for (const auto& p : f.poses) {
                if (auto h = head_size(p, skeleton_); h && *h > 0.0) {
                    sum += *h;
                    ++n;
                }
            }
        }
        fallback_ = n > 0 ? sum / n : kNaN;
    }

    double operator()(const Pose& pose) const {
        if (auto h = head_size(pose, skeleton_); h && *h > 0.0) return *h;
        if (std::isnan(fallback_)) throw InputError("no ground-truth pose defines a head size");
        return fallback_;
    }

private:
    const SkeletonConfig& skeleton_;
    double fallback_ = kNaN;
};

struct GtJoint {
    int identity;
    Vec2 position;
    double limit;  // gate * head size
};

struct PredJoint {
    int track_id;
    Vec2 position;
};

std::map<int, std::vector<std::pair<int, const Pose*>>> predictions_by_frame(const TrackSet& tracks) {
    std::map<int, std::vector<std::pair<int, const Pose*>>> out;
    for (const auto& t : tracks.tracks()) {
        for (const auto& e : t.entries) {
            out[e.frame].emplace_back(t.id, &e.pose);
        }
    }
    return out;
}

}  // namespace

MotCounts& MotCounts::operator+=(const MotCounts& o) {
    true_positives += o.true_positives;
    false_positives += o.false_positives;
    misses += o.misses;
    id_switches += o.id_switches;
    gt_count += o.gt_count;
    distance_sum += o.distance_sum;
    return *this;
}

double MotCounts::mota() const {
    if (gt_count == 0) return kNaN;
    return 1.0 - static_cast<double>(misses + false_positives + id_switches) / static_cast<double>(gt_count);
}

double MotCounts::motp() const {
    return true_positives > 0 ? 1.0 - distance_sum / static_cast<double>(true_positives) : kNaN;
}

double MotCounts::precision() const {
    return ratio(static_cast<double>(true_positives), static_cast<double>(true_positives + false_positives));
}

double MotCounts::recall() const {
    return ratio(static_cast<double>(true_positives), static_cast<double>(gt_count));
}

MotReport evaluate_mot(const TrackSet& predicted, const SequenceAnnotation& gt, double gate) {
    gt.validate();
    if (!(gate > 0.0)) throw InputError("evaluation gate must be positive");
    const auto joint_count = gt.skeleton.joint_count();
    const auto by_frame = predictions_by_frame(predicted);
    for (const auto& [frame, poses] : by_frame) {
        if (gt.frame(frame) == nullptr) {
            throw InputError("frame range mismatch: prediction at frame " + std::to_string(frame) +
                             " has no ground truth");
        }
        for (const auto& [id, pose] : poses) {
            if (pose->joint_count() != joint_count) {
                throw InputError("predicted pose does not match the skeleton");
            }
        }
    }
    const HeadSizes heads(gt);

    MotReport report;
    report.joint_names = gt.skeleton.joint_names;
    report.per_joint.assign(joint_count, MotCounts{});
    // last matched track id per (identity, joint)
    std::map<std::pair<int, std::size_t>, int> last_match;
    const MatchPolicy policy{0.0, 1};

    for (const auto& frame : gt.frames) {
        static const std::vector<std::pair<int, const Pose*>> kNone;
        const auto it = by_frame.find(frame.index);
        const auto& preds = it == by_frame.end() ? kNone : it->second;

        for (std::size_t j = 0; j < joint_count; ++j) {
            std::vector<GtJoint> gts;
            for (const auto& pose : frame.poses) {
                if (pose.has(j)) gts.push_back({*pose.id, pose.at(j).position(), gate * heads(pose)});
            }
            std::vector<PredJoint> ps;
            for (const auto& [id, pose] : preds) {
                if (pose->has(j)) ps.push_back({id, pose->at(j).position()});
            }

            // Profit K - normalized distance: more matches always win, then shorter distances.
            const double k = static_cast<double>(std::min(gts.size(), ps.size())) + 2.0;
            PotentialMatrix profit(gts.size(), ps.size(), -std::numeric_limits<double>::infinity());
            for (std::size_t g = 0; g < gts.size(); ++g) {
                for (std::size_t p = 0; p < ps.size(); ++p) {
                    const double d = norm(gts[g].position - ps[p].position);
                    if (d <= gts[g].limit) profit(g, p) = k - d / gts[g].limit;
                }
            }
            const auto assignment = hungarian_assign(profit, policy);

            MotCounts& counts = report.per_joint[j];
            counts.gt_count += static_cast<std::int64_t>(gts.size());
            counts.true_positives += static_cast<std::int64_t>(assignment.pairs.size());
            counts.misses += static_cast<std::int64_t>(assignment.unmatched_rows.size());
            for (auto p : assignment.unmatched_cols) {
                if (!gt.ignored(frame.index, ps[p].position.x, ps[p].position.y)) {
                    ++counts.false_positives;
                }
            }
            for (const auto& [g, p] : assignment.pairs) {
                counts.distance_sum += norm(gts[g].position - ps[p].position) / gts[g].limit;
                const auto key = std::make_pair(gts[g].identity, j);
                auto prev = last_match.find(key);
                if (prev != last_match.end() && prev->second != ps[p].track_id) {
                    ++counts.id_switches;
                }
                last_match[key] = ps[p].track_id;
            }
        }
    }
    for (const auto& c : report.per_joint) {
        report.total += c;
    }
    return report;
}

double average_precision(const std::vector<bool>& sorted_hits, std::int64_t gt_count) {
    if (gt_count <= 0) return kNaN;
    std::vector<double> recall, precision;
    std::int64_t tp = 0;
    for (std::size_t i = 0; i < sorted_hits.size(); ++i) {
        if (sorted_hits[i]) ++tp;
        recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_count));
        precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    }
    // Monotone precision envelope, then sum precision over recall increments.
    for (std::size_t i = precision.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] > prev_recall) {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
    }
    return ap;
}

MapReport evaluate_map(const std::vector<FramePoses>& predicted, const SequenceAnnotation& gt, double gate) {
    gt.validate();
    if (!(gate > 0.0)) throw InputError("evaluation gate must be positive");
    const auto joint_count = gt.skeleton.joint_count();
    const HeadSizes heads(gt);

    struct Candidate {
        double confidence;
        int frame;
        Vec2 position;
    };

    MapReport report;
    report.joint_names = gt.skeleton.joint_names;
    double ap_sum = 0.0;
    int classes = 0;
    for (std::size_t j = 0; j < joint_count; ++j) {
        std::vector<Candidate> candidates;
        for (const auto& f : predicted) {
            for (const auto& pose : f.poses) {
                if (pose.joint_count() != joint_count) {
                    throw InputError("predicted pose does not match the skeleton");
                }
                if (pose.has(j)) candidates.push_back({pose.at(j).confidence, f.index, pose.at(j).position()});
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) { return a.confidence > b.confidence; });

        std::map<int, std::vector<std::pair<GtJoint, bool>>> gt_by_frame;
        std::int64_t gt_count = 0;
        for (const auto& f : gt.frames) {
            for (const auto& pose : f.poses) {
                if (!pose.has(j)) continue;
                gt_by_frame[f.index].push_back({{*pose.id, pose.at(j).position(), gate * heads(pose)}, false});
                ++gt_count;
            }
        }

        std::vector<bool> hits;
        for (const auto& cand : candidates) {
            auto it = gt_by_frame.find(cand.frame);
            std::pair<GtJoint, bool>* best = nullptr;
            double best_d = std::numeric_limits<double>::infinity();
            if (it != gt_by_frame.end()) {
                for (auto& entry : it->second) {
                    if (entry.second) continue;
                    const double d = norm(entry.first.position - cand.position);
                    if (d <= entry.first.limit && d < best_d) {
                        best_d = d;
                        best = &entry;
                    }
                }
            }
            if (best != nullptr) {
                best->second = true;
                hits.push_back(true);
            } else if (!gt.ignored(cand.frame, cand.position.x, cand.position.y)) {
                hits.push_back(false);
            }
        }
        const double ap = average_precision(hits, gt_count);
        report.per_joint_ap.push_back(ap);
        if (!std::isnan(ap)) {
            ap_sum += ap;
            ++classes;
        }
    }
    report.mean_ap = classes > 0 ? ap_sum / classes : 0.0;
    return report;
}

std::vector<FramePoses> frames_from_tracks(const TrackSet& tracks) {
    std::map<int, FramePoses> frames;
    for (const auto& t : tracks.tracks()) {
        for (const auto& e : t.entries) {
            auto& f = frames[e.frame];
            f.index = e.frame;
            Pose pose = e.pose;
            pose.id = t.id;
            f.poses.push_back(std::move(pose));
        }
    }
    std::vector<FramePoses> out;
    out.reserve(frames.size());
    for (auto& [index, f] : frames) out.push_back(std::move(f));
    return out;
}

std::string joint_group(const std::string& name) {
    static const std::array<std::pair<const char*, const char*>, 9> kGroups{{
        {"head", "Head"},
        {"neck", "Head"},
        {"nose", "Head"},
        {"shoulder", "Shou"},
        {"elbow", "Elb"},
        {"wrist", "Wri"},
        {"hip", "Hip"},
        {"knee", "Knee"},
        {"ankle", "Ankl"},
    }};
    for (const auto& [needle, group] : kGroups) {
        if (name.find(needle) != std::string::npos) return group;
    }
    return {};
}

std::string format_mot_table(const MotReport& report) {
    static const std::array<const char*, 7> kColumns{"Head", "Shou", "Elb", "Wri", "Hip", "Knee", "Ankl"};
    std::array<MotCounts, kColumns.size()> groups{};
    for (std::size_t j = 0; j < report.per_joint.size(); ++j) {
        const auto g = joint_group(report.joint_names[j]);
        for (std::size_t c = 0; c < kColumns.size(); ++c) {
            if (g == kColumns[c]) groups[c] += report.per_joint[j];
        }
    }

    std::ostringstream out;
    out << std::left << std::setw(8) << "";
    for (const char* c : kColumns) out << std::right << std::setw(8) << c;
    out << std::setw(8) << "Total" << '\n';
    const auto row = [&](const char* label, double (MotCounts::*fn)() const) {
        out << std::left << std::setw(8) << label << std::right << std::fixed << std::setprecision(1);
        for (const auto& g : groups) out << std::setw(8) << 100.0 * (g.*fn)();
        out << std::setw(8) << 100.0 * (report.total.*fn)() << '\n';
    };
    row("MOTA", &MotCounts::mota);
    row("MOTP", &MotCounts::motp);
    row("Prec", &MotCounts::precision);
    row("Rec", &MotCounts::recall);
    return out.str();
}

}  // namespace tfftrack
