#include "tfftrack/similarity.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace tfftrack {

namespace {

constexpr std::array<std::pair<PotentialKind, std::string_view>, 5> kCliNames{{
    {PotentialKind::TFF, "tff"},
    {PotentialKind::IoU, "iou"},
    {PotentialKind::PCKh, "pckh"},
    {PotentialKind::OKS, "oks"},
    {PotentialKind::OpticalFlow, "flow"},
}};

void require_same_layout(const Pose& a, const Pose& b) {
    if (a.joint_count() != b.joint_count()) {
        throw InputError("poses have different joint counts");
    }
}

}  // namespace

std::string_view to_string(PotentialKind kind) {
    for (const auto& [k, name] : kCliNames) {
        if (k == kind) return name;
    }
    return "?";
}

PotentialKind parse_potential_kind(std::string_view name) {
    for (const auto& [k, n] : kCliNames) {
        if (n == name) return k;
    }
    throw InputError("unknown metric '" + std::string(name) + "' (expected tff, iou, pckh, oks or flow)");
}

std::string_view display_name(PotentialKind kind) {
    switch (kind) {
        case PotentialKind::TFF: return "TFF";
        case PotentialKind::IoU: return "IoU";
        case PotentialKind::PCKh: return "PCKh";
        case PotentialKind::OKS: return "OKS";
        case PotentialKind::OpticalFlow: return "OpticalFlow";
    }
    return "?";
}

void SimilarityParams::validate() const {
    if (!(tau_delta >= 0.0)) throw InputError("tau_delta must be non-negative");
    if (quadrature_steps < 2) throw InputError("quadrature_steps must be at least 2");
    if (!(sigma_flow > 0.0)) throw InputError("sigma_flow must be positive");
    if (!(pckh_threshold > 0.0)) throw InputError("pckh_threshold must be positive");
}

double flow_aggregate(const GridField& field, const Keypoint& prev, const Keypoint& curr, int steps,
                      double scale) {
    if (steps < 1) {
        throw InputError("quadrature steps must be positive");
    }
    const auto motion = joint_displacement(prev, curr);
    if (motion.length == 0.0) {
        throw InputError("use stationary branch: coincident keypoints have no direction");
    }
    const Vec2 a = (1.0 / scale) * prev.position();
    const Vec2 b = (1.0 / scale) * curr.position();
    double sum = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double o = (k + 0.5) / steps;
        sum += dot(sample_field(field, (1.0 - o) * a + o * b), motion.direction);
    }
    return sum / steps;
}

double joint_potential(const GridField& field, const Keypoint& prev, const Keypoint& curr,
                       const SimilarityParams& params, double scale) {
    const double delta = norm(curr.position() - prev.position());
    // delta == 0 only reaches here with tau_delta == 0, where no direction exists.
    if (delta < params.tau_delta || delta == 0.0) {
        return 1.0;
    }
    return flow_aggregate(field, prev, curr, params.quadrature_steps, scale);
}

double person_potential(const Pose& prev, const Pose& curr, const FlowFieldStack& fields,
                        const SimilarityParams& params) {
    require_same_layout(prev, curr);
    if (fields.joint_count() != prev.joint_count()) {
        throw InputError("field stack joint count does not match pose layout");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < prev.joint_count(); ++j) {
        if (prev.has(j) && curr.has(j)) {
            total += joint_potential(fields.fields[j], prev.at(j), curr.at(j), params, fields.scale);
        }
    }
    return total;
}

double iou_potential(const Pose& prev, const Pose& curr, double pad_fraction) {
    const BBox a = pose_bbox(prev, pad_fraction);
    const BBox b = pose_bbox(curr, pad_fraction);
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) {
        // Both boxes degenerate: identical points overlap fully, anything else not at all.
        return a == b ? 1.0 : 0.0;
    }
    return inter / uni;
}

std::optional<double> head_size(const Pose& pose, const SkeletonConfig& skeleton) {
    const auto [top, neck] = skeleton.head_pair;
    if (!pose.has(static_cast<std::size_t>(top)) || !pose.has(static_cast<std::size_t>(neck))) {
        return std::nullopt;
    }
    return norm(pose.at(top).position() - pose.at(neck).position());
}

double pckh_potential(const Pose& prev, const Pose& curr, const SkeletonConfig& skeleton, double threshold) {
    require_same_layout(prev, curr);
    const auto head = head_size(prev, skeleton);
    if (!head || *head <= 0.0) {
        throw InputError("undefined head size");
    }
    const double limit = threshold * *head;
    int common = 0;
    int correct = 0;
    for (std::size_t j = 0; j < prev.joint_count(); ++j) {
        if (!prev.has(j) || !curr.has(j)) continue;
        ++common;
        if (norm(prev.at(j).position() - curr.at(j).position()) <= limit) {
            ++correct;
        }
    }
    return common == 0 ? 0.0 : static_cast<double>(correct) / common;
}

double oks_potential(const Pose& prev, const Pose& curr, const SkeletonConfig& skeleton) {
    require_same_layout(prev, curr);
    if (skeleton.oks_kappas.size() != prev.joint_count()) {
        throw InputError("skeleton does not match pose layout");
    }
    if (curr.empty()) {
        throw InputError("empty pose");
    }
    const double area = pose_bbox(prev, 0.0).area();
    if (!(area > 0.0)) {
        throw InputError("zero object scale");
    }
    double sum = 0.0;
    int common = 0;
    for (std::size_t j = 0; j < prev.joint_count(); ++j) {
        if (!prev.has(j) || !curr.has(j)) continue;
        const Vec2 d = prev.at(j).position() - curr.at(j).position();
        const double kappa = skeleton.oks_kappas[j];
        sum += std::exp(-dot(d, d) / (2.0 * area * kappa * kappa));
        ++common;
    }
    return common == 0 ? 0.0 : sum / common;
}

double optical_flow_potential(const Pose& prev, const Pose& curr, const FlowGrid& flow, double sigma_flow) {
    require_same_layout(prev, curr);
    if (!(sigma_flow > 0.0)) {
        throw InputError("sigma_flow must be positive");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < prev.joint_count(); ++j) {
        if (!prev.has(j) || !curr.has(j)) continue;
        const Vec2 p = prev.at(j).position();
        const Vec2 warped = p + sample_field(flow.displacement, p);
        const Vec2 residual = curr.at(j).position() - warped;
        total += std::exp(-dot(residual, residual) / (sigma_flow * sigma_flow));
    }
    return total;
}

}  // namespace tfftrack
