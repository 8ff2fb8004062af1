#include "tfftrack/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <tuple>

namespace tfftrack {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGaitPeriod = 20.0;  // frames per limb swing cycle

struct TemplateJoint {
    const char* name;
    double x;  // in person heights, relative to the pelvis center
    double y;
    double swing;  // lateral swing gain (+ arms, - legs)
};

// Head top at -0.5, ankles at +0.47: total height ~0.97.
constexpr std::array<TemplateJoint, 15> kTemplate{{
    {"right_ankle", -0.08, 0.47, -1.0},
    {"right_knee", -0.08, 0.24, -0.5},
    {"right_hip", -0.08, 0.0, 0.0},
    {"left_hip", 0.08, 0.0, 0.0},
    {"left_knee", 0.08, 0.24, 0.5},
    {"left_ankle", 0.08, 0.47, 1.0},
    {"right_wrist", -0.19, -0.02, 1.0},
    {"right_elbow", -0.17, -0.15, 0.5},
    {"right_shoulder", -0.13, -0.30, 0.0},
    {"left_shoulder", 0.13, -0.30, 0.0},
    {"left_elbow", 0.17, -0.15, -0.5},
    {"left_wrist", 0.19, -0.02, -1.0},
    {"neck", 0.0, -0.34, 0.0},
    {"nose", 0.0, -0.40, 0.0},
    {"head_top", 0.0, -0.50, 0.0},
}};
constexpr double kHalfWidth = 0.25;
constexpr double kTop = 0.5;
constexpr double kBottom = 0.5;

const TemplateJoint& template_joint(const std::string& name) {
    for (const auto& t : kTemplate) {
        if (name == t.name) return t;
    }
    throw InputError("no template position for joint '" + name + "'");
}

double fold(double v, double lo, double hi) {
    const double len = hi - lo;
    if (len <= 0.0) return lo;
    double y = std::fmod(v - lo, 2.0 * len);
    if (y < 0.0) y += 2.0 * len;
    if (y > len) y = 2.0 * len - y;
    return lo + y;
}

struct Bounds {
    double x_lo, x_hi, y_lo, y_hi;

    Vec2 fold(Vec2 p) const { return {tfftrack::fold(p.x, x_lo, x_hi), tfftrack::fold(p.y, y_lo, y_hi)}; }
    Vec2 center() const { return {0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)}; }
};

Bounds anchor_bounds(GridDims image, double height) {
    return {kHalfWidth * height + 1.0, image.width - 2.0 - kHalfWidth * height, kTop * height + 1.0,
            image.height - 2.0 - kBottom * height};
}

Vec2 uniform_in(const Bounds& b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(b.x_lo, b.x_hi);
    std::uniform_real_distribution<double> uy(b.y_lo, b.y_hi);
    const double x = ux(rng);
    return {x, uy(rng)};
}

Vec2 heading(double angle) { return {std::cos(angle), std::sin(angle)}; }

Keypoint clamp_to_image(Vec2 p, GridDims image, double confidence) {
    return Keypoint(std::clamp(p.x, 0.0, image.width - 1.0), std::clamp(p.y, 0.0, image.height - 1.0), confidence);
}

struct PersonPlan {
    double height = 0.0;
    double gait_phase = 0.0;
    std::vector<Vec2> anchors;
};

std::vector<PersonPlan> plan_people(const ScenarioConfig& config) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = config.persons;
    const int frames = config.frames;

    std::vector<PersonPlan> people(static_cast<std::size_t>(n));
    for (auto& p : people) {
        p.height = config.scale_min + (config.scale_max - config.scale_min) * unit(rng);
        p.gait_phase = kTwoPi * unit(rng);
        p.anchors.resize(static_cast<std::size_t>(frames));
    }

    const auto speed = [&](const MotionSpec& m) { return m.speed_min + (m.speed_max - m.speed_min) * unit(rng); };

    for (int i = 0; i < n; ++i) {
        const MotionSpec& m = config.motion_for(i);
        auto& person = people[static_cast<std::size_t>(i)];
        const Bounds b = anchor_bounds(config.image, person.height);

        if (m.model == MotionModel::Crossing && i + 1 < n && config.motion_for(i + 1).model == MotionModel::Crossing &&
            i % 2 == 0) {
            // Crossing pair: both anchors pass through the meeting point at cross_frame,
            // at an angle between 45 and 135 degrees. The partner is 20% smaller.
            auto& partner = people[static_cast<std::size_t>(i + 1)];
            partner.height = std::max(config.scale_min, 0.8 * person.height);
            const Bounds pb = anchor_bounds(config.image, partner.height);
            const Bounds shared{std::max(b.x_lo, pb.x_lo), std::min(b.x_hi, pb.x_hi), std::max(b.y_lo, pb.y_lo),
                                std::min(b.y_hi, pb.y_hi)};
            const Vec2 meet = uniform_in(shared, rng);
            const double angle = kTwoPi * unit(rng);
            const double turn = (std::numbers::pi / 4.0) * (1.0 + 2.0 * unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0);
            const Vec2 va = speed(m) * heading(angle);
            const Vec2 vb = speed(config.motion_for(i + 1)) * heading(angle + turn);
            const int tc = m.cross_frame >= 0 ? m.cross_frame : frames / 2;
            for (int t = 0; t < frames; ++t) {
                person.anchors[t] = b.fold(meet + static_cast<double>(t - tc) * va);
                partner.anchors[t] = pb.fold(meet + static_cast<double>(t - tc) * vb);
            }
            ++i;
            continue;
        }

        const Vec2 start = uniform_in(b, rng);
        double angle = kTwoPi * unit(rng);
        double s = speed(m);
        switch (m.model) {
            case MotionModel::Crossing:  // unpaired crossing person moves linearly
            case MotionModel::Linear:
                for (int t = 0; t < frames; ++t) {
                    person.anchors[t] = b.fold(start + static_cast<double>(t) * s * heading(angle));
                }
                break;
            case MotionModel::Sinusoidal: {
                const double phase = kTwoPi * unit(rng);
                const Vec2 dir = heading(angle);
                const Vec2 side{-dir.y, dir.x};
                for (int t = 0; t < frames; ++t) {
                    const double lateral = m.amplitude * std::sin(kTwoPi * t / m.period + phase);
                    person.anchors[t] = b.fold(start + static_cast<double>(t) * s * dir + lateral * side);
                }
                break;
            }
            case MotionModel::RandomWalk: {
                std::normal_distribution<double> turn(0.0, 0.3);
                std::normal_distribution<double> accel(0.0, 0.5);
                Vec2 pos = start;
                for (int t = 0; t < frames; ++t) {
                    person.anchors[t] = pos;
                    angle += turn(rng);
                    s = std::clamp(s + accel(rng), m.speed_min, m.speed_max);
                    Vec2 next = pos + s * heading(angle);
                    if (next.x < b.x_lo || next.x > b.x_hi) angle = std::numbers::pi - angle;
                    if (next.y < b.y_lo || next.y > b.y_hi) angle = -angle;
                    pos = b.fold(next);
                }
                break;
            }
        }
    }
    return people;
}

}  // namespace

std::string_view to_string(MotionModel model) {
    switch (model) {
        case MotionModel::Linear: return "linear";
        case MotionModel::Sinusoidal: return "sinusoidal";
        case MotionModel::Crossing: return "crossing";
        case MotionModel::RandomWalk: return "random_walk";
    }
    return "?";
}

MotionModel parse_motion_model(std::string_view name) {
    for (auto m : {MotionModel::Linear, MotionModel::Sinusoidal, MotionModel::Crossing, MotionModel::RandomWalk}) {
        if (to_string(m) == name) return m;
    }
    throw InputError("unknown motion model '" + std::string(name) +
                     "' (expected linear, sinusoidal, crossing or random_walk)");
}

void ScenarioConfig::validate() const {
    skeleton.validate();
    if (persons < 1) throw InputError("persons must be at least 1");
    if (frames < 1) throw InputError("frames must be at least 1");
    if (image.width < 1 || image.height < 1) throw InputError("image dimensions must be positive");
    if (static_cast<long long>(persons) * static_cast<long long>(skeleton.joint_count()) >
        static_cast<long long>(image.width) * image.height) {
        throw InputError("persons x joints exceed image capacity");
    }
    if (!(scale_min > 0.0) || scale_max < scale_min) throw InputError("invalid person scale range");
    const Bounds b = anchor_bounds(image, scale_max);
    if (b.x_hi < b.x_lo || b.y_hi < b.y_lo) throw InputError("image too small for the largest person scale");
    if (articulation < 0.0) throw InputError("articulation must be non-negative");
    if (!person_motions.empty() && person_motions.size() != static_cast<std::size_t>(persons)) {
        throw InputError("person_motions needs one entry per person");
    }
    const auto check_motion = [](const MotionSpec& m) {
        if (m.speed_min < 0.0 || m.speed_max < m.speed_min) throw InputError("invalid speed bounds");
        if (!(m.period > 0.0)) throw InputError("sinusoid period must be positive");
    };
    check_motion(motion);
    for (const auto& m : person_motions) check_motion(m);
    for (const auto& o : occlusions) {
        if (o.person < 0 || o.person >= persons) throw InputError("occlusion refers to an unknown person");
        if (o.last_frame < o.first_frame) throw InputError("occlusion frame span is empty");
        for (int j : o.joints) JointId(j, static_cast<int>(skeleton.joint_count()));
    }
    for (const auto& name : skeleton.joint_names) template_joint(name);
}

const MotionSpec& ScenarioConfig::motion_for(int person) const {
    return person_motions.empty() ? motion : person_motions[static_cast<std::size_t>(person)];
}

void NoiseConfig::validate() const {
    const auto prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string(what) + " must lie in [0, 1]");
    };
    prob(drop_prob, "drop_prob");
    prob(field_dropout, "field_dropout");
    if (!(jitter_sigma >= 0.0)) throw InputError("jitter_sigma must be non-negative");
    if (!(spurious_rate >= 0.0)) throw InputError("spurious_rate must be non-negative");
    if (!(field_angular_sigma >= 0.0)) throw InputError("field_angular_sigma must be non-negative");
}

Pose template_pose(const SkeletonConfig& skeleton, Vec2 anchor, double height, double swing) {
    Pose pose(skeleton.joint_count());
    for (std::size_t j = 0; j < skeleton.joint_count(); ++j) {
        const auto& t = template_joint(skeleton.joint_names[j]);
        pose.joints[j] = Keypoint(anchor.x + height * (t.x + t.swing * swing), anchor.y + height * t.y, 1.0);
    }
    return pose;
}

std::vector<std::vector<Vec2>> scenario_anchors(const ScenarioConfig& config) {
    config.validate();
    std::vector<std::vector<Vec2>> out;
    for (auto& p : plan_people(config)) out.push_back(std::move(p.anchors));
    return out;
}

SequenceAnnotation generate_sequence(const ScenarioConfig& config) {
    config.validate();
    const auto people = plan_people(config);

    SequenceAnnotation seq;
    seq.skeleton = config.skeleton;
    seq.image = config.image;
    seq.ignore_regions = config.ignore_regions;
    seq.frames.resize(static_cast<std::size_t>(config.frames));
    for (int t = 0; t < config.frames; ++t) {
        auto& frame = seq.frames[static_cast<std::size_t>(t)];
        frame.index = t;
        for (int i = 0; i < config.persons; ++i) {
            const auto& person = people[static_cast<std::size_t>(i)];
            const double swing = config.articulation * std::sin(kTwoPi * t / kGaitPeriod + person.gait_phase);
            Pose pose = template_pose(config.skeleton, person.anchors[t], person.height, swing);
            pose.id = i;
            for (const auto& o : config.occlusions) {
                if (o.person != i || t < o.first_frame || t > o.last_frame) continue;
                if (o.joints.empty()) {
                    for (auto& j : pose.joints) j.reset();
                } else {
                    for (int j : o.joints) pose.joints[static_cast<std::size_t>(j)].reset();
                }
            }
            if (!pose.empty()) frame.poses.push_back(std::move(pose));
        }
    }
    return seq;
}

std::vector<FramePoses> corrupt_detections(const SequenceAnnotation& gt, const NoiseConfig& noise,
                                           std::uint64_t seed) {
    noise.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::poisson_distribution<int> spurious_count(noise.spurious_rate > 0.0 ? noise.spurious_rate : 1.0);

    // Spurious skeletons use the range of ground-truth person heights.
    double h_lo = 60.0, h_hi = 100.0;
    bool any = false;
    for (const auto& f : gt.frames) {
        for (const auto& p : f.poses) {
            if (p.present_count() < p.joint_count()) continue;
            const double h = pose_bbox(p).height() / 0.97;
            h_lo = any ? std::min(h_lo, h) : h;
            h_hi = any ? std::max(h_hi, h) : h;
            any = true;
        }
    }

    std::vector<FramePoses> out;
    out.reserve(gt.frames.size());
    for (const auto& f : gt.frames) {
        FramePoses det;
        det.index = f.index;
        for (const auto& p : f.poses) {
            Pose d(p.joint_count());
            for (std::size_t j = 0; j < p.joint_count(); ++j) {
                if (!p.has(j)) continue;
                if (noise.drop_prob > 0.0 && unit(rng) < noise.drop_prob) continue;
                Vec2 pos = p.at(j).position();
                if (noise.jitter_sigma > 0.0) {
                    pos.x += noise.jitter_sigma * jitter(rng);
                    pos.y += noise.jitter_sigma * jitter(rng);
                }
                d.joints[j] = clamp_to_image(pos, gt.image, 1.0);
            }
            if (!d.empty()) det.poses.push_back(std::move(d));
        }
        const int extra = noise.spurious_rate > 0.0 ? spurious_count(rng) : 0;
        for (int s = 0; s < extra; ++s) {
            const double height = h_lo + (h_hi - h_lo) * unit(rng);
            Bounds b = anchor_bounds(gt.image, height);
            if (b.x_hi < b.x_lo || b.y_hi < b.y_lo) b = {0.0, gt.image.width - 1.0, 0.0, gt.image.height - 1.0};
            const Vec2 anchor = uniform_in(b, rng);
            Pose fake = template_pose(gt.skeleton, anchor, height, 0.0);
            for (auto& j : fake.joints) {
                j = clamp_to_image(j->position(), gt.image, 0.1 + 0.5 * unit(rng));
            }
            det.poses.push_back(std::move(fake));
        }
        std::shuffle(det.poses.begin(), det.poses.end(), rng);
        out.push_back(std::move(det));
    }
    return out;
}

FlowFieldStack oracle_tff(const FramePoses& gt_prev, const FramePoses& gt_curr, std::size_t joint_count,
                          GridDims image, double sigma, const NoiseConfig& noise, std::uint64_t seed, double scale) {
    noise.validate();
    if (!(scale > 0.0)) throw InputError("field scale must be positive");
    const GridDims grid{static_cast<int>(std::ceil(image.width / scale)),
                        static_cast<int>(std::ceil(image.height / scale))};
    auto stack = FlowFieldStack::zeros(joint_count, grid, scale);

    std::map<int, const Pose*> prev_by_id;
    for (const auto& p : gt_prev.poses) {
        if (p.id) prev_by_id[*p.id] = &p;
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> angle_noise(0.0, 1.0);
    std::vector<int> counts(static_cast<std::size_t>(grid.width) * grid.height);

    for (std::size_t j = 0; j < joint_count; ++j) {
        std::fill(counts.begin(), counts.end(), 0);
        auto data = stack.fields[j].data();
        for (const auto& curr : gt_curr.poses) {
            if (!curr.id) continue;
            auto it = prev_by_id.find(*curr.id);
            if (it == prev_by_id.end() || !it->second->has(j) || !curr.has(j)) continue;
            const Keypoint& a = it->second->at(j);
            const Keypoint& b = curr.at(j);
            if (noise.field_dropout > 0.0 && unit(rng) < noise.field_dropout) continue;
            const Keypoint ga(a.x / scale, a.y / scale, a.confidence);
            const Keypoint gb(b.x / scale, b.y / scale, b.confidence);
            const Vec2 v = joint_displacement(ga, gb).direction;
            for (const Pixel px : tff_support(ga, gb, sigma / scale, grid)) {
                Vec2 u = v;
                if (noise.field_angular_sigma > 0.0) {
                    const double theta = noise.field_angular_sigma * angle_noise(rng);
                    const double c = std::cos(theta), s = std::sin(theta);
                    u = {c * v.x - s * v.y, s * v.x + c * v.y};
                }
                const auto i = static_cast<std::size_t>(px.y) * grid.width + px.x;
                data[2 * i] += u.x;
                data[2 * i + 1] += u.y;
                ++counts[i];
            }
        }
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i] > 1) {
                data[2 * i] /= counts[i];
                data[2 * i + 1] /= counts[i];
            }
        }
    }
    return stack;
}

FlowGrid oracle_optical_flow(const FramePoses& gt_prev, const FramePoses& gt_curr, GridDims image, double radius) {
    if (!(radius >= 1.0)) throw InputError("flow splat radius must be at least 1 px");
    FlowGrid flow{GridField(image)};
    std::vector<double> weights(static_cast<std::size_t>(image.width) * image.height, 0.0);
    auto data = flow.displacement.data();

    std::map<int, const Pose*> prev_by_id;
    for (const auto& p : gt_prev.poses) {
        if (p.id) prev_by_id[*p.id] = &p;
    }
    const double s2 = 2.0 * (0.5 * radius) * (0.5 * radius);
    for (const auto& curr : gt_curr.poses) {
        if (!curr.id) continue;
        auto it = prev_by_id.find(*curr.id);
        if (it == prev_by_id.end()) continue;
        for (std::size_t j = 0; j < curr.joint_count(); ++j) {
            if (!curr.has(j) || !it->second->has(j)) continue;
            const Vec2 from = it->second->at(j).position();
            const Vec2 d = curr.at(j).position() - from;
            const int x0 = std::max(0, static_cast<int>(std::floor(from.x - radius)));
            const int x1 = std::min(image.width - 1, static_cast<int>(std::ceil(from.x + radius)));
            const int y0 = std::max(0, static_cast<int>(std::floor(from.y - radius)));
            const int y1 = std::min(image.height - 1, static_cast<int>(std::ceil(from.y + radius)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const Vec2 q{x - from.x, y - from.y};
                    const double r2 = dot(q, q);
                    if (r2 > radius * radius) continue;
                    const double w = std::exp(-r2 / s2);
                    const auto i = static_cast<std::size_t>(y) * image.width + x;
                    data[2 * i] += w * d.x;
                    data[2 * i + 1] += w * d.y;
                    weights[i] += w;
                }
            }
        }
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > 0.0) {
            data[2 * i] /= weights[i];
            data[2 * i + 1] /= weights[i];
        }
    }
    return flow;
}

BeliefMap render_beliefmaps(const FramePoses& poses, std::size_t joint_count, GridDims image, double peak_sigma) {
    if (!(peak_sigma > 0.0)) throw InputError("peak_sigma must be positive");
    if (image.width < 1 || image.height < 1) throw InputError("image dimensions must be positive");
    BeliefMap map;
    map.dims = image;
    map.maps.assign(joint_count, std::vector<double>(static_cast<std::size_t>(image.width) * image.height, 0.0));
    const double reach = 4.0 * peak_sigma;
    for (const auto& pose : poses.poses) {
        for (std::size_t j = 0; j < std::min(joint_count, pose.joint_count()); ++j) {
            if (!pose.has(j)) continue;
            const Keypoint& k = pose.at(j);
            const int x0 = std::max(0, static_cast<int>(std::floor(k.x - reach)));
            const int x1 = std::min(image.width - 1, static_cast<int>(std::ceil(k.x + reach)));
            const int y0 = std::max(0, static_cast<int>(std::floor(k.y - reach)));
            const int y1 = std::min(image.height - 1, static_cast<int>(std::ceil(k.y + reach)));
            auto& m = map.maps[j];
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double r2 = (x - k.x) * (x - k.x) + (y - k.y) * (y - k.y);
                    const double v = k.confidence * std::exp(-r2 / (2.0 * peak_sigma * peak_sigma));
                    auto& cell = m[static_cast<std::size_t>(y) * image.width + x];
                    cell = std::max(cell, v);
                }
            }
        }
    }
    return map;
}

std::vector<std::vector<Keypoint>> nms_detect(const BeliefMap& map, double tau_nms) {
    if (!(tau_nms >= 0.0 && tau_nms <= 1.0)) throw InputError("tau_nms must lie in [0, 1]");
    const int w = map.dims.width;
    const int h = map.dims.height;
    std::vector<std::vector<Keypoint>> out(map.maps.size());
    std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h);
    std::vector<Pixel> stack;
    std::vector<Pixel> plateau;

    for (std::size_t j = 0; j < map.maps.size(); ++j) {
        std::fill(visited.begin(), visited.end(), 0);
        const auto value = [&](int x, int y) { return map.at(j, x, y); };
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double v = value(x, y);
                if (v < tau_nms || visited[static_cast<std::size_t>(y) * w + x]) continue;
                // Flood the plateau of equal values; it is a maximum if every
                // neighbor outside is strictly lower and at least one exists.
                plateau.clear();
                stack.assign(1, Pixel{x, y});
                visited[static_cast<std::size_t>(y) * w + x] = 1;
                bool is_max = true;
                bool has_border = false;
                while (!stack.empty()) {
                    const Pixel p = stack.back();
                    stack.pop_back();
                    plateau.push_back(p);
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (dx == 0 && dy == 0) continue;
                            const int nx = p.x + dx, ny = p.y + dy;
                            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                            const double nv = value(nx, ny);
                            if (nv == v) {
                                auto& seen = visited[static_cast<std::size_t>(ny) * w + nx];
                                if (!seen) {
                                    seen = 1;
                                    stack.push_back({nx, ny});
                                }
                            } else if (nv > v) {
                                is_max = false;
                            } else {
                                has_border = true;
                            }
                        }
                    }
                }
                if (is_max && has_border) {
                    const Pixel first = *std::min_element(plateau.begin(), plateau.end());
                    out[j].emplace_back(first.x, first.y, std::min(1.0, v));
                }
            }
        }
    }
    return out;
}

std::vector<FramePoses> nms_filter(const std::vector<FramePoses>& detections, std::size_t joint_count,
                                   GridDims image, double tau_nms, double peak_sigma) {
    constexpr double kSnap = 1.5;
    std::vector<FramePoses> out;
    out.reserve(detections.size());
    for (const auto& frame : detections) {
        const auto peaks = nms_detect(render_beliefmaps(frame, joint_count, image, peak_sigma), tau_nms);
        FramePoses kept;
        kept.index = frame.index;
        for (const auto& pose : frame.poses) {
            Pose p = pose;
            for (std::size_t j = 0; j < p.joint_count() && j < joint_count; ++j) {
                if (!p.has(j)) continue;
                const Vec2 pos = p.at(j).position();
                const bool survives = std::any_of(peaks[j].begin(), peaks[j].end(), [&](const Keypoint& k) {
                    return norm(k.position() - pos) <= kSnap;
                });
                if (!survives) p.joints[j].reset();
            }
            if (!p.empty()) kept.poses.push_back(std::move(p));
        }
        out.push_back(std::move(kept));
    }
    return out;
}

}  // namespace tfftrack
