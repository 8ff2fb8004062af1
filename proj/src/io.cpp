#include "tfftrack/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace tfftrack::io {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json joints_to_json(const Pose& pose) {
    json joints = json::array();
    for (const auto& k : pose.joints) {
        if (k) {
            joints.push_back({k->x, k->y, k->confidence});
        } else {
            joints.push_back(nullptr);
        }
    }
    return joints;
}

Pose pose_from_json(const json& joints) {
    if (!joints.is_array()) throw InputError("pose joints must be an array");
    Pose pose(joints.size());
    for (std::size_t j = 0; j < joints.size(); ++j) {
        const auto& k = joints[j];
        if (k.is_null()) continue;
        if (!k.is_array() || (k.size() != 3 && k.size() != 2)) {
            throw InputError("joint must be null or [x, y, confidence]");
        }
        const double conf = k.size() == 3 ? k[2].get<double>() : 1.0;
        pose.joints[j] = Keypoint(k[0].get<double>(), k[1].get<double>(), conf);
    }
    return pose;
}

json skeleton_to_json(const SkeletonConfig& s) {
    return {{"joint_names", s.joint_names},
            {"head_pair", {s.head_pair.first, s.head_pair.second}},
            {"oks_kappas", s.oks_kappas}};
}

SkeletonConfig skeleton_from_json(const json& j) {
    SkeletonConfig s;
    s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
    const auto& hp = j.at("head_pair");
    s.head_pair = {hp.at(0).get<int>(), hp.at(1).get<int>()};
    s.oks_kappas = j.at("oks_kappas").get<std::vector<double>>();
    s.validate();
    return s;
}

template <typename Fn>
auto wrap_json_errors(Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed JSON document: ") + e.what());
    }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
    return v;
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

float get_f32(const std::vector<std::uint8_t>& in, std::size_t at) { return std::bit_cast<float>(get_u32(in, at)); }

constexpr std::size_t kHeaderSize = 16;

std::vector<std::uint8_t> encode_grids(const char* magic, const std::vector<const GridField*>& grids) {
    const GridDims dims = grids.empty() ? GridDims{} : grids.front()->dims();
    std::vector<std::uint8_t> out(magic, magic + 4);
    put_u32(out, static_cast<std::uint32_t>(dims.width));
    put_u32(out, static_cast<std::uint32_t>(dims.height));
    put_u32(out, static_cast<std::uint32_t>(grids.size()));
    out.reserve(kHeaderSize + grids.size() * dims.width * dims.height * 8);
    for (const auto* g : grids) {
        if (g->dims() != dims) throw InputError("all grids in a dump must share dimensions");
        for (double v : g->data()) put_f32(out, v);
    }
    return out;
}

std::vector<GridField> decode_grids(const char* magic, const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), magic, 4) != 0) {
        throw InputError(std::string("not a ") + magic + " file");
    }
    const auto width = get_u32(bytes, 4);
    const auto height = get_u32(bytes, 8);
    const auto count = get_u32(bytes, 12);
    const std::uint64_t cells = static_cast<std::uint64_t>(width) * height;
    if (width == 0 || height == 0 || bytes.size() != kHeaderSize + cells * count * 8) {
        throw InputError(std::string("truncated or oversized ") + magic + " file");
    }
    std::vector<GridField> grids;
    grids.reserve(count);
    std::size_t at = kHeaderSize;
    for (std::uint32_t k = 0; k < count; ++k) {
        GridField g(GridDims{static_cast<int>(width), static_cast<int>(height)});
        for (double& v : g.data()) {
            const float f = get_f32(bytes, at);
            if (!std::isfinite(f)) throw InputError(std::string("non-finite value in ") + magic + " file");
            v = f;
            at += 4;
        }
        grids.push_back(std::move(g));
    }
    return grids;
}

// HSV with s = 1: hue in degrees, value in [0, 1].
std::array<std::uint8_t, 3> hsv_to_rgb(double hue, double value) {
    const double c = value;
    const double h = hue / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h) % 6) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, b = x; break;
        case 3: g = x, b = c; break;
        case 4: r = x, b = c; break;
        default: r = c, b = x; break;
    }
    const auto to8 = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    return {to8(r), to8(g), to8(b)};
}

// ---- scenario YAML ----

[[noreturn]] void fail_at(const YAML::Node& node, const std::string& message) {
    const auto mark = node.Mark();
    if (mark.is_null()) throw InputError("scenario: " + message);
    throw InputError("scenario line " + std::to_string(mark.line + 1) + ": " + message);
}

void check_keys(const YAML::Node& node, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) fail_at(node, "expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            fail_at(kv.first, "unknown key '" + key + "'");
        }
    }
}

template <typename T>
void read_opt(const YAML::Node& parent, const char* key, T& out) {
    const auto node = parent[key];
    if (!node) return;
    try {
        out = node.as<T>();
    } catch (const YAML::Exception&) {
        fail_at(node, std::string("invalid value for '") + key + "'");
    }
}

MotionSpec parse_motion(const YAML::Node& node) {
    check_keys(node, {"model", "speed_min", "speed_max", "amplitude", "period", "cross_frame"});
    MotionSpec m;
    std::string model = std::string(to_string(m.model));
    read_opt(node, "model", model);
    try {
        m.model = parse_motion_model(model);
    } catch (const InputError& e) {
        fail_at(node["model"], e.what());
    }
    read_opt(node, "speed_min", m.speed_min);
    read_opt(node, "speed_max", m.speed_max);
    read_opt(node, "amplitude", m.amplitude);
    read_opt(node, "period", m.period);
    read_opt(node, "cross_frame", m.cross_frame);
    return m;
}

BBox parse_box(const YAML::Node& node) {
    if (!node.IsSequence() || node.size() != 4) fail_at(node, "box must be [x_min, y_min, x_max, y_max]");
    double v[4];
    for (std::size_t i = 0; i < 4; ++i) {
        try {
            v[i] = node[i].as<double>();
        } catch (const YAML::Exception&) {
            fail_at(node[i], "box coordinates must be numbers");
        }
    }
    const BBox b{v[0], v[1], v[2], v[3]};
    if (b.x_max < b.x_min || b.y_max < b.y_min) fail_at(node, "box corners out of order");
    return b;
}

}  // namespace

json sequence_to_json(const SequenceAnnotation& seq) {
    json frames = json::array();
    for (const auto& f : seq.frames) {
        json poses = json::array();
        for (const auto& p : f.poses) {
            json pose;
            if (p.id) pose["id"] = *p.id;
            pose["joints"] = joints_to_json(p);
            poses.push_back(std::move(pose));
        }
        frames.push_back({{"index", f.index}, {"poses", std::move(poses)}});
    }
    json regions = json::array();
    for (const auto& r : seq.ignore_regions) {
        regions.push_back({{"first_frame", r.first_frame},
                           {"last_frame", r.last_frame},
                           {"box", {r.box.x_min, r.box.y_min, r.box.x_max, r.box.y_max}}});
    }
    return {{"skeleton", skeleton_to_json(seq.skeleton)},
            {"image", {{"width", seq.image.width}, {"height", seq.image.height}}},
            {"frames", std::move(frames)},
            {"ignore_regions", std::move(regions)}};
}

SequenceAnnotation sequence_from_json(const json& j) {
    return wrap_json_errors([&] {
        SequenceAnnotation seq;
        if (j.contains("skeleton")) seq.skeleton = skeleton_from_json(j.at("skeleton"));
        if (j.contains("image")) {
            seq.image = {j.at("image").at("width").get<int>(), j.at("image").at("height").get<int>()};
        }
        for (const auto& f : j.at("frames")) {
            FramePoses frame;
            frame.index = f.at("index").get<int>();
            for (const auto& p : f.at("poses")) {
                Pose pose = pose_from_json(p.at("joints"));
                if (p.contains("id") && !p.at("id").is_null()) pose.id = p.at("id").get<int>();
                frame.poses.push_back(std::move(pose));
            }
            seq.frames.push_back(std::move(frame));
        }
        if (j.contains("ignore_regions")) {
            for (const auto& r : j.at("ignore_regions")) {
                const auto& b = r.at("box");
                seq.ignore_regions.push_back({r.at("first_frame").get<int>(),
                                              r.at("last_frame").get<int>(),
                                              {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                                               b.at(3).get<double>()}});
            }
        }
        if (seq.image.width < 1 || seq.image.height < 1) throw InputError("image dimensions must be positive");
        validate_frames(seq.frames, seq.skeleton.joint_count());
        return seq;
    });
}

json tracks_to_json(const TrackSet& tracks, const SkeletonConfig& skeleton) {
    json out_tracks = json::array();
    for (const auto& t : tracks.tracks()) {
        json entries = json::array();
        for (const auto& e : t.entries) {
            entries.push_back({{"frame", e.frame}, {"joints", joints_to_json(e.pose)}});
        }
        out_tracks.push_back({{"id", t.id}, {"birth_frame", t.birth_frame}, {"entries", std::move(entries)}});
    }
    return {{"skeleton", skeleton_to_json(skeleton)}, {"next_id", tracks.next_id()}, {"tracks", std::move(out_tracks)}};
}

TrackSet tracks_from_json(const json& j, SkeletonConfig* skeleton) {
    return wrap_json_errors([&] {
        SkeletonConfig s = j.contains("skeleton") ? skeleton_from_json(j.at("skeleton")) : SkeletonConfig::posetrack15();
        TrackSet tracks;
        for (const auto& t : j.at("tracks")) {
            Track track;
            track.id = t.at("id").get<int>();
            track.birth_frame = t.at("birth_frame").get<int>();
            for (const auto& e : t.at("entries")) {
                Pose pose = pose_from_json(e.at("joints"));
                if (pose.joint_count() != s.joint_count()) throw InputError("track pose does not match the skeleton");
                if (!track.entries.empty() && e.at("frame").get<int>() <= track.entries.back().frame) {
                    throw InputError("track entries must be in increasing frame order");
                }
                track.entries.push_back({e.at("frame").get<int>(), std::move(pose)});
            }
            tracks.insert(std::move(track));
        }
        // Ids of pruned tracks stay retired.
        tracks.reserve_ids(j.value("next_id", 0));
        tracks.check_invariants();
        if (skeleton) *skeleton = s;
        return tracks;
    });
}

json mot_report_to_json(const MotReport& report) {
    const auto row = [](const MotCounts& c) {
        return json{{"mota", number_or_null(c.mota())},
                    {"motp", number_or_null(c.motp())},
                    {"precision", number_or_null(c.precision())},
                    {"recall", number_or_null(c.recall())},
                    {"mota_percent", number_or_null(100.0 * c.mota())},
                    {"motp_percent", number_or_null(100.0 * c.motp())},
                    {"true_positives", c.true_positives},
                    {"false_positives", c.false_positives},
                    {"misses", c.misses},
                    {"id_switches", c.id_switches},
                    {"gt_count", c.gt_count}};
    };
    json joints = json::array();
    for (std::size_t j = 0; j < report.per_joint.size(); ++j) {
        json r = row(report.per_joint[j]);
        r["joint"] = report.joint_names[j];
        joints.push_back(std::move(r));
    }
    return {{"per_joint", std::move(joints)}, {"total", row(report.total)}};
}

json map_report_to_json(const MapReport& report) {
    json joints = json::array();
    for (std::size_t j = 0; j < report.per_joint_ap.size(); ++j) {
        joints.push_back({{"joint", report.joint_names[j]}, {"ap", number_or_null(report.per_joint_ap[j])}});
    }
    return {{"per_joint", std::move(joints)}, {"mean_ap", report.mean_ap}};
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

json read_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::uint8_t> encode_fields(const FlowFieldStack& stack) {
    stack.validate();
    std::vector<const GridField*> grids;
    for (const auto& f : stack.fields) grids.push_back(&f);
    return encode_grids("TFF1", grids);
}

FlowFieldStack decode_fields(const std::vector<std::uint8_t>& bytes, double scale) {
    FlowFieldStack stack;
    stack.fields = decode_grids("TFF1", bytes);
    stack.scale = scale;
    stack.validate();
    return stack;
}

std::vector<std::uint8_t> encode_flow(const FlowGrid& flow) { return encode_grids("FLO1", {&flow.displacement}); }

FlowGrid decode_flow(const std::vector<std::uint8_t>& bytes) {
    auto grids = decode_grids("FLO1", bytes);
    if (grids.size() != 1) throw InputError("FLO1 file must hold exactly one grid");
    return FlowGrid{std::move(grids.front())};
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    return {text.begin(), text.end()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> render_field_ppm(const FlowFieldStack& stack, int joint) {
    if (stack.fields.empty()) throw InputError("field stack is empty");
    if (joint >= static_cast<int>(stack.joint_count())) throw InputError("joint index out of range");
    const GridDims dims = stack.dims();
    const std::string header = "P6\n" + std::to_string(dims.width) + " " + std::to_string(dims.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + static_cast<std::size_t>(dims.width) * dims.height * 3);
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            Vec2 v{};
            if (joint >= 0) {
                v = stack.fields[static_cast<std::size_t>(joint)].at(x, y);
            } else {
                for (const auto& f : stack.fields) {
                    const Vec2 c = f.at(x, y);
                    if (norm(c) > norm(v)) v = c;
                }
            }
            double hue = std::atan2(v.y, v.x) * 180.0 / std::numbers::pi;
            if (hue < 0.0) hue += 360.0;
            const auto rgb = hsv_to_rgb(hue, std::min(1.0, norm(v)));
            out.insert(out.end(), rgb.begin(), rgb.end());
        }
    }
    return out;
}

Scenario parse_scenario(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw InputError("scenario line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root || root.IsNull()) throw InputError("scenario: empty document");
    check_keys(root, {"seed", "frames", "persons", "image", "scale", "articulation", "motion", "person_motions",
                      "occlusions", "ignore_regions", "noise", "detections", "outputs"});

    Scenario s;
    auto& c = s.config;
    read_opt(root, "seed", c.seed);
    read_opt(root, "frames", c.frames);
    read_opt(root, "persons", c.persons);
    read_opt(root, "articulation", c.articulation);
    if (const auto image = root["image"]) {
        check_keys(image, {"width", "height"});
        read_opt(image, "width", c.image.width);
        read_opt(image, "height", c.image.height);
    }
    if (const auto scale = root["scale"]) {
        check_keys(scale, {"min", "max"});
        read_opt(scale, "min", c.scale_min);
        read_opt(scale, "max", c.scale_max);
    }
    if (const auto motion = root["motion"]) c.motion = parse_motion(motion);
    if (const auto motions = root["person_motions"]) {
        if (!motions.IsSequence()) fail_at(motions, "person_motions must be a list");
        for (const auto& m : motions) c.person_motions.push_back(parse_motion(m));
        if (c.person_motions.size() != static_cast<std::size_t>(c.persons)) {
            fail_at(motions, "person_motions needs one entry per person");
        }
    }
    if (const auto occ = root["occlusions"]) {
        if (!occ.IsSequence()) fail_at(occ, "occlusions must be a list");
        for (const auto& o : occ) {
            check_keys(o, {"person", "first_frame", "last_frame", "joints"});
            Occlusion oc;
            read_opt(o, "person", oc.person);
            read_opt(o, "first_frame", oc.first_frame);
            read_opt(o, "last_frame", oc.last_frame);
            read_opt(o, "joints", oc.joints);
            if (oc.person < 0 || oc.person >= c.persons) fail_at(o, "occlusion refers to an unknown person");
            if (oc.last_frame < oc.first_frame) fail_at(o, "occlusion frame span is empty");
            c.occlusions.push_back(std::move(oc));
        }
    }
    if (const auto regions = root["ignore_regions"]) {
        if (!regions.IsSequence()) fail_at(regions, "ignore_regions must be a list");
        for (const auto& r : regions) {
            check_keys(r, {"first_frame", "last_frame", "box"});
            IgnoreRegion region;
            read_opt(r, "first_frame", region.first_frame);
            read_opt(r, "last_frame", region.last_frame);
            if (!r["box"]) fail_at(r, "ignore region needs a box");
            region.box = parse_box(r["box"]);
            c.ignore_regions.push_back(region);
        }
    }
    if (const auto noise = root["noise"]) {
        check_keys(noise, {"jitter_sigma", "drop_prob", "spurious_rate", "field_angular_sigma", "field_dropout"});
        read_opt(noise, "jitter_sigma", s.noise.jitter_sigma);
        read_opt(noise, "drop_prob", s.noise.drop_prob);
        read_opt(noise, "spurious_rate", s.noise.spurious_rate);
        read_opt(noise, "field_angular_sigma", s.noise.field_angular_sigma);
        read_opt(noise, "field_dropout", s.noise.field_dropout);
        try {
            s.noise.validate();
        } catch (const InputError& e) {
            fail_at(noise, e.what());
        }
    }
    if (const auto det = root["detections"]) {
        check_keys(det, {"seed", "tau_nms"});
        read_opt(det, "seed", s.detection_seed);
        if (det["tau_nms"]) {
            double tau = 0.0;
            read_opt(det, "tau_nms", tau);
            if (!(tau >= 0.0 && tau <= 1.0)) fail_at(det["tau_nms"], "tau_nms must lie in [0, 1]");
            s.tau_nms = tau;
        }
    }
    if (const auto out = root["outputs"]) {
        check_keys(out, {"fields", "flow", "sigma", "flow_radius"});
        read_opt(out, "fields", s.write_fields);
        read_opt(out, "flow", s.write_flow);
        read_opt(out, "sigma", s.sigma);
        read_opt(out, "flow_radius", s.flow_radius);
        if (!(s.sigma > 0.0)) fail_at(out, "sigma must be positive");
        if (!(s.flow_radius >= 1.0)) fail_at(out, "flow_radius must be at least 1");
    }
    try {
        c.validate();
    } catch (const InputError& e) {
        fail_at(root, e.what());
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text(path)); }

}  // namespace tfftrack::io
