// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--allow-red AC2,...] [--only AC4]
//
// Exits 0 when every criterion passes or is listed in --allow-red.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "tfftrack/cli.hpp"
#include "tfftrack/io.hpp"

using namespace tfftrack;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

// AC1 --------------------------------------------------------------------

Outcome field_support() {
    const auto t0 = Clock::now();
    const GridDims dims{64, 64};
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> coord(-4.0, 68.0);
    std::uniform_real_distribution<double> width(0.3, 3.0);
    int mismatched_pairs = 0;
    for (int k = 0; k < 1000; ++k) {
        const Keypoint a{coord(rng), coord(rng)}, b{coord(rng), coord(rng)};
        const double sigma = k % 2 == 0 ? 1.0 : width(rng);
        const auto expected = oracle::brute_support(a, b, sigma, dims);
        const auto field = render_person_tff(a, b, sigma, dims);
        std::vector<Pixel> nonzero;
        for (int y = 0; y < dims.height; ++y)
            for (int x = 0; x < dims.width; ++x)
                if (field.at(x, y) != Vec2{}) nonzero.push_back({x, y});
        if (nonzero != expected || tff_support(a, b, sigma, dims) != expected) ++mismatched_pairs;
    }
    const double secs = seconds_since(t0);
    return {mismatched_pairs == 0 && secs < 10.0,
            fmt("1000 pairs on 64x64, %d disagreeing, %.2f s", mismatched_pairs, secs)};
}

// AC2 --------------------------------------------------------------------

Outcome quadrature() {
    const GridDims dims{64, 64};
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> coord(2.0, 61.0);
    const SimilarityParams params;
    double worst = 0.0;
    int within = 0;
    int n = 0;
    while (n < 200) {
        const Keypoint a{coord(rng), coord(rng)}, b{coord(rng), coord(rng)};
        if (std::hypot(b.x - a.x, b.y - a.y) < params.tau_delta) continue;
        const auto field = render_person_tff(a, b, 1.0, dims);
        const double err = std::abs(flow_aggregate(field, a, b, 10) - oracle::line_integral(field, a, b, 10000));
        worst = std::max(worst, err);
        if (err <= 1e-3) ++within;
        ++n;
    }

    double const_err = 0.0;
    for (int k = 0; k < 50; ++k) {
        const Keypoint a{coord(rng), coord(rng)}, b{coord(rng), coord(rng)};
        const auto d = joint_displacement(a, b);
        GridField field(dims);
        for (int y = 0; y < dims.height; ++y)
            for (int x = 0; x < dims.width; ++x) field.set(x, y, d.direction);
        const_err = std::max(const_err, std::abs(flow_aggregate(field, a, b, 10) - 1.0));
    }
    return {within == n && const_err <= 1e-6,
            fmt("GT ribbons sigma=1: %d/%d within 1e-3 of 10000-step oracle (worst %.4f); "
                "constant aligned field error %.1e",
                within, n, worst, const_err)};
}

// AC3 --------------------------------------------------------------------

Outcome assignment() {
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> size(1, 6);
    std::uniform_real_distribution<double> value(-0.5, 1.0);
    const MatchPolicy policy;
    int hungarian_wrong = 0, greedy_above = 0;
    for (int k = 0; k < 1000; ++k) {
        PotentialMatrix m(static_cast<std::size_t>(size(rng)), static_cast<std::size_t>(size(rng)));
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = value(rng);
        const auto brute = oracle::brute_assign(m, policy.accept_threshold);
        const auto h = hungarian_assign(m, policy);
        const auto g = greedy_assign(m, policy);
        h.check_invariants(m.rows(), m.cols());
        g.check_invariants(m.rows(), m.cols());
        if (std::abs(h.total(m) - brute.total) > 1e-12 || (brute.optima == 1 && h.pairs != brute.pairs)) {
            ++hungarian_wrong;
        }
        if (g.total(m) > h.total(m) + 1e-12) ++greedy_above;
    }
    const PotentialMatrix counter{{0.9, 0.8}, {0.7, 0.1}};
    const double greedy_total = greedy_assign(counter, policy).total(counter);
    const double optimal_total = hungarian_assign(counter, policy).total(counter);
    const bool counter_ok = std::abs(greedy_total - 1.0) < 1e-12 && std::abs(optimal_total - 1.5) < 1e-12;
    return {hungarian_wrong == 0 && greedy_above == 0 && counter_ok,
            fmt("1000 random matrices up to 6x6: %d Hungarian/brute-force mismatches, greedy above optimum %d "
                "times; 2x2 case greedy %.1f vs optimal %.1f",
                hungarian_wrong, greedy_above, greedy_total, optimal_total)};
}

// AC4 / AC5 --------------------------------------------------------------

ScenarioConfig perfect_scenario(int s) {
    ScenarioConfig c;
    c.seed = static_cast<std::uint64_t>(4000 + s);
    c.persons = 3 + s % 6;
    c.frames = 30 + (s * 37) % 71;
    const MotionModel models[] = {MotionModel::Crossing, MotionModel::Linear, MotionModel::Crossing,
                                  MotionModel::Sinusoidal, MotionModel::Crossing, MotionModel::RandomWalk};
    c.motion.model = models[s % 6];
    return c;
}

Outcome perfect_oracle() {
    const auto t0 = Clock::now();
    int failures = 0, crossings = 0;
    std::int64_t switches = 0;
    double worst_mota = 1.0;
    for (int s = 0; s < 20; ++s) {
        const auto config = perfect_scenario(s);
        if (config.motion.model == MotionModel::Crossing) ++crossings;
        const auto gt = generate_sequence(config);
        const auto detections = corrupt_detections(gt, NoiseConfig{}, static_cast<std::uint64_t>(s));
        cli::FieldInputs inputs;
        inputs.oracle = &gt;
        const auto source = cli::make_field_source(inputs, gt.skeleton.joint_count(), gt.image);
        const auto tracks = track_sequence(detections, TrackerConfig{}, source);
        const auto report = evaluate_mot(tracks, gt);
        worst_mota = std::min(worst_mota, report.total.mota());
        switches += report.total.id_switches;
        if (report.total.mota() != 1.0 || report.total.id_switches != 0) ++failures;
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 60.0,
            fmt("20 scenarios (%d crossing), worst MOTA %.1f, %lld switches, %.1f s", crossings, 100.0 * worst_mota,
                static_cast<long long>(switches), secs)};
}

Outcome baseline_ordering() {
    const auto t0 = Clock::now();
    constexpr int kSeeds = 20;
    std::vector<double> mean(5, 0.0);
    std::vector<std::string> names;
    int inconsistent_columns = 0;
    for (int s = 0; s < kSeeds; ++s) {
        ScenarioConfig config;
        config.seed = static_cast<std::uint64_t>(5000 + s);
        config.persons = 4 + s % 4;
        config.frames = 40;
        config.motion.model = MotionModel::Crossing;
        config.motion.speed_min = 8.0;
        config.motion.speed_max = 14.0;
        const auto gt = generate_sequence(config);

        NoiseConfig noise;
        noise.jitter_sigma = 1.5;
        noise.drop_prob = 0.1;
        noise.spurious_rate = 0.5;
        noise.field_angular_sigma = 0.2;
        noise.field_dropout = 0.05;
        const auto detections = corrupt_detections(gt, noise, static_cast<std::uint64_t>(s));
        cli::FieldInputs inputs;
        inputs.oracle = &gt;
        inputs.field_noise = noise;
        inputs.seed = static_cast<std::uint64_t>(s);
        const auto source = cli::make_field_source(inputs, gt.skeleton.joint_count(), gt.image);
        const auto rows = cli::compare_metrics(detections, gt, TrackerConfig{}, source);
        names.clear();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            names.emplace_back(display_name(rows[i].kind));
            mean[i] += rows[i].report.total.mota() / kSeeds;
            const auto& a = rows[i].report.total;
            const auto& b = rows[0].report.total;
            if (a.precision() != b.precision() || a.recall() != b.recall()) ++inconsistent_columns;
        }
    }
    // table order: PCKh, IoU, OKS, OpticalFlow, TFF
    const double pckh = mean[0], iou = mean[1], oks = mean[2], tff = mean[4];
    std::string table;
    for (std::size_t i = 0; i < names.size(); ++i) table += fmt(" %s %.1f", names[i].c_str(), 100.0 * mean[i]);
    return {tff >= oks && tff >= iou && tff > pckh && inconsistent_columns == 0,
            fmt("mean MOTA over %d noisy crossing seeds:%s; Prec/Rec differ across rows %d times; %.1f s", kSeeds,
                table.c_str(), inconsistent_columns, seconds_since(t0))};
}

// AC6 --------------------------------------------------------------------

SkeletonConfig two_joint_skeleton() {
    SkeletonConfig s;
    s.joint_names = {"head_top", "neck"};
    s.head_pair = {0, 1};
    s.oks_kappas = {0.079, 0.079};
    return s;
}

Pose two_joint_pose(double x, double y, std::optional<int> id = std::nullopt) {
    Pose p(2);
    p.joints[0] = Keypoint{x, y};
    p.joints[1] = Keypoint{x, y + 10.0};
    p.id = id;
    return p;
}

Outcome clear_mot() {
    int failed_cases = 0;
    std::vector<std::string> notes;

    {  // one missed joint out of four
        SequenceAnnotation gt;
        gt.skeleton = two_joint_skeleton();
        gt.frames = {{0, {two_joint_pose(10, 10, 0)}}, {1, {two_joint_pose(12, 10, 0)}}};
        TrackSet pred;
        pred.start(0, two_joint_pose(10, 10));
        Pose partial = two_joint_pose(12, 10);
        partial.joints[1].reset();
        pred.extend(0, 1, partial);
        const auto r = evaluate_mot(pred, gt);
        if (r.total.mota() != 0.75 || r.total.misses != 1) ++failed_cases;
        notes.push_back(fmt("miss case MOTA %.2f", r.total.mota()));
    }
    {  // identities swapped after frame 1
        SequenceAnnotation gt;
        gt.skeleton = two_joint_skeleton();
        for (int f = 0; f < 4; ++f) gt.frames.push_back({f, {two_joint_pose(10, 10, 0), two_joint_pose(60, 10, 1)}});
        TrackSet pred;
        pred.start(0, two_joint_pose(10, 10));
        pred.start(0, two_joint_pose(60, 10));
        for (int f = 1; f < 4; ++f) {
            const bool swapped = f >= 2;
            pred.extend(0, f, two_joint_pose(swapped ? 60 : 10, 10));
            pred.extend(1, f, two_joint_pose(swapped ? 10 : 60, 10));
        }
        const auto r = evaluate_mot(pred, gt);
        // 2 identities x 2 joints each switch once, 16 ground-truth joints
        if (r.total.id_switches != 4 || r.total.mota() != 1.0 - 4.0 / 16.0) ++failed_cases;
        notes.push_back(fmt("swap case %lld switches, MOTA %.2f", static_cast<long long>(r.total.id_switches),
                            r.total.mota()));
    }

    // Brute-force recount over a corpus of small noisy sequences.
    int corpus = 0, disagreements = 0;
    const PotentialKind kinds[] = {PotentialKind::IoU, PotentialKind::OKS, PotentialKind::PCKh};
    for (int s = 0; s < 120; ++s) {
        ScenarioConfig config;
        config.seed = static_cast<std::uint64_t>(6000 + s);
        config.persons = 1 + s % 3;
        config.frames = 2 + s % 4;
        config.motion.model = s % 2 == 0 ? MotionModel::Crossing : MotionModel::RandomWalk;
        config.motion.speed_min = 4.0;
        config.motion.speed_max = 20.0;
        if (s % 5 == 0) config.ignore_regions.push_back({0, 10, BBox{0, 0, 160, 120}});
        const auto gt = generate_sequence(config);
        NoiseConfig noise;
        noise.jitter_sigma = 3.0;
        noise.drop_prob = 0.2;
        noise.spurious_rate = 0.8;
        const auto detections = corrupt_detections(gt, noise, static_cast<std::uint64_t>(s));
        TrackerConfig tracker;
        tracker.kind = kinds[s % 3];
        const auto tracks = track_sequence(detections, tracker, FieldSource{});
        const auto report = evaluate_mot(tracks, gt);
        const auto brute = oracle::brute_mot(tracks, gt, kDefaultEvalGate);
        const auto& t = report.total;
        ++corpus;
        if (t.true_positives != brute.tp || t.false_positives != brute.fp || t.misses != brute.misses ||
            t.id_switches != brute.switches || t.gt_count != brute.gt ||
            std::abs(t.distance_sum - brute.distance_sum) > 1e-9) {
            ++disagreements;
        }
    }
    notes.push_back(fmt("brute-force recount agrees on %d/%d sequences", corpus - disagreements, corpus));
    std::string detail;
    for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
    return {failed_cases == 0 && disagreements == 0, detail};
}

// AC7 --------------------------------------------------------------------

Outcome default_constants() {
    int wrong = 0;
    const SupportParams support;
    const SimilarityParams similarity;
    const MatchPolicy policy;
    if (support.tau_delta != 2.0 || similarity.tau_delta != 2.0) ++wrong;
    if (support.sigma != 1.0) ++wrong;
    if (kDefaultTauNms != 0.2) ++wrong;
    if (similarity.sigma_flow != 30.0) ++wrong;
    if (policy.min_track_length != 7) ++wrong;

    std::ostringstream out, err;
    const int code = cli::run({"--help"}, out, err);
    std::ostringstream track_help, gen_help;
    cli::run({"track", "--help"}, track_help, err);
    cli::run({"generate", "--help"}, gen_help, err);
    const std::string top = out.str(), track = track_help.str(), gen = gen_help.str();
    const std::vector<std::pair<const std::string*, std::string>> needles{
        {&top, "--tau-delta 2"},         {&top, "--sigma 1"},         {&top, "--tau-nms 0.2"},
        {&top, "--sigma-flow 30"},       {&top, "--min-track-length 7"}, {&track, "--tau-delta FLOAT [2]"},
        {&track, "--sigma FLOAT [1]"},   {&track, "--sigma-flow FLOAT [30]"},
        {&track, "--min-track-length INT [7]"}, {&gen, "[0.2]"}};
    int missing = 0;
    for (const auto& [text, needle] : needles)
        if (text->find(needle) == std::string::npos) ++missing;

    TrackSet tracks;
    Pose p = two_joint_pose(5, 5);
    p.joints.resize(15);
    tracks.start(0, p);
    tracks.start(0, p);
    for (int f = 1; f < 7; ++f) tracks.extend(1, f, p);
    for (int f = 1; f < 6; ++f) tracks.extend(0, f, p);
    const auto kept = prune_tracks(tracks, policy.min_track_length);
    const bool prune_ok = kept.size() == 1 && kept.tracks()[0].length() == 7;
    return {wrong == 0 && missing == 0 && code == 0 && prune_ok,
            fmt("%d default mismatches, %d help strings missing, pruning keeps length %zu of {6, 7}", wrong, missing,
                kept.empty() ? std::size_t{0} : kept.tracks()[0].length())};
}

// AC8 --------------------------------------------------------------------

Outcome loss_sanity() {
    const GridDims dims{32, 24};
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto target = FlowFieldStack::zeros(3, dims);
    for (auto& f : target.fields)
        for (auto& v : f.data()) v = u(rng);
    IgnoreMask mask(dims);
    const double identical = tff_loss(target, target, mask);

    mask.mark_ignored(BBox{4, 4, 12, 10});
    auto perturbed = target;
    for (auto& f : perturbed.fields)
        for (int y = 4; y <= 10; ++y)
            for (int x = 4; x <= 12; ++x) f.set(x, y, {u(rng) * 5, u(rng) * 5});
    const double masked = tff_loss(perturbed, target, mask);

    auto zero = FlowFieldStack::zeros(3, dims);
    auto one_off = zero;
    one_off.fields[1].set(20, 15, {0.6, 0.8});
    const double single = tff_loss(one_off, zero, IgnoreMask(dims));
    return {identical == 0.0 && masked == 0.0 && single == 1.0,
            fmt("identical %.1f, masked perturbation %.1f, single unit-vector error %.17g", identical, masked,
                single)};
}

// AC9 --------------------------------------------------------------------

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_tree(const fs::path& a, const fs::path& b, int& files) {
    std::vector<fs::path> left, right;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) left.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) right.push_back(fs::relative(e.path(), b));
    std::sort(left.begin(), left.end());
    std::sort(right.begin(), right.end());
    if (left != right || left.empty()) return false;
    for (const auto& rel : left) {
        ++files;
        if (file_bytes(a / rel) != file_bytes(b / rel)) return false;
    }
    return true;
}

Outcome round_trip() {
    const fs::path dir = fs::temp_directory_path() / fmt("tfftrack_acceptance_%d", static_cast<int>(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<std::string> broken;

    io::write_text(dir / "scenario.yaml",
                   "seed: 11\nframes: 12\npersons: 3\nimage: {width: 160, height: 120}\n"
                   "motion: {model: crossing, speed_min: 3, speed_max: 6}\n"
                   "noise: {jitter_sigma: 1.0, drop_prob: 0.1, spurious_rate: 0.5}\n"
                   "ignore_regions:\n  - {first_frame: 0, last_frame: 5, box: [0, 0, 30, 30]}\n"
                   "outputs: {fields: true, flow: true}\n");

    std::ostringstream out, err;
    auto run = [&](std::vector<std::string> args) {
        const int code = cli::run(args, out, err);
        if (code != 0) broken.push_back(args[0] + " exit " + std::to_string(code) + ": " + err.str());
    };
    const std::string a = (dir / "a").string(), b = (dir / "b").string();
    for (const auto& d : {a, b}) {
        run({"generate", (dir / "scenario.yaml").string(), "--out", d});
        run({"track", d + "/detections.json", "--out", d + "/tracks.json", "--fields", d + "/fields"});
        run({"track", d + "/detections.json", "--out", d + "/tracks_flow.json", "--metric", "flow", "--flow",
             d + "/flow"});
        run({"track", d + "/detections.json", "--out", d + "/tracks_noisy.json", "--oracle", d + "/gt.json",
             "--field-angular-sigma", "0.3", "--seed", "5"});
        run({"eval", d + "/tracks.json", d + "/gt.json", "--out", d + "/report.json"});
        run({"compare", d + "/detections.json", d + "/gt.json", "--out", d + "/compare.json"});
        run({"dump-field", d + "/fields/pair_000003.tff", d + "/field.ppm"});
    }
    int files = 0;
    if (!same_tree(a, b, files)) broken.push_back("command outputs differ between identical runs");

    // reader -> writer reproduces every file byte for byte
    int formats = 0;
    auto check = [&](const fs::path& p, const std::string& rewritten) {
        ++formats;
        if (file_bytes(p) != rewritten) broken.push_back(p.filename().string() + " does not round-trip");
    };
    auto dump = [](const nlohmann::json& j) { return j.dump(2) + "\n"; };
    const fs::path ad(a);
    const auto gt = io::sequence_from_json(io::read_json(ad / "gt.json"));
    check(ad / "gt.json", dump(io::sequence_to_json(gt)));
    check(ad / "detections.json", dump(io::sequence_to_json(io::sequence_from_json(io::read_json(ad / "detections.json")))));
    SkeletonConfig skeleton;
    const auto tracks = io::tracks_from_json(io::read_json(ad / "tracks.json"), &skeleton);
    check(ad / "tracks.json", dump(io::tracks_to_json(tracks, skeleton)));
    const auto tff_bytes = io::read_bytes(ad / "fields/pair_000003.tff");
    const auto stack = io::decode_fields(tff_bytes);
    check(ad / "fields/pair_000003.tff", [&] {
        const auto v = io::encode_fields(stack);
        return std::string(v.begin(), v.end());
    }());
    const auto flow = io::decode_flow(io::read_bytes(ad / "flow/pair_000003.flo"));
    check(ad / "flow/pair_000003.flo", [&] {
        const auto v = io::encode_flow(flow);
        return std::string(v.begin(), v.end());
    }());

    // in-memory values survive a write/read cycle exactly
    if (io::decode_fields(io::encode_fields(stack)) != stack) broken.push_back("TFF1 value round trip");
    if (io::decode_flow(io::encode_flow(flow)) != flow) broken.push_back("FLO1 value round trip");
    if (io::sequence_from_json(io::sequence_to_json(gt)) != gt) broken.push_back("sequence value round trip");
    if (io::tracks_from_json(io::tracks_to_json(tracks, skeleton)) != tracks) broken.push_back("tracks value round trip");

    fs::remove_all(dir);
    std::string detail = fmt("%d output files identical across two runs, %d formats rewrite byte-identically", files,
                             formats);
    for (const auto& m : broken) detail += "; " + m;
    return {broken.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<std::string> allow_red, only;
    app.add_option("--allow-red", allow_red, "Criteria known to fail; reported but not fatal")->delimiter(',');
    app.add_option("--only", only, "Run just these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::tuple<std::string, std::string, std::function<Outcome()>>> criteria{
        {"AC1", "field support equals brute force", field_support},
        {"AC2", "quadrature agrees with fine oracle", quadrature},
        {"AC3", "assignment optimality", assignment},
        {"AC4", "perfect-oracle tracking", perfect_oracle},
        {"AC5", "baseline ordering", baseline_ordering},
        {"AC6", "CLEAR-MOT correctness", clear_mot},
        {"AC7", "published constants as defaults", default_constants},
        {"AC8", "loss sanity", loss_sanity},
        {"AC9", "round trip and determinism", round_trip},
    };
    const std::set<std::string> allowed(allow_red.begin(), allow_red.end());
    const std::set<std::string> selected(only.begin(), only.end());
    int fatal = 0;
    for (const auto& [id, title, fn] : criteria) {
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool tolerated = !o.pass && allowed.count(id);
        std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << (tolerated ? " (known)" : "") << "  " << title
                  << ": " << o.detail << std::endl;
        if (!o.pass && !tolerated) ++fatal;
    }
    return fatal == 0 ? 0 : 1;
}
