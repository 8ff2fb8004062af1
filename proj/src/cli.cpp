#include "tfftrack/cli.hpp"

#include <cstdio>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "tfftrack/io.hpp"

namespace tfftrack::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string pair_file_name(int curr_frame, const char* extension) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "pair_%06d.%s", curr_frame, extension);
    return buf;
}

std::uint64_t pair_seed(std::uint64_t seed, int curr_frame) {
    // splitmix64 finalizer over (seed, frame)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(curr_frame) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

FieldSource make_field_source(const FieldInputs& inputs, std::size_t joint_count, GridDims image) {
    FieldSource source;
    if (inputs.oracle != nullptr) {
        const SequenceAnnotation* gt = inputs.oracle;
        const auto frame_of = [gt](int index) -> const FramePoses& {
            const FramePoses* f = gt->frame(index);
            if (f == nullptr) throw InputError("oracle ground truth has no frame " + std::to_string(index));
            return *f;
        };
        source.tff = [=](int prev, int curr) {
            return oracle_tff(frame_of(prev), frame_of(curr), joint_count, image, inputs.sigma, inputs.field_noise,
                              pair_seed(inputs.seed, curr));
        };
        source.flow = [=](int prev, int curr) {
            return oracle_optical_flow(frame_of(prev), frame_of(curr), image, inputs.flow_radius);
        };
        return source;
    }
    if (!inputs.fields_dir.empty()) {
        source.tff = [dir = inputs.fields_dir, joint_count](int, int curr) {
            auto stack = io::decode_fields(io::read_bytes(dir / pair_file_name(curr, "tff")));
            if (stack.joint_count() != joint_count) throw InputError("field dump joint count does not match skeleton");
            return stack;
        };
    }
    if (!inputs.flow_dir.empty()) {
        source.flow = [dir = inputs.flow_dir](int, int curr) {
            return io::decode_flow(io::read_bytes(dir / pair_file_name(curr, "flo")));
        };
    }
    return source;
}

std::vector<CompareRow> compare_metrics(const std::vector<FramePoses>& detections, const SequenceAnnotation& gt,
                                        const TrackerConfig& base, const FieldSource& source) {
    const std::vector<PotentialKind> kinds{PotentialKind::PCKh, PotentialKind::IoU, PotentialKind::OKS,
                                           PotentialKind::OpticalFlow, PotentialKind::TFF};
    std::vector<CompareRow> rows;
    for (auto kind : kinds) {
        TrackerConfig config = base;
        config.kind = kind;
        rows.push_back({kind, evaluate_mot(track_sequence(detections, config, source), gt)});
    }
    return rows;
}

std::string format_compare_table(const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(14) << "" << std::right << std::setw(8) << "MOTA" << std::setw(8) << "MOTP"
        << std::setw(8) << "Prec" << std::setw(8) << "Rec" << std::setw(8) << "IDsw" << '\n';
    for (const auto& row : rows) {
        const auto& t = row.report.total;
        out << std::left << std::setw(14) << display_name(row.kind) << std::right << std::fixed << std::setprecision(1)
            << std::setw(8) << 100.0 * t.mota() << std::setw(8) << 100.0 * t.motp() << std::setw(8)
            << 100.0 * t.precision() << std::setw(8) << 100.0 * t.recall() << std::setw(8) << t.id_switches << '\n';
    }
    return out.str();
}

namespace {

struct TrackOptions {
    std::string metric = "tff";
    double tau_delta = SimilarityParams{}.tau_delta;
    double sigma = SupportParams{}.sigma;
    double sigma_flow = SimilarityParams{}.sigma_flow;
    int min_track_length = MatchPolicy{}.min_track_length;
    double accept_threshold = MatchPolicy{}.accept_threshold;
    int quadrature_steps = SimilarityParams{}.quadrature_steps;
    std::uint64_t seed = 0;
    double pad_fraction = 0.0;
    double field_angular_sigma = 0.0;
    double field_dropout = 0.0;
    double flow_radius = 6.0;
    std::string fields_dir;
    std::string flow_dir;
    std::string oracle_path;
    // Inference scales for a learned field predictor. Recorded for
    // completeness; fields here come from dumps or the oracle at scale 1.
    std::vector<double> scales{1.0};
};

void add_tracking_options(CLI::App* cmd, TrackOptions& o, bool with_metric) {
    if (with_metric) {
        cmd->add_option("--metric", o.metric, "Association potential")
            ->check(CLI::IsMember({"tff", "iou", "pckh", "oks", "flow"}))
            ->capture_default_str();
    }
    cmd->add_option("--tau-delta", o.tau_delta, "Stationary-joint distance threshold (px)")->capture_default_str();
    cmd->add_option("--sigma", o.sigma, "Flow field ribbon half-width (px)")->capture_default_str();
    cmd->add_option("--sigma-flow", o.sigma_flow, "Optical flow tolerance radius (px)")->capture_default_str();
    cmd->add_option("--accept-threshold", o.accept_threshold, "Minimum potential to link a pair (strict)")
        ->capture_default_str();
    cmd->add_option("--quadrature-steps", o.quadrature_steps, "Midpoint samples along each temporal edge")
        ->capture_default_str();
    cmd->add_option("--pad-fraction", o.pad_fraction, "Box padding for the IoU metric")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Seed for oracle field noise")->capture_default_str();
    cmd->add_option("--field-angular-sigma", o.field_angular_sigma, "Oracle field angular noise (rad)")
        ->capture_default_str();
    cmd->add_option("--field-dropout", o.field_dropout, "Oracle field ribbon dropout probability")
        ->capture_default_str();
    cmd->add_option("--flow-radius", o.flow_radius, "Oracle optical flow splat radius (px)")->capture_default_str();
    cmd->add_option("--fields", o.fields_dir, "Directory of TFF1 dumps (pair_<frame>.tff)");
    cmd->add_option("--flow", o.flow_dir, "Directory of FLO1 dumps (pair_<frame>.flo)");
    cmd->add_option("--oracle", o.oracle_path, "Ground-truth JSON to render oracle fields and flow from");
    cmd->add_option("--scales", o.scales, "Field predictor input scales (accepted, not used by oracle or dumps)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

TrackerConfig tracker_config(const TrackOptions& o, const SkeletonConfig& skeleton) {
    TrackerConfig config;
    config.kind = parse_potential_kind(o.metric);
    config.similarity.tau_delta = o.tau_delta;
    config.similarity.sigma_flow = o.sigma_flow;
    config.similarity.quadrature_steps = o.quadrature_steps;
    config.policy.accept_threshold = o.accept_threshold;
    config.policy.min_track_length = o.min_track_length;
    config.skeleton = skeleton;
    config.pad_fraction = o.pad_fraction;
    config.similarity.validate();
    config.policy.validate();
    return config;
}

FieldInputs field_inputs(const TrackOptions& o, const SequenceAnnotation* oracle) {
    FieldInputs in;
    in.fields_dir = o.fields_dir;
    in.flow_dir = o.flow_dir;
    in.oracle = oracle;
    in.field_noise.field_angular_sigma = o.field_angular_sigma;
    in.field_noise.field_dropout = o.field_dropout;
    in.field_noise.validate();
    in.sigma = o.sigma;
    in.flow_radius = o.flow_radius;
    in.seed = o.seed;
    return in;
}

SequenceAnnotation load_ground_truth(const fs::path& path) {
    auto gt = io::sequence_from_json(io::read_json(path));
    gt.validate();
    return gt;
}

void require_inputs_for(PotentialKind kind, const TrackOptions& o) {
    if (kind == PotentialKind::TFF && o.fields_dir.empty() && o.oracle_path.empty()) {
        throw InputError("metric tff requires --fields or --oracle");
    }
    if (kind == PotentialKind::OpticalFlow && o.flow_dir.empty() && o.oracle_path.empty()) {
        throw InputError("metric flow requires --flow or --oracle");
    }
}

void write_field_dumps(const fs::path& dir, const io::Scenario& scenario, const SequenceAnnotation& gt) {
    const auto joints = gt.skeleton.joint_count();
    if (scenario.write_fields) fs::create_directories(dir / "fields");
    if (scenario.write_flow) fs::create_directories(dir / "flow");
    for (std::size_t t = 1; t < gt.frames.size(); ++t) {
        const auto& prev = gt.frames[t - 1];
        const auto& curr = gt.frames[t];
        if (scenario.write_fields) {
            const auto stack = oracle_tff(prev, curr, joints, gt.image, scenario.sigma, scenario.noise,
                                          pair_seed(scenario.config.seed, curr.index));
            io::write_bytes(dir / "fields" / pair_file_name(curr.index, "tff"), io::encode_fields(stack));
        }
        if (scenario.write_flow) {
            const auto flow = oracle_optical_flow(prev, curr, gt.image, scenario.flow_radius);
            io::write_bytes(dir / "flow" / pair_file_name(curr.index, "flo"), io::encode_flow(flow));
        }
    }
}

struct GenerateOverrides {
    std::optional<double> tau_nms;
    std::optional<std::uint64_t> seed;
    std::optional<double> sigma;
};

std::string generate_one(const fs::path& scenario_path, const fs::path& out_dir, const GenerateOverrides& over) {
    io::Scenario scenario = io::load_scenario(scenario_path);
    if (over.tau_nms) scenario.tau_nms = *over.tau_nms;
    if (over.seed) scenario.config.seed = *over.seed;
    if (over.sigma) scenario.sigma = *over.sigma;
    const auto gt = generate_sequence(scenario.config);
    auto detections = corrupt_detections(gt, scenario.noise, scenario.detection_seed);
    if (scenario.tau_nms) {
        detections = nms_filter(detections, gt.skeleton.joint_count(), gt.image, *scenario.tau_nms);
    }
    fs::create_directories(out_dir);
    io::write_json(out_dir / "gt.json", io::sequence_to_json(gt));
    SequenceAnnotation det_file;
    det_file.skeleton = gt.skeleton;
    det_file.image = gt.image;
    det_file.frames = detections;
    io::write_json(out_dir / "detections.json", io::sequence_to_json(det_file));
    write_field_dumps(out_dir, scenario, gt);

    std::size_t gt_poses = 0, det_poses = 0;
    for (const auto& f : gt.frames) gt_poses += f.poses.size();
    for (const auto& f : detections) det_poses += f.poses.size();
    std::ostringstream msg;
    msg << out_dir.string() << ": " << gt.frames.size() << " frames, " << gt_poses << " ground-truth poses, "
        << det_poses << " detections\n";
    return msg.str();
}

std::string defaults_footer() {
    const SupportParams support;
    const SimilarityParams similarity;
    const MatchPolicy policy;
    std::ostringstream s;
    s << "Defaults: --tau-delta " << support.tau_delta << ", --sigma " << support.sigma << ", --tau-nms "
      << kDefaultTauNms << ", --sigma-flow " << similarity.sigma_flow << ", --min-track-length "
      << policy.min_track_length << ", --quadrature-steps " << similarity.quadrature_steps << ".\n"
      << "Environment: TFFTRACK_THREADS caps the worker count.";
    return s.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Online multi-person pose tracking with temporal flow fields"};
    app.require_subcommand(1);
    app.footer(defaults_footer());

    // generate
    std::string scenario_path, gen_out;
    double tau_nms = kDefaultTauNms;
    bool use_nms = false;
    std::optional<std::uint64_t> gen_seed;
    std::optional<double> gen_sigma;
    auto* gen = app.add_subcommand("generate", "Synthesize ground truth, detections and oracle dumps from a scenario");
    gen->add_option("scenario", scenario_path, "Scenario YAML file, or a directory of them")->required();
    gen->add_option("--out", gen_out, "Output directory")->required();
    auto* tau_opt = gen->add_option("--tau-nms", tau_nms, "Belief-map NMS threshold for detections")
                        ->capture_default_str()
                        ->check(CLI::Range(0.0, 1.0));
    gen->add_flag("--nms", use_nms, "Filter detections through belief-map NMS at --tau-nms");
    gen->add_option("--seed", gen_seed, "Override the scenario seed");
    gen->add_option("--sigma", gen_sigma, "Override the oracle field ribbon half-width (px)");

    // track
    TrackOptions track_opts;
    std::string det_path, track_out, track_gt;
    auto* track = app.add_subcommand("track", "Track detections online and write pruned tracks");
    track->add_option("detections", det_path, "Detections JSON")->required();
    track->add_option("--out", track_out, "Tracks JSON output")->required();
    track->add_option("--min-track-length", track_opts.min_track_length, "Prune tracks shorter than this")
        ->capture_default_str();
    track->add_option("--gt", track_gt, "Ground truth JSON; adds an evaluation summary");
    add_tracking_options(track, track_opts, true);

    // eval
    std::string eval_tracks, eval_gt, eval_out;
    double gate = kDefaultEvalGate;
    auto* eval = app.add_subcommand("eval", "CLEAR-MOT and mAP evaluation of tracks against ground truth");
    eval->add_option("tracks", eval_tracks, "Tracks JSON")->required();
    eval->add_option("gt", eval_gt, "Ground truth JSON")->required();
    eval->add_option("--out", eval_out, "Report JSON output");
    eval->add_option("--gate", gate, "PCKh gate for joint matching")->capture_default_str();

    // compare
    TrackOptions cmp_opts;
    std::string cmp_det, cmp_gt, cmp_out;
    auto* compare = app.add_subcommand("compare", "Run every association metric on the same detections");
    compare->add_option("detections", cmp_det, "Detections JSON")->required();
    compare->add_option("gt", cmp_gt, "Ground truth JSON (also the default oracle)")->required();
    compare->add_option("--out", cmp_out, "Comparison JSON output");
    add_tracking_options(compare, cmp_opts, false);

    // dump-field
    std::string field_path, ppm_path;
    int joint = -1;
    auto* dump = app.add_subcommand("dump-field", "Render a TFF1 dump as a PPM image");
    dump->add_option("field", field_path, "TFF1 file")->required();
    dump->add_option("out", ppm_path, "PPM output")->required();
    dump->add_option("--joint", joint, "Joint class to show (-1: strongest over all)")->capture_default_str();

    std::vector<const char*> argv{"tfftrack"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*gen) {
            GenerateOverrides over;
            if (use_nms || tau_opt->count() > 0) over.tau_nms = tau_nms;
            over.seed = gen_seed;
            over.sigma = gen_sigma;
            const fs::path src(scenario_path);
            if (fs::is_directory(src)) {
                std::vector<fs::path> files;
                for (const auto& e : fs::directory_iterator(src)) {
                    const auto ext = e.path().extension();
                    if (ext == ".yaml" || ext == ".yml") files.push_back(e.path());
                }
                std::sort(files.begin(), files.end());
                std::vector<std::string> messages(files.size());
                parallel_for(files.size(), [&](std::size_t i) {
                    messages[i] = generate_one(files[i], fs::path(gen_out) / files[i].stem(), over);
                });
                for (const auto& m : messages) out << m;
            } else {
                out << generate_one(src, gen_out, over);
            }
            return kOk;
        }

        if (*track) {
            const auto kind = parse_potential_kind(track_opts.metric);
            require_inputs_for(kind, track_opts);
            const auto detections = io::sequence_from_json(io::read_json(det_path));
            const auto config = tracker_config(track_opts, detections.skeleton);
            std::optional<SequenceAnnotation> oracle;
            if (!track_opts.oracle_path.empty()) oracle = load_ground_truth(track_opts.oracle_path);
            const auto source = make_field_source(field_inputs(track_opts, oracle ? &*oracle : nullptr),
                                                  detections.skeleton.joint_count(), detections.image);
            if (track_opts.scales != std::vector<double>{1.0}) {
                err << "note: --scales has no effect on precomputed or oracle fields\n";
            }
            const auto raw = track_sequence(detections.frames, config, source);
            const auto pruned = prune_tracks(raw, config.policy.min_track_length);
            io::write_json(track_out, io::tracks_to_json(pruned, detections.skeleton));
            out << "tracks: " << raw.size() << " (" << pruned.size() << " after pruning below "
                << config.policy.min_track_length << " frames)\n";
            if (!track_gt.empty()) {
                const auto gt = load_ground_truth(track_gt);
                const auto report = evaluate_mot(raw, gt);
                out << "id_switches: " << report.total.id_switches << '\n'
                    << std::fixed << std::setprecision(1) << "mota: " << 100.0 * report.total.mota() << '\n';
            }
            return kOk;
        }

        if (*eval) {
            SkeletonConfig skeleton;
            const auto tracks = io::tracks_from_json(io::read_json(eval_tracks), &skeleton);
            const auto gt = load_ground_truth(eval_gt);
            if (skeleton.joint_count() != gt.skeleton.joint_count()) {
                throw InputError("tracks and ground truth use different skeletons");
            }
            const auto report = evaluate_mot(tracks, gt, gate);
            const auto map = evaluate_map(frames_from_tracks(tracks), gt, gate);
            out << format_mot_table(report) << std::fixed << std::setprecision(1) << "mAP     "
                << 100.0 * map.mean_ap << '\n';
            if (!eval_out.empty()) {
                json report_json = io::mot_report_to_json(report);
                report_json["map"] = io::map_report_to_json(map);
                io::write_json(eval_out, report_json);
            }
            return kOk;
        }

        if (*compare) {
            const auto detections = io::sequence_from_json(io::read_json(cmp_det));
            const auto gt = load_ground_truth(cmp_gt);
            const auto config = tracker_config(cmp_opts, detections.skeleton);
            const SequenceAnnotation* oracle = nullptr;
            std::optional<SequenceAnnotation> oracle_file;
            if (!cmp_opts.oracle_path.empty()) {
                oracle_file = load_ground_truth(cmp_opts.oracle_path);
                oracle = &*oracle_file;
            } else if (cmp_opts.fields_dir.empty() || cmp_opts.flow_dir.empty()) {
                oracle = &gt;
            }
            auto inputs = field_inputs(cmp_opts, oracle);
            if (oracle != nullptr && !cmp_opts.fields_dir.empty()) inputs.oracle = nullptr;
            FieldSource source = make_field_source(inputs, detections.skeleton.joint_count(), detections.image);
            if (oracle != nullptr && (!source.tff || !source.flow)) {
                // Fill whichever input has no directory from the oracle.
                auto oracle_inputs = field_inputs(cmp_opts, oracle);
                const auto fallback =
                    make_field_source(oracle_inputs, detections.skeleton.joint_count(), detections.image);
                if (!source.tff) source.tff = fallback.tff;
                if (!source.flow) source.flow = fallback.flow;
            }
            const auto rows = compare_metrics(detections.frames, gt, config, source);
            out << format_compare_table(rows);
            if (!cmp_out.empty()) {
                json j = json::array();
                for (const auto& r : rows) {
                    json row = io::mot_report_to_json(r.report)["total"];
                    row["metric"] = display_name(r.kind);
                    j.push_back(std::move(row));
                }
                io::write_json(cmp_out, j);
            }
            return kOk;
        }

        if (*dump) {
            const auto stack = io::decode_fields(io::read_bytes(field_path));
            io::write_bytes(ppm_path, io::render_field_ppm(stack, joint));
            out << "wrote " << ppm_path << '\n';
            return kOk;
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kUsageError;
}

}  // namespace tfftrack::cli
