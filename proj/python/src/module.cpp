#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tfftrack/cli.hpp"
#include "tfftrack/io.hpp"
#include "tfftrack/matching.hpp"
#include "tfftrack/metrics.hpp"
#include "tfftrack/synth.hpp"

namespace py = pybind11;
using namespace tfftrack;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Keypoint point(std::pair<double, double> p) { return Keypoint(p.first, p.second); }

Array field_to_array(const GridField& f) {
    const auto d = f.dims();
    Array out({d.height, d.width, 2});
    std::copy(f.data().begin(), f.data().end(), out.mutable_data());
    return out;
}

GridField array_to_field(const Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 2) throw InputError("field must have shape (height, width, 2)");
    GridField f(GridDims{static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))});
    std::copy(a.data(), a.data() + a.size(), f.data().begin());
    return f;
}

// (joints, 3) rows of x, y, confidence; NaN x marks a missing joint.
Pose array_to_pose(const Array& a) {
    if (a.ndim() != 2 || a.shape(1) != 3) throw InputError("pose must have shape (joints, 3)");
    Pose p(static_cast<std::size_t>(a.shape(0)));
    const auto r = a.unchecked<2>();
    for (py::ssize_t j = 0; j < a.shape(0); ++j) {
        if (std::isnan(r(j, 0))) continue;
        p.joints[static_cast<std::size_t>(j)] = Keypoint(r(j, 0), r(j, 1), r(j, 2));
    }
    return p;
}

PotentialMatrix array_to_matrix(const Array& a) {
    if (a.ndim() != 2) throw InputError("potential matrix must be two-dimensional");
    PotentialMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    const auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = r(i, j);
    return m;
}

std::string dump(const nlohmann::json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_tfftrack, m) {
    m.doc() = "Temporal flow field pose tracking";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

    m.def("tff_support",
          [](std::pair<double, double> a, std::pair<double, double> b, double sigma, int width, int height) {
              std::vector<std::pair<int, int>> out;
              for (auto p : tff_support(point(a), point(b), sigma, {width, height})) out.emplace_back(p.x, p.y);
              return out;
          },
          py::arg("prev"), py::arg("curr"), py::arg("sigma"), py::arg("width"), py::arg("height"));

    m.def("render_person_tff",
          [](std::pair<double, double> a, std::pair<double, double> b, double sigma, int width, int height) {
              return field_to_array(render_person_tff(point(a), point(b), sigma, {width, height}));
          },
          py::arg("prev"), py::arg("curr"), py::arg("sigma") = 1.0, py::arg("width"), py::arg("height"),
          "Ground-truth field of one joint of one person, shape (height, width, 2).");

    m.def("aggregate_tff", [](const std::vector<Array>& fields) {
        std::vector<GridField> grids;
        for (const auto& f : fields) grids.push_back(array_to_field(f));
        return field_to_array(aggregate_tff(grids));
    });

    m.def("flow_aggregate",
          [](const Array& field, std::pair<double, double> a, std::pair<double, double> b, int steps) {
              return flow_aggregate(array_to_field(field), point(a), point(b), steps);
          },
          py::arg("field"), py::arg("prev"), py::arg("curr"), py::arg("steps") = 10);

    m.def("joint_potential",
          [](const Array& field, std::pair<double, double> a, std::pair<double, double> b, double tau_delta,
             int steps) {
              SimilarityParams p;
              p.tau_delta = tau_delta;
              p.quadrature_steps = steps;
              return joint_potential(array_to_field(field), point(a), point(b), p);
          },
          py::arg("field"), py::arg("prev"), py::arg("curr"), py::arg("tau_delta") = 2.0, py::arg("steps") = 10);

    m.def("iou_potential", [](const Array& a, const Array& b) { return iou_potential(array_to_pose(a), array_to_pose(b)); });
    m.def("oks_potential", [](const Array& a, const Array& b) {
        return oks_potential(array_to_pose(a), array_to_pose(b), SkeletonConfig::posetrack15());
    });
    m.def("pckh_potential", [](const Array& a, const Array& b) {
        return pckh_potential(array_to_pose(a), array_to_pose(b), SkeletonConfig::posetrack15());
    });

    const auto assignment = [](const Assignment& a) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs = a.pairs;
        return pairs;
    };
    m.def("greedy_assign",
          [assignment](const Array& matrix, double threshold) {
              return assignment(greedy_assign(array_to_matrix(matrix), MatchPolicy{threshold}));
          },
          py::arg("matrix"), py::arg("threshold") = 0.0, "Edge-global greedy matching, pairs sorted by row.");
    m.def("hungarian_assign",
          [assignment](const Array& matrix, double threshold) {
              return assignment(hungarian_assign(array_to_matrix(matrix), MatchPolicy{threshold}));
          },
          py::arg("matrix"), py::arg("threshold") = 0.0);

    // Sequence-level entry points speak the JSON file formats as strings.
    m.def("generate",
          [](const std::string& scenario_yaml) {
              const auto s = io::parse_scenario(scenario_yaml);
              const auto gt = generate_sequence(s.config);
              SequenceAnnotation det = gt;
              det.frames = corrupt_detections(gt, s.noise, s.detection_seed);
              det.ignore_regions.clear();
              return std::make_pair(dump(io::sequence_to_json(gt)), dump(io::sequence_to_json(det)));
          },
          py::arg("scenario_yaml"), "Returns (ground_truth_json, detections_json).");

    m.def("track",
          [](const std::string& detections_json, const std::string& metric, const std::string& oracle_json,
             int min_track_length) {
              const auto det = io::sequence_from_json(nlohmann::json::parse(detections_json));
              std::optional<SequenceAnnotation> oracle;
              cli::FieldInputs inputs;
              if (!oracle_json.empty()) {
                  oracle = io::sequence_from_json(nlohmann::json::parse(oracle_json));
                  inputs.oracle = &*oracle;
              }
              TrackerConfig config;
              config.kind = parse_potential_kind(metric);
              config.skeleton = det.skeleton;
              const auto source = cli::make_field_source(inputs, det.skeleton.joint_count(), det.image);
              py::gil_scoped_release release;
              auto tracks = prune_tracks(track_sequence(det.frames, config, source), min_track_length);
              return dump(io::tracks_to_json(tracks, det.skeleton));
          },
          py::arg("detections_json"), py::arg("metric") = "tff", py::arg("oracle_json") = "",
          py::arg("min_track_length") = 7);

    m.def("evaluate",
          [](const std::string& tracks_json, const std::string& gt_json) {
              const auto tracks = io::tracks_from_json(nlohmann::json::parse(tracks_json));
              const auto gt = io::sequence_from_json(nlohmann::json::parse(gt_json));
              return dump(io::mot_report_to_json(evaluate_mot(tracks, gt)));
          },
          py::arg("tracks_json"), py::arg("gt_json"));

    m.def("default_skeleton", [] { return dump(io::sequence_to_json(SequenceAnnotation{}).at("skeleton")); });

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    });
}
