#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tfftrack/annotation.hpp"
#include "tfftrack/metrics.hpp"
#include "tfftrack/similarity.hpp"
#include "tfftrack/synth.hpp"

namespace tfftrack::io {

/// Sequence JSON, shared by ground truth (poses carry "id") and detections:
///
///   {"skeleton": {"joint_names": [...], "head_pair": [a, b], "oks_kappas": [...]},
///    "image": {"width": W, "height": H},
///    "frames": [{"index": t, "poses": [{"id": k, "joints": [[x, y, c] | null, ...]}]}],
///    "ignore_regions": [{"first_frame": a, "last_frame": b, "box": [x0, y0, x1, y1]}]}
nlohmann::json sequence_to_json(const SequenceAnnotation& seq);
SequenceAnnotation sequence_from_json(const nlohmann::json& j);

/// Tracks JSON: {"skeleton": ..., "next_id": n, "tracks": [{"id", "birth_frame",
/// "entries": [{"frame", "joints"}]}]}
nlohmann::json tracks_to_json(const TrackSet& tracks, const SkeletonConfig& skeleton);
TrackSet tracks_from_json(const nlohmann::json& j, SkeletonConfig* skeleton = nullptr);

nlohmann::json mot_report_to_json(const MotReport& report);
nlohmann::json map_report_to_json(const MapReport& report);

std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate then write.
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);
/// Two-space indented dump with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Binary field dump: magic, u32 width, height, count (little-endian), then
/// count x height x width x 2 float32, row-major, channel-interleaved.
/// TFF1 holds one field per joint class; FLO1 holds a single flow grid.
std::vector<std::uint8_t> encode_fields(const FlowFieldStack& stack);
FlowFieldStack decode_fields(const std::vector<std::uint8_t>& bytes, double scale = 1.0);
std::vector<std::uint8_t> encode_flow(const FlowGrid& flow);
FlowGrid decode_flow(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

/// Binary PPM (P6). Hue encodes the vector angle, value min(1, magnitude).
/// `joint` selects one field; -1 shows the strongest vector across all.
std::vector<std::uint8_t> render_field_ppm(const FlowFieldStack& stack, int joint = -1);

/// Everything a scenario file describes.
struct Scenario {
    ScenarioConfig config;
    NoiseConfig noise;
    std::uint64_t detection_seed = 1;
    std::optional<double> tau_nms;  // run the belief-map NMS filter on detections
    double sigma = 1.0;             // field ribbon half-width for oracle dumps
    bool write_fields = false;
    bool write_flow = false;
    double flow_radius = 6.0;
};

/// Parses the YAML scenario schema (see docs/formats.md). Errors carry the
/// offending line.
Scenario parse_scenario(const std::string& yaml_text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace tfftrack::io
