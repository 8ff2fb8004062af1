#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tfftrack/annotation.hpp"
#include "tfftrack/matching.hpp"
#include "tfftrack/metrics.hpp"
#include "tfftrack/synth.hpp"

namespace tfftrack::cli {

enum ExitCode : int { kOk = 0, kInternalError = 1, kUsageError = 2 };

/// Where per-frame-pair fields and flow come from when tracking.
struct FieldInputs {
    std::filesystem::path fields_dir;  // pair_<curr>.tff files
    std::filesystem::path flow_dir;    // pair_<curr>.flo files
    const SequenceAnnotation* oracle = nullptr;  // render from ground truth instead
    NoiseConfig field_noise;
    double sigma = 1.0;
    double flow_radius = 6.0;
    std::uint64_t seed = 0;
};

/// Builds a FieldSource over directories or an oracle. Missing inputs for a
/// requested kind surface as InputError when the callback runs.
FieldSource make_field_source(const FieldInputs& inputs, std::size_t joint_count, GridDims image);

/// File name of the dump holding the fields between frame `curr - 1` and `curr`.
std::string pair_file_name(int curr_frame, const char* extension);

/// Seed for the oracle noise of one frame pair.
std::uint64_t pair_seed(std::uint64_t seed, int curr_frame);

struct CompareRow {
    PotentialKind kind;
    MotReport report;
};

/// Tracks the same detections with every metric, in table order
/// PCKh, IoU, OKS, OpticalFlow, TFF. No pruning, so detection-level columns
/// agree across rows.
std::vector<CompareRow> compare_metrics(const std::vector<FramePoses>& detections, const SequenceAnnotation& gt,
                                        const TrackerConfig& base, const FieldSource& source);

std::string format_compare_table(const std::vector<CompareRow>& rows);

/// Entry point shared by the tfftrack executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tfftrack::cli
