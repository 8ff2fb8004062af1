#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "tfftrack/core.hpp"
#include "tfftrack/flowfield.hpp"
#include "tfftrack/similarity.hpp"

namespace tfftrack {

/// Potentials between previous-frame tracks (rows) and current detections
/// (columns). Cells whose potential is undefined hold -infinity.
class PotentialMatrix {
public:
    PotentialMatrix() = default;
    PotentialMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    PotentialMatrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // sorted by row
    std::vector<std::size_t> unmatched_rows;
    std::vector<std::size_t> unmatched_cols;

    double total(const PotentialMatrix& m) const;
    /// Throws std::logic_error unless every row and column appears at most
    /// once among pairs and pairs plus unmatched partition both index sets.
    void check_invariants(std::size_t rows, std::size_t cols) const;
};

struct MatchPolicy {
    double accept_threshold = 0.0;  // a pair needs potential strictly above this
    int min_track_length = 7;

    void validate() const;
};

/// Everything a potential kind may need besides the two poses.
struct PotentialContext {
    const FlowFieldStack* fields = nullptr;
    const FlowGrid* flow = nullptr;
    const SkeletonConfig* skeleton = nullptr;
    SimilarityParams params;
    double pad_fraction = 0.0;
};

/// Evaluates one potential kind between two poses.
double pose_potential(const Pose& prev, const Pose& curr, PotentialKind kind, const PotentialContext& context);

/// Fills the matrix, one worker per block of rows (see worker_count()). A
/// potential that throws InputError for a cell becomes -infinity.
PotentialMatrix build_potential_matrix(const std::vector<Pose>& prev, const std::vector<Pose>& curr,
                                       PotentialKind kind, const PotentialContext& context);

/// Picks the globally largest eligible cell until none remain. Ties go to the
/// lower row, then the lower column.
Assignment greedy_assign(const PotentialMatrix& matrix, const MatchPolicy& policy);

/// Maximum-weight matching over cells above the threshold (Kuhn-Munkres).
Assignment hungarian_assign(const PotentialMatrix& matrix, const MatchPolicy& policy);

/// Appends matched detections to their tracks and starts new tracks for the
/// rest. `row_tracks[r]` is the TrackSet index behind matrix row r.
TrackSet advance_tracks(TrackSet tracks, const std::vector<std::size_t>& row_tracks,
                        const Assignment& assignment, const FramePoses& curr);

TrackSet prune_tracks(TrackSet tracks, int min_track_length);

/// Supplies per-frame-pair inputs for the field-based potentials. Either
/// callback may be empty when the chosen metric does not need it.
struct FieldSource {
    std::function<FlowFieldStack(int prev_frame, int curr_frame)> tff;
    std::function<FlowGrid(int prev_frame, int curr_frame)> flow;
};

struct TrackerConfig {
    PotentialKind kind = PotentialKind::TFF;
    SimilarityParams similarity;
    MatchPolicy policy;
    SkeletonConfig skeleton = SkeletonConfig::posetrack15();
    double pad_fraction = 0.0;
};

/// Online tracking: for every consecutive frame pair, builds the potential
/// matrix against tracks alive in the previous frame, assigns greedily and
/// advances the track set. Pruning is left to the caller.
TrackSet track_sequence(const std::vector<FramePoses>& frames, const TrackerConfig& config,
                        const FieldSource& source);

/// Worker count for parallel loops: hardware concurrency capped by the
/// TFFTRACK_THREADS environment variable.
unsigned worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tfftrack
