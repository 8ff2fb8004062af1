#include "tfftrack/matching.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

namespace tfftrack {

PotentialMatrix::PotentialMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

PotentialMatrix::PotentialMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    for (const auto& row : rows) {
        if (row.size() != cols_) {
            throw InputError("ragged potential matrix");
        }
        values_.insert(values_.end(), row.begin(), row.end());
    }
}

double Assignment::total(const PotentialMatrix& m) const {
    double sum = 0.0;
    for (const auto& [r, c] : pairs) {
        sum += m(r, c);
    }
    return sum;
}

void Assignment::check_invariants(std::size_t rows, std::size_t cols) const {
    std::vector<int> row_use(rows, 0);
    std::vector<int> col_use(cols, 0);
    for (const auto& [r, c] : pairs) {
        if (r >= rows || c >= cols) throw std::logic_error("assignment index out of range");
        ++row_use[r];
        ++col_use[c];
    }
    for (auto r : unmatched_rows) {
        if (r >= rows) throw std::logic_error("assignment index out of range");
        ++row_use[r];
    }
    for (auto c : unmatched_cols) {
        if (c >= cols) throw std::logic_error("assignment index out of range");
        ++col_use[c];
    }
    const auto once = [](int n) { return n == 1; };
    if (!std::all_of(row_use.begin(), row_use.end(), once) || !std::all_of(col_use.begin(), col_use.end(), once)) {
        throw std::logic_error("assignment does not partition rows and columns");
    }
}

void MatchPolicy::validate() const {
    if (min_track_length < 1) throw InputError("min_track_length must be at least 1");
    if (std::isnan(accept_threshold)) throw InputError("accept_threshold must be a number");
}

unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TFFTRACK_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) {
            n = std::min(n, static_cast<unsigned>(cap));
        }
    }
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

double pose_potential(const Pose& prev, const Pose& curr, PotentialKind kind, const PotentialContext& context) {
    switch (kind) {
        case PotentialKind::TFF:
            return person_potential(prev, curr, *context.fields, context.params);
        case PotentialKind::IoU:
            return iou_potential(prev, curr, context.pad_fraction);
        case PotentialKind::PCKh:
            return pckh_potential(prev, curr, *context.skeleton, context.params.pckh_threshold);
        case PotentialKind::OKS:
            return oks_potential(prev, curr, *context.skeleton);
        case PotentialKind::OpticalFlow:
            return optical_flow_potential(prev, curr, *context.flow, context.params.sigma_flow);
    }
    throw std::logic_error("unhandled potential kind");
}

PotentialMatrix build_potential_matrix(const std::vector<Pose>& prev, const std::vector<Pose>& curr,
                                       PotentialKind kind, const PotentialContext& context) {
    if (kind == PotentialKind::TFF && context.fields == nullptr) {
        throw InputError("TFF metric requires a flow field stack");
    }
    if (kind == PotentialKind::OpticalFlow && context.flow == nullptr) {
        throw InputError("optical flow metric requires a flow grid");
    }
    if ((kind == PotentialKind::PCKh || kind == PotentialKind::OKS) && context.skeleton == nullptr) {
        throw InputError(std::string(display_name(kind)) + " metric requires a skeleton");
    }
    PotentialMatrix matrix(prev.size(), curr.size());
    parallel_for(prev.size(), [&](std::size_t r) {
        for (std::size_t c = 0; c < curr.size(); ++c) {
            try {
                matrix(r, c) = pose_potential(prev[r], curr[c], kind, context);
            } catch (const InputError&) {
                matrix(r, c) = -std::numeric_limits<double>::infinity();
            }
        }
    });
    return matrix;
}

namespace {

Assignment finish(std::vector<std::pair<std::size_t, std::size_t>> pairs, std::size_t rows, std::size_t cols) {
    Assignment out;
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> row_used(rows, false);
    std::vector<bool> col_used(cols, false);
    for (const auto& [r, c] : pairs) {
        row_used[r] = true;
        col_used[c] = true;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (!row_used[r]) out.unmatched_rows.push_back(r);
    }
    for (std::size_t c = 0; c < cols; ++c) {
        if (!col_used[c]) out.unmatched_cols.push_back(c);
    }
    out.pairs = std::move(pairs);
    return out;
}

bool eligible(double value, double threshold) { return std::isfinite(value) && value > threshold; }

}  // namespace

Assignment greedy_assign(const PotentialMatrix& matrix, const MatchPolicy& policy) {
    struct Cell {
        double value;
        std::size_t row;
        std::size_t col;
    };
    std::vector<Cell> cells;
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        for (std::size_t c = 0; c < matrix.cols(); ++c) {
            if (eligible(matrix(r, c), policy.accept_threshold)) {
                cells.push_back({matrix(r, c), r, c});
            }
        }
    }
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });
    std::vector<bool> row_used(matrix.rows(), false);
    std::vector<bool> col_used(matrix.cols(), false);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& cell : cells) {
        if (row_used[cell.row] || col_used[cell.col]) continue;
        row_used[cell.row] = true;
        col_used[cell.col] = true;
        pairs.emplace_back(cell.row, cell.col);
    }
    return finish(std::move(pairs), matrix.rows(), matrix.cols());
}

Assignment hungarian_assign(const PotentialMatrix& matrix, const MatchPolicy& policy) {
    const std::size_t rows = matrix.rows();
    const std::size_t cols = matrix.cols();
    const std::size_t n = std::max(rows, cols);
    if (n == 0) {
        return finish({}, rows, cols);
    }
    // Square profit matrix: ineligible cells and padding are zero-profit
    // dummies, which a maximum-weight matching is free to leave unmatched.
    // Cells at or below zero can only lower the total, so they count as dummies too.
    const auto profit = [&](std::size_t r, std::size_t c) {
        if (r >= rows || c >= cols) return 0.0;
        const double v = matrix(r, c);
        return (eligible(v, policy.accept_threshold) && v > 0.0) ? v : 0.0;
    };

    // Shortest augmenting path with potentials, minimizing cost = -profit.
    // 1-based indexing; row 0 / column 0 are sentinels.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match_col[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match_col[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = -profit(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t r = match_col[j] - 1;
        const std::size_t c = j - 1;
        if (profit(r, c) > 0.0) {
            pairs.emplace_back(r, c);
        }
    }
    return finish(std::move(pairs), rows, cols);
}

TrackSet advance_tracks(TrackSet tracks, const std::vector<std::size_t>& row_tracks,
                        const Assignment& assignment, const FramePoses& curr) {
    std::vector<bool> matched(curr.poses.size(), false);
    for (const auto& [r, c] : assignment.pairs) {
        if (r >= row_tracks.size() || c >= curr.poses.size()) {
            throw InputError("assignment index out of range");
        }
        if (row_tracks[r] >= tracks.size()) {
            throw InputError("row refers to a missing track");
        }
        if (matched[c]) {
            throw InputError("detection assigned twice");
        }
        matched[c] = true;
        tracks.extend(row_tracks[r], curr.index, curr.poses[c]);
    }
    for (std::size_t c = 0; c < curr.poses.size(); ++c) {
        if (!matched[c]) {
            tracks.start(curr.index, curr.poses[c]);
        }
    }
    tracks.check_invariants();
    return tracks;
}

TrackSet prune_tracks(TrackSet tracks, int min_track_length) {
    const auto min_len = static_cast<std::size_t>(std::max(1, min_track_length));
    tracks.keep_if([&](const Track& t) { return t.length() >= min_len; });
    return tracks;
}

TrackSet track_sequence(const std::vector<FramePoses>& frames, const TrackerConfig& config,
                        const FieldSource& source) {
    config.similarity.validate();
    config.policy.validate();
    validate_frames(frames, config.skeleton.joint_count());

    TrackSet tracks;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const FramePoses& curr = frames[t];
        std::vector<std::size_t> rows;
        if (t > 0) {
            rows = tracks.alive_at(frames[t - 1].index);
        }
        if (rows.empty() || curr.poses.empty()) {
            Assignment none;
            none.unmatched_rows.resize(rows.size());
            std::iota(none.unmatched_rows.begin(), none.unmatched_rows.end(), 0);
            none.unmatched_cols.resize(curr.poses.size());
            std::iota(none.unmatched_cols.begin(), none.unmatched_cols.end(), 0);
            tracks = advance_tracks(std::move(tracks), rows, none, curr);
            continue;
        }

        std::vector<Pose> prev_poses;
        prev_poses.reserve(rows.size());
        for (auto idx : rows) {
            prev_poses.push_back(tracks.tracks()[idx].last_pose());
        }

        PotentialContext context;
        context.skeleton = &config.skeleton;
        context.params = config.similarity;
        context.pad_fraction = config.pad_fraction;
        std::optional<FlowFieldStack> fields;
        std::optional<FlowGrid> flow;
        const int prev_index = frames[t - 1].index;
        if (config.kind == PotentialKind::TFF) {
            if (!source.tff) throw InputError("TFF metric requires a field source");
            fields = source.tff(prev_index, curr.index);
            context.fields = &*fields;
        } else if (config.kind == PotentialKind::OpticalFlow) {
            if (!source.flow) throw InputError("optical flow metric requires a flow source");
            flow = source.flow(prev_index, curr.index);
            context.flow = &*flow;
        }

        const auto matrix = build_potential_matrix(prev_poses, curr.poses, config.kind, context);
        const auto assignment = greedy_assign(matrix, config.policy);
        tracks = advance_tracks(std::move(tracks), rows, assignment, curr);
    }
    return tracks;
}

}  // namespace tfftrack
