#pragma once

// Reference implementations used only by tests. They are deliberately naive
// and share no code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "tfftrack/annotation.hpp"
#include "tfftrack/core.hpp"
#include "tfftrack/flowfield.hpp"
#include "tfftrack/matching.hpp"

namespace oracle {

using namespace tfftrack;

// Ribbon membership in the normalized form: unit direction v, length lambda.
inline bool in_ribbon(double px, double py, Keypoint a, Keypoint b, double sigma) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double lambda = std::sqrt(dx * dx + dy * dy);
    if (lambda == 0.0) return false;
    const double vx = dx / lambda, vy = dy / lambda;
    const double qx = px - a.x, qy = py - a.y;
    const double along = vx * qx + vy * qy;
    const double across = -vy * qx + vx * qy;  // v rotated +90 degrees
    return along >= 0.0 && along <= lambda && std::abs(across) <= sigma;
}

inline std::vector<Pixel> brute_support(Keypoint a, Keypoint b, double sigma, GridDims dims) {
    std::vector<Pixel> out;
    for (int y = 0; y < dims.height; ++y)
        for (int x = 0; x < dims.width; ++x)
            if (in_ribbon(x, y, a, b, sigma)) out.push_back({x, y});
    return out;
}

// Bilinear lookup written from scratch, clamping to the border.
inline std::pair<double, double> bilinear(const GridField& f, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(f.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(f.height() - 1));
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, f.width() - 1), y1 = std::min(y0 + 1, f.height() - 1);
    const double fx = x - x0, fy = y - y0;
    double u = 0, w = 0;
    const int xs[2] = {x0, x1}, ys[2] = {y0, y1};
    const double wx[2] = {1 - fx, fx}, wy[2] = {1 - fy, fy};
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) {
            const Vec2 v = f.at(xs[i], ys[k]);
            u += wx[i] * wy[k] * v.x;
            w += wx[i] * wy[k] * v.y;
        }
    return {u, w};
}

inline double line_integral(const GridField& f, Keypoint a, Keypoint b, int steps) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    double sum = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double t = (i + 0.5) / steps;
        auto [u, w] = bilinear(f, a.x + t * dx, a.y + t * dy);
        sum += (u * dx + w * dy) / len;
    }
    return sum / steps;
}

struct BruteAssignment {
    double total = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    int optima = 0;  // how many assignments reach the optimum (within 1e-12)
};

// Enumerates every partial matching over cells strictly above the threshold.
inline BruteAssignment brute_assign(const PotentialMatrix& m, double threshold) {
    BruteAssignment best;
    std::vector<std::pair<std::size_t, std::size_t>> current;
    std::vector<bool> used(m.cols(), false);
    auto recurse = [&](auto&& self, std::size_t row, double total) -> void {
        if (row == m.rows()) {
            if (total > best.total + 1e-12) {
                best.total = total;
                best.pairs = current;
                best.optima = 1;
            } else if (std::abs(total - best.total) <= 1e-12) {
                ++best.optima;
            }
            return;
        }
        self(self, row + 1, total);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (used[c] || !(m(row, c) > threshold)) continue;
            used[c] = true;
            current.emplace_back(row, c);
            self(self, row + 1, total + m(row, c));
            current.pop_back();
            used[c] = false;
        }
    };
    recurse(recurse, 0, 0.0);
    return best;
}

struct MotEvents {
    std::int64_t tp = 0, fp = 0, misses = 0, switches = 0, gt = 0;
    double distance_sum = 0.0;
};

// CLEAR-MOT by exhaustive per-frame matching: maximize the number of gated
// matches, then minimize the summed normalized distance. Head size comes
// from each GT pose, or the sequence mean when its head joints are missing.
inline MotEvents brute_mot(const TrackSet& tracks, const SequenceAnnotation& gt, double gate) {
    const auto& sk = gt.skeleton;
    auto head = [&](const Pose& p) -> std::optional<double> {
        if (!p.has(sk.head_pair.first) || !p.has(sk.head_pair.second)) return std::nullopt;
        const auto& a = p.at(sk.head_pair.first);
        const auto& b = p.at(sk.head_pair.second);
        const double h = std::hypot(a.x - b.x, a.y - b.y);
        return h > 0 ? std::optional(h) : std::nullopt;
    };
    double head_sum = 0;
    int head_n = 0;
    for (const auto& f : gt.frames)
        for (const auto& p : f.poses)
            if (auto h = head(p)) head_sum += *h, ++head_n;
    const double fallback = head_sum / head_n;

    MotEvents ev;
    std::map<std::pair<int, std::size_t>, int> last;
    for (const auto& f : gt.frames) {
        for (std::size_t j = 0; j < sk.joint_count(); ++j) {
            struct G { int id; double x, y, lim; };
            struct P { int track; double x, y; };
            std::vector<G> gs;
            std::vector<P> ps;
            for (const auto& p : f.poses)
                if (p.has(j)) gs.push_back({*p.id, p.at(j).x, p.at(j).y, gate * head(p).value_or(fallback)});
            for (const auto& t : tracks.tracks())
                if (const Pose* p = t.pose_at(f.index); p && p->has(j))
                    ps.push_back({t.id, p->at(j).x, p->at(j).y});

            // enumerate assignments gt -> pred or none
            int best_count = -1;
            double best_dist = 0;
            std::vector<int> best_map, cur(gs.size(), -1);
            std::vector<bool> used(ps.size(), false);
            auto rec = [&](auto&& self, std::size_t g, int count, double dist) -> void {
                if (g == gs.size()) {
                    if (count > best_count || (count == best_count && dist < best_dist - 1e-12)) {
                        best_count = count;
                        best_dist = dist;
                        best_map = cur;
                    }
                    return;
                }
                self(self, g + 1, count, dist);
                for (std::size_t k = 0; k < ps.size(); ++k) {
                    if (used[k]) continue;
                    const double d = std::hypot(gs[g].x - ps[k].x, gs[g].y - ps[k].y);
                    if (d > gs[g].lim) continue;
                    used[k] = true;
                    cur[g] = static_cast<int>(k);
                    self(self, g + 1, count + 1, dist + d / gs[g].lim);
                    cur[g] = -1;
                    used[k] = false;
                }
            };
            rec(rec, 0, 0, 0.0);

            ev.gt += static_cast<std::int64_t>(gs.size());
            std::vector<bool> matched(ps.size(), false);
            for (std::size_t g = 0; g < gs.size(); ++g) {
                if (best_map[g] < 0) {
                    ++ev.misses;
                    continue;
                }
                const auto& p = ps[static_cast<std::size_t>(best_map[g])];
                matched[static_cast<std::size_t>(best_map[g])] = true;
                ++ev.tp;
                ev.distance_sum += std::hypot(gs[g].x - p.x, gs[g].y - p.y) / gs[g].lim;
                auto key = std::make_pair(gs[g].id, j);
                if (auto it = last.find(key); it != last.end() && it->second != p.track) ++ev.switches;
                last[key] = p.track;
            }
            for (std::size_t k = 0; k < ps.size(); ++k)
                if (!matched[k] && !gt.ignored(f.index, ps[k].x, ps[k].y)) ++ev.fp;
        }
    }
    return ev;
}

}  // namespace oracle
