#include "tfftrack/flowfield.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tfftrack {

namespace {

void require_dims(GridDims dims) {
    if (dims.width < 1 || dims.height < 1) {
        throw InputError("grid dimensions must be at least 1x1");
    }
}

std::string dims_str(GridDims d) { return std::to_string(d.width) + "x" + std::to_string(d.height); }

}  // namespace

GridField::GridField(GridDims dims)
    : dims_(dims), data_(static_cast<std::size_t>(dims.width) * dims.height * 2, 0.0) {
    require_dims(dims);
}

Vec2 GridField::at(int x, int y) const {
    const auto i = 2 * (static_cast<std::size_t>(y) * dims_.width + x);
    return {data_[i], data_[i + 1]};
}

void GridField::set(int x, int y, Vec2 v) {
    const auto i = 2 * (static_cast<std::size_t>(y) * dims_.width + x);
    data_[i] = v.x;
    data_[i + 1] = v.y;
}

GridDims FlowFieldStack::dims() const { return fields.empty() ? GridDims{} : fields.front().dims(); }

void FlowFieldStack::validate() const {
    if (!(scale > 0.0)) {
        throw InputError("field scale must be positive");
    }
    for (const auto& f : fields) {
        if (f.dims() != dims()) {
            throw InputError("all joint fields must share dimensions");
        }
    }
}

FlowFieldStack FlowFieldStack::zeros(std::size_t joint_count, GridDims dims, double scale) {
    FlowFieldStack stack;
    stack.fields.assign(joint_count, GridField(dims));
    stack.scale = scale;
    stack.validate();
    return stack;
}

IgnoreMask::IgnoreMask(GridDims dims, bool valid)
    : dims_(dims), data_(static_cast<std::size_t>(dims.width) * dims.height, valid ? 1 : 0) {
    require_dims(dims);
}

void IgnoreMask::set(int x, int y, bool v) {
    data_[static_cast<std::size_t>(y) * dims_.width + x] = v ? 1 : 0;
}

void IgnoreMask::mark_ignored(const BBox& region) {
    const int x0 = std::max(0, static_cast<int>(std::ceil(region.x_min)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(region.y_min)));
    const int x1 = std::min(dims_.width - 1, static_cast<int>(std::floor(region.x_max)));
    const int y1 = std::min(dims_.height - 1, static_cast<int>(std::floor(region.y_max)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            set(x, y, false);
        }
    }
}

void SupportParams::validate() const {
    if (!(sigma > 0.0)) throw InputError("sigma must be positive");
    if (!(tau_delta >= 0.0)) throw InputError("tau_delta must be non-negative");
}

std::vector<Pixel> tff_support(const Keypoint& prev, const Keypoint& curr, double sigma, GridDims dims) {
    require_dims(dims);
    if (!(sigma > 0.0)) {
        throw InputError("sigma must be positive");
    }
    const Vec2 d = curr.position() - prev.position();
    const double length_sq = dot(d, d);
    if (length_sq == 0.0) {
        return {};
    }
    const double length = std::sqrt(length_sq);
    // Unnormalized form: 0 <= d.q <= |d|^2 and |d x q| <= sigma |d|, with q = p - prev.
    const double cross_limit = sigma * length;

    const auto lo = [](double v) { return static_cast<int>(std::floor(v)); };
    const auto hi = [](double v) { return static_cast<int>(std::ceil(v)); };
    const int x0 = std::max(0, lo(std::min(prev.x, curr.x) - sigma));
    const int y0 = std::max(0, lo(std::min(prev.y, curr.y) - sigma));
    const int x1 = std::min(dims.width - 1, hi(std::max(prev.x, curr.x) + sigma));
    const int y1 = std::min(dims.height - 1, hi(std::max(prev.y, curr.y) + sigma));

    std::vector<Pixel> out;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const Vec2 q{x - prev.x, y - prev.y};
            const double along = dot(d, q);
            const double across = d.x * q.y - d.y * q.x;
            if (along >= 0.0 && along <= length_sq && std::abs(across) <= cross_limit) {
                out.push_back({x, y});
            }
        }
    }
    return out;
}

GridField render_person_tff(const Keypoint& prev, const Keypoint& curr, double sigma, GridDims dims) {
    GridField field(dims);
    const auto motion = joint_displacement(prev, curr);
    for (const Pixel p : tff_support(prev, curr, sigma, dims)) {
        field.set(p.x, p.y, motion.direction);
    }
    return field;
}

GridField aggregate_tff(std::span<const GridField> person_fields) {
    if (person_fields.empty()) {
        throw InputError("aggregate_tff needs at least one field");
    }
    const GridDims dims = person_fields.front().dims();
    for (const auto& f : person_fields) {
        if (f.dims() != dims) {
            throw InputError("field dimension mismatch: " + dims_str(f.dims()) + " vs " + dims_str(dims));
        }
    }
    GridField out(dims);
    auto dst = out.data();
    std::vector<int> counts(dst.size() / 2, 0);
    for (const auto& f : person_fields) {
        const auto src = f.data();
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (src[2 * i] != 0.0 || src[2 * i + 1] != 0.0) {
                dst[2 * i] += src[2 * i];
                dst[2 * i + 1] += src[2 * i + 1];
                ++counts[i];
            }
        }
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > 1) {
            dst[2 * i] /= counts[i];
            dst[2 * i + 1] /= counts[i];
        }
    }
    return out;
}

double tff_loss(const FlowFieldStack& predicted, const FlowFieldStack& target, const IgnoreMask& mask) {
    if (predicted.joint_count() != target.joint_count()) {
        throw InputError("joint count mismatch between predicted and target fields");
    }
    if (predicted.dims() != target.dims() || (predicted.joint_count() > 0 && mask.dims() != target.dims())) {
        throw InputError("field dimension mismatch");
    }
    double loss = 0.0;
    for (std::size_t j = 0; j < target.joint_count(); ++j) {
        const auto& pf = predicted.fields[j];
        const auto& tf = target.fields[j];
        if (pf.dims() != tf.dims()) {
            throw InputError("field dimension mismatch for joint " + std::to_string(j));
        }
        for (int y = 0; y < tf.height(); ++y) {
            for (int x = 0; x < tf.width(); ++x) {
                if (!mask.valid(x, y)) continue;
                const Vec2 diff = tf.at(x, y) - pf.at(x, y);
                loss += dot(diff, diff);
            }
        }
    }
    return loss;
}

Vec2 sample_field(const GridField& field, Vec2 p) {
    const double x = std::clamp(p.x, 0.0, static_cast<double>(field.width() - 1));
    const double y = std::clamp(p.y, 0.0, static_cast<double>(field.height() - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, field.width() - 1);
    const int y1 = std::min(y0 + 1, field.height() - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const Vec2 top = (1.0 - fx) * field.at(x0, y0) + fx * field.at(x1, y0);
    const Vec2 bottom = (1.0 - fx) * field.at(x0, y1) + fx * field.at(x1, y1);
    return (1.0 - fy) * top + fy * bottom;
}

}  // namespace tfftrack
