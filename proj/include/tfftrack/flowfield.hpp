#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tfftrack/core.hpp"

namespace tfftrack {

struct GridDims {
    int width = 0;
    int height = 0;

    friend bool operator==(GridDims, GridDims) = default;
};

struct Pixel {
    int x = 0;
    int y = 0;

    friend auto operator<=>(Pixel, Pixel) = default;
};

/// Dense two-channel vector field. Pixel (x, y) is the point (x, y); channel
/// values are interleaved row-major: data[2 * (y * width + x) + c].
class GridField {
public:
    GridField() = default;
    explicit GridField(GridDims dims);

    GridDims dims() const { return dims_; }
    int width() const { return dims_.width; }
    int height() const { return dims_.height; }

    Vec2 at(int x, int y) const;
    void set(int x, int y, Vec2 v);
    bool contains(int x, int y) const {
        return x >= 0 && y >= 0 && x < dims_.width && y < dims_.height;
    }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    friend bool operator==(const GridField&, const GridField&) = default;

private:
    GridDims dims_;
    std::vector<double> data_;
};

/// One field per joint class. `scale` maps image pixels to grid cells:
/// grid = image / scale.
struct FlowFieldStack {
    std::vector<GridField> fields;
    double scale = 1.0;

    GridDims dims() const;
    std::size_t joint_count() const { return fields.size(); }
    void validate() const;

    static FlowFieldStack zeros(std::size_t joint_count, GridDims dims, double scale = 1.0);

    friend bool operator==(const FlowFieldStack&, const FlowFieldStack&) = default;
};

/// Binary weight per pixel; 0 marks an ignore region.
class IgnoreMask {
public:
    IgnoreMask() = default;
    explicit IgnoreMask(GridDims dims, bool valid = true);

    GridDims dims() const { return dims_; }
    bool valid(int x, int y) const { return data_[static_cast<std::size_t>(y) * dims_.width + x] != 0; }
    void set(int x, int y, bool valid);
    void mark_ignored(const BBox& region);

private:
    GridDims dims_;
    std::vector<std::uint8_t> data_;
};

struct SupportParams {
    double sigma = 1.0;
    double tau_delta = 2.0;

    void validate() const;
};

/// Pixels within `sigma` of the motion segment prev -> curr, between its
/// endpoints. Sorted row-major. Empty when the joint does not move.
std::vector<Pixel> tff_support(const Keypoint& prev, const Keypoint& curr, double sigma, GridDims dims);

/// Unit motion direction on the support, zero elsewhere.
GridField render_person_tff(const Keypoint& prev, const Keypoint& curr, double sigma, GridDims dims);

/// Per-pixel mean over the inputs that are nonzero at that pixel.
GridField aggregate_tff(std::span<const GridField> person_fields);

/// Masked squared L2 distance summed over joint classes and pixels.
double tff_loss(const FlowFieldStack& predicted, const FlowFieldStack& target, const IgnoreMask& mask);

/// Bilinear sample at a continuous grid location, clamped to the border.
Vec2 sample_field(const GridField& field, Vec2 p);

}  // namespace tfftrack
