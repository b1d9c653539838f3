#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gustnav/geometry.hpp"
#include "gustnav/scenario.hpp"

namespace gustnav::encoding {

// Cell labels of the flow-region grid.
enum Label : std::uint8_t {
    kObstacle = 0,
    kFree = 1,
    kWall = 2,
    kInlet = 3,
    kOutlet = 4,
};

// Geometry of the local flow patch solved around a single building. The grid
// is row-major with index j*nx + i; +x is the inlet->outlet axis.
struct PatchFrame {
    int nx = 172;
    int ny = 79;
    double cell = 3.0;  // m

    double length() const { return nx * cell; }
    double width() const { return ny * cell; }
    Vec2 cell_center(int i, int j) const { return {(i + 0.5) * cell, (j + 0.5) * cell}; }
    // Local position of the standard building anchor. Upwind of center so the
    // wake gets most of the patch.
    Vec2 anchor() const { return {(60 + 0.5) * cell, 0.5 * ny * cell}; }
};

struct GeometryGrid {
    int nx = 0;
    int ny = 0;
    double cell = 0.0;
    std::vector<std::uint8_t> labels;  // nx*ny, row-major j*nx+i

    std::uint8_t at(int i, int j) const { return labels[static_cast<std::size_t>(j) * nx + i]; }
    std::uint8_t& at(int i, int j) { return labels[static_cast<std::size_t>(j) * nx + i]; }

    // Enforces the patch layout: inlet = first column, outlet = last column,
    // wall = first/last rows in between, everything else obstacle or free.
    void validate_patch() const;
};

// Footprint of the building expressed in patch coordinates.
struct LocalRect {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double l = 0.0;

    Rect rect() const { return {cx, cy, w, l}; }
};

// Places the building's footprint at the frame's standard anchor.
LocalRect anchored_footprint(const domain::Building& b, const PatchFrame& frame);

// Rasterizes boundary labels plus the obstacle cells whose centers lie inside
// the footprint. Throws ConfigError if the footprint reaches into the
// boundary band (patch too small for the building).
GeometryGrid encode_labels(const LocalRect& building, const PatchFrame& frame);

// Boundary-only patch grid (no obstacle), used for the empty layout.
GeometryGrid encode_empty(const PatchFrame& frame);

// Signed Euclidean distance from `p` to the rectangle boundary; negative
// strictly inside, zero on the boundary. Exact closed form.
double sdf1(Vec2 p, const Rect& shape);

// Signed horizontal (x) distance from `p` to the shape center; the sign
// follows the same inside test as sdf1.
double sdf2(Vec2 p, Vec2 shape_center, bool inside);

// The surrogate's input: channel 0 labels, channel 1 sdf1, channel 2 sdf2,
// evaluated at cell centers. f32 row-major planes.
struct InputTensor {
    int nx = 0;
    int ny = 0;
    std::vector<float> channels;  // 3 * nx*ny

    std::size_t plane() const { return static_cast<std::size_t>(nx) * ny; }
    float at(int c, int i, int j) const {
        return channels[c * plane() + static_cast<std::size_t>(j) * nx + i];
    }
    bool obstacle(int i, int j) const { return at(0, i, j) == 0.0f; }

    bool operator==(const InputTensor&) const = default;
};

// Builds the 3-channel tensor for one building. If `building` is null the
// layout is empty and the SDF channels carry the +diagonal sentinel.
InputTensor build_input(const LocalRect* building, const PatchFrame& frame);

void save_tensor(const InputTensor& t, const std::string& path);
InputTensor load_tensor(const std::string& path);

}  // namespace gustnav::encoding
