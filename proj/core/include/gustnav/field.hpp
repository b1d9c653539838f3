#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gustnav/geometry.hpp"
#include "gustnav/scenario.hpp"

namespace gustnav::oracle {

// Steady 2D wind field on a cell-centered grid (row-major, index j*nx+i).
// Values are f32, matching the on-disk and on-wire representation, so a field
// survives serialization bit-exactly. Metadata is quantized to f32 at
// construction for the same reason.
struct VelocityField {
    int nx = 0;
    int ny = 0;
    double cell = 0.0;          // m
    domain::WindSpec inlet;     // free stream used for out-of-footprint samples
    bool converged = false;
    std::vector<float> u;       // m/s
    std::vector<float> v;       // m/s
    std::vector<float> p;       // Pa

    // Outer-iteration residual trace of the producing solve. In-memory only;
    // not serialized.
    std::vector<double> residuals;

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    double width() const { return nx * cell; }
    double height() const { return ny * cell; }

    bool same_data(const VelocityField& o) const {
        return nx == o.nx && ny == o.ny && u == o.u && v == o.v && p == o.p &&
               converged == o.converged;
    }
};

// Bilinear interpolation of (u, v) at the horizontal position of `pos`;
// returns (u, v, 0). Exact at cell centers. A position whose containing cell
// is no-slip (stored velocity exactly zero) returns the zero vector. Outside
// the field footprint the free-stream inlet vector is returned.
Vec3 sample_wind(const VelocityField& field, Vec3 pos);

// Field file round-trip ("WFLD" header + f32 planes).
void save_field(const VelocityField& f, const std::string& path);
VelocityField load_field(const std::string& path);
std::vector<std::uint8_t> field_to_bytes(const VelocityField& f);
VelocityField field_from_bytes(const std::uint8_t* data, std::size_t size);

}  // namespace gustnav::oracle
