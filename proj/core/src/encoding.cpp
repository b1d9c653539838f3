#include "gustnav/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "gustnav/error.hpp"

namespace gustnav::encoding {

void GeometryGrid::validate_patch() const {
    if (nx < 4 || ny < 3) throw ConfigError("patch grid too small");
    if (labels.size() != static_cast<std::size_t>(nx) * ny) {
        throw ConfigError("label array size does not match grid");
    }
    for (int j = 0; j < ny; ++j) {
        if (at(0, j) != kInlet) throw ConfigError("first column must be inlet");
        if (at(nx - 1, j) != kOutlet) throw ConfigError("last column must be outlet");
    }
    for (int i = 1; i < nx - 1; ++i) {
        if (at(i, 0) != kWall || at(i, ny - 1) != kWall) {
            throw ConfigError("first and last rows must be wall");
        }
    }
    for (int j = 1; j < ny - 1; ++j) {
        for (int i = 1; i < nx - 1; ++i) {
            const std::uint8_t v = at(i, j);
            if (v != kObstacle && v != kFree) {
                throw ConfigError("interior cells must be obstacle or free");
            }
        }
    }
}

LocalRect anchored_footprint(const domain::Building& b, const PatchFrame& frame) {
    const Vec2 a = frame.anchor();
    return {a.x, a.y, b.w, b.l};
}

GeometryGrid encode_empty(const PatchFrame& frame) {
    GeometryGrid g;
    g.nx = frame.nx;
    g.ny = frame.ny;
    g.cell = frame.cell;
    g.labels.assign(static_cast<std::size_t>(g.nx) * g.ny, kFree);
    for (int j = 0; j < g.ny; ++j) {
        g.at(0, j) = kInlet;
        g.at(g.nx - 1, j) = kOutlet;
    }
    for (int i = 1; i < g.nx - 1; ++i) {
        g.at(i, 0) = kWall;
        g.at(i, g.ny - 1) = kWall;
    }
    return g;
}

namespace {

// Membership in the footprint is strict, so a center exactly on the boundary
// stays free and sdf1 is negative exactly on the obstacle cells.
bool strictly_inside(Vec2 p, const Rect& r) {
    return std::abs(p.x - r.cx) < r.w * 0.5 && std::abs(p.y - r.cy) < r.l * 0.5;
}

}  // namespace

GeometryGrid encode_labels(const LocalRect& building, const PatchFrame& frame) {
    GeometryGrid g = encode_empty(frame);
    const Rect r = building.rect();
    int lo_i = g.nx, hi_i = -1, lo_j = g.ny, hi_j = -1;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!strictly_inside(frame.cell_center(i, j), r)) continue;
            lo_i = std::min(lo_i, i);
            hi_i = std::max(hi_i, i);
            lo_j = std::min(lo_j, j);
            hi_j = std::max(hi_j, j);
        }
    }
    if (hi_i < 0) throw ConfigError("building footprint covers no cell centers");
    if (lo_i < 1 || hi_i > g.nx - 2 || lo_j < 1 || hi_j > g.ny - 2) {
        throw ConfigError("building footprint touches the boundary band (patch too small)");
    }
    for (int j = lo_j; j <= hi_j; ++j) {
        for (int i = lo_i; i <= hi_i; ++i) {
            if (strictly_inside(frame.cell_center(i, j), r)) g.at(i, j) = kObstacle;
        }
    }
    return g;
}

double sdf1(Vec2 p, const Rect& shape) {
    const double dx = std::abs(p.x - shape.cx) - shape.w * 0.5;
    const double dy = std::abs(p.y - shape.cy) - shape.l * 0.5;
    if (dx > 0.0 || dy > 0.0) {
        const double ox = dx > 0.0 ? dx : 0.0;
        const double oy = dy > 0.0 ? dy : 0.0;
        return std::sqrt(ox * ox + oy * oy);
    }
    return std::max(dx, dy);  // <= 0 inside, 0 on the boundary
}

double sdf2(Vec2 p, Vec2 shape_center, bool inside) {
    const double d = std::abs(p.x - shape_center.x);
    return inside ? -d : d;
}

InputTensor build_input(const LocalRect* building, const PatchFrame& frame) {
    const GeometryGrid g = building ? encode_labels(*building, frame) : encode_empty(frame);

    InputTensor t;
    t.nx = g.nx;
    t.ny = g.ny;
    t.channels.assign(3 * t.plane(), 0.0f);

    const double sentinel = std::hypot(frame.length(), frame.width());
    for (int j = 0; j < t.ny; ++j) {
        for (int i = 0; i < t.nx; ++i) {
            const std::size_t idx = static_cast<std::size_t>(j) * t.nx + i;
            t.channels[idx] = static_cast<float>(g.labels[idx]);
            if (building) {
                const Vec2 c = frame.cell_center(i, j);
                const Rect r = building->rect();
                const double d1 = sdf1(c, r);
                t.channels[t.plane() + idx] = static_cast<float>(d1);
                t.channels[2 * t.plane() + idx] =
                    static_cast<float>(sdf2(c, {r.cx, r.cy}, d1 < 0.0));
            } else {
                t.channels[t.plane() + idx] = static_cast<float>(sentinel);
                t.channels[2 * t.plane() + idx] = static_cast<float>(sentinel);
            }
        }
    }
    return t;
}

namespace {

constexpr char kTensorMagic[4] = {'W', 'T', 'E', 'N'};
constexpr std::uint32_t kTensorVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError(std::string("tensor file: truncated reading ") + what);
    return v;
}

}  // namespace

void save_tensor(const InputTensor& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open tensor file for writing: " + path);
    out.write(kTensorMagic, 4);
    write_pod(out, kTensorVersion);
    write_pod(out, static_cast<std::uint32_t>(t.nx));
    write_pod(out, static_cast<std::uint32_t>(t.ny));
    out.write(reinterpret_cast<const char*>(t.channels.data()),
              static_cast<std::streamsize>(t.channels.size() * sizeof(float)));
    if (!out) throw ParseError("failed writing tensor file: " + path);
}

InputTensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open tensor file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kTensorMagic, 4) != 0) {
        throw ParseError("tensor file: bad magic: " + path);
    }
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kTensorVersion) {
        throw ParseError("tensor file: unsupported version " + std::to_string(version));
    }
    InputTensor t;
    t.nx = static_cast<int>(read_pod<std::uint32_t>(in, "nx"));
    t.ny = static_cast<int>(read_pod<std::uint32_t>(in, "ny"));
    if (t.nx <= 0 || t.ny <= 0 || t.nx > 100000 || t.ny > 100000) {
        throw ParseError("tensor file: implausible dimensions");
    }
    t.channels.resize(3 * t.plane());
    in.read(reinterpret_cast<char*>(t.channels.data()),
            static_cast<std::streamsize>(t.channels.size() * sizeof(float)));
    if (!in) throw ParseError("tensor file: truncated channel data");
    return t;
}

}  // namespace gustnav::encoding
