#include "gustnav/field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "gustnav/error.hpp"

namespace gustnav::oracle {

Vec3 sample_wind(const VelocityField& field, Vec3 pos) {
    const double x = pos.x;
    const double y = pos.y;
    if (x < 0.0 || y < 0.0 || x > field.width() || y > field.height()) {
        const Vec2 w = field.inlet.velocity();
        return {w.x, w.y, 0.0};
    }

    const int ci = std::min(field.nx - 1, std::max(0, static_cast<int>(x / field.cell)));
    const int cj = std::min(field.ny - 1, std::max(0, static_cast<int>(y / field.cell)));
    if (field.u[field.idx(ci, cj)] == 0.0f && field.v[field.idx(ci, cj)] == 0.0f) {
        return {0.0, 0.0, 0.0};  // no-slip cell
    }

    // Bilinear between the four surrounding cell centers, clamped at edges.
    const double gx = x / field.cell - 0.5;
    const double gy = y / field.cell - 0.5;
    int i0 = static_cast<int>(std::floor(gx));
    int j0 = static_cast<int>(std::floor(gy));
    double fx = gx - i0;
    double fy = gy - j0;
    if (i0 < 0) { i0 = 0; fx = 0.0; }
    if (j0 < 0) { j0 = 0; fy = 0.0; }
    int i1 = i0 + 1, j1 = j0 + 1;
    if (i1 > field.nx - 1) { i1 = field.nx - 1; fx = 0.0; }
    if (j1 > field.ny - 1) { j1 = field.ny - 1; fy = 0.0; }

    auto lerp2 = [&](const std::vector<float>& a) {
        const double v00 = a[field.idx(i0, j0)];
        const double v10 = a[field.idx(i1, j0)];
        const double v01 = a[field.idx(i0, j1)];
        const double v11 = a[field.idx(i1, j1)];
        return (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy) + (v01 * (1.0 - fx) + v11 * fx) * fy;
    };
    return {lerp2(field.u), lerp2(field.v), 0.0};
}

namespace {

constexpr char kFieldMagic[4] = {'W', 'F', 'L', 'D'};
constexpr std::uint32_t kFieldVersion = 1;

template <typename T>
void append_pod(std::vector<std::uint8_t>& out, const T& v) {
    const auto* b = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), b, b + sizeof(T));
}

template <typename T>
T take_pod(const std::uint8_t*& cur, const std::uint8_t* end, const char* what) {
    if (cur + sizeof(T) > end) {
        throw ParseError(std::string("field data: truncated reading ") + what);
    }
    T v{};
    std::memcpy(&v, cur, sizeof(T));
    cur += sizeof(T);
    return v;
}

}  // namespace

std::vector<std::uint8_t> field_to_bytes(const VelocityField& f) {
    std::vector<std::uint8_t> out;
    out.reserve(23 + f.size() * 12);
    out.insert(out.end(), kFieldMagic, kFieldMagic + 4);
    append_pod(out, kFieldVersion);
    append_pod(out, static_cast<std::uint32_t>(f.nx));
    append_pod(out, static_cast<std::uint32_t>(f.ny));
    append_pod(out, static_cast<float>(f.cell));
    append_pod(out, static_cast<float>(f.inlet.speed));
    append_pod(out, static_cast<float>(f.inlet.direction_rad()));
    append_pod(out, static_cast<std::uint8_t>(f.converged ? 1 : 0));
    auto append_plane = [&](const std::vector<float>& a) {
        const auto* b = reinterpret_cast<const std::uint8_t*>(a.data());
        out.insert(out.end(), b, b + a.size() * sizeof(float));
    };
    append_plane(f.u);
    append_plane(f.v);
    append_plane(f.p);
    return out;
}

VelocityField field_from_bytes(const std::uint8_t* data, std::size_t size) {
    const std::uint8_t* cur = data;
    const std::uint8_t* end = data + size;
    if (size < 4 || std::memcmp(cur, kFieldMagic, 4) != 0) {
        throw ParseError("field data: bad magic");
    }
    cur += 4;
    const auto version = take_pod<std::uint32_t>(cur, end, "version");
    if (version != kFieldVersion) {
        throw ParseError("field data: unsupported version " + std::to_string(version));
    }
    VelocityField f;
    f.nx = static_cast<int>(take_pod<std::uint32_t>(cur, end, "nx"));
    f.ny = static_cast<int>(take_pod<std::uint32_t>(cur, end, "ny"));
    if (f.nx <= 0 || f.ny <= 0 || f.nx > 100000 || f.ny > 100000) {
        throw ParseError("field data: implausible dimensions");
    }
    f.cell = take_pod<float>(cur, end, "cell");
    f.inlet.speed = take_pod<float>(cur, end, "inlet_speed");
    const float dir_rad = take_pod<float>(cur, end, "inlet_dir");
    f.inlet.dir_deg = static_cast<double>(dir_rad) * units::rad_to_deg;
    f.converged = take_pod<std::uint8_t>(cur, end, "converged") != 0;

    const std::size_t n = f.size();
    auto take_plane = [&](std::vector<float>& a, const char* what) {
        if (cur + n * sizeof(float) > end) {
            throw ParseError(std::string("field data: truncated reading ") + what);
        }
        a.resize(n);
        std::memcpy(a.data(), cur, n * sizeof(float));
        cur += n * sizeof(float);
    };
    take_plane(f.u, "u");
    take_plane(f.v, "v");
    take_plane(f.p, "p");
    return f;
}

void save_field(const VelocityField& f, const std::string& path) {
    const std::vector<std::uint8_t> bytes = field_to_bytes(f);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open field file for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParseError("failed writing field file: " + path);
}

VelocityField load_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open field file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return field_from_bytes(bytes.data(), bytes.size());
}

}  // namespace gustnav::oracle
