#include "gustnav/autoencoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "gustnav/error.hpp"
#include "gustnav/rng.hpp"

namespace gustnav::surrogate {

namespace {

int conv_out(int n, int k, int s, int p) { return (n + 2 * p - k) / s + 1; }
int deconv_out(int n, int k, int s, int p, int op) { return (n - 1) * s - 2 * p + k + op; }

LayerSpec make_conv(int in_ch, int out_ch, int k, int s, int p, int in_w, int in_h, bool relu) {
    LayerSpec l;
    l.kind = LayerKind::Conv;
    l.k = k;
    l.stride = s;
    l.pad = p;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.in_w = in_w;
    l.in_h = in_h;
    l.out_w = conv_out(in_w, k, s, p);
    l.out_h = conv_out(in_h, k, s, p);
    l.relu = relu;
    return l;
}

LayerSpec make_deconv(int in_ch, int out_ch, int k, int s, int p, int in_w, int in_h,
                      int want_w, int want_h, bool relu) {
    LayerSpec l;
    l.kind = LayerKind::Deconv;
    l.k = k;
    l.stride = s;
    l.pad = p;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.in_w = in_w;
    l.in_h = in_h;
    l.out_pad_w = want_w - deconv_out(in_w, k, s, p, 0);
    l.out_pad_h = want_h - deconv_out(in_h, k, s, p, 0);
    l.out_w = want_w;
    l.out_h = want_h;
    l.relu = relu;
    return l;
}

}  // namespace

std::size_t Architecture::param_count() const {
    std::size_t n = 0;
    for (const LayerSpec& l : layers) n += l.weight_count();
    return n;
}

void Architecture::validate() const {
    if (layers.empty()) throw ConfigError("architecture has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.k < 1 || l.stride < 1 || l.in_ch < 1 || l.out_ch < 1 || l.in_w < 1 || l.in_h < 1) {
            throw ConfigError("invalid layer spec");
        }
        if (l.out_w < 1 || l.out_h < 1) throw ConfigError("layer output collapsed to nothing");
        if (l.kind == LayerKind::Deconv && (l.out_pad_w < 0 || l.out_pad_h < 0)) {
            throw ConfigError("deconv output smaller than requested shape");
        }
        if (i > 0 && (l.in_ch != layers[i - 1].out_ch || l.in_w != layers[i - 1].out_w ||
                      l.in_h != layers[i - 1].out_h)) {
            throw ConfigError("layer shapes do not chain");
        }
    }
}

Architecture Architecture::autoencoder(int nx, int ny) {
    Architecture a;
    a.layers.push_back(make_conv(3, 8, 5, 2, 2, nx, ny, true));
    const LayerSpec c1 = a.layers.back();
    a.layers.push_back(make_conv(8, 16, 5, 2, 2, c1.out_w, c1.out_h, true));
    const LayerSpec c2 = a.layers.back();
    a.layers.push_back(make_conv(16, 32, 5, 2, 2, c2.out_w, c2.out_h, true));
    const LayerSpec c3 = a.layers.back();
    a.layers.push_back(
        make_deconv(32, 16, 5, 2, 2, c3.out_w, c3.out_h, c2.out_w, c2.out_h, true));
    a.layers.push_back(
        make_deconv(16, 8, 5, 2, 2, c2.out_w, c2.out_h, c1.out_w, c1.out_h, true));
    a.layers.push_back(make_deconv(8, 3, 5, 2, 2, c1.out_w, c1.out_h, nx, ny, false));
    a.validate();
    return a;
}

Architecture Architecture::tiny(int nx, int ny) {
    Architecture a;
    a.layers.push_back(make_conv(3, 4, 3, 2, 1, nx, ny, true));
    const LayerSpec c1 = a.layers.back();
    a.layers.push_back(make_deconv(4, 3, 3, 2, 1, c1.out_w, c1.out_h, nx, ny, false));
    a.validate();
    return a;
}

AutoencoderParams init_params(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    AutoencoderParams p;
    p.arch = arch;
    p.seed = seed;
    p.weights.resize(arch.param_count());
    Rng rng(derive_seed(seed, 0xae1u));
    std::size_t off = 0;
    for (const LayerSpec& l : arch.layers) {
        const double fan_in = static_cast<double>(l.in_ch) * l.k * l.k;
        const double fan_out = static_cast<double>(l.out_ch) * l.k * l.k;
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        const std::size_t kernel = static_cast<std::size_t>(l.in_ch) * l.out_ch * l.k * l.k;
        for (std::size_t i = 0; i < kernel; ++i) {
            p.weights[off + i] = static_cast<float>(rng.uniform(-bound, bound));
        }
        for (int i = 0; i < l.out_ch; ++i) p.weights[off + kernel + i] = 0.0f;
        off += l.weight_count();
    }
    return p;
}

namespace {

// Leaky slope keeps gradients alive on inactive units; plain ReLU nets die
// wholesale under MAE sign-gradients with Adam on single-sample batches.
constexpr double kLeakySlope = 0.1;

struct Plane {
    int w = 0, h = 0, ch = 0;
    std::vector<double> v;  // ch * w*h

    void resize(int ch_, int w_, int h_) {
        ch = ch_;
        w = w_;
        h = h_;
        v.assign(static_cast<std::size_t>(ch) * w * h, 0.0);
    }
    std::size_t at(int c, int x, int y) const {
        return (static_cast<std::size_t>(c) * h + y) * w + x;
    }
};

// Forward one layer. Weight block: kernel weights then biases. Conv kernels
// are laid out [out_ch][in_ch][ky][kx], deconv kernels [in_ch][out_ch][ky][kx].
void layer_forward(const LayerSpec& l, const float* w, const Plane& in, Plane& out) {
    out.resize(l.out_ch, l.out_w, l.out_h);
    const float* bias = w + static_cast<std::size_t>(l.in_ch) * l.out_ch * l.k * l.k;
    if (l.kind == LayerKind::Conv) {
        for (int oc = 0; oc < l.out_ch; ++oc) {
            for (int oy = 0; oy < l.out_h; ++oy) {
                for (int ox = 0; ox < l.out_w; ++ox) {
                    double acc = bias[oc];
                    for (int ic = 0; ic < l.in_ch; ++ic) {
                        const std::size_t wbase =
                            (static_cast<std::size_t>(oc) * l.in_ch + ic) * l.k * l.k;
                        for (int ky = 0; ky < l.k; ++ky) {
                            const int iy = oy * l.stride - l.pad + ky;
                            if (iy < 0 || iy >= l.in_h) continue;
                            for (int kx = 0; kx < l.k; ++kx) {
                                const int ix = ox * l.stride - l.pad + kx;
                                if (ix < 0 || ix >= l.in_w) continue;
                                acc += static_cast<double>(w[wbase + ky * l.k + kx]) *
                                       in.v[in.at(ic, ix, iy)];
                            }
                        }
                    }
                    out.v[out.at(oc, ox, oy)] = l.relu && acc < 0.0 ? kLeakySlope * acc : acc;
                }
            }
        }
    } else {
        for (int oc = 0; oc < l.out_ch; ++oc) {
            const std::size_t base = out.at(oc, 0, 0);
            const std::size_t cnt = static_cast<std::size_t>(l.out_w) * l.out_h;
            std::fill(out.v.begin() + base, out.v.begin() + base + cnt,
                      static_cast<double>(bias[oc]));
        }
        for (int ic = 0; ic < l.in_ch; ++ic) {
            for (int iy = 0; iy < l.in_h; ++iy) {
                for (int ix = 0; ix < l.in_w; ++ix) {
                    const double x = in.v[in.at(ic, ix, iy)];
                    if (x == 0.0) continue;
                    for (int oc = 0; oc < l.out_ch; ++oc) {
                        const std::size_t wbase =
                            (static_cast<std::size_t>(ic) * l.out_ch + oc) * l.k * l.k;
                        for (int ky = 0; ky < l.k; ++ky) {
                            const int oy = iy * l.stride - l.pad + ky;
                            if (oy < 0 || oy >= l.out_h) continue;
                            for (int kx = 0; kx < l.k; ++kx) {
                                const int ox = ix * l.stride - l.pad + kx;
                                if (ox < 0 || ox >= l.out_w) continue;
                                out.v[out.at(oc, ox, oy)] +=
                                    x * static_cast<double>(w[wbase + ky * l.k + kx]);
                            }
                        }
                    }
                }
            }
        }
        if (l.relu) {
            for (double& x : out.v) {
                if (x < 0.0) x *= kLeakySlope;
            }
        }
    }
}

// Backward one layer: grad w.r.t. output -> grad w.r.t. input plus
// weight/bias gradient accumulation. `out` is the forward output (ReLU gate).
void layer_backward(const LayerSpec& l, const float* w, const Plane& in, const Plane& out,
                    Plane& grad_out, Plane& grad_in, double* gw) {
    if (l.relu) {
        for (std::size_t i = 0; i < grad_out.v.size(); ++i) {
            if (out.v[i] < 0.0) grad_out.v[i] *= kLeakySlope;
        }
    }
    grad_in.resize(l.in_ch, l.in_w, l.in_h);
    double* gbias = gw + static_cast<std::size_t>(l.in_ch) * l.out_ch * l.k * l.k;

    if (l.kind == LayerKind::Conv) {
        for (int oc = 0; oc < l.out_ch; ++oc) {
            for (int oy = 0; oy < l.out_h; ++oy) {
                for (int ox = 0; ox < l.out_w; ++ox) {
                    const double g = grad_out.v[grad_out.at(oc, ox, oy)];
                    if (g == 0.0) continue;
                    gbias[oc] += g;
                    for (int ic = 0; ic < l.in_ch; ++ic) {
                        const std::size_t wbase =
                            (static_cast<std::size_t>(oc) * l.in_ch + ic) * l.k * l.k;
                        for (int ky = 0; ky < l.k; ++ky) {
                            const int iy = oy * l.stride - l.pad + ky;
                            if (iy < 0 || iy >= l.in_h) continue;
                            for (int kx = 0; kx < l.k; ++kx) {
                                const int ix = ox * l.stride - l.pad + kx;
                                if (ix < 0 || ix >= l.in_w) continue;
                                const std::size_t ii = in.at(ic, ix, iy);
                                gw[wbase + ky * l.k + kx] += g * in.v[ii];
                                grad_in.v[ii] +=
                                    g * static_cast<double>(w[wbase + ky * l.k + kx]);
                            }
                        }
                    }
                }
            }
        }
    } else {
        for (int oc = 0; oc < l.out_ch; ++oc) {
            const std::size_t base = grad_out.at(oc, 0, 0);
            const std::size_t cnt = static_cast<std::size_t>(l.out_w) * l.out_h;
            for (std::size_t i = 0; i < cnt; ++i) gbias[oc] += grad_out.v[base + i];
        }
        for (int ic = 0; ic < l.in_ch; ++ic) {
            for (int iy = 0; iy < l.in_h; ++iy) {
                for (int ix = 0; ix < l.in_w; ++ix) {
                    const std::size_t ii = in.at(ic, ix, iy);
                    const double x = in.v[ii];
                    double acc = 0.0;
                    for (int oc = 0; oc < l.out_ch; ++oc) {
                        const std::size_t wbase =
                            (static_cast<std::size_t>(ic) * l.out_ch + oc) * l.k * l.k;
                        for (int ky = 0; ky < l.k; ++ky) {
                            const int oy = iy * l.stride - l.pad + ky;
                            if (oy < 0 || oy >= l.out_h) continue;
                            for (int kx = 0; kx < l.k; ++kx) {
                                const int ox = ix * l.stride - l.pad + kx;
                                if (ox < 0 || ox >= l.out_w) continue;
                                const double g = grad_out.v[grad_out.at(oc, ox, oy)];
                                gw[wbase + ky * l.k + kx] += g * x;
                                acc += g * static_cast<double>(w[wbase + ky * l.k + kx]);
                            }
                        }
                    }
                    grad_in.v[ii] = acc;
                }
            }
        }
    }
}

// Model-internal input scaling: labels to [0,1], SDF channels from meters to
// a roughly unit range (raw hundreds-of-meters inputs saturate layer one).
#ifndef GUSTNAV_SDF_INPUT_SCALE
#define GUSTNAV_SDF_INPUT_SCALE (1.0 / 100.0)
#endif
Plane tensor_to_plane(const encoding::InputTensor& t) {
    Plane p;
    p.resize(3, t.nx, t.ny);
    const std::size_t n = t.plane();
    for (std::size_t i = 0; i < n; ++i) {
        p.v[i] = t.channels[i] * 0.25;
        p.v[n + i] = t.channels[n + i] * GUSTNAV_SDF_INPUT_SCALE;
        p.v[2 * n + i] = t.channels[2 * n + i] * GUSTNAV_SDF_INPUT_SCALE;
    }
    return p;
}

void run_forward(const AutoencoderParams& params, const encoding::InputTensor& input,
                 std::vector<Plane>& acts) {
    const Architecture& arch = params.arch;
    arch.validate();
    if (params.weights.size() != arch.param_count()) {
        throw ConfigError("weight vector size does not match the architecture");
    }
    if (input.nx != arch.input_w() || input.ny != arch.input_h()) {
        throw ConfigError("input tensor shape does not match the architecture");
    }
    acts.clear();
    acts.reserve(arch.layers.size() + 1);
    acts.push_back(tensor_to_plane(input));
    std::size_t off = 0;
    for (const LayerSpec& l : arch.layers) {
        Plane out;
        layer_forward(l, params.weights.data() + off, acts.back(), out);
        off += l.weight_count();
        acts.push_back(std::move(out));
    }
}

void apply_velocity_mask(const encoding::InputTensor& input, Plane& out) {
    for (int y = 0; y < out.h; ++y) {
        for (int x = 0; x < out.w; ++x) {
            if (input.obstacle(x, y)) {
                out.v[out.at(0, x, y)] = 0.0;
                out.v[out.at(1, x, y)] = 0.0;
            }
        }
    }
}

}  // namespace

FieldPrediction forward(const AutoencoderParams& params, const encoding::InputTensor& input) {
    std::vector<Plane> acts;
    run_forward(params, input, acts);
    Plane& last = acts.back();
    apply_velocity_mask(input, last);

    FieldPrediction pred;
    pred.nx = last.w;
    pred.ny = last.h;
    pred.channels = std::move(last.v);
    for (double x : pred.channels) {
        if (!std::isfinite(x)) throw NumericalError("non-finite surrogate output");
    }
    return pred;
}

FieldPrediction scale_to_physical(const FieldPrediction& normalized, double inlet_speed,
                                  double density) {
    FieldPrediction p = normalized;
    const std::size_t n = p.plane();
    const double su = inlet_speed;
    const double sp = density * inlet_speed * inlet_speed;
    const double gauge = oracle::outlet_pressure(inlet_speed);
    for (std::size_t i = 0; i < n; ++i) {
        p.channels[i] *= su;
        p.channels[n + i] *= su;
        p.channels[2 * n + i] = gauge + sp * p.channels[2 * n + i];
    }
    return p;
}

FieldPrediction predict_physical(const AutoencoderParams& params,
                                 const encoding::InputTensor& input,
                                 const domain::WindSpec& inlet) {
    return scale_to_physical(forward(params, input), inlet.speed);
}

oracle::VelocityField predict_field(const AutoencoderParams& params,
                                    const encoding::InputTensor& input,
                                    const domain::WindSpec& inlet, double cell) {
    const FieldPrediction pred = predict_physical(params, input, inlet);
    oracle::VelocityField f;
    f.nx = pred.nx;
    f.ny = pred.ny;
    f.cell = cell;
    f.inlet.speed = static_cast<double>(static_cast<float>(inlet.speed));
    const float dir_rad = static_cast<float>(inlet.dir_deg * units::deg_to_rad);
    f.inlet.dir_deg = static_cast<double>(dir_rad) * units::rad_to_deg;
    f.converged = true;
    const std::size_t n = pred.plane();
    f.u.resize(n);
    f.v.resize(n);
    f.p.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.u[i] = static_cast<float>(pred.channels[i]);
        f.v[i] = static_cast<float>(pred.channels[n + i]);
        f.p[i] = static_cast<float>(pred.channels[2 * n + i]);
    }
    return f;
}

double mae_loss(const FieldPrediction& pred, const oracle::VelocityField& target,
                const encoding::InputTensor& input) {
    if (pred.nx != target.nx || pred.ny != target.ny) {
        throw ConfigError("prediction and target grids are not congruent");
    }
    const std::size_t n = pred.plane();
    double sum = 0.0;
    std::size_t count = 0;
    for (int j = 0; j < pred.ny; ++j) {
        for (int i = 0; i < pred.nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * pred.nx + i;
            if (!input.obstacle(i, j)) {
                sum += std::abs(pred.channels[k] - target.u[k]);
                sum += std::abs(pred.channels[n + k] - target.v[k]);
                count += 2;
            }
            sum += std::abs(pred.channels[2 * n + k] - target.p[k]);
            count += 1;
        }
    }
    return sum / static_cast<double>(count);
}

double loss_and_gradient(const AutoencoderParams& params, const std::vector<FlowSample>& samples,
                         const std::vector<std::size_t>& indices, std::vector<double>& grad) {
    const Architecture& arch = params.arch;
    if (grad.size() != params.weights.size()) {
        throw ConfigError("gradient buffer size mismatch");
    }
    if (indices.empty()) throw ConfigError("empty batch");
    double total = 0.0;
    std::vector<Plane> acts;
    for (const std::size_t si : indices) {
        const FlowSample& s = samples[si];
        run_forward(params, s.input, acts);
        Plane& last = acts.back();
        apply_velocity_mask(s.input, last);

        // Loss in physical units: the network output is inlet-normalized.
        const double su = s.target.inlet.speed;
        const double sp = 1.196 * su * su;
        const double gauge = oracle::outlet_pressure(su);
        const std::size_t n = static_cast<std::size_t>(last.w) * last.h;
        Plane gout;
        gout.resize(3, last.w, last.h);
        double sum = 0.0;
        std::size_t count = 0;
        for (int y = 0; y < last.h; ++y) {
            for (int x = 0; x < last.w; ++x) {
                const std::size_t k = static_cast<std::size_t>(y) * last.w + x;
                if (!s.input.obstacle(x, y)) {
                    sum += std::abs(su * last.v[k] - s.target.u[k]);
                    sum += std::abs(su * last.v[n + k] - s.target.v[k]);
                    count += 2;
                }
                sum += std::abs(gauge + sp * last.v[2 * n + k] - s.target.p[k]);
                count += 1;
            }
        }
        const double inv = 1.0 / static_cast<double>(count);
        total += sum * inv;
        auto sgn = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
        for (int y = 0; y < last.h; ++y) {
            for (int x = 0; x < last.w; ++x) {
                const std::size_t k = static_cast<std::size_t>(y) * last.w + x;
                if (!s.input.obstacle(x, y)) {
                    gout.v[k] = sgn(su * last.v[k] - s.target.u[k]) * inv * su;
                    gout.v[n + k] = sgn(su * last.v[n + k] - s.target.v[k]) * inv * su;
                }
                gout.v[2 * n + k] =
                    sgn(gauge + sp * last.v[2 * n + k] - s.target.p[k]) * inv * sp;
            }
        }

        std::size_t off = params.weights.size();
        Plane gin;
        for (int li = static_cast<int>(arch.layers.size()) - 1; li >= 0; --li) {
            const LayerSpec& l = arch.layers[li];
            off -= l.weight_count();
            layer_backward(l, params.weights.data() + off, acts[li], acts[li + 1], gout, gin,
                           grad.data() + off);
            std::swap(gout, gin);
        }
    }
    const double inv_batch = 1.0 / static_cast<double>(indices.size());
    for (double& g : grad) g *= inv_batch;
    return total * inv_batch;
}

std::vector<FlowSample> generate_dataset(int n, std::uint64_t seed, const DatasetConfig& cfg) {
    if (n < 1) throw ConfigError("dataset size must be >= 1");
    std::vector<FlowSample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        bool done = false;
        for (int attempt = 0; attempt < cfg.max_retries && !done; ++attempt) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i) * 64 + attempt));
            encoding::LocalRect r;
            r.w = rng.uniform(cfg.min_footprint, cfg.max_footprint);
            r.l = rng.uniform(cfg.min_footprint, cfg.max_footprint);
            r.cx = rng.uniform(0.25, 0.55) * cfg.frame.length();
            r.cy = rng.uniform(0.35, 0.65) * cfg.frame.width();
            const double speed = rng.uniform(cfg.min_wind, cfg.max_wind);
            encoding::GeometryGrid labels;
            try {
                labels = encoding::encode_labels(r, cfg.frame);
            } catch (const ConfigError&) {
                continue;  // footprint clipped the boundary band; redraw
            }
            oracle::VelocityField field =
                oracle::solve_steady(labels, domain::WindSpec{speed, 0.0}, cfg.solver);
            if (!field.converged) continue;
            FlowSample s;
            s.input = encoding::build_input(&r, cfg.frame);
            s.target = std::move(field);
            out.push_back(std::move(s));
            done = true;
        }
        if (!done) {
            throw NumericalError("dataset generation: sample " + std::to_string(i) +
                                 " failed after " + std::to_string(cfg.max_retries) +
                                 " attempts");
        }
    }
    return out;
}

void save_dataset(const std::vector<FlowSample>& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream index(fs::path(dir) / "index.txt");
    if (!index) throw ParseError("cannot write dataset index in " + dir);
    char name[64];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::snprintf(name, sizeof(name), "sample_%05zu", i);
        const std::string tpath = std::string(name) + ".wten";
        const std::string fpath = std::string(name) + ".wfld";
        encoding::save_tensor(ds[i].input, (fs::path(dir) / tpath).string());
        oracle::save_field(ds[i].target, (fs::path(dir) / fpath).string());
        index << tpath << " " << fpath << "\n";
    }
}

std::vector<FlowSample> load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream index(fs::path(dir) / "index.txt");
    if (!index) throw ParseError("cannot open dataset index in " + dir);
    std::vector<FlowSample> ds;
    std::string tpath, fpath;
    while (index >> tpath >> fpath) {
        FlowSample s;
        s.input = encoding::load_tensor((fs::path(dir) / tpath).string());
        s.target = oracle::load_field((fs::path(dir) / fpath).string());
        ds.push_back(std::move(s));
    }
    if (ds.empty()) throw ParseError("dataset index is empty: " + dir);
    return ds;
}

TrainReport train(AutoencoderParams& params, const std::vector<FlowSample>& dataset,
                  const TrainConfig& cfg) {
    if (dataset.empty()) throw ConfigError("training dataset is empty");
    if (cfg.batch < 1 || cfg.epochs < 1) throw ConfigError("invalid training configuration");

    const std::size_t holdout =
        std::min(dataset.size() - 1,
                 static_cast<std::size_t>(cfg.holdout_frac * static_cast<double>(dataset.size())));
    const std::size_t ntrain = dataset.size() - holdout;

    std::vector<std::size_t> order(ntrain);
    for (std::size_t i = 0; i < ntrain; ++i) order[i] = i;

    std::vector<double> grad(params.weights.size(), 0.0);
    std::vector<double> m(params.weights.size(), 0.0);
    std::vector<double> v(params.weights.size(), 0.0);
    std::vector<float> last_good = params.weights;
    Rng rng(derive_seed(cfg.seed, 0x7247u));

    auto eval_mae = [&](std::size_t begin, std::size_t end) {
        if (begin >= end) return 0.0;
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            sum += mae_loss(predict_physical(params, dataset[i].input, dataset[i].target.inlet),
                            dataset[i].target, dataset[i].input);
        }
        return sum / static_cast<double>(end - begin);
    };

    TrainReport report;
    std::uint64_t step = 0;
    double lr = cfg.lr;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = ntrain; i > 1; --i) {
            const std::size_t j = rng.uniform_index(i);
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < ntrain; b += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t e = std::min(ntrain, b + static_cast<std::size_t>(cfg.batch));
            const std::vector<std::size_t> idx(order.begin() + b, order.begin() + e);
            std::fill(grad.begin(), grad.end(), 0.0);
            const double loss = loss_and_gradient(params, dataset, idx, grad);
            if (!std::isfinite(loss)) {
                params.weights = last_good;
                report.aborted = true;
                return report;
            }
            epoch_loss += loss;
            ++batches;
            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < params.weights.size(); ++i) {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
                const double mh = m[i] / bc1;
                const double vh = v[i] / bc2;
                params.weights[i] =
                    static_cast<float>(static_cast<double>(params.weights[i]) -
                                       lr * mh / (std::sqrt(vh) + cfg.eps));
            }
        }
        lr *= cfg.lr_decay;
        last_good = params.weights;

        EpochStats stats;
        stats.train_mae = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
        stats.holdout_mae = eval_mae(ntrain, dataset.size());
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(stats);
        if (cfg.stop_holdout_mae > 0.0 && holdout > 0 &&
            stats.holdout_mae <= cfg.stop_holdout_mae) {
            break;
        }
    }

    // Relative error against the mean velocity magnitude of the reference
    // split (holdout when present, else the training set).
    double mag = 0.0;
    std::size_t magn = 0;
    const std::size_t ref_begin = holdout > 0 ? ntrain : 0;
    for (std::size_t i = ref_begin; i < dataset.size(); ++i) {
        for (float x : dataset[i].target.u) {
            mag += std::abs(x);
            ++magn;
        }
        for (float x : dataset[i].target.v) {
            mag += std::abs(x);
            ++magn;
        }
    }
    const double denom = magn ? mag / static_cast<double>(magn) : 1.0;
    const double final_mae =
        report.epochs.empty()
            ? 0.0
            : (holdout > 0 ? report.epochs.back().holdout_mae : report.epochs.back().train_mae);
    report.final_rel_error = denom > 0.0 ? final_mae / denom : 0.0;
    return report;
}

namespace {

constexpr char kCheckpointMagic[4] = {'W', 'A', 'E', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void wr(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T rd(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError(std::string("checkpoint: truncated reading ") + what);
    return v;
}

}  // namespace

void save_checkpoint(const AutoencoderParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open checkpoint for writing: " + path);
    out.write(kCheckpointMagic, 4);
    wr(out, kCheckpointVersion);
    wr(out, static_cast<std::uint32_t>(params.arch.layers.size()));
    for (const LayerSpec& l : params.arch.layers) {
        wr(out, static_cast<std::uint8_t>(l.kind));
        wr(out, static_cast<std::uint8_t>(l.relu ? 1 : 0));
        wr(out, static_cast<std::uint8_t>(l.k));
        wr(out, static_cast<std::uint8_t>(l.stride));
        wr(out, static_cast<std::uint8_t>(l.pad));
        wr(out, static_cast<std::uint8_t>(l.out_pad_w));
        wr(out, static_cast<std::uint8_t>(l.out_pad_h));
        wr(out, static_cast<std::uint8_t>(0));
        wr(out, static_cast<std::uint32_t>(l.in_ch));
        wr(out, static_cast<std::uint32_t>(l.out_ch));
        wr(out, static_cast<std::uint32_t>(l.in_w));
        wr(out, static_cast<std::uint32_t>(l.in_h));
        wr(out, static_cast<std::uint32_t>(l.out_w));
        wr(out, static_cast<std::uint32_t>(l.out_h));
    }
    wr(out, static_cast<std::uint64_t>(params.weights.size()));
    out.write(reinterpret_cast<const char*>(params.weights.data()),
              static_cast<std::streamsize>(params.weights.size() * sizeof(float)));
    if (!out) throw ParseError("failed writing checkpoint: " + path);
}

AutoencoderParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw ParseError("checkpoint: bad magic: " + path);
    }
    const auto version = rd<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
        throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    }
    AutoencoderParams p;
    const auto nlayers = rd<std::uint32_t>(in, "layer count");
    if (nlayers == 0 || nlayers > 64) throw ParseError("checkpoint: implausible layer count");
    for (std::uint32_t i = 0; i < nlayers; ++i) {
        LayerSpec l;
        l.kind = static_cast<LayerKind>(rd<std::uint8_t>(in, "kind"));
        l.relu = rd<std::uint8_t>(in, "relu") != 0;
        l.k = rd<std::uint8_t>(in, "k");
        l.stride = rd<std::uint8_t>(in, "stride");
        l.pad = rd<std::uint8_t>(in, "pad");
        l.out_pad_w = rd<std::uint8_t>(in, "out_pad_w");
        l.out_pad_h = rd<std::uint8_t>(in, "out_pad_h");
        rd<std::uint8_t>(in, "reserved");
        l.in_ch = static_cast<int>(rd<std::uint32_t>(in, "in_ch"));
        l.out_ch = static_cast<int>(rd<std::uint32_t>(in, "out_ch"));
        l.in_w = static_cast<int>(rd<std::uint32_t>(in, "in_w"));
        l.in_h = static_cast<int>(rd<std::uint32_t>(in, "in_h"));
        l.out_w = static_cast<int>(rd<std::uint32_t>(in, "out_w"));
        l.out_h = static_cast<int>(rd<std::uint32_t>(in, "out_h"));
        p.arch.layers.push_back(l);
    }
    p.arch.validate();
    const auto count = rd<std::uint64_t>(in, "weight count");
    if (count != p.arch.param_count()) {
        throw ParseError("checkpoint: weight count does not match the architecture");
    }
    p.weights.resize(count);
    in.read(reinterpret_cast<char*>(p.weights.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw ParseError("checkpoint: truncated weights");
    return p;
}

oracle::VelocityField baseline_wake_field(const encoding::LocalRect& building,
                                          const encoding::PatchFrame& frame, double inlet_speed) {
    oracle::VelocityField f;
    f.nx = frame.nx;
    f.ny = frame.ny;
    f.cell = frame.cell;
    f.inlet.speed = static_cast<double>(static_cast<float>(inlet_speed));
    f.inlet.dir_deg = 0.0;
    f.converged = true;
    f.u.assign(f.size(), static_cast<float>(inlet_speed));
    f.v.assign(f.size(), 0.0f);
    f.p.assign(f.size(), 0.0f);

    const double x1 = building.cx + building.w * 0.5;
    const double recovery = 4.0 * building.w;
    for (int j = 0; j < f.ny; ++j) {
        for (int i = 0; i < f.nx; ++i) {
            const Vec2 c = frame.cell_center(i, j);
            if (building.rect().contains(c)) {
                f.u[f.idx(i, j)] = 0.0f;
            } else if (c.x > x1 && std::abs(c.y - building.cy) <= building.l * 0.5) {
                const double t = std::min(1.0, (c.x - x1) / recovery);
                f.u[f.idx(i, j)] = static_cast<float>(inlet_speed * t);
            }
        }
    }
    return f;
}

}  // namespace gustnav::surrogate
