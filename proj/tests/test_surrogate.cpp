#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "gustnav/autoencoder.hpp"
#include "gustnav/error.hpp"
#include "gustnav/rng.hpp"

using namespace gustnav;
using namespace gustnav::surrogate;

namespace {

encoding::PatchFrame tiny_frame() {
    encoding::PatchFrame f;
    f.nx = 8;
    f.ny = 8;
    f.cell = 3.0;
    return f;
}

// Synthetic sample: real encoding, random target field. Good enough for
// gradient arithmetic, no solver needed.
FlowSample synthetic_sample(std::uint64_t seed) {
    const encoding::PatchFrame frame = tiny_frame();
    encoding::LocalRect r{12.0, 12.0, 6.5, 6.5};
    FlowSample s;
    s.input = encoding::build_input(&r, frame);
    s.target.nx = frame.nx;
    s.target.ny = frame.ny;
    s.target.cell = frame.cell;
    s.target.inlet = {5.0, 0.0};
    s.target.converged = true;
    Rng rng(seed);
    s.target.u.resize(s.target.size());
    s.target.v.resize(s.target.size());
    s.target.p.resize(s.target.size());
    for (std::size_t i = 0; i < s.target.size(); ++i) {
        s.target.u[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
        s.target.v[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
        s.target.p[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
    return s;
}

}  // namespace

TEST_SUITE_BEGIN("surrogate");

TEST_CASE("parameter count matches the closed form") {
    const Architecture a = Architecture::autoencoder(172, 79);
    // conv: out*in*k^2 + out; deconv the same with in/out swapped in layout.
    const std::size_t expect = (8 * 3 * 25 + 8) + (16 * 8 * 25 + 16) + (32 * 16 * 25 + 32) +
                               (32 * 16 * 25 + 16) + (16 * 8 * 25 + 8) + (8 * 3 * 25 + 3);
    CHECK(a.param_count() == expect);
    CHECK(a.output_w() == 172);
    CHECK(a.output_h() == 79);

    const AutoencoderParams p = init_params(a, 7);
    CHECK(p.weights.size() == expect);
}

TEST_CASE("init determinism and degenerate arch rejection") {
    const Architecture a = Architecture::autoencoder(172, 79);
    const AutoencoderParams p1 = init_params(a, 42);
    const AutoencoderParams p2 = init_params(a, 42);
    CHECK(p1.weights == p2.weights);
    CHECK(init_params(a, 43).weights != p1.weights);
    Architecture empty;
    CHECK_THROWS_AS(init_params(empty, 1), ConfigError);
}

TEST_CASE("zero weights produce zero output; shape contract holds") {
    const encoding::PatchFrame frame = tiny_frame();
    encoding::LocalRect r{12.0, 12.0, 6.5, 6.5};
    const encoding::InputTensor in = encoding::build_input(&r, frame);
    AutoencoderParams p = init_params(Architecture::tiny(8, 8), 1);
    std::fill(p.weights.begin(), p.weights.end(), 0.0f);
    const FieldPrediction pred = forward(p, in);
    CHECK(pred.nx == 8);
    CHECK(pred.ny == 8);
    CHECK(pred.channels.size() == 3u * 8 * 8);
    for (double x : pred.channels) CHECK(x == 0.0);
}

TEST_CASE("shape mismatch is rejected") {
    AutoencoderParams p = init_params(Architecture::tiny(8, 8), 1);
    const encoding::InputTensor wrong = encoding::build_input(nullptr, encoding::PatchFrame{});
    CHECK_THROWS_AS(forward(p, wrong), ConfigError);
}

TEST_CASE("mae_loss hand cases") {
    const encoding::PatchFrame frame = tiny_frame();
    const encoding::InputTensor in = encoding::build_input(nullptr, frame);  // no obstacles
    FieldPrediction pred;
    pred.nx = 8;
    pred.ny = 8;
    pred.channels.assign(3 * 64, 0.0);
    oracle::VelocityField target;
    target.nx = target.ny = 8;
    target.u.assign(64, 0.0f);
    target.v.assign(64, 0.0f);
    target.p.assign(64, 0.0f);
    CHECK(mae_loss(pred, target, in) == 0.0);
    for (double& x : pred.channels) x = 1.0;
    CHECK(mae_loss(pred, target, in) == doctest::Approx(1.0));
    // Hand-built asymmetric case: u off by 2 on one cell only.
    for (double& x : pred.channels) x = 0.0;
    pred.channels[10] = 2.0;
    CHECK(mae_loss(pred, target, in) == doctest::Approx(2.0 / 192.0));
}

TEST_CASE("analytic gradient matches central finite differences") {
    const FlowSample s = synthetic_sample(99);
    AutoencoderParams p = init_params(Architecture::tiny(8, 8), 3);

    std::vector<double> grad(p.weights.size(), 0.0);
    const std::vector<std::size_t> idx{0};
    const std::vector<FlowSample> samples{s};
    loss_and_gradient(p, samples, idx, grad);

    Rng rng(1234);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t c = rng.uniform_index(p.weights.size());
        const float w0 = p.weights[c];
        const float eps = 1e-3f;
        AutoencoderParams pp = p;
        pp.weights[c] = w0 + eps;
        AutoencoderParams pm = p;
        pm.weights[c] = w0 - eps;
        const double lp =
            mae_loss(predict_physical(pp, s.input, s.target.inlet), s.target, s.input);
        const double lm =
            mae_loss(predict_physical(pm, s.input, s.target.inlet), s.target, s.input);
        const double dw = static_cast<double>(pp.weights[c]) - pm.weights[c];
        const double gn = (lp - lm) / dw;
        const double ga = grad[c];
        const double rel = std::abs(ga - gn) / std::max({std::abs(ga), std::abs(gn), 1e-8});
        CHECK(rel <= 1e-4);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("lr=0 leaves weights unchanged") {
    std::vector<FlowSample> ds{synthetic_sample(5)};
    AutoencoderParams p = init_params(Architecture::tiny(8, 8), 11);
    const std::vector<float> before = p.weights;
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.lr = 0.0;
    cfg.holdout_frac = 0.0;
    const TrainReport rep = train(p, ds, cfg);
    CHECK(p.weights == before);
    REQUIRE(rep.epochs.size() == 3);
    CHECK(rep.epochs[0].train_mae == doctest::Approx(rep.epochs[2].train_mae));
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
    std::vector<FlowSample> ds;
    for (int i = 0; i < 4; ++i) ds.push_back(synthetic_sample(100 + i));
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch = 2;
    cfg.seed = 77;
    AutoencoderParams a = init_params(Architecture::tiny(8, 8), 9);
    AutoencoderParams b = a;
    const TrainReport ra = train(a, ds, cfg);
    const TrainReport rb = train(b, ds, cfg);
    CHECK(a.weights == b.weights);
    REQUIRE(ra.epochs.size() == rb.epochs.size());
    for (std::size_t i = 0; i < ra.epochs.size(); ++i) {
        CHECK(ra.epochs[i].train_mae == rb.epochs[i].train_mae);
        CHECK(ra.epochs[i].holdout_mae == rb.epochs[i].holdout_mae);
    }
}

TEST_CASE("single oracle sample can be memorized") {
    // Small real solve so the unit test stays quick; the acceptance suite
    // runs the full-size version.
    encoding::PatchFrame frame;
    frame.nx = 44;
    frame.ny = 21;
    frame.cell = 3.0;
    encoding::LocalRect r{40.0, 31.5, 15.0, 12.0};
    encoding::GeometryGrid g = encoding::encode_labels(r, frame);
    oracle::VelocityField target = oracle::solve_steady(g, {5.0, 0.0});
    REQUIRE(target.converged);

    FlowSample s;
    s.input = encoding::build_input(&r, frame);
    s.target = target;
    std::vector<FlowSample> ds{s};

    AutoencoderParams p = init_params(Architecture::autoencoder(frame.nx, frame.ny), 21);
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.batch = 1;
    cfg.holdout_frac = 0.0;
    cfg.seed = 5;
    const TrainReport rep = train(p, ds, cfg);
    REQUIRE_FALSE(rep.aborted);

    double mag = 0.0;
    for (float x : target.u) mag += std::abs(x);
    for (float x : target.v) mag += std::abs(x);
    mag /= static_cast<double>(2 * target.size());
    const double final_mae =
        mae_loss(predict_physical(p, s.input, target.inlet), s.target, s.input);
    CHECK(final_mae < 0.05 * mag);
}

TEST_CASE("checkpoint round-trip preserves forward bit-exactly") {
    AutoencoderParams p = init_params(Architecture::tiny(8, 8), 31);
    save_checkpoint(p, "roundtrip_ae.bin");
    const AutoencoderParams q = load_checkpoint("roundtrip_ae.bin");
    CHECK(q.weights == p.weights);
    const FlowSample s = synthetic_sample(8);
    const FieldPrediction a = forward(p, s.input);
    const FieldPrediction b = forward(q, s.input);
    CHECK(a.channels == b.channels);
    std::filesystem::remove("roundtrip_ae.bin");

    std::ofstream bad("bad_ae.bin", std::ios::binary);
    bad << "NOPE";
    bad.close();
    CHECK_THROWS_AS(load_checkpoint("bad_ae.bin"), ParseError);
    std::filesystem::remove("bad_ae.bin");
}

TEST_CASE("dataset generation is deterministic; save/load round-trips") {
    DatasetConfig cfg;
    cfg.frame.nx = 44;
    cfg.frame.ny = 21;
    cfg.frame.cell = 3.0;
    cfg.min_footprint = 10.0;
    cfg.max_footprint = 20.0;
    const auto a = generate_dataset(2, 123, cfg);
    const auto b = generate_dataset(2, 123, cfg);
    REQUIRE(a.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a[i].input == b[i].input);
        CHECK(a[i].target.same_data(b[i].target));
        CHECK(a[i].target.converged);
    }
    save_dataset(a, "ds_roundtrip");
    const auto c = load_dataset("ds_roundtrip");
    REQUIRE(c.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(c[i].input == a[i].input);
        CHECK(c[i].target.same_data(a[i].target));
    }
    std::filesystem::remove_all("ds_roundtrip");
}

TEST_CASE("forward latency on the full grid is far under budget") {
    AutoencoderParams p = init_params(Architecture::autoencoder(172, 79), 2);
    const encoding::InputTensor in = encoding::build_input(nullptr, encoding::PatchFrame{});
    const auto t0 = std::chrono::steady_clock::now();
    const FieldPrediction pred = forward(p, in);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(pred.channels.size() == 3u * 172 * 79);
    CHECK(secs < 5.0);
}

TEST_CASE("baseline wake stub") {
    encoding::PatchFrame frame;
    encoding::LocalRect r{181.5, 118.5, 60.0, 45.0};
    const oracle::VelocityField f = baseline_wake_field(r, frame, 8.0);
    // Free stream upwind, zero inside, linear recovery behind.
    CHECK(f.u[f.idx(20, 39)] == 8.0f);
    CHECK(f.u[f.idx(60, 39)] == 0.0f);  // inside the footprint
    const double x1 = r.cx + r.w * 0.5;
    const int just_behind = static_cast<int>((x1 + 30.0) / frame.cell);
    CHECK(f.u[f.idx(just_behind, 39)] > 0.0f);
    CHECK(f.u[f.idx(just_behind, 39)] < 8.0f);
    CHECK(f.u[f.idx(frame.nx - 2, 39)] > 6.0f);  // mostly recovered far downstream
}

TEST_SUITE_END();
