#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "core/error.h"
#include "core/rng.h"
#include "doctest.h"
#include "metrics/metrics.h"

using namespace talkie;
using namespace talkie::metrics;

namespace {

struct Seq {
    int64_t frames, vertices;
    std::vector<double> data;
    MotionView view() const { return {frames, vertices, data.data()}; }
};

Seq zeros(int64_t T, int64_t V) { return {T, V, std::vector<double>(T * V * 3, 0.0)}; }

}  // namespace

TEST_CASE("lve hand cases") {
    const std::vector<int64_t> lip = {0, 1, 2};
    auto ref = zeros(10, 5);
    auto pred = ref;
    CHECK(lve(pred.view(), ref.view(), lip) == 0.0);

    // uniform offset delta on all lip vertices, all frames -> delta
    const double delta = 0.75;
    for (int64_t t = 0; t < 10; ++t)
        for (int64_t v : lip) pred.data[(t * 5 + v) * 3 + 0] = delta;
    CHECK(std::abs(lve(pred.view(), ref.view(), lip) - delta) < 1e-12);

    // one lip vertex displaced 3 mm in exactly one of 10 frames -> 0.3 mm
    pred = zeros(10, 5);
    pred.data[(4 * 5 + 2) * 3 + 1] = 3.0;
    CHECK(std::abs(lve(pred.view(), ref.view(), lip) - 0.3) < 1e-12);
}

TEST_CASE("mve hand cases") {
    auto ref = zeros(6, 8);
    auto pred = ref;
    CHECK(mve(pred.view(), ref.view()) == 0.0);

    const double delta = 1.25;
    for (auto i = 0u; i < pred.data.size(); i += 3) pred.data[i] = delta;
    CHECK(std::abs(mve(pred.view(), ref.view()) - delta) < 1e-12);

    // half the vertices offset by 2 mm, half exact -> 1 mm
    pred = zeros(6, 8);
    for (int64_t t = 0; t < 6; ++t)
        for (int64_t v = 0; v < 4; ++v) pred.data[(t * 8 + v) * 3 + 2] = 2.0;
    CHECK(std::abs(mve(pred.view(), ref.view()) - 1.0) < 1e-12);
}

TEST_CASE("fdd hand cases") {
    const std::vector<int64_t> upper = {1, 3};
    auto ref = zeros(64, 4);
    auto pred = ref;
    CHECK(fdd(pred.view(), ref.view(), upper) == 0.0);

    // static sequences (any constants) have zero stds
    for (int64_t t = 0; t < 64; ++t)
        for (int64_t v = 0; v < 4; ++v) {
            pred.data[(t * 4 + v) * 3 + 0] = 2.0;
            ref.data[(t * 4 + v) * 3 + 1] = -1.0;
        }
    CHECK(std::abs(fdd(pred.view(), ref.view(), upper)) < 1e-12);

    // ref norm = 2a + a*sin(theta_t) over one full period: population std a/sqrt(2)
    const double a = 0.8;
    ref = zeros(64, 4);
    pred = zeros(64, 4);
    for (int64_t t = 0; t < 64; ++t) {
        const double n = 2 * a + a * std::sin(2.0 * M_PI * static_cast<double>(t) / 64.0);
        for (int64_t v : upper) ref.data[(t * 4 + v) * 3 + 0] = n;
    }
    for (int64_t t = 0; t < 64; ++t)
        for (int64_t v = 0; v < 4; ++v) pred.data[(t * 4 + v) * 3 + 0] = 5.0;  // static
    const double got = fdd(pred.view(), ref.view(), upper);
    CHECK(std::abs(got - (-a / std::sqrt(2.0))) < 1e-9);

    // antisymmetry
    CHECK(std::abs(fdd(ref.view(), pred.view(), upper) + got) < 1e-12);

    auto tiny = zeros(1, 4);
    CHECK_THROWS_AS(fdd(tiny.view(), tiny.view(), upper), Error);
}

TEST_CASE("psnr hand cases") {
    const int64_t n = 24 * 24 * 3;
    std::vector<double> a(n, 0.5), b(n, 0.5);
    auto r = psnr({a.data()}, {b.data()}, n);
    CHECK(r.capped);
    CHECK(r.db == 99.0);

    // constant difference of 0.1 -> MSE 0.01 -> 20 dB
    for (auto& v : b) v = 0.6;
    r = psnr({a.data()}, {b.data()}, n);
    CHECK(!r.capped);
    CHECK(std::abs(r.db - 20.0) < 1e-9);
}

TEST_CASE("ssim of an image with itself is 1") {
    Rng rng(33);
    const int h = 16, w = 16, c = 3;
    std::vector<double> img(h * w * c);
    for (auto& v : img) v = rng.uniform();
    CHECK(std::abs(ssim({img.data()}, {img.data()}, h, w, c) - 1.0) < 1e-12);

    // and strictly below 1 for a different image
    std::vector<double> other(h * w * c);
    for (auto& v : other) v = rng.uniform();
    CHECK(ssim({img.data()}, {other.data()}, h, w, c) < 0.999);
}

TEST_CASE("temporal dynamics hand cases") {
    // static sequence -> zero field
    std::vector<double> f0(5 * 3, 1.0), f1(5 * 3, 1.0), f2(5 * 3, 1.0);
    auto dyn = temporal_dynamics({f0.data(), f1.data(), f2.data()}, 5, 3);
    for (double v : dyn) CHECK(v == 0.0);

    // scalar element alternating +d/-d each frame -> mean adjacent difference 2d
    const double d = 0.45;
    std::vector<std::vector<double>> frames(7, std::vector<double>(1));
    for (int t = 0; t < 7; ++t) frames[t][0] = (t % 2 == 0) ? d : -d;
    std::vector<const double*> ptrs;
    for (auto& f : frames) ptrs.push_back(f.data());
    dyn = temporal_dynamics(ptrs, 1, 1);
    CHECK(std::abs(dyn[0] - 2 * d) < 1e-12);

    // invariant under adding a constant to every frame
    for (auto& f : frames) f[0] += 17.5;
    auto dyn2 = temporal_dynamics(ptrs, 1, 1);
    CHECK(std::abs(dyn2[0] - dyn[0]) < 1e-12);

    CHECK_THROWS_AS(temporal_dynamics({f0.data()}, 5, 3), Error);
}

TEST_CASE("motion metrics are invariant under a shared rotation of offsets") {
    Rng rng(77);
    const int64_t T = 8, V = 12;
    Seq pred = zeros(T, V), ref = zeros(T, V);
    for (auto& v : pred.data) v = rng.uniform(-2, 2);
    for (auto& v : ref.data) v = rng.uniform(-2, 2);
    const std::vector<int64_t> lip = {0, 1, 2, 3};

    // rotation about z by 0.7 rad applied to every offset of both sequences
    const double cs = std::cos(0.7), sn = std::sin(0.7);
    auto rot = [&](const Seq& s) {
        Seq out = s;
        for (size_t i = 0; i < s.data.size(); i += 3) {
            out.data[i] = cs * s.data[i] - sn * s.data[i + 1];
            out.data[i + 1] = sn * s.data[i] + cs * s.data[i + 1];
        }
        return out;
    };
    Seq pred_r = rot(pred), ref_r = rot(ref);
    CHECK(lve(pred.view(), ref.view(), lip) ==
          doctest::Approx(lve(pred_r.view(), ref_r.view(), lip)).epsilon(1e-12));
    CHECK(mve(pred.view(), ref.view()) ==
          doctest::Approx(mve(pred_r.view(), ref_r.view())).epsilon(1e-12));
}

TEST_CASE("pearson correlation sanity") {
    std::vector<double> a = {1, 2, 3, 4, 5};
    std::vector<double> b = {2, 4, 6, 8, 10};
    CHECK(std::abs(pearson(a, b) - 1.0) < 1e-12);
    std::vector<double> c = {5, 4, 3, 2, 1};
    CHECK(std::abs(pearson(a, c) + 1.0) < 1e-12);
}

TEST_CASE("report aggregates and flags variants") {
    MetricReport rep;
    SequenceMetrics s1;
    s1.name = "a";
    s1.lve_mm = 1.0;
    s1.mve_mm = 2.0;
    SequenceMetrics s2;
    s2.name = "b";
    s2.lve_mm = 3.0;
    s2.mve_mm = 4.0;
    rep.sequences = {s1, s2};
    auto j = rep.to_json();
    CHECK(j["aggregate"]["lve_mm"] == 2.0);
    CHECK(j["aggregate"]["mve_mm"] == 3.0);
    CHECK(j["variants"]["mve"] == "mean_over_vertices");
    CHECK(j["sequences"].size() == 2);
}
