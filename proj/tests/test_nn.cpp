#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>

#include "core/rng.h"
#include "doctest.h"
#include "nn/adam.h"
#include "nn/ops.h"
#include "nn/tape.h"

using namespace talkie;
using namespace talkie::nn;

namespace {

// Finite-difference check: |num - ana| <= tol * max(1, |num|, |ana|) per
// element, central differences on the float32 forward.
void gradcheck(std::vector<Param*> params, const std::function<float(Tape&)>& forward,
               double tol = 2e-2) {
    Tape tape;
    // leaves must be registered before the function uses them
    const float loss0 = forward(tape);
    (void)loss0;
    int loss_id = tape.size() - 1;
    tape.backward(loss_id);
    for (Param* p : params) p->zero_grad();
    tape.accumulate_param_grads();

    const double h = 5e-3;
    for (Param* p : params) {
        for (size_t i = 0; i < p->w.size(); ++i) {
            const float keep = p->w[i];
            p->w[i] = keep + static_cast<float>(h);
            Tape tp;
            const double up = forward(tp);
            p->w[i] = keep - static_cast<float>(h);
            Tape tm;
            const double dn = forward(tm);
            p->w[i] = keep;
            const double num = (up - dn) / (2 * h);
            const double ana = p->g[i];
            const double err = std::abs(num - ana);
            const double scale = std::max({1.0, std::abs(num), std::abs(ana)});
            if (err > tol * scale) {
                CAPTURE(p->name);
                CAPTURE(i);
                CAPTURE(num);
                CAPTURE(ana);
                REQUIRE(err <= tol * scale);
            }
        }
    }
}

std::vector<float> random_vec(size_t n, Rng& rng, double lo = -1, double hi = 1) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

}  // namespace

TEST_CASE("gradcheck: elementwise ops") {
    Rng rng(10);
    Param a = make_param_normal("a", {3, 4}, rng, 1.0);
    Param b = make_param_normal("b", {3, 4}, rng, 1.0);
    // keep away from relu/l1 kinks
    for (auto& v : a.w)
        if (std::abs(v) < 0.1f) v += 0.3f;
    for (auto& v : b.w)
        if (std::abs(v - 0.0f) < 0.1f) v -= 0.3f;
    auto wts = random_vec(12, rng);

    auto make = [&](std::function<int(Tape&, int, int)> op) {
        return [&, op](Tape& t) -> float {
            const int la = t.leaf(a), lb = t.leaf(b);
            const int y = op(t, la, lb);
            const int w = t.input(wts.data(), t[y].shape);
            const int loss = dot(t, y, w);
            return t[loss].v[0];
        };
    };
    gradcheck({&a, &b}, make([](Tape& t, int x, int y) { return add(t, x, y); }));
    gradcheck({&a, &b}, make([](Tape& t, int x, int y) { return sub(t, x, y); }));
    gradcheck({&a, &b}, make([](Tape& t, int x, int y) { return mul(t, x, y); }));
    gradcheck({&a}, make([](Tape& t, int x, int) { return scale(t, x, -1.7); }));
    gradcheck({&a}, make([](Tape& t, int x, int) { return silu(t, x); }));
    gradcheck({&a}, make([](Tape& t, int x, int) { return gelu(t, x); }));
    gradcheck({&a}, make([](Tape& t, int x, int) { return sigmoid(t, x); }));
    gradcheck({&a}, make([](Tape& t, int x, int) { return tanh_op(t, x); }));
    gradcheck({&a}, make([](Tape& t, int x, int) { return relu(t, x); }));
    gradcheck({&a}, make([](Tape& t, int x, int) { return leaky_relu(t, x, 0.2); }));
}

TEST_CASE("gradcheck: matmul family") {
    Rng rng(11);
    Param a = make_param_normal("a", {3, 5}, rng, 0.8);
    Param b = make_param_normal("b", {5, 4}, rng, 0.8);
    Param bt = make_param_normal("bt", {4, 5}, rng, 0.8);
    Param bias = make_param_normal("bias", {4}, rng, 0.5);
    auto wts = random_vec(12, rng);

    gradcheck({&a, &b}, [&](Tape& t) {
        const int y = matmul(t, t.leaf(a), t.leaf(b));
        const int loss = dot(t, y, t.input(wts.data(), t[y].shape));
        return t[loss].v[0];
    });
    gradcheck({&a, &bt, &bias}, [&](Tape& t) {
        const int y = linear(t, t.leaf(a), t.leaf(bt), t.leaf(bias));
        const int loss = dot(t, y, t.input(wts.data(), t[y].shape));
        return t[loss].v[0];
    });
}

TEST_CASE("gradcheck: normalization layers") {
    Rng rng(12);
    Param x = make_param_normal("x", {4, 6}, rng, 1.0);
    Param gamma = make_param_normal("gamma", {6}, rng, 0.3);
    Param beta = make_param_normal("beta", {6}, rng, 0.3);
    for (auto& v : gamma.w) v += 1.0f;
    auto wts = random_vec(24, rng);
    gradcheck({&x, &gamma, &beta}, [&](Tape& t) {
        const int y = layer_norm(t, t.leaf(x), t.leaf(gamma), t.leaf(beta));
        const int loss = dot(t, y, t.input(wts.data(), t[y].shape));
        return t[loss].v[0];
    });

    Param xc = make_param_normal("xc", {4, 3, 3}, rng, 1.0);
    Param gc = make_param("gc", {4}, 1.0f);
    Param bc = make_param("bc", {4}, 0.1f);
    auto wts2 = random_vec(36, rng);
    gradcheck({&xc, &gc, &bc}, [&](Tape& t) {
        const int y = group_norm(t, t.leaf(xc), 2, t.leaf(gc), t.leaf(bc));
        const int loss = dot(t, y, t.input(wts2.data(), t[y].shape));
        return t[loss].v[0];
    });
}

TEST_CASE("gradcheck: conv2d and upsample") {
    Rng rng(13);
    Param x = make_param_normal("x", {2, 6, 6}, rng, 0.8);
    Param w = make_param_normal("w", {3, 2, 3, 3}, rng, 0.4);
    Param b = make_param_normal("b", {3}, rng, 0.2);

    {
        auto wts = random_vec(3 * 6 * 6, rng);
        gradcheck({&x, &w, &b}, [&](Tape& t) {
            const int y = conv2d(t, t.leaf(x), t.leaf(w), t.leaf(b), 1, 1);
            const int loss = dot(t, y, t.input(wts.data(), t[y].shape));
            return t[loss].v[0];
        });
    }
    {
        auto wts = random_vec(3 * 3 * 3, rng);
        gradcheck({&x, &w, &b}, [&](Tape& t) {
            const int y = conv2d(t, t.leaf(x), t.leaf(w), t.leaf(b), 2, 1);
            const int loss = dot(t, y, t.input(wts.data(), t[y].shape));
            return t[loss].v[0];
        });
    }
    {
        auto wts = random_vec(2 * 12 * 12, rng);
        gradcheck({&x}, [&](Tape& t) {
            const int y = upsample_nearest2(t, t.leaf(x));
            const int loss = dot(t, y, t.input(wts.data(), t[y].shape));
            return t[loss].v[0];
        });
    }
}

TEST_CASE("gradcheck: multihead attention with mask") {
    Rng rng(14);
    Param q = make_param_normal("q", {4, 8}, rng, 0.7);
    Param k = make_param_normal("k", {5, 8}, rng, 0.7);
    Param v = make_param_normal("v", {5, 8}, rng, 0.7);
    auto wts = random_vec(32, rng);

    gradcheck({&q, &k, &v}, [&](Tape& t) {
        const int y = multihead_attention(t, t.leaf(q), t.leaf(k), t.leaf(v), 2);
        const int loss = dot(t, y, t.input(wts.data(), t[y].shape));
        return t[loss].v[0];
    });

    const float ninf = -std::numeric_limits<float>::infinity();
    std::vector<float> mask(4 * 5, 0.0f);
    mask[0 * 5 + 3] = ninf;
    mask[2 * 5 + 0] = ninf;
    for (int j = 0; j < 5; ++j) mask[3 * 5 + j] = ninf;  // fully masked row
    gradcheck({&q, &k, &v}, [&](Tape& t) {
        const int y = multihead_attention(t, t.leaf(q), t.leaf(k), t.leaf(v), 2, &mask);
        const int loss = dot(t, y, t.input(wts.data(), t[y].shape));
        return t[loss].v[0];
    });

    // a fully masked row produces exactly zero output
    Tape t;
    const int y = multihead_attention(t, t.leaf(q), t.leaf(k), t.leaf(v), 2, &mask);
    for (int d = 0; d < 8; ++d) CHECK(t[y].v[3 * 8 + d] == 0.0f);
}

TEST_CASE("gradcheck: shape plumbing and reductions") {
    Rng rng(15);
    Param x = make_param_normal("x", {6, 3}, rng, 1.0);
    Param y2 = make_param_normal("y2", {2, 3}, rng, 1.0);
    Param tgt = make_param_normal("tgt", {6, 3}, rng, 1.0);
    // avoid |.| kinks for the l1 check
    for (size_t i = 0; i < x.w.size(); ++i)
        if (std::abs(x.w[i] - tgt.w[i]) < 0.1f) x.w[i] += 0.25f;

    auto wts = random_vec(6, rng);
    gradcheck({&x}, [&](Tape& t) {
        const int s = slice_rows(t, t.leaf(x), 2, 2);
        const int loss = dot(t, s, t.input(wts.data(), t[s].shape));
        return t[loss].v[0];
    });
    auto wts8 = random_vec(24, rng);
    gradcheck({&x, &y2}, [&](Tape& t) {
        const int c = concat_rows(t, {t.leaf(y2), slice_rows(t, t.leaf(x), 0, 6)});
        const int loss = dot(t, c, t.input(wts8.data(), t[c].shape));
        return t[loss].v[0];
    });
    gradcheck({&x}, [&](Tape& t) { return t[mean_all(t, t.leaf(x))].v[0]; });
    gradcheck({&x, &tgt}, [&](Tape& t) { return t[mse(t, t.leaf(x), t.leaf(tgt))].v[0]; });
    gradcheck({&x, &tgt}, [&](Tape& t) { return t[l1(t, t.leaf(x), t.leaf(tgt))].v[0]; });
    gradcheck({&x}, [&](Tape& t) {
        const int r = reshape(t, t.leaf(x), {3, 6});
        const int loss = dot(t, r, t.input(wts8.data(), {3, 6}));
        return t[loss].v[0];
    });
}

TEST_CASE("gradcheck: gather_rows scatters into the table") {
    Rng rng(16);
    Param table = make_param_normal("table", {5, 3}, rng, 1.0);
    const std::vector<int> idx = {4, 0, 0, 2};
    auto wts = random_vec(12, rng);
    gradcheck({&table}, [&](Tape& t) {
        const int g = gather_rows(t, t.leaf(table), idx);
        const int loss = dot(t, g, t.input(wts.data(), t[g].shape));
        return t[loss].v[0];
    });
}

TEST_CASE("straight-through estimator equals the bypass gradient") {
    Rng rng(17);
    Param z = make_param_normal("z", {3, 2}, rng, 1.0);
    Param cb = make_param_normal("cb", {4, 2}, rng, 1.0);
    auto wts = random_vec(6, rng);

    // nearest codebook rows for each z row
    std::vector<int> idx(3);
    for (int i = 0; i < 3; ++i) {
        double best = 1e30;
        for (int c = 0; c < 4; ++c) {
            double d = 0;
            for (int k = 0; k < 2; ++k) {
                const double diff = z.w[i * 2 + k] - cb.w[c * 2 + k];
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                idx[i] = c;
            }
        }
    }

    // STE path: loss over quantized values, gradient flows to z
    Tape t1;
    {
        const int lz = t1.leaf(z);
        const int zq = gather_rows(t1, t1.leaf(cb), idx);
        const int st = straight_through(t1, lz, zq);
        const int loss = dot(t1, st, t1.input(wts.data(), {3, 2}));
        t1.backward(loss);
    }
    z.zero_grad();
    cb.zero_grad();
    t1.accumulate_param_grads();
    std::vector<float> g_ste = z.g;
    // codebook receives nothing through the straight-through path
    for (float g : cb.g) CHECK(g == 0.0f);

    // bypass path: quantizer replaced by identity
    Tape t2;
    {
        const int lz = t2.leaf(z);
        const int loss = dot(t2, lz, t2.input(wts.data(), {3, 2}));
        t2.backward(loss);
    }
    z.zero_grad();
    t2.accumulate_param_grads();
    for (size_t i = 0; i < z.g.size(); ++i) CHECK(std::abs(g_ste[i] - z.g[i]) < 1e-6);
}

TEST_CASE("detach blocks gradients") {
    Rng rng(18);
    Param z = make_param_normal("z", {4}, rng, 1.0);
    Tape t;
    const int lz = t.leaf(z);
    const int d = detach(t, lz);
    const int loss = sum_all(t, d);
    t.backward(loss);
    z.zero_grad();
    t.accumulate_param_grads();
    for (float g : z.g) CHECK(g == 0.0f);
}

TEST_CASE("adam reduces a quadratic and respects frozen params") {
    Rng rng(19);
    Param w = make_param_normal("w", {8}, rng, 2.0);
    Param frozen = make_param_normal("f", {4}, rng, 1.0);
    frozen.trainable = false;
    const std::vector<float> frozen_before = frozen.w;
    ParamSet ps;
    ps.add(w);
    ps.add(frozen);

    Adam opt({.lr = 0.05});
    double first_loss = 0;
    double last_loss = 0;
    for (int step = 0; step < 200; ++step) {
        // target zero: f(w) = mean(w^2)
        Tape t2;
        const int loss2 = mse(t2, t2.leaf(w), constant_fill(t2, {8}, 0.0f));
        t2.backward(loss2);
        ps.zero_grad();
        t2.accumulate_param_grads();
        if (step == 0) first_loss = t2[loss2].v[0];
        last_loss = t2[loss2].v[0];
        opt.step(ps);
    }
    CHECK(last_loss < 0.01 * first_loss);
    CHECK(frozen.w == frozen_before);
}

TEST_CASE("clip_grad_norm caps the global norm") {
    Param w = make_param("w", {4}, 0.0f);
    w.g = {3.0f, 4.0f, 0.0f, 0.0f};
    ParamSet ps;
    ps.add(w);
    const double pre = clip_grad_norm(ps, 1.0);
    CHECK(pre == doctest::Approx(5.0));
    double post = 0;
    for (float g : w.g) post += g * g;
    CHECK(std::sqrt(post) == doctest::Approx(1.0).epsilon(1e-5));
}
