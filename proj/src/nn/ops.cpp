#include "nn/ops.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>

#include "core/error.h"

namespace talkie::nn {

namespace {

int64_t nelem(const Tape& t, int id) { return numel(t[id].shape); }

void check_same_shape(const Tape& t, int a, int b, const char* op) {
    require_usage(t[a].shape == t[b].shape, std::string(op) + ": shape mismatch");
}

int unary_map(Tape& t, int a, float (*fwd)(float), float (*dfd)(float)) {
    const int64_t n = nelem(t, a);
    const int out = t.add(t[a].shape);
    const float* x = t[a].v;
    float* y = t[out].val.data();
    for (int64_t i = 0; i < n; ++i) y[i] = fwd(x[i]);
    t[out].back = [a, out, dfd, n](Tape& tp) {
        const float* x = tp[a].v;
        const float* g = tp[out].grad.data();
        float* ga = tp[a].grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * dfd(x[i]);
    };
    return out;
}

}  // namespace

int constant(Tape& t, Shape shape, const float* data) {
    const int out = t.add(std::move(shape));
    std::memcpy(t[out].val.data(), data, sizeof(float) * t[out].val.size());
    return out;
}

int constant_fill(Tape& t, Shape shape, float value) {
    const int out = t.add(std::move(shape));
    std::fill(t[out].val.begin(), t[out].val.end(), value);
    return out;
}

void gemm_nn(const float* A, const float* B, float* C, int M, int K, int N, bool accumulate) {
    if (!accumulate) std::memset(C, 0, sizeof(float) * static_cast<size_t>(M) * N);
    for (int i = 0; i < M; ++i) {
        const float* a_row = A + static_cast<int64_t>(i) * K;
        float* c_row = C + static_cast<int64_t>(i) * N;
        for (int p = 0; p < K; ++p) {
            const float a = a_row[p];
            if (a == 0.0f) continue;
            const float* b_row = B + static_cast<int64_t>(p) * N;
            for (int j = 0; j < N; ++j) c_row[j] += a * b_row[j];
        }
    }
}

void gemm_nt(const float* A, const float* B, float* C, int M, int K, int N, bool accumulate) {
    for (int i = 0; i < M; ++i) {
        const float* a_row = A + static_cast<int64_t>(i) * K;
        float* c_row = C + static_cast<int64_t>(i) * N;
        for (int j = 0; j < N; ++j) {
            const float* b_row = B + static_cast<int64_t>(j) * K;
            float acc = 0.0f;
            for (int p = 0; p < K; ++p) acc += a_row[p] * b_row[p];
            c_row[j] = accumulate ? c_row[j] + acc : acc;
        }
    }
}

void gemm_tn(const float* A, const float* B, float* C, int M, int K, int N, bool accumulate) {
    // C[M,N] (+)= A[K,M]^T * B[K,N]
    if (!accumulate) std::memset(C, 0, sizeof(float) * static_cast<size_t>(M) * N);
    for (int p = 0; p < K; ++p) {
        const float* a_row = A + static_cast<int64_t>(p) * M;
        const float* b_row = B + static_cast<int64_t>(p) * N;
        for (int i = 0; i < M; ++i) {
            const float a = a_row[i];
            if (a == 0.0f) continue;
            float* c_row = C + static_cast<int64_t>(i) * N;
            for (int j = 0; j < N; ++j) c_row[j] += a * b_row[j];
        }
    }
}

int add(Tape& t, int a, int b) {
    check_same_shape(t, a, b, "add");
    const int64_t n = nelem(t, a);
    const int out = t.add(t[a].shape);
    const float* xa = t[a].v;
    const float* xb = t[b].v;
    float* y = t[out].val.data();
    for (int64_t i = 0; i < n; ++i) y[i] = xa[i] + xb[i];
    t[out].back = [a, b, out, n](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* ga = tp[a].grad.data();
        float* gb = tp[b].grad.data();
        for (int64_t i = 0; i < n; ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    };
    return out;
}

int sub(Tape& t, int a, int b) {
    check_same_shape(t, a, b, "sub");
    const int64_t n = nelem(t, a);
    const int out = t.add(t[a].shape);
    const float* xa = t[a].v;
    const float* xb = t[b].v;
    float* y = t[out].val.data();
    for (int64_t i = 0; i < n; ++i) y[i] = xa[i] - xb[i];
    t[out].back = [a, b, out, n](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* ga = tp[a].grad.data();
        float* gb = tp[b].grad.data();
        for (int64_t i = 0; i < n; ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    };
    return out;
}

int mul(Tape& t, int a, int b) {
    check_same_shape(t, a, b, "mul");
    const int64_t n = nelem(t, a);
    const int out = t.add(t[a].shape);
    const float* xa = t[a].v;
    const float* xb = t[b].v;
    float* y = t[out].val.data();
    for (int64_t i = 0; i < n; ++i) y[i] = xa[i] * xb[i];
    t[out].back = [a, b, out, n](Tape& tp) {
        const float* g = tp[out].grad.data();
        const float* xa = tp[a].v;
        const float* xb = tp[b].v;
        float* ga = tp[a].grad.data();
        float* gb = tp[b].grad.data();
        for (int64_t i = 0; i < n; ++i) {
            ga[i] += g[i] * xb[i];
            gb[i] += g[i] * xa[i];
        }
    };
    return out;
}

int scale(Tape& t, int a, double s) {
    const int64_t n = nelem(t, a);
    const int out = t.add(t[a].shape);
    const float* x = t[a].v;
    float* y = t[out].val.data();
    const float fs = static_cast<float>(s);
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] * fs;
    t[out].back = [a, out, fs, n](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* ga = tp[a].grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * fs;
    };
    return out;
}

int add_scalar(Tape& t, int a, double s) {
    const int64_t n = nelem(t, a);
    const int out = t.add(t[a].shape);
    const float* x = t[a].v;
    float* y = t[out].val.data();
    const float fs = static_cast<float>(s);
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] + fs;
    t[out].back = [a, out, n](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* ga = tp[a].grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    };
    return out;
}

int relu(Tape& t, int a) {
    return unary_map(
        t, a, [](float x) { return x > 0.0f ? x : 0.0f; },
        [](float x) { return x > 0.0f ? 1.0f : 0.0f; });
}

int leaky_relu(Tape& t, int a, double slope) {
    const int64_t n = nelem(t, a);
    const int out = t.add(t[a].shape);
    const float* x = t[a].v;
    float* y = t[out].val.data();
    const float k = static_cast<float>(slope);
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : k * x[i];
    t[out].back = [a, out, k, n](Tape& tp) {
        const float* x = tp[a].v;
        const float* g = tp[out].grad.data();
        float* ga = tp[a].grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * (x[i] > 0.0f ? 1.0f : k);
    };
    return out;
}

int silu(Tape& t, int a) {
    return unary_map(
        t, a,
        [](float x) {
            const float s = 1.0f / (1.0f + std::exp(-x));
            return x * s;
        },
        [](float x) {
            const float s = 1.0f / (1.0f + std::exp(-x));
            return s * (1.0f + x * (1.0f - s));
        });
}

int gelu(Tape& t, int a) {
    return unary_map(
        t, a,
        [](float x) { return 0.5f * x * (1.0f + std::erf(x * 0.70710678f)); },
        [](float x) {
            const float phi = 0.5f * (1.0f + std::erf(x * 0.70710678f));
            const float pdf = 0.39894228f * std::exp(-0.5f * x * x);
            return phi + x * pdf;
        });
}

int sigmoid(Tape& t, int a) {
    const int64_t n = nelem(t, a);
    const int out = t.add(t[a].shape);
    const float* x = t[a].v;
    float* y = t[out].val.data();
    for (int64_t i = 0; i < n; ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
    t[out].back = [a, out, n](Tape& tp) {
        const float* y = tp[out].v;
        const float* g = tp[out].grad.data();
        float* ga = tp[a].grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * y[i] * (1.0f - y[i]);
    };
    return out;
}

int tanh_op(Tape& t, int a) {
    const int64_t n = nelem(t, a);
    const int out = t.add(t[a].shape);
    const float* x = t[a].v;
    float* y = t[out].val.data();
    for (int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
    t[out].back = [a, out, n](Tape& tp) {
        const float* y = tp[out].v;
        const float* g = tp[out].grad.data();
        float* ga = tp[a].grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * (1.0f - y[i] * y[i]);
    };
    return out;
}

int matmul(Tape& t, int a, int b) {
    const Shape& sa = t[a].shape;
    const Shape& sb = t[b].shape;
    require_usage(sa.size() == 2 && sb.size() == 2 && sa[1] == sb[0], "matmul: bad shapes");
    const int M = sa[0], K = sa[1], N = sb[1];
    const int out = t.add({M, N});
    gemm_nn(t[a].v, t[b].v, t[out].val.data(), M, K, N, false);
    t[out].back = [a, b, out, M, K, N](Tape& tp) {
        const float* g = tp[out].grad.data();
        gemm_nt(g, tp[b].v, tp[a].grad.data(), M, N, K, true);   // dA += g * B^T
        gemm_tn(tp[a].v, g, tp[b].grad.data(), K, M, N, true);   // dB += A^T * g
    };
    return out;
}

int matmul_nt(Tape& t, int a, int b) {
    const Shape& sa = t[a].shape;
    const Shape& sb = t[b].shape;
    require_usage(sa.size() == 2 && sb.size() == 2 && sa[1] == sb[1], "matmul_nt: bad shapes");
    const int M = sa[0], K = sa[1], N = sb[0];
    const int out = t.add({M, N});
    gemm_nt(t[a].v, t[b].v, t[out].val.data(), M, K, N, false);
    t[out].back = [a, b, out, M, K, N](Tape& tp) {
        const float* g = tp[out].grad.data();
        gemm_nn(g, tp[b].v, tp[a].grad.data(), M, N, K, true);   // dA += g * B
        gemm_tn(g, tp[a].v, tp[b].grad.data(), N, M, K, true);   // dB += g^T * A
    };
    return out;
}

int add_rowvec(Tape& t, int x, int b) {
    const Shape& sx = t[x].shape;
    require_usage(sx.size() == 2 && t[b].shape == Shape{sx[1]}, "add_rowvec: bad shapes");
    const int S = sx[0], D = sx[1];
    const int out = t.add(sx);
    const float* xv = t[x].v;
    const float* bv = t[b].v;
    float* y = t[out].val.data();
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < D; ++j) y[i * D + j] = xv[i * D + j] + bv[j];
    t[out].back = [x, b, out, S, D](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* gx = tp[x].grad.data();
        float* gb = tp[b].grad.data();
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < D; ++j) {
                gx[i * D + j] += g[i * D + j];
                gb[j] += g[i * D + j];
            }
    };
    return out;
}

int linear(Tape& t, int x, int w, int b) {
    int y = matmul_nt(t, x, w);
    if (b >= 0) y = add_rowvec(t, y, b);
    return y;
}

int reshape(Tape& t, int a, Shape shape) {
    require_usage(numel(shape) == nelem(t, a), "reshape: element count mismatch");
    const int64_t n = nelem(t, a);
    const int out = t.add(std::move(shape));
    std::memcpy(t[out].val.data(), t[a].v, sizeof(float) * static_cast<size_t>(n));
    t[out].back = [a, out, n](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* ga = tp[a].grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    };
    return out;
}

int chw_to_rows(Tape& t, int x) {
    const Shape& s = t[x].shape;
    require_usage(s.size() == 3, "chw_to_rows: x must be [C,H,W]");
    const int C = s[0];
    const int64_t hw = static_cast<int64_t>(s[1]) * s[2];
    const int out = t.add({static_cast<int>(hw), C});
    const float* xv = t[x].v;
    float* y = t[out].val.data();
    for (int c = 0; c < C; ++c)
        for (int64_t i = 0; i < hw; ++i) y[i * C + c] = xv[c * hw + i];
    t[out].back = [x, out, C, hw](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* gx = tp[x].grad.data();
        for (int c = 0; c < C; ++c)
            for (int64_t i = 0; i < hw; ++i) gx[c * hw + i] += g[i * C + c];
    };
    return out;
}

int rows_to_chw(Tape& t, int x, int h, int w) {
    const Shape& s = t[x].shape;
    require_usage(s.size() == 2 && s[0] == h * w, "rows_to_chw: x must be [h*w, C]");
    const int C = s[1];
    const int64_t hw = static_cast<int64_t>(h) * w;
    const int out = t.add({C, h, w});
    const float* xv = t[x].v;
    float* y = t[out].val.data();
    for (int c = 0; c < C; ++c)
        for (int64_t i = 0; i < hw; ++i) y[c * hw + i] = xv[i * C + c];
    t[out].back = [x, out, C, hw](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* gx = tp[x].grad.data();
        for (int c = 0; c < C; ++c)
            for (int64_t i = 0; i < hw; ++i) gx[i * C + c] += g[c * hw + i];
    };
    return out;
}

int slice_rows(Tape& t, int x, int start, int rows) {
    const Shape& s = t[x].shape;
    require_usage(!s.empty() && start >= 0 && rows >= 1 && start + rows <= s[0],
                  "slice_rows: range out of bounds");
    Shape os = s;
    os[0] = rows;
    const int64_t rowsz = numel(s) / s[0];
    const int out = t.add(os);
    std::memcpy(t[out].val.data(), t[x].v + start * rowsz,
                sizeof(float) * static_cast<size_t>(rows) * rowsz);
    t[out].back = [x, out, start, rows, rowsz](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* gx = tp[x].grad.data() + start * rowsz;
        for (int64_t i = 0; i < rows * rowsz; ++i) gx[i] += g[i];
    };
    return out;
}

int concat_rows(Tape& t, const std::vector<int>& xs) {
    require_usage(!xs.empty(), "concat_rows: empty input list");
    Shape s0 = t[xs[0]].shape;
    const int64_t rowsz = numel(s0) / s0[0];
    int total = 0;
    for (int x : xs) {
        const Shape& s = t[x].shape;
        require_usage(numel(s) / s[0] == rowsz, "concat_rows: trailing dims mismatch");
        total += s[0];
    }
    Shape os = s0;
    os[0] = total;
    const int out = t.add(os);
    float* y = t[out].val.data();
    int64_t off = 0;
    for (int x : xs) {
        const int64_t n = nelem(t, x);
        std::memcpy(y + off, t[x].v, sizeof(float) * static_cast<size_t>(n));
        off += n;
    }
    std::vector<int> xs_copy = xs;
    t[out].back = [xs_copy, out](Tape& tp) {
        const float* g = tp[out].grad.data();
        int64_t off = 0;
        for (int x : xs_copy) {
            float* gx = tp[x].grad.data();
            const int64_t n = numel(tp[x].shape);
            for (int64_t i = 0; i < n; ++i) gx[i] += g[off + i];
            off += n;
        }
    };
    return out;
}

int gather_rows(Tape& t, int table, const std::vector<int>& idx) {
    const Shape& s = t[table].shape;
    require_usage(s.size() == 2, "gather_rows: table must be 2-d");
    const int d = s[1];
    const int n = static_cast<int>(idx.size());
    const int out = t.add({n, d});
    const float* tab = t[table].v;
    float* y = t[out].val.data();
    for (int i = 0; i < n; ++i) {
        require_usage(idx[i] >= 0 && idx[i] < s[0], "gather_rows: index out of range");
        std::memcpy(y + static_cast<int64_t>(i) * d, tab + static_cast<int64_t>(idx[i]) * d,
                    sizeof(float) * d);
    }
    std::vector<int> idx_copy = idx;
    t[out].back = [table, out, idx_copy, d](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* gt = tp[table].grad.data();
        for (size_t i = 0; i < idx_copy.size(); ++i)
            for (int c = 0; c < d; ++c) gt[static_cast<int64_t>(idx_copy[i]) * d + c] += g[i * d + c];
    };
    return out;
}

int layer_norm(Tape& t, int x, int gamma, int beta, double eps) {
    const Shape& s = t[x].shape;
    require_usage(s.size() == 2, "layer_norm: x must be [S,D]");
    const int S = s[0], D = s[1];
    require_usage(t[gamma].shape == Shape{D} && t[beta].shape == Shape{D},
                  "layer_norm: gamma/beta must be [D]");
    const int out = t.add(s);
    auto xhat = std::make_shared<std::vector<float>>(static_cast<size_t>(S) * D);
    auto inv_std = std::make_shared<std::vector<float>>(S);
    const float* xv = t[x].v;
    const float* gv = t[gamma].v;
    const float* bv = t[beta].v;
    float* y = t[out].val.data();
    for (int i = 0; i < S; ++i) {
        const float* row = xv + static_cast<int64_t>(i) * D;
        double mu = 0;
        for (int j = 0; j < D; ++j) mu += row[j];
        mu /= D;
        double var = 0;
        for (int j = 0; j < D; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= D;
        const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
        (*inv_std)[i] = is;
        for (int j = 0; j < D; ++j) {
            const float xh = (row[j] - static_cast<float>(mu)) * is;
            (*xhat)[static_cast<int64_t>(i) * D + j] = xh;
            y[static_cast<int64_t>(i) * D + j] = xh * gv[j] + bv[j];
        }
    }
    t[out].back = [x, gamma, beta, out, S, D, xhat, inv_std](Tape& tp) {
        const float* g = tp[out].grad.data();
        const float* gv = tp[gamma].v;
        float* gx = tp[x].grad.data();
        float* gg = tp[gamma].grad.data();
        float* gb = tp[beta].grad.data();
        for (int i = 0; i < S; ++i) {
            const float* grow = g + static_cast<int64_t>(i) * D;
            const float* xh = xhat->data() + static_cast<int64_t>(i) * D;
            double m1 = 0, m2 = 0;
            for (int j = 0; j < D; ++j) {
                const float dy = grow[j] * gv[j];
                m1 += dy;
                m2 += dy * xh[j];
            }
            m1 /= D;
            m2 /= D;
            const float is = (*inv_std)[i];
            for (int j = 0; j < D; ++j) {
                const float dy = grow[j] * gv[j];
                gx[static_cast<int64_t>(i) * D + j] +=
                    is * (dy - static_cast<float>(m1) - xh[j] * static_cast<float>(m2));
                gg[j] += grow[j] * xh[j];
                gb[j] += grow[j];
            }
        }
    };
    return out;
}

int group_norm(Tape& t, int x, int groups, int gamma, int beta, double eps) {
    const Shape& s = t[x].shape;
    require_usage(s.size() == 3, "group_norm: x must be [C,H,W]");
    const int C = s[0], H = s[1], W = s[2];
    require_usage(groups >= 1 && C % groups == 0, "group_norm: C must divide by groups");
    require_usage(t[gamma].shape == Shape{C} && t[beta].shape == Shape{C},
                  "group_norm: gamma/beta must be [C]");
    const int cpg = C / groups;
    const int64_t hw = static_cast<int64_t>(H) * W;
    const int64_t gsz = cpg * hw;
    const int out = t.add(s);
    auto xhat = std::make_shared<std::vector<float>>(static_cast<size_t>(C) * hw);
    auto inv_std = std::make_shared<std::vector<float>>(groups);
    const float* xv = t[x].v;
    const float* gv = t[gamma].v;
    const float* bv = t[beta].v;
    float* y = t[out].val.data();
    for (int g = 0; g < groups; ++g) {
        const float* base = xv + static_cast<int64_t>(g) * gsz;
        double mu = 0;
        for (int64_t i = 0; i < gsz; ++i) mu += base[i];
        mu /= static_cast<double>(gsz);
        double var = 0;
        for (int64_t i = 0; i < gsz; ++i) var += (base[i] - mu) * (base[i] - mu);
        var /= static_cast<double>(gsz);
        const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
        (*inv_std)[g] = is;
        for (int c = 0; c < cpg; ++c) {
            const int ch = g * cpg + c;
            for (int64_t i = 0; i < hw; ++i) {
                const float xh = (base[c * hw + i] - static_cast<float>(mu)) * is;
                (*xhat)[ch * hw + i] = xh;
                y[ch * hw + i] = xh * gv[ch] + bv[ch];
            }
        }
    }
    t[out].back = [x, gamma, beta, out, groups, cpg, hw, gsz, xhat, inv_std](Tape& tp) {
        const float* g = tp[out].grad.data();
        const float* gv = tp[gamma].v;
        float* gx = tp[x].grad.data();
        float* gg = tp[gamma].grad.data();
        float* gb = tp[beta].grad.data();
        for (int grp = 0; grp < groups; ++grp) {
            double m1 = 0, m2 = 0;
            for (int c = 0; c < cpg; ++c) {
                const int ch = grp * cpg + c;
                for (int64_t i = 0; i < hw; ++i) {
                    const float dy = g[ch * hw + i] * gv[ch];
                    m1 += dy;
                    m2 += dy * (*xhat)[ch * hw + i];
                }
            }
            m1 /= static_cast<double>(gsz);
            m2 /= static_cast<double>(gsz);
            const float is = (*inv_std)[grp];
            for (int c = 0; c < cpg; ++c) {
                const int ch = grp * cpg + c;
                for (int64_t i = 0; i < hw; ++i) {
                    const float dy = g[ch * hw + i] * gv[ch];
                    const float xh = (*xhat)[ch * hw + i];
                    gx[ch * hw + i] +=
                        is * (dy - static_cast<float>(m1) - xh * static_cast<float>(m2));
                    gg[ch] += g[ch * hw + i] * xh;
                    gb[ch] += g[ch * hw + i];
                }
            }
        }
    };
    return out;
}

namespace {

void im2col(const float* x, int C, int H, int W, int kh, int kw, int stride, int pad, int Ho,
            int Wo, float* col) {
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                const int row = (c * kh + ky) * kw + kx;
                float* dst = col + static_cast<int64_t>(row) * Ho * Wo;
                for (int oy = 0; oy < Ho; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        dst[oy * Wo + ox] = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                                ? x[(static_cast<int64_t>(c) * H + iy) * W + ix]
                                                : 0.0f;
                    }
                }
            }
}

void col2im_add(const float* col, int C, int H, int W, int kh, int kw, int stride, int pad, int Ho,
                int Wo, float* dx) {
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                const int row = (c * kh + ky) * kw + kx;
                const float* src = col + static_cast<int64_t>(row) * Ho * Wo;
                for (int oy = 0; oy < Ho; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= H) continue;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix < 0 || ix >= W) continue;
                        dx[(static_cast<int64_t>(c) * H + iy) * W + ix] += src[oy * Wo + ox];
                    }
                }
            }
}

}  // namespace

int conv2d(Tape& t, int x, int w, int b, int stride, int pad) {
    const Shape& sx = t[x].shape;
    const Shape& sw = t[w].shape;
    require_usage(sx.size() == 3 && sw.size() == 4 && sw[1] == sx[0], "conv2d: bad shapes");
    const int Cin = sx[0], H = sx[1], W = sx[2];
    const int Cout = sw[0], kh = sw[2], kw = sw[3];
    const int Ho = (H + 2 * pad - kh) / stride + 1;
    const int Wo = (W + 2 * pad - kw) / stride + 1;
    require_usage(Ho >= 1 && Wo >= 1, "conv2d: output would be empty");
    if (b >= 0) require_usage(t[b].shape == Shape{Cout}, "conv2d: bias must be [Cout]");

    const int K = Cin * kh * kw;
    auto col = std::make_shared<std::vector<float>>(static_cast<size_t>(K) * Ho * Wo);
    im2col(t[x].v, Cin, H, W, kh, kw, stride, pad, Ho, Wo, col->data());

    const int out = t.add({Cout, Ho, Wo});
    gemm_nn(t[w].v, col->data(), t[out].val.data(), Cout, K, Ho * Wo, false);
    if (b >= 0) {
        float* y = t[out].val.data();
        const float* bv = t[b].v;
        for (int co = 0; co < Cout; ++co)
            for (int i = 0; i < Ho * Wo; ++i) y[static_cast<int64_t>(co) * Ho * Wo + i] += bv[co];
    }
    t[out].back = [x, w, b, out, col, Cin, H, W, kh, kw, stride, pad, Ho, Wo, Cout, K](Tape& tp) {
        const float* g = tp[out].grad.data();
        // dW += g * col^T
        gemm_nt(g, col->data(), tp[w].grad.data(), Cout, Ho * Wo, K, true);
        // dcol = W^T * g, then scatter back to dx
        std::vector<float> dcol(static_cast<size_t>(K) * Ho * Wo);
        gemm_tn(tp[w].v, g, dcol.data(), K, Cout, Ho * Wo, false);
        col2im_add(dcol.data(), Cin, H, W, kh, kw, stride, pad, Ho, Wo, tp[x].grad.data());
        if (b >= 0) {
            float* gb = tp[b].grad.data();
            for (int co = 0; co < Cout; ++co) {
                float acc = 0.0f;
                for (int i = 0; i < Ho * Wo; ++i) acc += g[static_cast<int64_t>(co) * Ho * Wo + i];
                gb[co] += acc;
            }
        }
    };
    return out;
}

int upsample_nearest2(Tape& t, int x) {
    const Shape& s = t[x].shape;
    require_usage(s.size() == 3, "upsample_nearest2: x must be [C,H,W]");
    const int C = s[0], H = s[1], W = s[2];
    const int out = t.add({C, 2 * H, 2 * W});
    const float* xv = t[x].v;
    float* y = t[out].val.data();
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const float v = xv[(static_cast<int64_t>(c) * H + i) * W + j];
                const int64_t base = (static_cast<int64_t>(c) * 2 * H + 2 * i) * 2 * W + 2 * j;
                y[base] = v;
                y[base + 1] = v;
                y[base + 2 * W] = v;
                y[base + 2 * W + 1] = v;
            }
    t[out].back = [x, out, C, H, W](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* gx = tp[x].grad.data();
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    const int64_t base = (static_cast<int64_t>(c) * 2 * H + 2 * i) * 2 * W + 2 * j;
                    gx[(static_cast<int64_t>(c) * H + i) * W + j] +=
                        g[base] + g[base + 1] + g[base + 2 * W] + g[base + 2 * W + 1];
                }
    };
    return out;
}

int multihead_attention(Tape& t, int q, int k, int v, int heads, const std::vector<float>* mask) {
    const Shape& sq = t[q].shape;
    const Shape& sk = t[k].shape;
    const Shape& sv = t[v].shape;
    require_usage(sq.size() == 2 && sk.size() == 2 && sv.size() == 2, "mha: 2-d inputs expected");
    require_usage(sq[1] == sk[1] && sk == sv, "mha: k/v shape mismatch");
    const int Sq = sq[0], Sk = sk[0], D = sq[1];
    require_usage(D % heads == 0, "mha: model dim must divide by heads");
    if (mask)
        require_usage(static_cast<int64_t>(mask->size()) == static_cast<int64_t>(Sq) * Sk,
                      "mha: mask must be Sq x Sk");
    const int dh = D / heads;
    const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));

    auto probs = std::make_shared<std::vector<float>>(static_cast<size_t>(heads) * Sq * Sk, 0.0f);
    auto mask_copy = mask ? std::make_shared<std::vector<float>>(*mask) : nullptr;

    const int out = t.add({Sq, D});
    const float* qv = t[q].v;
    const float* kv = t[k].v;
    const float* vv = t[v].v;
    float* y = t[out].val.data();

    std::vector<float> logits(static_cast<size_t>(Sk));
    for (int h = 0; h < heads; ++h) {
        const int o = h * dh;
        for (int i = 0; i < Sq; ++i) {
            float mx = -std::numeric_limits<float>::infinity();
            for (int j = 0; j < Sk; ++j) {
                float acc = 0.0f;
                for (int d = 0; d < dh; ++d) acc += qv[i * D + o + d] * kv[j * D + o + d];
                acc *= inv_sqrt;
                if (mask_copy) acc += (*mask_copy)[static_cast<int64_t>(i) * Sk + j];
                logits[j] = acc;
                mx = std::max(mx, acc);
            }
            float* prow = probs->data() + (static_cast<int64_t>(h) * Sq + i) * Sk;
            if (!std::isfinite(mx)) {
                // fully masked row -> zero attention output
                std::fill(prow, prow + Sk, 0.0f);
            } else {
                float denom = 0.0f;
                for (int j = 0; j < Sk; ++j) {
                    const float e = std::exp(logits[j] - mx);
                    prow[j] = e;
                    denom += e;
                }
                for (int j = 0; j < Sk; ++j) prow[j] /= denom;
            }
            for (int d = 0; d < dh; ++d) {
                float acc = 0.0f;
                for (int j = 0; j < Sk; ++j) acc += prow[j] * vv[j * D + o + d];
                y[i * D + o + d] = acc;
            }
        }
    }

    t[out].back = [q, k, v, out, heads, Sq, Sk, D, dh, inv_sqrt, probs](Tape& tp) {
        const float* g = tp[out].grad.data();
        const float* qv = tp[q].v;
        const float* kv = tp[k].v;
        const float* vv = tp[v].v;
        float* gq = tp[q].grad.data();
        float* gk = tp[k].grad.data();
        float* gv = tp[v].grad.data();
        std::vector<float> dp(static_cast<size_t>(Sk));
        for (int h = 0; h < heads; ++h) {
            const int o = h * dh;
            for (int i = 0; i < Sq; ++i) {
                const float* prow = probs->data() + (static_cast<int64_t>(h) * Sq + i) * Sk;
                double dot_pd = 0.0;
                for (int j = 0; j < Sk; ++j) {
                    float acc = 0.0f;
                    for (int d = 0; d < dh; ++d) acc += g[i * D + o + d] * vv[j * D + o + d];
                    dp[j] = acc;
                    dot_pd += static_cast<double>(prow[j]) * acc;
                }
                for (int j = 0; j < Sk; ++j) {
                    // softmax backward; zero rows stay zero
                    const float dl = prow[j] * (dp[j] - static_cast<float>(dot_pd));
                    if (dl != 0.0f) {
                        for (int d = 0; d < dh; ++d) {
                            gq[i * D + o + d] += dl * inv_sqrt * kv[j * D + o + d];
                            gk[j * D + o + d] += dl * inv_sqrt * qv[i * D + o + d];
                        }
                    }
                    if (prow[j] != 0.0f)
                        for (int d = 0; d < dh; ++d) gv[j * D + o + d] += prow[j] * g[i * D + o + d];
                }
            }
        }
    };
    return out;
}

int straight_through(Tape& t, int z, int zq) {
    check_same_shape(t, z, zq, "straight_through");
    const int64_t n = nelem(t, z);
    const int out = t.add(t[z].shape);
    std::memcpy(t[out].val.data(), t[zq].v, sizeof(float) * static_cast<size_t>(n));
    t[out].back = [z, out, n](Tape& tp) {
        const float* g = tp[out].grad.data();
        float* gz = tp[z].grad.data();
        for (int64_t i = 0; i < n; ++i) gz[i] += g[i];
    };
    return out;
}

int detach(Tape& t, int x) {
    const int64_t n = nelem(t, x);
    const int out = t.add(t[x].shape);
    std::memcpy(t[out].val.data(), t[x].v, sizeof(float) * static_cast<size_t>(n));
    return out;  // no backward
}

int sum_all(Tape& t, int a) {
    const int64_t n = nelem(t, a);
    const int out = t.add({1});
    const float* x = t[a].v;
    double acc = 0;
    for (int64_t i = 0; i < n; ++i) acc += x[i];
    t[out].val[0] = static_cast<float>(acc);
    t[out].back = [a, out, n](Tape& tp) {
        const float g = tp[out].grad[0];
        float* ga = tp[a].grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g;
    };
    return out;
}

int mean_all(Tape& t, int a) { return scale(t, sum_all(t, a), 1.0 / static_cast<double>(nelem(t, a))); }

int mse(Tape& t, int a, int b) {
    check_same_shape(t, a, b, "mse");
    const int64_t n = nelem(t, a);
    const int out = t.add({1});
    const float* xa = t[a].v;
    const float* xb = t[b].v;
    double acc = 0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(xa[i]) - xb[i];
        acc += d * d;
    }
    t[out].val[0] = static_cast<float>(acc / static_cast<double>(n));
    t[out].back = [a, b, out, n](Tape& tp) {
        const float g = tp[out].grad[0] * 2.0f / static_cast<float>(n);
        const float* xa = tp[a].v;
        const float* xb = tp[b].v;
        float* ga = tp[a].grad.data();
        float* gb = tp[b].grad.data();
        for (int64_t i = 0; i < n; ++i) {
            const float d = xa[i] - xb[i];
            ga[i] += g * d;
            gb[i] -= g * d;
        }
    };
    return out;
}

int l1(Tape& t, int a, int b) {
    check_same_shape(t, a, b, "l1");
    const int64_t n = nelem(t, a);
    const int out = t.add({1});
    const float* xa = t[a].v;
    const float* xb = t[b].v;
    double acc = 0;
    for (int64_t i = 0; i < n; ++i) acc += std::abs(static_cast<double>(xa[i]) - xb[i]);
    t[out].val[0] = static_cast<float>(acc / static_cast<double>(n));
    t[out].back = [a, b, out, n](Tape& tp) {
        const float g = tp[out].grad[0] / static_cast<float>(n);
        const float* xa = tp[a].v;
        const float* xb = tp[b].v;
        float* ga = tp[a].grad.data();
        float* gb = tp[b].grad.data();
        for (int64_t i = 0; i < n; ++i) {
            const float s = xa[i] > xb[i] ? 1.0f : (xa[i] < xb[i] ? -1.0f : 0.0f);
            ga[i] += g * s;
            gb[i] -= g * s;
        }
    };
    return out;
}

int dot(Tape& t, int a, int b) {
    check_same_shape(t, a, b, "dot");
    const int64_t n = nelem(t, a);
    const int out = t.add({1});
    const float* xa = t[a].v;
    const float* xb = t[b].v;
    double acc = 0;
    for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(xa[i]) * xb[i];
    t[out].val[0] = static_cast<float>(acc);
    t[out].back = [a, b, out, n](Tape& tp) {
        const float g = tp[out].grad[0];
        const float* xa = tp[a].v;
        const float* xb = tp[b].v;
        float* ga = tp[a].grad.data();
        float* gb = tp[b].grad.data();
        for (int64_t i = 0; i < n; ++i) {
            ga[i] += g * xb[i];
            gb[i] += g * xa[i];
        }
    };
    return out;
}

}  // namespace talkie::nn
