#pragma once

#include <vector>

#include "nn/tape.h"

namespace talkie::nn {

// Constant node that owns a copy of the data (safe for temporaries).
int constant(Tape& t, Shape shape, const float* data);
int constant_fill(Tape& t, Shape shape, float value);

// Elementwise
int add(Tape& t, int a, int b);
int sub(Tape& t, int a, int b);
int mul(Tape& t, int a, int b);
int scale(Tape& t, int a, double s);
int add_scalar(Tape& t, int a, double s);
int relu(Tape& t, int a);
int leaky_relu(Tape& t, int a, double slope);
int silu(Tape& t, int a);
int gelu(Tape& t, int a);
int sigmoid(Tape& t, int a);
int tanh_op(Tape& t, int a);

// Linear algebra. All matrices row-major.
int matmul(Tape& t, int a, int b);     // [m,k] x [k,n]
int matmul_nt(Tape& t, int a, int b);  // [m,k] x [n,k]^T -> [m,n]
int add_rowvec(Tape& t, int x, int b);  // x [S,D] + b [D]
int linear(Tape& t, int x, int w, int b);  // x [S,Din], w [Dout,Din], b [Dout] or -1

// Shape plumbing
int reshape(Tape& t, int a, Shape shape);
// [C,H,W] <-> [H*W, C] (grid cells as rows; used by the vector quantizer)
int chw_to_rows(Tape& t, int x);
int rows_to_chw(Tape& t, int x, int h, int w);
int slice_rows(Tape& t, int x, int start, int rows);
int concat_rows(Tape& t, const std::vector<int>& xs);
int gather_rows(Tape& t, int table, const std::vector<int>& idx);  // table [C,d] -> [n,d]

// Normalization
int layer_norm(Tape& t, int x, int gamma, int beta, double eps = 1e-5);  // x [S,D]
int group_norm(Tape& t, int x, int groups, int gamma, int beta, double eps = 1e-5);  // x [C,H,W]

// Convolution (single sample, x [Cin,H,W], w [Cout,Cin,kh,kw], b [Cout] or -1)
int conv2d(Tape& t, int x, int w, int b, int stride, int pad);
int upsample_nearest2(Tape& t, int x);

// Attention: q [Sq,D], k/v [Sk,D]; optional additive mask [Sq,Sk] applied to
// pre-softmax logits (use -inf to forbid). Rows whose logits are all -inf
// produce a zero output row.
int multihead_attention(Tape& t, int q, int k, int v, int heads,
                        const std::vector<float>* mask = nullptr);

// Quantization plumbing
int straight_through(Tape& t, int z, int zq);  // value of zq, gradient to z
int detach(Tape& t, int x);

// Reductions -> scalar nodes
int sum_all(Tape& t, int a);
int mean_all(Tape& t, int a);
int mse(Tape& t, int a, int b);
int l1(Tape& t, int a, int b);
int dot(Tape& t, int a, int b);

// Raw GEMM kernels (exposed for non-autodiff numeric code and tests)
void gemm_nn(const float* A, const float* B, float* C, int M, int K, int N, bool accumulate);
void gemm_nt(const float* A, const float* B, float* C, int M, int K, int N, bool accumulate);
void gemm_tn(const float* A, const float* B, float* C, int M, int K, int N, bool accumulate);

}  // namespace talkie::nn
