#include "geometry/rigid.h"

#include <cmath>

#include "core/error.h"

namespace talkie::geo {

namespace {

// Cyclic Jacobi eigen-solver for a symmetric n x n matrix (n <= 4 here).
// Returns eigenvalues in `d` and eigenvectors in the columns of `V`.
void jacobi_eigen(double* a, int n, double* d, double* V) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) V[i * n + j] = (i == j) ? 1.0 : 0.0;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (a[p * n + q] == 0.0) continue;
                double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * a[p * n + q]);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = V[k * n + p], vkq = V[k * n + q];
                    V[k * n + p] = c * vkp - s * vkq;
                    V[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    for (int i = 0; i < n; ++i) d[i] = a[i * n + i];
}

}  // namespace

RigidTransform rigid_align(const std::vector<float>& source, const std::vector<float>& tmpl) {
    require_usage(source.size() == tmpl.size(), "rigid_align: vertex counts differ");
    require_usage(source.size() % 3 == 0, "rigid_align: flat arrays must be N x 3");
    const int64_t n = static_cast<int64_t>(source.size()) / 3;
    if (n < 3) fail_numeric("rigid_align: degenerate geometry (fewer than 3 points)");

    double cs[3] = {0, 0, 0}, ct[3] = {0, 0, 0};
    for (int64_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) {
            cs[k] += source[i * 3 + k];
            ct[k] += tmpl[i * 3 + k];
        }
    for (int k = 0; k < 3; ++k) {
        cs[k] /= static_cast<double>(n);
        ct[k] /= static_cast<double>(n);
    }

    // cross-covariance S and the source scatter (for the degeneracy test)
    double S[9] = {0};
    double scat[9] = {0};
    for (int64_t i = 0; i < n; ++i) {
        double x[3], y[3];
        for (int k = 0; k < 3; ++k) {
            x[k] = source[i * 3 + k] - cs[k];
            y[k] = tmpl[i * 3 + k] - ct[k];
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                S[r * 3 + c] += x[r] * y[c];
                scat[r * 3 + c] += x[r] * x[c];
            }
    }
    {
        double a[9];
        for (int i = 0; i < 9; ++i) a[i] = scat[i];
        double ev[3], V[9];
        jacobi_eigen(a, 3, ev, V);
        double lo = ev[0], hi = ev[0];
        for (int i = 1; i < 3; ++i) {
            lo = std::min(lo, ev[i]);
            hi = std::max(hi, ev[i]);
        }
        double mid = ev[0] + ev[1] + ev[2] - lo - hi;
        if (hi <= 0.0 || mid <= 1e-12 * hi)
            fail_numeric("rigid_align: degenerate geometry (points are collinear)");
    }

    const double sxx = S[0], sxy = S[1], sxz = S[2];
    const double syx = S[3], syy = S[4], syz = S[5];
    const double szx = S[6], szy = S[7], szz = S[8];
    double N[16] = {
        sxx + syy + szz, syz - szy,       szx - sxz,        sxy - syx,
        syz - szy,       sxx - syy - szz, sxy + syx,        szx + sxz,
        szx - sxz,       sxy + syx,       -sxx + syy - szz, syz + szy,
        sxy - syx,       szx + sxz,       syz + szy,        -sxx - syy + szz,
    };
    double ev[4], V[16];
    jacobi_eigen(N, 4, ev, V);
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (ev[i] > ev[best]) best = i;
    double qw = V[0 * 4 + best], qx = V[1 * 4 + best], qy = V[2 * 4 + best], qz = V[3 * 4 + best];
    double qn = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    qw /= qn, qx /= qn, qy /= qn, qz /= qn;

    RigidTransform out;
    auto& R = out.rotation;
    R[0] = 1 - 2 * (qy * qy + qz * qz);
    R[1] = 2 * (qx * qy - qw * qz);
    R[2] = 2 * (qx * qz + qw * qy);
    R[3] = 2 * (qx * qy + qw * qz);
    R[4] = 1 - 2 * (qx * qx + qz * qz);
    R[5] = 2 * (qy * qz - qw * qx);
    R[6] = 2 * (qx * qz - qw * qy);
    R[7] = 2 * (qy * qz + qw * qx);
    R[8] = 1 - 2 * (qx * qx + qy * qy);

    for (int k = 0; k < 3; ++k)
        out.translation[k] = ct[k] - (R[k * 3 + 0] * cs[0] + R[k * 3 + 1] * cs[1] + R[k * 3 + 2] * cs[2]);

    out.aligned.resize(source.size());
    for (int64_t i = 0; i < n; ++i) {
        const double x = source[i * 3 + 0], y = source[i * 3 + 1], z = source[i * 3 + 2];
        for (int k = 0; k < 3; ++k)
            out.aligned[i * 3 + k] = static_cast<float>(R[k * 3 + 0] * x + R[k * 3 + 1] * y +
                                                        R[k * 3 + 2] * z + out.translation[k]);
    }
    return out;
}

}  // namespace talkie::geo
