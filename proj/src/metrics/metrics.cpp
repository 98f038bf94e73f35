#include "metrics/metrics.h"

#include <algorithm>
#include <cmath>

#include "core/error.h"

namespace talkie::metrics {

namespace {

double l2_3(const double* a, const double* b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void check_pair(const MotionView& pred, const MotionView& ref) {
    require_usage(pred.frames == ref.frames && pred.vertices == ref.vertices,
                  "motion metric: pred/ref shape mismatch");
    require_usage(pred.frames >= 1 && pred.vertices >= 1, "motion metric: empty sequence");
}

}  // namespace

double lve(const MotionView& pred, const MotionView& ref, const std::vector<int64_t>& lip) {
    check_pair(pred, ref);
    require_usage(!lip.empty(), "lve: lip mask is empty");
    double acc = 0.0;
    for (int64_t t = 0; t < pred.frames; ++t) {
        double worst = 0.0;
        for (int64_t v : lip) worst = std::max(worst, l2_3(pred.at(t, v), ref.at(t, v)));
        acc += worst;
    }
    return acc / static_cast<double>(pred.frames);
}

double mve(const MotionView& pred, const MotionView& ref) {
    check_pair(pred, ref);
    double acc = 0.0;
    for (int64_t t = 0; t < pred.frames; ++t)
        for (int64_t v = 0; v < pred.vertices; ++v) acc += l2_3(pred.at(t, v), ref.at(t, v));
    return acc / static_cast<double>(pred.frames * pred.vertices);
}

double mve_max_variant(const MotionView& pred, const MotionView& ref) {
    check_pair(pred, ref);
    double acc = 0.0;
    for (int64_t t = 0; t < pred.frames; ++t) {
        double worst = 0.0;
        for (int64_t v = 0; v < pred.vertices; ++v)
            worst = std::max(worst, l2_3(pred.at(t, v), ref.at(t, v)));
        acc += worst;
    }
    return acc / static_cast<double>(pred.frames);
}

double fdd(const MotionView& pred, const MotionView& ref, const std::vector<int64_t>& upper) {
    check_pair(pred, ref);
    require_usage(!upper.empty(), "fdd: upper-face mask is empty");
    require_usage(pred.frames >= 2, "fdd: need at least 2 frames for a standard deviation");
    const double T = static_cast<double>(pred.frames);
    auto norm_std = [&](const MotionView& m, int64_t v) {
        double mean = 0.0;
        for (int64_t t = 0; t < m.frames; ++t) {
            const double* p = m.at(t, v);
            mean += std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        }
        mean /= T;
        double var = 0.0;
        for (int64_t t = 0; t < m.frames; ++t) {
            const double* p = m.at(t, v);
            const double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            var += (n - mean) * (n - mean);
        }
        return std::sqrt(var / T);  // population std
    };
    double acc = 0.0;
    for (int64_t v : upper) acc += norm_std(pred, v) - norm_std(ref, v);
    return acc / static_cast<double>(upper.size());
}

PsnrResult psnr(const std::vector<const double*>& pred_frames,
                const std::vector<const double*>& ref_frames, int64_t frame_elems, double cap_db) {
    require_usage(pred_frames.size() == ref_frames.size() && !pred_frames.empty(),
                  "psnr: frame list mismatch");
    PsnrResult out;
    double acc = 0.0;
    for (size_t f = 0; f < pred_frames.size(); ++f) {
        double mse = 0.0;
        for (int64_t i = 0; i < frame_elems; ++i) {
            const double d = pred_frames[f][i] - ref_frames[f][i];
            mse += d * d;
        }
        mse /= static_cast<double>(frame_elems);
        double db;
        if (mse <= 0.0) {
            db = cap_db;
            out.capped = true;
        } else {
            db = std::min(cap_db, 10.0 * std::log10(1.0 / mse));
            if (db >= cap_db) out.capped = true;
        }
        acc += db;
    }
    out.db = acc / static_cast<double>(pred_frames.size());
    return out;
}

double ssim(const std::vector<const double*>& pred_frames,
            const std::vector<const double*>& ref_frames, int height, int width, int channels) {
    require_usage(pred_frames.size() == ref_frames.size() && !pred_frames.empty(),
                  "ssim: frame list mismatch");
    require_usage(height >= 11 && width >= 11, "ssim: frames must be at least 11x11");

    constexpr int R = 5;  // 11x11 window
    double kernel[11][11];
    {
        const double sigma = 1.5;
        double sum = 0.0;
        for (int i = -R; i <= R; ++i)
            for (int j = -R; j <= R; ++j) {
                kernel[i + R][j + R] = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
                sum += kernel[i + R][j + R];
            }
        for (auto& row : kernel)
            for (double& k : row) k /= sum;
    }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

    double total = 0.0;
    int64_t count = 0;
    for (size_t f = 0; f < pred_frames.size(); ++f) {
        const double* a = pred_frames[f];
        const double* b = ref_frames[f];
        auto px = [&](const double* img, int y, int x, int c) {
            return img[(static_cast<int64_t>(y) * width + x) * channels + c];
        };
        for (int c = 0; c < channels; ++c) {
            for (int y = R; y < height - R; ++y) {
                for (int x = R; x < width - R; ++x) {
                    double ma = 0, mb = 0, va = 0, vb = 0, cov = 0;
                    for (int i = -R; i <= R; ++i)
                        for (int j = -R; j <= R; ++j) {
                            const double k = kernel[i + R][j + R];
                            ma += k * px(a, y + i, x + j, c);
                            mb += k * px(b, y + i, x + j, c);
                        }
                    for (int i = -R; i <= R; ++i)
                        for (int j = -R; j <= R; ++j) {
                            const double k = kernel[i + R][j + R];
                            const double da = px(a, y + i, x + j, c) - ma;
                            const double db = px(b, y + i, x + j, c) - mb;
                            va += k * da * da;
                            vb += k * db * db;
                            cov += k * da * db;
                        }
                    const double s = ((2 * ma * mb + c1) * (2 * cov + c2)) /
                                     ((ma * ma + mb * mb + c1) * (va + vb + c2));
                    total += s;
                    count++;
                }
            }
        }
    }
    return total / static_cast<double>(count);
}

std::vector<double> temporal_dynamics(const std::vector<const double*>& frames, int64_t elements,
                                      int channels) {
    require_usage(frames.size() >= 2, "temporal_dynamics: need at least 2 frames");
    std::vector<double> out(static_cast<size_t>(elements), 0.0);
    const auto T = static_cast<int64_t>(frames.size());
    for (int64_t t = 0; t + 1 < T; ++t) {
        const double* cur = frames[t];
        const double* nxt = frames[t + 1];
        for (int64_t e = 0; e < elements; ++e) {
            double acc = 0.0;
            for (int c = 0; c < channels; ++c) {
                const double d = nxt[e * channels + c] - cur[e * channels + c];
                acc += d * d;
            }
            out[e] += std::sqrt(acc);
        }
    }
    const double denom = static_cast<double>(T - 1);
    for (double& v : out) v /= denom;
    return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    require_usage(a.size() == b.size() && a.size() >= 2, "pearson: need two equal vectors");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json per = nlohmann::json::array();
    double lve_acc = 0, mve_acc = 0, mve_max_acc = 0, fdd_acc = 0, psnr_acc = 0, ssim_acc = 0,
           perc_acc = 0;
    int64_t n = 0, n_psnr = 0, n_ssim = 0, n_perc = 0;
    for (const auto& s : sequences) {
        nlohmann::json j;
        j["name"] = s.name;
        j["lve_mm"] = s.lve_mm;
        j["mve_mm"] = s.mve_mm;
        j["mve_max_mm"] = s.mve_max_mm;
        j["fdd_mm"] = s.fdd_mm;
        j["fdd_abs_mm"] = std::abs(s.fdd_mm);
        if (s.psnr_db) {
            j["psnr_db"] = *s.psnr_db;
            j["psnr_capped"] = s.psnr_capped;
            psnr_acc += *s.psnr_db;
            n_psnr++;
        }
        if (s.ssim_val) {
            j["ssim"] = *s.ssim_val;
            ssim_acc += *s.ssim_val;
            n_ssim++;
        }
        if (s.perceptual) {
            j["perceptual"] = *s.perceptual;
            perc_acc += *s.perceptual;
            n_perc++;
        }
        per.push_back(j);
        lve_acc += s.lve_mm;
        mve_acc += s.mve_mm;
        mve_max_acc += s.mve_max_mm;
        fdd_acc += s.fdd_mm;
        n++;
    }
    nlohmann::json agg;
    if (n > 0) {
        agg["lve_mm"] = lve_acc / n;
        agg["mve_mm"] = mve_acc / n;
        agg["mve_max_mm"] = mve_max_acc / n;
        agg["fdd_mm"] = fdd_acc / n;
    }
    if (n_psnr > 0) agg["psnr_db"] = psnr_acc / n_psnr;
    if (n_ssim > 0) agg["ssim"] = ssim_acc / n_ssim;
    if (n_perc > 0) agg["perceptual"] = perc_acc / n_perc;

    nlohmann::json out;
    out["sequences"] = per;
    out["aggregate"] = agg;
    out["variants"] = {{"mve", "mean_over_vertices"},
                       {"fdd", "signed_population_std"},
                       {"psnr_peak", 1.0},
                       {"ssim_window", "gaussian_11x11_sigma1.5"}};
    return out;
}

}  // namespace talkie::metrics
