#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace talkie::metrics {

// Motion sequences enter as frames x vertices x 3 (double), textures/maps as
// frames x H x W x C in [0,1]. Metrics accumulate in double precision.
struct MotionView {
    int64_t frames = 0;
    int64_t vertices = 0;
    const double* data = nullptr;  // frames * vertices * 3

    const double* at(int64_t t, int64_t v) const { return data + (t * vertices + v) * 3; }
};

// Lip Vertex Error: mean over frames of the max L2 error over lip vertices.
double lve(const MotionView& pred, const MotionView& ref, const std::vector<int64_t>& lip);

// Mean full-face vertex error: mean over frames and vertices of the L2 error.
// (The max-over-vertices variant is also exposed for the report.)
double mve(const MotionView& pred, const MotionView& ref);
double mve_max_variant(const MotionView& pred, const MotionView& ref);

// Upper-face Dynamics Deviation: mean over upper-face vertices of the
// difference of per-vertex temporal standard deviations of the offset norm
// (population std, signed). fdd(a,b) == -fdd(b,a).
double fdd(const MotionView& pred, const MotionView& ref, const std::vector<int64_t>& upper);

struct PsnrResult {
    double db = 0.0;
    bool capped = false;  // identical frames hit the configured cap
};

// 10*log10(1/MSE) per frame pair, averaged; values must be in [0,1].
PsnrResult psnr(const std::vector<const double*>& pred_frames,
                const std::vector<const double*>& ref_frames, int64_t frame_elems,
                double cap_db = 99.0);

// Mean SSIM over frames and channels, 11x11 Gaussian window (sigma 1.5),
// K1=0.01, K2=0.03, dynamic range 1.
double ssim(const std::vector<const double*>& pred_frames,
            const std::vector<const double*>& ref_frames, int height, int width, int channels);

// Per-element mean L2 change between adjacent frames. `elements` vectors of
// `channels` components per frame; output has `elements` entries.
std::vector<double> temporal_dynamics(const std::vector<const double*>& frames, int64_t elements,
                                      int channels);

// Pearson correlation between two equal-length vectors.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct SequenceMetrics {
    std::string name;
    double lve_mm = 0.0;
    double mve_mm = 0.0;
    double mve_max_mm = 0.0;
    double fdd_mm = 0.0;
    std::optional<double> psnr_db;
    bool psnr_capped = false;
    std::optional<double> ssim_val;
    std::optional<double> perceptual;
};

struct MetricReport {
    std::vector<SequenceMetrics> sequences;
    nlohmann::json to_json() const;  // includes aggregates and variant flags
};

}  // namespace talkie::metrics
