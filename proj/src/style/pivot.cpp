#include "style/pivot.h"

#include <cmath>

#include "core/error.h"
#include "core/narray.h"

namespace talkie::style {

StylePivot compute_pivot(const std::vector<float>& latents, int64_t frames, int64_t dim) {
    require_usage(frames >= 1, "compute_pivot: empty latent sequence");
    require_usage(static_cast<int64_t>(latents.size()) == frames * dim,
                  "compute_pivot: buffer does not match frames x dim");
    StylePivot p;
    p.frame_count = frames;
    p.vector.assign(static_cast<size_t>(dim), 0.0f);
    std::vector<double> acc(static_cast<size_t>(dim), 0.0);
    for (int64_t t = 0; t < frames; ++t)
        for (int64_t k = 0; k < dim; ++k) acc[k] += latents[t * dim + k];
    for (int64_t k = 0; k < dim; ++k)
        p.vector[k] = static_cast<float>(acc[k] / static_cast<double>(frames));
    return p;
}

std::vector<float> to_offsets(const std::vector<float>& latents, const StylePivot& pivot) {
    const int64_t dim = static_cast<int64_t>(pivot.vector.size());
    require_usage(dim > 0 && static_cast<int64_t>(latents.size()) % dim == 0,
                  "to_offsets: latent/pivot dimension mismatch");
    std::vector<float> out(latents.size());
    const int64_t frames = static_cast<int64_t>(latents.size()) / dim;
    for (int64_t t = 0; t < frames; ++t)
        for (int64_t k = 0; k < dim; ++k) out[t * dim + k] = latents[t * dim + k] - pivot.vector[k];
    return out;
}

std::vector<float> from_offsets(const std::vector<float>& offsets, const StylePivot& pivot) {
    const int64_t dim = static_cast<int64_t>(pivot.vector.size());
    require_usage(dim > 0 && static_cast<int64_t>(offsets.size()) % dim == 0,
                  "from_offsets: offset/pivot dimension mismatch");
    std::vector<float> out(offsets.size());
    const int64_t frames = static_cast<int64_t>(offsets.size()) / dim;
    for (int64_t t = 0; t < frames; ++t)
        for (int64_t k = 0; k < dim; ++k) out[t * dim + k] = offsets[t * dim + k] + pivot.vector[k];
    return out;
}

void save_pivot(const StylePivot& pivot, const std::string& base) {
    NamedArray a = make_array("style_pivot", {static_cast<int64_t>(pivot.vector.size())});
    a.data = pivot.vector;
    a.extra["stream"] = pivot.stream;
    a.extra["identity"] = pivot.identity;
    a.extra["frame_count"] = pivot.frame_count;
    a.extra["codec_checkpoint_hash"] = pivot.codec_checkpoint_hash;
    save_array(a, base);
}

StylePivot load_pivot(const std::string& path) {
    NamedArray a = load_array(path);
    require_data(a.shape.size() == 1, "pivot file must hold a flat vector: " + path);
    StylePivot p;
    p.vector = std::move(a.data);
    p.stream = a.extra.value("stream", "");
    p.identity = a.extra.value("identity", "");
    p.frame_count = a.extra.value("frame_count", int64_t{0});
    p.codec_checkpoint_hash = a.extra.value("codec_checkpoint_hash", "");
    for (float v : p.vector)
        if (!std::isfinite(v)) fail_data("pivot contains non-finite values: " + path);
    return p;
}

}  // namespace talkie::style
