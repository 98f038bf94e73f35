#include "codec/codebook.h"

#include <cmath>

#include "core/error.h"

namespace talkie::codec {

void Codebook::validate() const {
    require_usage(size >= 2, "codebook: need at least 2 entries");
    require_usage(dim >= 1, "codebook: entry dimension must be positive");
    require_usage(static_cast<int64_t>(entries.size()) == static_cast<int64_t>(size) * dim,
                  "codebook: entries buffer size mismatch");
    for (float v : entries)
        if (!std::isfinite(v)) fail_numeric("codebook: non-finite entry");
}

int Codebook::nearest(const float* vec) const {
    int best = 0;
    double best_d = -1.0;
    for (int c = 0; c < size; ++c) {
        const float* e = entry(c);
        double d = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double diff = static_cast<double>(vec[k]) - e[k];
            d += diff * diff;
        }
        if (best_d < 0.0 || d < best_d) {  // strict < keeps the lowest index on ties
            best_d = d;
            best = c;
        }
    }
    return best;
}

LatentGrid quantize(const LatentGrid& latent, const Codebook& book) {
    require_usage(!latent.quantized, "quantize: latent is already quantized");
    require_usage(latent.d == book.dim, "quantize: latent dimension does not match codebook");
    book.validate();

    LatentGrid out;
    out.h = latent.h;
    out.w = latent.w;
    out.d = latent.d;
    out.quantized = true;
    out.values.resize(latent.values.size());
    out.indices.resize(latent.cells());
    for (int i = 0; i < latent.cells(); ++i) {
        const int idx = book.nearest(latent.cell(i));
        out.indices[i] = idx;
        const float* e = book.entry(idx);
        float* dst = out.cell(i);
        for (int k = 0; k < latent.d; ++k) dst[k] = e[k];
    }
    return out;
}

std::vector<int32_t> nearest_indices(const Codebook& book, const std::vector<float>& vectors) {
    require_usage(vectors.size() % book.dim == 0, "nearest_indices: buffer not a multiple of dim");
    const int64_t n = static_cast<int64_t>(vectors.size()) / book.dim;
    std::vector<int32_t> out(n);
    for (int64_t i = 0; i < n; ++i) out[i] = book.nearest(vectors.data() + i * book.dim);
    return out;
}

}  // namespace talkie::codec
