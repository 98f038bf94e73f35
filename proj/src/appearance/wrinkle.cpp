#include "appearance/wrinkle.h"

#include <algorithm>
#include <cmath>

#include "core/error.h"

namespace talkie::appearance {

WrinkleMap wrinkle_encode(const TextureFrame& texture, const TextureFrame& neutral,
                          const WrinkleParams& params) {
    require_usage(texture.height == neutral.height && texture.width == neutral.width,
                  "wrinkle_encode: texture/neutral resolution mismatch");
    require_usage(static_cast<int64_t>(texture.rgb.size()) == texture.numel() &&
                      static_cast<int64_t>(neutral.rgb.size()) == neutral.numel(),
                  "wrinkle_encode: texture buffer size mismatch");

    WrinkleMap out;
    out.height = texture.height;
    out.width = texture.width;
    out.values.resize(texture.rgb.size());
    for (size_t i = 0; i < texture.rgb.size(); ++i) {
        const double denom = std::max(static_cast<double>(neutral.rgb[i]), params.epsilon);
        const double ratio = static_cast<double>(texture.rgb[i]) / denom;
        // clamp keeps the value strictly inside (0,1) even after the float32
        // cast when the sigmoid saturates (ratio beyond ~16)
        const double s = std::clamp(1.0 / (1.0 + std::exp(-ratio)), 1e-6, 1.0 - 1e-6);
        out.values[i] = static_cast<float>(s);
    }
    return out;
}

TextureFrame wrinkle_apply(const WrinkleMap& wrinkle, const TextureFrame& neutral,
                           const WrinkleParams& params) {
    require_usage(wrinkle.height == neutral.height && wrinkle.width == neutral.width,
                  "wrinkle_apply: wrinkle/neutral resolution mismatch");
    require_usage(wrinkle.values.size() == neutral.rgb.size(),
                  "wrinkle_apply: buffer size mismatch");

    TextureFrame out;
    out.height = neutral.height;
    out.width = neutral.width;
    out.rgb.resize(neutral.rgb.size());
    const double d = params.logit_clamp;
    for (size_t i = 0; i < wrinkle.values.size(); ++i) {
        const double w = std::clamp(static_cast<double>(wrinkle.values[i]), d, 1.0 - d);
        const double ratio = std::log(w / (1.0 - w));
        const double denom = std::max(static_cast<double>(neutral.rgb[i]), params.epsilon);
        out.rgb[i] = static_cast<float>(std::clamp(ratio * denom, 0.0, 1.0));
    }
    return out;
}

}  // namespace talkie::appearance
