#pragma once

#include <cstdint>
#include <vector>

namespace talkie::appearance {

// RGB texture frame, values in [0,1].
struct TextureFrame {
    int height = 0, width = 0;
    std::vector<float> rgb;  // H*W*3

    int64_t numel() const { return static_cast<int64_t>(height) * width * 3; }
};

// Per-pixel ratio to the neutral texture, sigmoid-squashed into (0,1).
struct WrinkleMap {
    int height = 0, width = 0;
    std::vector<float> values;  // H*W*3, strictly inside (0,1)
};

struct WrinkleParams {
    double epsilon = 1e-3;      // floor on the neutral texture before the ratio
    double logit_clamp = 1e-4;  // wrinkle values clamped to [d, 1-d] before logit
};

// value = sigmoid(texture / max(neutral, epsilon)), per pixel per channel.
WrinkleMap wrinkle_encode(const TextureFrame& texture, const TextureFrame& neutral,
                          const WrinkleParams& params = {});

// value = clamp(logit(wrinkle) * max(neutral, epsilon), 0, 1).
TextureFrame wrinkle_apply(const WrinkleMap& wrinkle, const TextureFrame& neutral,
                           const WrinkleParams& params = {});

}  // namespace talkie::appearance
