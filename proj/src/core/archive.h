#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace talkie {

// Single-file tensor container used for checkpoints:
//   magic "TLKCKPT1" | u64 header length | JSON header | raw f32 payload
// The header carries kind, config hash, step counter and free-form metadata;
// each tensor entry records name, shape and float offset into the payload.
struct ArchiveTensor {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<float> data;
};

struct Archive {
    std::string kind;
    std::string config_hash;
    int64_t step = 0;
    nlohmann::json meta;  // free-form
    std::vector<ArchiveTensor> tensors;

    const ArchiveTensor& tensor(const std::string& name) const;
    const ArchiveTensor* find(const std::string& name) const;
    void add(std::string name, std::vector<int64_t> shape, std::vector<float> data);
};

void save_archive(const Archive& a, const std::string& path);
Archive load_archive(const std::string& path);

}  // namespace talkie
