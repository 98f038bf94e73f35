#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace talkie {

// FNV-1a 64-bit. Used for config hashes and input content hashes in reports
// and checkpoints (provenance, not security).
class Fnv1a {
  public:
    void update(const void* data, size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            h_ ^= p[i];
            h_ *= 1099511628211ull;
        }
    }
    void update(const std::string& s) { update(s.data(), s.size()); }
    uint64_t value() const { return h_; }

    std::string hex() const;

  private:
    uint64_t h_ = 14695981039346656037ull;
};

std::string hash_hex(const void* data, size_t len);
std::string hash_hex(const std::string& s);

// Streams the whole file; throws Error(data) if unreadable.
std::string hash_file_hex(const std::string& path);

}  // namespace talkie
