#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace talkie {

// Nested key-value run configuration. Layering: built-in defaults <- config
// file <- command-line overrides. Every artifact records the hash of the
// effective config that produced it.
class Config {
  public:
    static constexpr int kStructVersion = 1;

    Config();
    explicit Config(nlohmann::json j);

    static Config from_file(const std::string& path);
    static Config from_json_text(const std::string& text);

    // Deep-merge `other` on top of this config (objects merge, scalars replace).
    void merge(const nlohmann::json& other);

    // "a.b.c=value" with JSON-literal values; bare words become strings.
    void set_path(const std::string& assignment);

    bool has(const std::string& dotted) const;

    template <typename T>
    T get(const std::string& dotted, T fallback) const {
        const nlohmann::json* p = find(dotted);
        if (!p || p->is_null()) return fallback;
        return p->get<T>();
    }
    template <typename T>
    T require(const std::string& dotted) const;

    const nlohmann::json& json() const { return j_; }
    nlohmann::json& json() { return j_; }

    // Canonical serialization (sorted keys) and its hash.
    std::string canonical() const;
    std::string hash() const;

    void dump_to_file(const std::string& path) const;

  private:
    const nlohmann::json* find(const std::string& dotted) const;
    nlohmann::json j_;
};

}  // namespace talkie
