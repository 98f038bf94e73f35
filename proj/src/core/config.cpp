#include "core/config.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/error.h"
#include "core/hash.h"

namespace talkie {

namespace {

std::vector<std::string> split_dotted(const std::string& dotted) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : dotted) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

void deep_merge(nlohmann::json& dst, const nlohmann::json& src) {
    if (!src.is_object() || !dst.is_object()) {
        dst = src;
        return;
    }
    for (auto it = src.begin(); it != src.end(); ++it) {
        if (dst.contains(it.key()) && dst[it.key()].is_object() && it.value().is_object())
            deep_merge(dst[it.key()], it.value());
        else
            dst[it.key()] = it.value();
    }
}

}  // namespace

Config::Config() : j_(nlohmann::json::object()) { j_["struct_version"] = kStructVersion; }

Config::Config(nlohmann::json j) : j_(std::move(j)) {
    if (!j_.is_object()) fail_usage("config root must be a JSON object");
    if (!j_.contains("struct_version")) j_["struct_version"] = kStructVersion;
    int v = j_["struct_version"].get<int>();
    if (v != kStructVersion)
        fail_data("config struct_version " + std::to_string(v) + " unsupported (expected " +
                  std::to_string(kStructVersion) + ")");
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_data("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail_usage("config parse error in " + path + ": " + e.what());
    }
    return Config(std::move(j));
}

Config Config::from_json_text(const std::string& text) {
    try {
        return Config(nlohmann::json::parse(text));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail_usage(std::string("config parse error: ") + e.what());
    }
}

void Config::merge(const nlohmann::json& other) { deep_merge(j_, other); }

void Config::set_path(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) fail_usage("override must look like key.path=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string val = assignment.substr(eq + 1);
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(val);
    } catch (...) {
        parsed = val;  // bare word -> string
    }
    nlohmann::json* p = &j_;
    for (const auto& part : split_dotted(key)) {
        if (part.empty()) fail_usage("empty key segment in override: " + assignment);
        p = &((*p)[part]);
    }
    *p = parsed;
}

const nlohmann::json* Config::find(const std::string& dotted) const {
    const nlohmann::json* p = &j_;
    for (const auto& part : split_dotted(dotted)) {
        if (!p->is_object() || !p->contains(part)) return nullptr;
        p = &p->at(part);
    }
    return p;
}

bool Config::has(const std::string& dotted) const { return find(dotted) != nullptr; }

template <typename T>
T Config::require(const std::string& dotted) const {
    const nlohmann::json* p = find(dotted);
    if (!p) fail_usage("missing required config key: " + dotted);
    try {
        return p->get<T>();
    } catch (const std::exception& e) {
        fail_usage("config key " + dotted + " has wrong type: " + e.what());
    }
}

template int Config::require<int>(const std::string&) const;
template double Config::require<double>(const std::string&) const;
template std::string Config::require<std::string>(const std::string&) const;
template bool Config::require<bool>(const std::string&) const;
template uint64_t Config::require<uint64_t>(const std::string&) const;

std::string Config::canonical() const { return j_.dump(); }  // nlohmann keeps keys sorted

std::string Config::hash() const { return hash_hex(canonical()); }

void Config::dump_to_file(const std::string& path) const {
    std::filesystem::path p(path);
    if (!p.parent_path().empty()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail_data("cannot write config dump: " + path);
    out << j_.dump(2) << "\n";
}

}  // namespace talkie
