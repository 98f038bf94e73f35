#include "talkie/talkie.h"

#include <string>

#include "core/config.h"
#include "core/error.h"
#include "json.hpp"
#include "pipeline/commands.h"

using talkie::Config;
using talkie::Error;

struct talkie_ctx {
    std::string last_error;
};

extern "C" {

talkie_ctx* talkie_ctx_new(void) { return new talkie_ctx(); }

void talkie_ctx_free(talkie_ctx* ctx) { delete ctx; }

const char* talkie_version(void) { return talkie::pipeline::kToolVersion; }

const char* talkie_last_error(const talkie_ctx* ctx) {
    return ctx ? ctx->last_error.c_str() : "";
}

const char* talkie_default_config(void) {
    static const std::string dumped = talkie::pipeline::default_config().json().dump(2);
    return dumped.c_str();
}

talkie_status talkie_run(talkie_ctx* ctx, const char* command, const char* args_json,
                         const char* out_dir) {
    if (!ctx) return TALKIE_ERR_USAGE;
    ctx->last_error.clear();
    auto record = [&](int code, const char* kind, const std::string& msg) {
        nlohmann::json j = {{"code", code}, {"kind", kind}, {"message", msg}};
        if (command) j["command"] = command;
        ctx->last_error = j.dump();
    };
    if (!command || !out_dir) {
        record(TALKIE_ERR_USAGE, "usage", "command and out_dir must be non-null");
        return TALKIE_ERR_USAGE;
    }
    try {
        Config cfg = talkie::pipeline::default_config();
        nlohmann::json overrides = nlohmann::json::object();
        if (args_json && *args_json) {
            try {
                overrides = nlohmann::json::parse(args_json);
            } catch (const std::exception& e) {
                talkie::fail_usage(std::string("args_json parse error: ") + e.what());
            }
            if (!overrides.is_object()) talkie::fail_usage("args_json must be a JSON object");
        }
        if (overrides.contains("config_file")) {
            cfg.merge(Config::from_file(overrides["config_file"].get<std::string>()).json());
            overrides.erase("config_file");
        }
        cfg.merge(overrides);
        talkie::pipeline::run_command(command, cfg, out_dir);
        return TALKIE_OK;
    } catch (const Error& e) {
        const char* kind = e.kind() == talkie::ErrKind::usage     ? "usage"
                           : e.kind() == talkie::ErrKind::data    ? "data"
                           : e.kind() == talkie::ErrKind::numeric ? "numeric"
                                                                  : "internal";
        record(e.code(), kind, e.what());
        return static_cast<talkie_status>(e.code());
    } catch (const std::exception& e) {
        record(TALKIE_ERR_INTERNAL, "internal", e.what());
        return TALKIE_ERR_INTERNAL;
    }
}

}  // extern "C"
