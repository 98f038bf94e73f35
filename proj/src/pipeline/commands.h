#pragma once

#include <string>

#include "core/config.h"

namespace talkie::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

// Built-in desk-scale defaults; config files and CLI overrides merge on top.
Config default_config();

// Each command writes only under `out` (artifacts, effective_config.json and
// run.log) and throws talkie::Error on failure. `args` carries the merged
// run configuration plus command arguments under "args.*".

void run_synth_data(const Config& cfg, const std::string& out);

// args.dataset, args.stream ("motion"|"wrinkle")
void run_train_codec(const Config& cfg, const std::string& out);

// args.dataset, args.motion_codec, args.wrinkle_codec
void run_train_ldm(const Config& cfg, const std::string& out);

// args.dataset, args.codec, args.stream, args.identity, args.split -> pivot
// file <out>/pivot_<stream>_<identity>
void run_compute_pivot(const Config& cfg, const std::string& out);

// args.audio (wav), args.ldm, args.motion_codec, args.wrinkle_codec,
// args.motion_pivot, args.wrinkle_pivot, args.topology
// optional: args.audio_features (named-array dump), args.neutral (texture
// array for wrinkle_apply), args.frames
void run_generate(const Config& cfg, const std::string& out);

// args.pred, args.ref (directories), args.topology -> report.json
void run_evaluate(const Config& cfg, const std::string& out);

// args.input (named array, motion [T,V,3] or maps [T,H,W,C]) -> dynamics field
void run_dynamics(const Config& cfg, const std::string& out);

// Dispatch by command name; unknown names raise a usage error.
void run_command(const std::string& name, const Config& cfg, const std::string& out);

}  // namespace talkie::pipeline
