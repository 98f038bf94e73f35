/* talkie — speech-driven facial motion and wrinkle map generation.
 *
 * C API for the shared library. All functions are synchronous. A context
 * handle carries the last error record; commands mirror the CLI one to one
 * and take their arguments as a JSON object string (the same keys the CLI
 * accepts, nested configuration included).
 */
#ifndef TALKIE_H
#define TALKIE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct talkie_ctx talkie_ctx;

/* Status codes double as CLI exit codes. */
typedef enum talkie_status {
    TALKIE_OK = 0,
    TALKIE_ERR_USAGE = 2,   /* bad arguments or configuration */
    TALKIE_ERR_DATA = 3,    /* missing/corrupt files, hash mismatches */
    TALKIE_ERR_NUMERIC = 4, /* divergence, degenerate geometry */
    TALKIE_ERR_INTERNAL = 5
} talkie_status;

talkie_ctx* talkie_ctx_new(void);
void talkie_ctx_free(talkie_ctx* ctx);

const char* talkie_version(void);

/* JSON error record for the most recent failing call on this context
 * ({"code":..., "kind":..., "message":...}); empty string if none. The
 * pointer stays valid until the next call on the same context. */
const char* talkie_last_error(const talkie_ctx* ctx);

/* Default configuration as a JSON string (caller must not free). */
const char* talkie_default_config(void);

/* Run one pipeline command.
 *   command:   synth-data | train-codec | train-ldm | compute-pivot |
 *              generate | evaluate | dynamics
 *   args_json: JSON object; configuration keys at the top level, command
 *              arguments under "args" (e.g. {"args":{"dataset":"..."}}),
 *              optional "config_file" path merged beneath the overrides.
 *   out_dir:   every artifact and the run log land here.
 */
talkie_status talkie_run(talkie_ctx* ctx, const char* command, const char* args_json,
                         const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* TALKIE_H */
