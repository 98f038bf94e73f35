#pragma once

#include <stdexcept>
#include <string>

namespace talkie {

// Error categories map 1:1 onto CLI exit codes / C API status values.
enum class ErrKind : int {
    usage = 2,     // bad arguments, malformed config, contract violations
    data = 3,      // missing/corrupt files, hash mismatches, bad formats
    numeric = 4,   // NaN loss, degenerate geometry, divergence
    internal = 5,
};

class Error : public std::runtime_error {
  public:
    Error(ErrKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrKind kind() const { return kind_; }
    int code() const { return static_cast<int>(kind_); }

  private:
    ErrKind kind_;
};

[[noreturn]] inline void fail_usage(const std::string& msg) { throw Error(ErrKind::usage, msg); }
[[noreturn]] inline void fail_data(const std::string& msg) { throw Error(ErrKind::data, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { throw Error(ErrKind::numeric, msg); }
[[noreturn]] inline void fail_internal(const std::string& msg) { throw Error(ErrKind::internal, msg); }

inline void require_usage(bool ok, const std::string& msg) {
    if (!ok) fail_usage(msg);
}
inline void require_data(bool ok, const std::string& msg) {
    if (!ok) fail_data(msg);
}

}  // namespace talkie
