#pragma once

#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

namespace talkie {

// Line logger: stderr plus an optional file sink. Commands open one log under
// their --out directory.
class Log {
  public:
    Log() = default;

    void open_file(const std::string& path) {
        file_ = std::make_unique<std::ofstream>(path, std::ios::app);
    }

    void line(const std::string& s) {
        std::fprintf(stderr, "%s\n", s.c_str());
        if (file_ && *file_) (*file_) << s << "\n" << std::flush;
    }

    // printf-style convenience
    void f(const char* fmt, ...) {
        char buf[2048];
        va_list ap;
        va_start(ap, fmt);
        std::vsnprintf(buf, sizeof(buf), fmt, ap);
        va_end(ap);
        line(buf);
    }

    // file-only (used for per-step training records to keep stderr quiet)
    void file_line(const std::string& s) {
        if (file_ && *file_) (*file_) << s << "\n";
    }
    void flush() {
        if (file_) file_->flush();
    }

  private:
    std::unique_ptr<std::ofstream> file_;
};

}  // namespace talkie
