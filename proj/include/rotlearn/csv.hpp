#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotlearn {

/// Shortest round-trip decimal form. %.17g round-trips every double; glibc
/// prints non-finite values as inf/-inf/nan, which we keep as-is.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

inline std::string fmt(long x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%ld", x);
    return std::string(buf);
}

inline std::string fmt(int x) { return fmt(static_cast<long>(x)); }

/// Accumulates rows in memory; write_file emits everything in one shot so an
/// interrupted run does not leave a half-written file behind.
class CsvBuilder {
public:
    explicit CsvBuilder(std::vector<std::string> header) { row(header); }

    void row(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        line += '\n';
        body_ += line;
    }

    const std::string& text() const { return body_; }

private:
    std::string body_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace rotlearn
