#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace nrsync::cli {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Writes `contents` to a sibling temp file and renames it over `path`.
/// Throws IoError naming the path and the cause.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Relative paths are placed under $NRSYNC_OUTPUT_DIR when it is set.
std::filesystem::path resolve_output_path(const std::string& path);

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nrsync::cli
