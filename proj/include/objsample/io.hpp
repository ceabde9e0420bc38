#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace objsample::io {

std::vector<std::byte> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Writes to `<path>.tmp` and renames over `path` once the data is flushed,
/// so a failed run never leaves a partial artifact behind.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> data);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace objsample::io
