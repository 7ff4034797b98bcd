#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rebar2bim {

/// Reads a whole file. Throws Error(E_IO) if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_roundtrip(double v);

}  // namespace rebar2bim
