#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tokred {

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace tokred
