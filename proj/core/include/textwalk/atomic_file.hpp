#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string_view>

namespace textwalk {

// Writes through a sibling temp file and renames it over `path`, so readers
// never observe a partially written output.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& writer);

void write_text_atomically(const std::filesystem::path& path, std::string_view text);

}  // namespace textwalk
