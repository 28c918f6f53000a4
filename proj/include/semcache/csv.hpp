#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace semcache::csv {

// Minimal RFC-4180-ish CSV: quoted fields may contain commas, quotes
// (doubled) and newlines. Good enough for every file this project emits.

std::string escape(const std::string& field);
std::string join_row(const std::vector<std::string>& fields);

std::vector<std::vector<std::string>> parse(const std::string& text);
std::vector<std::vector<std::string>> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                const std::vector<std::vector<std::string>>& rows);

} // namespace semcache::csv
