#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace semcache::testing {

inline std::filesystem::path source_dir() {
    return std::filesystem::path(SEMCACHE_SOURCE_DIR);
}

inline std::filesystem::path fixture_dir() { return source_dir() / "tests" / "fixtures"; }
inline std::filesystem::path golden_dir() { return source_dir() / "tests" / "golden"; }
inline std::filesystem::path prompt_dir() { return source_dir() / "prompts"; }
inline std::filesystem::path toy_manifest() { return fixture_dir() / "toy" / "manifest.json"; }

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("fixture missing: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace semcache::testing
