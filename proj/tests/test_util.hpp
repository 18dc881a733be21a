#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testutil {

/// Fresh, empty scratch directory for one test.
inline std::filesystem::path scratch(const std::string& name) {
    const char* env = std::getenv("CELLSYNTH_TEST_TMP");
    const std::filesystem::path base =
        env ? std::filesystem::path(env) : std::filesystem::temp_directory_path() / "cellsynth_tests";
    const auto dir = base / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

}  // namespace testutil
