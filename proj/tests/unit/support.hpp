#pragma once

#include <filesystem>

#ifndef ROADCAP_SOURCE_DIR
#error "ROADCAP_SOURCE_DIR must point at the repository root"
#endif

namespace roadcap::test {

inline std::filesystem::path source_dir() { return ROADCAP_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data" / "g30ys"; }

inline std::filesystem::path scratch_dir(const char* name)
{
    auto p = std::filesystem::temp_directory_path() / "roadcap_unit" / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace roadcap::test
