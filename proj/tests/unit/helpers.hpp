#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

inline std::string fixture_path(const std::string& rel) {
    return std::string(SELFICL_FIXTURES_DIR) + "/" + rel;
}

// scratch directory that cleans up after itself
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<unsigned long> counter{0};
        auto n = counter.fetch_add(1);
        path = std::filesystem::temp_directory_path() /
               ("selficl-test-" + std::to_string(::getpid()) + "-" + std::to_string(n));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path.string(); }
    std::string file(const std::string& rel) const { return (path / rel).string(); }
};

inline void write_text(const std::string& path, const std::string& text) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}
