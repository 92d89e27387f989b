#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

// Unique scratch paths for tests that touch the filesystem.
namespace tscp::test {

inline std::filesystem::path temp_path(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    const unsigned id = counter.fetch_add(1);
    return std::filesystem::temp_directory_path() /
           ("tscp_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(id));
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) : path(temp_path(tag)) {
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace tscp::test
