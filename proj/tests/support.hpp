#pragma once

#include <gtest/gtest.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "bgsub/bgsub.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("bgsub_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline bgsub::Frame constant_frame(int w, int h, std::uint8_t v) { return bgsub::Frame(w, h, v); }

inline bgsub::Frame random_frame(std::mt19937& rng, int w, int h) {
    std::uniform_int_distribution<int> d(0, 255);
    bgsub::Frame f(w, h);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<std::uint8_t>(d(rng));
    return f;
}

/// Random labels from `labels` (defaults to binary).
inline bgsub::Mask random_mask(std::mt19937& rng, int w, int h, bool withShadow = false) {
    std::uniform_int_distribution<int> d(0, withShadow ? 2 : 1);
    bgsub::Mask m(w, h);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const int k = d(rng);
        m[i] = k == 0 ? bgsub::label::background : k == 1 ? bgsub::label::foreground : bgsub::label::shadow;
    }
    return m;
}

inline bool all_equal(const bgsub::Mask& m, std::uint8_t v) {
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i] != v) return false;
    return true;
}

}  // namespace testing_support
