#pragma once

#include <filesystem>
#include <string>

#include "drowsy/image.hpp"
#include "drowsy/random.hpp"

namespace test {

inline drowsy::Image random_image(drowsy::Rng& rng, int w, int h, int channels = 1) {
    drowsy::Image img(w, h, channels);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() / ("drowsy_test_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    static int& counter() {
        static int n = 0;
        return n;
    }
    std::filesystem::path path_;
};

}  // namespace test
