#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace drowsy {

/// Axis-aligned rectangle: x/y are the left column and top row.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const noexcept { return static_cast<long long>(w) * h; }
    bool operator==(const Rect&) const = default;
};

struct Point {
    int x = 0;
    int y = 0;
    bool operator==(const Point&) const = default;
};

struct Size {
    int w = 0;
    int h = 0;
    bool operator==(const Size&) const = default;
};

/// Intersection over union of two rectangles; 0 when disjoint.
double overlap_ratio(const Rect& a, const Rect& b) noexcept;

/// Row-major 8-bit image with 1 (gray) or 3 (interleaved RGB) channels.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels = 1, std::uint8_t fill = 0);
    Image(int width, int height, int channels, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return pixels_.empty(); }
    Size size() const noexcept { return {width_, height_}; }

    std::uint8_t at(int x, int y, int c = 0) const noexcept {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t& at(int x, int y, int c = 0) noexcept {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    bool contains(const Rect& r) const noexcept {
        return r.w > 0 && r.h > 0 && r.x >= 0 && r.y >= 0 && r.x + r.w <= width_ && r.y + r.h <= height_;
    }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<std::uint8_t> pixels_;
};

/// Summed-area table with a companion table of squared intensities.
/// Entry (row, col) holds the sum over pixels with y < row and x < col.
class IntegralImage {
public:
    IntegralImage() = default;
    explicit IntegralImage(const Image& gray);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    std::uint64_t sum(int row, int col) const noexcept { return sum_[index(row, col)]; }
    std::uint64_t squared_sum(int row, int col) const noexcept { return sq_[index(row, col)]; }

    /// Exact pixel sum over `r`. Throws OutOfBounds when r leaves the image.
    std::uint64_t rect_sum(const Rect& r) const;
    std::uint64_t rect_squared_sum(const Rect& r) const;

    /// Unchecked variants for hot loops whose callers have validated the rect.
    std::uint64_t rect_sum_unchecked(const Rect& r) const noexcept {
        return sum_[index(r.y + r.h, r.x + r.w)] - sum_[index(r.y, r.x + r.w)] - sum_[index(r.y + r.h, r.x)] +
               sum_[index(r.y, r.x)];
    }
    std::uint64_t rect_squared_sum_unchecked(const Rect& r) const noexcept {
        return sq_[index(r.y + r.h, r.x + r.w)] - sq_[index(r.y, r.x + r.w)] - sq_[index(r.y + r.h, r.x)] +
               sq_[index(r.y, r.x)];
    }

    bool contains(const Rect& r) const noexcept {
        return r.w > 0 && r.h > 0 && r.x >= 0 && r.y >= 0 && r.x + r.w <= width_ && r.y + r.h <= height_;
    }

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * (width_ + 1) + col;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> sum_;
    std::vector<std::uint64_t> sq_;
};

}  // namespace drowsy
