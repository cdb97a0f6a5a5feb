#include "drowsy/image.hpp"

#include <algorithm>
#include <string>

#include "drowsy/error.hpp"

namespace drowsy {

double overlap_ratio(const Rect& a, const Rect& b) noexcept {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w);
    const int y1 = std::min(a.y + a.h, b.y + b.h);
    if (x1 <= x0 || y1 <= y0) return 0.0;
    const double inter = static_cast<double>(x1 - x0) * (y1 - y0);
    return inter / (static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter);
}

namespace {

void check_shape(int width, int height, int channels) {
    if (width <= 0 || height <= 0)
        throw Error(ErrorCode::InvalidArgument,
                    "image dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
    if (channels != 1 && channels != 3)
        throw Error(ErrorCode::InvalidArgument, "channels must be 1 or 3, got " + std::to_string(channels));
}

}  // namespace

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
    check_shape(width, height, channels);
    pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
    check_shape(width, height, channels);
    if (pixels_.size() != static_cast<std::size_t>(width) * height * channels)
        throw Error(ErrorCode::InvalidArgument, "pixel count does not match width x height x channels");
}

IntegralImage::IntegralImage(const Image& gray) : width_(gray.width()), height_(gray.height()) {
    if (gray.channels() != 1) throw Error(ErrorCode::InvalidArgument, "integral image needs a gray image");
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    sum_.assign(stride * (height_ + 1), 0);
    sq_.assign(stride * (height_ + 1), 0);
    for (int y = 0; y < height_; ++y) {
        std::uint64_t row = 0;
        std::uint64_t row_sq = 0;
        for (int x = 0; x < width_; ++x) {
            const std::uint64_t v = gray.at(x, y);
            row += v;
            row_sq += v * v;
            sum_[index(y + 1, x + 1)] = sum_[index(y, x + 1)] + row;
            sq_[index(y + 1, x + 1)] = sq_[index(y, x + 1)] + row_sq;
        }
    }
}

std::uint64_t IntegralImage::rect_sum(const Rect& r) const {
    if (!contains(r)) throw Error(ErrorCode::OutOfBounds, "rectangle outside integral image");
    return rect_sum_unchecked(r);
}

std::uint64_t IntegralImage::rect_squared_sum(const Rect& r) const {
    if (!contains(r)) throw Error(ErrorCode::OutOfBounds, "rectangle outside integral image");
    return rect_squared_sum_unchecked(r);
}

}  // namespace drowsy
