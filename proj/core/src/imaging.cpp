#include "drowsy/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "drowsy/error.hpp"

namespace drowsy {

namespace {

std::uint8_t round_to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderScanner {
public:
    explicit HeaderScanner(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    long long number(const char* what) {
        skip_space_and_comments();
        long long value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000) throw Error(ErrorCode::MalformedHeader, std::string(what) + " too large");
            ++pos_;
            ++digits;
        }
        if (digits == 0) throw Error(ErrorCode::MalformedHeader, std::string("expected ") + what);
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_space() {
        if (pos_ >= bytes_.size() || !is_space(bytes_[pos_]))
            throw Error(ErrorCode::MalformedHeader, "missing whitespace before raster");
        ++pos_;
    }

    std::size_t position() const { return pos_; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (is_space(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 2;
};

}  // namespace

Image load_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw Error(ErrorCode::MalformedHeader, "expected P5 or P6 magic");
    const int channels = bytes[1] == '5' ? 1 : 3;
    HeaderScanner scan(bytes);
    const long long width = scan.number("width");
    const long long height = scan.number("height");
    const long long maxval = scan.number("maxval");
    if (width <= 0 || height <= 0 || width > 65535 || height > 65535)
        throw Error(ErrorCode::MalformedHeader, "bad dimensions");
    if (maxval != 255) throw Error(ErrorCode::UnsupportedMaxval, "maxval " + std::to_string(maxval));
    scan.single_space();
    const std::size_t need = static_cast<std::size_t>(width) * height * channels;
    const std::size_t start = scan.position();
    if (bytes.size() - start < need)
        throw Error(ErrorCode::TruncatedRaster,
                    "expected " + std::to_string(need) + " bytes, found " + std::to_string(bytes.size() - start));
    std::vector<std::uint8_t> pixels(bytes.begin() + start, bytes.begin() + start + need);
    return Image(static_cast<int>(width), static_cast<int>(height), channels, std::move(pixels));
}

std::vector<std::uint8_t> save_pnm(const Image& img) {
    const std::string header = std::string(img.channels() == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width()) +
                               " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels().begin(), img.pixels().end());
    return out;
}

Image read_pnm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_pnm(bytes);
}

void write_pnm_file(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    const auto bytes = save_pnm(img);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

Image to_grayscale(const Image& img) {
    if (img.channels() == 1) return img;
    Image out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(x, y) = round_to_byte(0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2));
    return out;
}

Image resize_bilinear(const Image& img, int new_w, int new_h) {
    if (img.channels() != 1) throw Error(ErrorCode::InvalidArgument, "resize expects a gray image");
    if (new_w <= 0 || new_h <= 0) throw Error(ErrorCode::InvalidArgument, "target size must be positive");
    if (new_w == img.width() && new_h == img.height()) return img;

    struct Tap {
        int lo;
        int hi;
        double frac;
    };
    auto taps = [](int src, int dst) {
        std::vector<Tap> out(dst);
        const double ratio = static_cast<double>(src) / dst;
        for (int i = 0; i < dst; ++i) {
            const double s = std::clamp((i + 0.5) * ratio - 0.5, 0.0, static_cast<double>(src - 1));
            const int lo = static_cast<int>(std::floor(s));
            out[i] = {lo, std::min(lo + 1, src - 1), s - lo};
        }
        return out;
    };
    const auto xs = taps(img.width(), new_w);
    const auto ys = taps(img.height(), new_h);

    Image out(new_w, new_h, 1);
    for (int y = 0; y < new_h; ++y) {
        const Tap& ty = ys[y];
        for (int x = 0; x < new_w; ++x) {
            const Tap& tx = xs[x];
            const double top = (1.0 - tx.frac) * img.at(tx.lo, ty.lo) + tx.frac * img.at(tx.hi, ty.lo);
            const double bottom = (1.0 - tx.frac) * img.at(tx.lo, ty.hi) + tx.frac * img.at(tx.hi, ty.hi);
            out.at(x, y) = round_to_byte((1.0 - ty.frac) * top + ty.frac * bottom);
        }
    }
    return out;
}

Image crop(const Image& img, const Rect& r) {
    if (!img.contains(r)) throw Error(ErrorCode::OutOfBounds, "crop rectangle outside image");
    Image out(r.w, r.h, img.channels());
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(r.x + x, r.y + y, c);
    return out;
}

Image denoise(const Image& img, double spatial_sigma, double range_sigma) {
    if (img.channels() != 1) throw Error(ErrorCode::InvalidArgument, "denoise expects a gray image");
    if (!(spatial_sigma > 0.0) || !(range_sigma > 0.0))
        throw Error(ErrorCode::InvalidArgument, "denoise sigmas must be positive");
    constexpr int radius = 2;
    std::array<double, (2 * radius + 1) * (2 * radius + 1)> spatial{};
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            spatial[(dy + radius) * (2 * radius + 1) + dx + radius] =
                std::exp(-(dx * dx + dy * dy) / (2.0 * spatial_sigma * spatial_sigma));
    std::array<double, 256> range{};
    for (int d = 0; d < 256; ++d) range[d] = std::exp(-(d * d) / (2.0 * range_sigma * range_sigma));

    const int w = img.width();
    const int h = img.height();
    Image out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int center = img.at(x, y);
            double num = 0.0;
            double den = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = std::clamp(x + dx, 0, w - 1);
                    const int v = img.at(xx, yy);
                    const double wgt = spatial[(dy + radius) * (2 * radius + 1) + dx + radius] * range[std::abs(v - center)];
                    num += wgt * v;
                    den += wgt;
                }
            }
            out.at(x, y) = round_to_byte(num / den);
        }
    }
    return out;
}

Image enhance_contrast(const Image& img, int tiles, double clip_limit) {
    if (img.channels() != 1) throw Error(ErrorCode::InvalidArgument, "enhance_contrast expects a gray image");
    if (tiles < 1) throw Error(ErrorCode::InvalidArgument, "tiles must be >= 1");
    if (!(clip_limit >= 1.0)) throw Error(ErrorCode::InvalidArgument, "clip_limit must be >= 1");

    const int w = img.width();
    const int h = img.height();
    const int tx = std::min(tiles, w);
    const int ty = std::min(tiles, h);
    std::vector<int> xb(tx + 1);
    std::vector<int> yb(ty + 1);
    for (int i = 0; i <= tx; ++i) xb[i] = static_cast<int>(static_cast<long long>(i) * w / tx);
    for (int i = 0; i <= ty; ++i) yb[i] = static_cast<int>(static_cast<long long>(i) * h / ty);

    // One 256-entry mapping per tile.
    std::vector<std::array<double, 256>> maps(static_cast<std::size_t>(tx) * ty);
    for (int j = 0; j < ty; ++j) {
        for (int i = 0; i < tx; ++i) {
            std::array<double, 256> hist{};
            for (int y = yb[j]; y < yb[j + 1]; ++y)
                for (int x = xb[i]; x < xb[i + 1]; ++x) hist[img.at(x, y)] += 1.0;
            const double count = static_cast<double>(xb[i + 1] - xb[i]) * (yb[j + 1] - yb[j]);
            auto& map = maps[static_cast<std::size_t>(j) * tx + i];

            const auto occupied = std::count_if(hist.begin(), hist.end(), [](double c) { return c > 0.0; });
            if (occupied <= 1) {
                for (int v = 0; v < 256; ++v) map[v] = v;
                continue;
            }
            if (std::isfinite(clip_limit)) {
                const double limit = clip_limit * count / 256.0;
                double excess = 0.0;
                for (double& c : hist) {
                    if (c > limit) {
                        excess += c - limit;
                        c = limit;
                    }
                }
                for (double& c : hist) c += excess / 256.0;
            }
            double cdf = 0.0;
            for (int v = 0; v < 256; ++v) {
                cdf += hist[v];
                map[v] = std::clamp(255.0 * cdf / count, 0.0, 255.0);
            }
        }
    }

    // Tile centres and the interpolation weights along each axis.
    struct Blend {
        int lo;
        int hi;
        double frac;
    };
    auto blends = [](const std::vector<int>& bounds, int n) {
        const int tiles_n = static_cast<int>(bounds.size()) - 1;
        std::vector<double> centers(tiles_n);
        for (int t = 0; t < tiles_n; ++t) centers[t] = (bounds[t] + bounds[t + 1] - 1) / 2.0;
        std::vector<Blend> out(n);
        for (int p = 0; p < n; ++p) {
            if (p <= centers.front()) {
                out[p] = {0, 0, 0.0};
            } else if (p >= centers.back()) {
                out[p] = {tiles_n - 1, tiles_n - 1, 0.0};
            } else {
                int t = 0;
                while (centers[t + 1] <= p) ++t;
                out[p] = {t, t + 1, (p - centers[t]) / (centers[t + 1] - centers[t])};
            }
        }
        return out;
    };
    const auto bx = blends(xb, w);
    const auto by = blends(yb, h);

    Image out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        const Blend& b_y = by[y];
        for (int x = 0; x < w; ++x) {
            const Blend& b_x = bx[x];
            const int v = img.at(x, y);
            const auto m = [&](int tj, int ti) { return maps[static_cast<std::size_t>(tj) * tx + ti][v]; };
            const double top = (1.0 - b_x.frac) * m(b_y.lo, b_x.lo) + b_x.frac * m(b_y.lo, b_x.hi);
            const double bottom = (1.0 - b_x.frac) * m(b_y.hi, b_x.lo) + b_x.frac * m(b_y.hi, b_x.hi);
            out.at(x, y) = round_to_byte((1.0 - b_y.frac) * top + b_y.frac * bottom);
        }
    }
    return out;
}

const char* to_string(LowLightMode mode) noexcept {
    switch (mode) {
        case LowLightMode::Off: return "off";
        case LowLightMode::Auto: return "auto";
        case LowLightMode::On: return "on";
    }
    return "auto";
}

LowLightMode parse_low_light_mode(const std::string& text) {
    if (text == "off") return LowLightMode::Off;
    if (text == "auto") return LowLightMode::Auto;
    if (text == "on") return LowLightMode::On;
    throw Error(ErrorCode::InvalidArgument, "low_light_mode must be off|auto|on, got '" + text + "'");
}

double mean_intensity(const Image& img) {
    if (img.empty()) return 0.0;
    double total = 0.0;
    for (auto v : img.pixels()) total += v;
    return total / static_cast<double>(img.pixels().size());
}

double intensity_stddev(const Image& img) {
    if (img.empty()) return 0.0;
    const double mean = mean_intensity(img);
    double acc = 0.0;
    for (auto v : img.pixels()) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(img.pixels().size()));
}

Image preprocess(const Image& img, const PreprocessConfig& config) {
    const Image gray = to_grayscale(img);
    const bool enhance = config.low_light_mode == LowLightMode::On ||
                         (config.low_light_mode == LowLightMode::Auto && mean_intensity(gray) < config.low_light_threshold);
    Image smoothed = denoise(gray, config.denoise_spatial_sigma, config.denoise_range_sigma);
    if (!enhance) return smoothed;
    return enhance_contrast(smoothed, config.contrast_tiles, config.contrast_clip_limit);
}

}  // namespace drowsy
