#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "drowsy/image.hpp"

namespace drowsy {

// Binary netpbm codec: P5 (gray) and P6 (RGB), maxval 255, '#' comments allowed in the header.
Image load_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> save_pnm(const Image& img);

Image read_pnm_file(const std::filesystem::path& path);
void write_pnm_file(const std::filesystem::path& path, const Image& img);

/// Rec.601 luma, rounded. Gray input is returned unchanged.
Image to_grayscale(const Image& img);

/// Pixel-center aligned bilinear resampling of a gray image.
Image resize_bilinear(const Image& img, int new_w, int new_h);

/// Copy of the pixels under `r`. Throws OutOfBounds.
Image crop(const Image& img, const Rect& r);

/// Edge-preserving smoother over a 5x5 neighbourhood with clamped borders.
Image denoise(const Image& img, double spatial_sigma, double range_sigma);

/// Tile-based clipped histogram equalization with bilinear blending of the
/// per-tile mappings. clip_limit may be +infinity (no clipping).
Image enhance_contrast(const Image& img, int tiles, double clip_limit);

enum class LowLightMode { Off, Auto, On };

struct PreprocessConfig {
    double denoise_spatial_sigma = 1.0;
    double denoise_range_sigma = 20.0;
    LowLightMode low_light_mode = LowLightMode::Auto;
    double low_light_threshold = 60.0;
    int contrast_tiles = 8;
    double contrast_clip_limit = 2.0;

    bool operator==(const PreprocessConfig&) const = default;
};

const char* to_string(LowLightMode mode) noexcept;
LowLightMode parse_low_light_mode(const std::string& text);

/// Grayscale, then denoise, then (in low light) contrast enhancement.
Image preprocess(const Image& img, const PreprocessConfig& config);

double mean_intensity(const Image& img);
double intensity_stddev(const Image& img);

}  // namespace drowsy
