#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "drowsy/error.hpp"
#include "drowsy/imaging.hpp"
#include "support.hpp"

using namespace drowsy;

namespace {

std::vector<std::uint8_t> bytes(const std::string& header, std::vector<std::uint8_t> raster) {
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), raster.begin(), raster.end());
    return out;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

// Direct evaluation of the bilateral weight formula with clamped borders.
Image naive_bilateral(const Image& img, double ss, double rs) {
    Image out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double num = 0, den = 0;
            const double c = img.at(x, y);
            for (int dy = -2; dy <= 2; ++dy)
                for (int dx = -2; dx <= 2; ++dx) {
                    const int qx = std::clamp(x + dx, 0, img.width() - 1);
                    const int qy = std::clamp(y + dy, 0, img.height() - 1);
                    const double q = img.at(qx, qy);
                    const double w = std::exp(-(dx * dx + dy * dy) / (2 * ss * ss)) *
                                     std::exp(-(c - q) * (c - q) / (2 * rs * rs));
                    num += w * q;
                    den += w;
                }
            out.at(x, y) = static_cast<std::uint8_t>(std::floor(num / den + 0.5));
        }
    return out;
}

}  // namespace

TEST_CASE("pnm decode of gray and color rasters") {
    const auto gray = load_pnm(bytes("P5 2 1 255\n", {0, 255}));
    CHECK(gray.width() == 2);
    CHECK(gray.height() == 1);
    CHECK(gray.channels() == 1);
    CHECK(gray.at(0, 0) == 0);
    CHECK(gray.at(1, 0) == 255);

    const auto rgb = load_pnm(bytes("P6 1 1 255\n", {10, 20, 30}));
    CHECK(rgb.channels() == 3);
    CHECK(rgb.at(0, 0, 0) == 10);
    CHECK(rgb.at(0, 0, 1) == 20);
    CHECK(rgb.at(0, 0, 2) == 30);
}

TEST_CASE("pnm header comments and whitespace") {
    const auto img = load_pnm(bytes("P5\n# made by hand\n2\t1\n255\n", {3, 4}));
    CHECK(img.at(1, 0) == 4);
}

TEST_CASE("pnm decode errors") {
    CHECK(code_of([] { load_pnm(bytes("P5 2 2 255\n", {1, 2, 3})); }) == ErrorCode::TruncatedRaster);
    CHECK(code_of([] { load_pnm(bytes("P2 2 2 255\n", {1, 2, 3, 4})); }) == ErrorCode::MalformedHeader);
    CHECK(code_of([] { load_pnm(bytes("P5 0 2 255\n", {})); }) == ErrorCode::MalformedHeader);
    CHECK(code_of([] { load_pnm(bytes("P5 x 2 255\n", {})); }) == ErrorCode::MalformedHeader);
    CHECK(code_of([] { load_pnm(bytes("P5 1 1 65535\n", {0, 0})); }) == ErrorCode::UnsupportedMaxval);
    CHECK(code_of([] { load_pnm(bytes("P5 1 1", {})); }) == ErrorCode::MalformedHeader);
}

TEST_CASE("pnm encode layout and round trip") {
    const Image one(1, 1, 1, 0);
    CHECK(save_pnm(one) == bytes("P5\n1 1\n255\n", {0}));

    Rng rng(99);
    for (int channels : {1, 3}) {
        const auto img = test::random_image(rng, 64, 64, channels);
        CHECK(load_pnm(save_pnm(img)) == img);
    }
    const auto odd = test::random_image(rng, 7, 3, 3);
    CHECK(load_pnm(save_pnm(odd)) == odd);
}

TEST_CASE("pnm files") {
    test::TempDir dir("pnm");
    Rng rng(5);
    const auto img = test::random_image(rng, 9, 4);
    write_pnm_file(dir.path() / "a.pgm", img);
    CHECK(read_pnm_file(dir.path() / "a.pgm") == img);
    CHECK(code_of([&] { read_pnm_file(dir.path() / "missing.pgm"); }) == ErrorCode::MissingFile);
}

TEST_CASE("grayscale luma") {
    auto px = [](std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        return to_grayscale(Image(1, 1, 3, std::vector<std::uint8_t>{r, g, b})).at(0, 0);
    };
    CHECK(px(255, 255, 255) == 255);
    CHECK(px(0, 0, 0) == 0);
    CHECK(px(255, 0, 0) == 76);
    CHECK(px(0, 255, 0) == 150);  // 149.685
    CHECK(px(0, 0, 255) == 29);   // 29.07

    Rng rng(1);
    const auto gray = test::random_image(rng, 5, 5);
    CHECK(to_grayscale(gray) == gray);
}

TEST_CASE("bilinear resize") {
    Rng rng(2);
    const auto img = test::random_image(rng, 13, 8);
    CHECK(resize_bilinear(img, 13, 8) == img);

    const Image two(2, 2, 1, std::vector<std::uint8_t>{0, 0, 100, 100});
    const auto one = resize_bilinear(two, 1, 1);
    CHECK(one.at(0, 0) == 50);

    const auto seven = resize_bilinear(Image(1, 1, 1, 7), 3, 3);
    for (auto p : seven.pixels()) CHECK(p == 7);

    // 1x2 [0, 100] -> 1x4: source x = (d + 0.5) / 2 - 0.5 -> -0.25 (clamped), 0.25, 0.75, 1.25 (clamped)
    const auto wide = resize_bilinear(Image(2, 1, 1, std::vector<std::uint8_t>{0, 100}), 4, 1);
    CHECK(wide.at(0, 0) == 0);
    CHECK(wide.at(1, 0) == 25);
    CHECK(wide.at(2, 0) == 75);
    CHECK(wide.at(3, 0) == 100);

    CHECK_THROWS_AS(resize_bilinear(img, 0, 4), Error);
}

TEST_CASE("integral image") {
    const IntegralImage ones(Image(3, 3, 1, 1));
    CHECK(ones.sum(3, 3) == 9);
    CHECK(ones.rect_sum({0, 0, 3, 3}) == 9);
    CHECK(ones.squared_sum(3, 3) == 9);

    Rng rng(3);
    const auto img = test::random_image(rng, 64, 64);
    const IntegralImage ii(img);
    for (int j = 0; j <= 64; ++j) {
        CHECK(ii.sum(0, j) == 0);
        CHECK(ii.sum(j, 0) == 0);
    }
    bool all_equal = true;
    for (int i = 0; i <= 64; i += 3)
        for (int j = 0; j <= 64; j += 5) {
            std::uint64_t s = 0, q = 0;
            for (int y = 0; y < i; ++y)
                for (int x = 0; x < j; ++x) {
                    s += img.at(x, y);
                    q += static_cast<std::uint64_t>(img.at(x, y)) * img.at(x, y);
                }
            all_equal = all_equal && ii.sum(i, j) == s && ii.squared_sum(i, j) == q;
        }
    CHECK(all_equal);

    CHECK(ii.rect_sum({5, 9, 1, 1}) == img.at(5, 9));
    CHECK_THROWS_AS(ii.rect_sum({60, 0, 5, 5}), Error);
    CHECK_THROWS_AS(ii.rect_sum({-1, 0, 2, 2}), Error);
}

TEST_CASE("denoise") {
    const Image flat(12, 9, 1, 77);
    CHECK(denoise(flat, 1.0, 20.0) == flat);

    // A 255 spike against zeros: with range_sigma 30 the neighbours carry
    // weight exp(-255^2 / 1800) ~ 2e-16, so the spike survives; a wide
    // range kernel lets the neighbours pull it down.
    Image impulse(11, 11, 1, 0);
    impulse.at(5, 5) = 255;
    const auto kept = denoise(impulse, 1.0, 30.0);
    CHECK(kept == naive_bilateral(impulse, 1.0, 30.0));
    CHECK(kept.at(5, 5) == 255);
    const auto smoothed = denoise(impulse, 1.0, 200.0);
    CHECK(smoothed.at(5, 5) < 255);
    CHECK(smoothed.at(0, 0) == 0);
    CHECK(smoothed.at(10, 5) == 0);

    Rng rng(4);
    const auto img = test::random_image(rng, 17, 11);
    CHECK(denoise(img, 1.0, 20.0) == naive_bilateral(img, 1.0, 20.0));
    CHECK(denoise(img, 2.5, 60.0) == naive_bilateral(img, 2.5, 60.0));

    CHECK_THROWS_AS(denoise(img, 0.0, 20.0), Error);
    CHECK_THROWS_AS(denoise(test::random_image(rng, 3, 3, 3), 1.0, 20.0), Error);
}

TEST_CASE("contrast enhancement") {
    const Image flat(32, 32, 1, 90);
    CHECK(enhance_contrast(flat, 8, 2.0) == flat);
    CHECK(enhance_contrast(flat, 1, std::numeric_limits<double>::infinity()) == flat);

    // Two levels, half each: cdf(50) = 128 of 256 -> 127.5 -> 128, cdf(200) = 256 -> 255.
    Image two(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) two.at(x, y) = y < 8 ? 50 : 200;
    const auto eq = enhance_contrast(two, 1, std::numeric_limits<double>::infinity());
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) CHECK(eq.at(x, y) == (y < 8 ? 128 : 255));

    // 3/4 at 10 and 1/4 at 20 -> 191.25 -> 191 and 255.
    Image skew(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) skew.at(x, y) = y < 12 ? 10 : 20;
    const auto eq2 = enhance_contrast(skew, 1, std::numeric_limits<double>::infinity());
    CHECK(eq2.at(0, 0) == 191);
    CHECK(eq2.at(0, 15) == 255);

    Rng rng(6);
    const auto img = test::random_image(rng, 40, 30);
    const auto out = enhance_contrast(img, 4, 2.0);
    CHECK(out.width() == 40);
    CHECK(out.height() == 30);

    CHECK_THROWS_AS(enhance_contrast(img, 0, 2.0), Error);
    CHECK_THROWS_AS(enhance_contrast(img, 4, 0.5), Error);
}

TEST_CASE("contrast clip limit bounds the mapping slope") {
    // One tile, 256 pixels: values 0..255 once each except a heavy spike at 128.
    Image img(16, 16);
    for (int i = 0; i < 256; ++i) img.pixels()[i] = static_cast<std::uint8_t>(i < 128 ? 128 : i);
    const auto loose = enhance_contrast(img, 1, std::numeric_limits<double>::infinity());
    const auto tight = enhance_contrast(img, 1, 1.0);
    // 129 pixels share bin 128. Unclipped: 255 * 129 / 256 = 128.496 -> 128.
    // Clipped at 1 per bin the excess 128 spreads as 0.5 per bin:
    // cdf(128) = 128 * 0.5 + 1.5 = 65.5 -> 255 * 65.5 / 256 = 65.2 -> 65.
    CHECK(loose.at(0, 0) == 128);
    CHECK(tight.at(0, 0) == 65);
}

TEST_CASE("low light modes") {
    CHECK(parse_low_light_mode("off") == LowLightMode::Off);
    CHECK(parse_low_light_mode("auto") == LowLightMode::Auto);
    CHECK(parse_low_light_mode("on") == LowLightMode::On);
    CHECK_THROWS_AS(parse_low_light_mode("dim"), Error);
    CHECK(std::string(to_string(LowLightMode::Auto)) == "auto");
}

TEST_CASE("preprocess stage order and threshold rule") {
    Rng rng(8);
    auto rgb = test::random_image(rng, 48, 40, 3);
    for (auto& p : rgb.pixels()) p = static_cast<std::uint8_t>(p / 6);  // dark

    PreprocessConfig cfg;
    cfg.low_light_mode = LowLightMode::On;
    const auto expected = enhance_contrast(denoise(to_grayscale(rgb), cfg.denoise_spatial_sigma, cfg.denoise_range_sigma),
                                           cfg.contrast_tiles, cfg.contrast_clip_limit);
    CHECK(preprocess(rgb, cfg) == expected);

    Image bright(32, 32, 1, 200);
    for (int i = 0; i < 32; ++i) bright.at(i, i) = 190;
    cfg.low_light_mode = LowLightMode::Auto;
    CHECK(preprocess(bright, cfg) == denoise(bright, cfg.denoise_spatial_sigma, cfg.denoise_range_sigma));

    cfg.low_light_mode = LowLightMode::Off;
    const auto dark_gray = to_grayscale(rgb);
    CHECK(preprocess(rgb, cfg) == denoise(dark_gray, cfg.denoise_spatial_sigma, cfg.denoise_range_sigma));
}

TEST_CASE("preprocess stretches a dark noisy frame") {
    Rng rng(10);
    Image dark(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const double base = (x - 32) * (x - 32) + (y - 32) * (y - 32) < 400 ? 40.0 : 15.0;
            dark.at(x, y) = static_cast<std::uint8_t>(std::clamp(base + 4.0 * rng.normal(), 0.0, 255.0));
        }
    const auto out = preprocess(dark, PreprocessConfig{});
    CHECK(intensity_stddev(out) > intensity_stddev(dark));
    CHECK(mean_intensity(dark) < 60.0);
}

TEST_CASE("crop") {
    Rng rng(11);
    const auto img = test::random_image(rng, 10, 8);
    const auto c = crop(img, {2, 3, 4, 2});
    CHECK(c.width() == 4);
    CHECK(c.at(0, 0) == img.at(2, 3));
    CHECK(c.at(3, 1) == img.at(5, 4));
    CHECK_THROWS_AS(crop(img, {8, 0, 4, 2}), Error);
}
