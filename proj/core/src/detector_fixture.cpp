#include "drowsy/detector_fixture.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "drowsy/dataset.hpp"
#include "drowsy/error.hpp"
#include "drowsy/random.hpp"

namespace drowsy {

namespace {

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

int uniform_int(Rng& rng, int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Flat rectangles and ellipses of random gray levels kept clear of the face.
void draw_clutter(Image& img, Rng& rng, int count, const std::optional<Rect>& face, double noise_sigma) {
    for (int n = 0; n < count; ++n) {
        const int w = uniform_int(rng, 8, img.width() / 2);
        const int h = uniform_int(rng, 8, img.height() / 2);
        const int x = uniform_int(rng, 0, img.width() - w);
        const int y = uniform_int(rng, 0, img.height() - h);
        const bool ellipse = rng.below(2) == 1;
        const double level = rng.uniform(20.0, 230.0);
        const Rect r{x, y, w, h};
        if (face) {
            const bool apart = r.x + r.w <= face->x || face->x + face->w <= r.x || r.y + r.h <= face->y ||
                               face->y + face->h <= r.y;
            if (!apart) continue;
        }
        const double cx = x + w / 2.0, cy = y + h / 2.0;
        for (int yy = y; yy < y + h; ++yy)
            for (int xx = x; xx < x + w; ++xx) {
                if (ellipse) {
                    const double u = (xx + 0.5 - cx) / (w / 2.0), v = (yy + 0.5 - cy) / (h / 2.0);
                    if (u * u + v * v > 1.0) continue;
                }
                const double value = level + noise_sigma * rng.normal();
                img.at(xx, yy) = static_cast<std::uint8_t>(std::clamp(std::floor(value + 0.5), 0.0, 255.0));
            }
    }
}

IntegralImage window_sample(const Image& gray, const Rect& r, Size base) {
    return IntegralImage(resize_bilinear(crop(gray, r), base.w, base.h));
}

}  // namespace

void DetectorFixtureSpec::validate() const {
    if (frame.w < 48 || frame.h < 48) throw Error(ErrorCode::InvalidArgument, "fixture frames must be at least 48x48");
    if (min_face < 24 || max_face < min_face || max_face > std::min(frame.w, frame.h))
        throw Error(ErrorCode::InvalidArgument, "face size range must lie in [24, frame side]");
    if (noise_sigma < 0.0 || clutter < 0) throw Error(ErrorCode::InvalidArgument, "negative noise or clutter");
    if (positives == 0 || negative_frames == 0)
        throw Error(ErrorCode::InvalidArgument, "fixture needs positives and negative frames");
}

FixtureFrame fixture_frame(const DetectorFixtureSpec& spec, std::uint64_t index, bool with_face) {
    Rng rng(derive(spec.seed, index, with_face ? 1 : 2));
    SceneSpec scene;
    scene.frame = spec.frame;
    scene.noise_sigma = spec.noise_sigma;
    scene.background = rng.uniform(25.0, 70.0);

    std::vector<FaceInstance> faces;
    std::optional<Rect> box;
    if (with_face) {
        const int side = uniform_int(rng, spec.min_face, spec.max_face);
        box = Rect{uniform_int(rng, 0, spec.frame.w - side), uniform_int(rng, 0, spec.frame.h - side), side, side};
        faces.push_back({*box, random_face(rng.below(2) == 1, rng.next())});
    }
    Image img = render_scene(scene, faces, rng.next());
    draw_clutter(img, rng, spec.clutter, box, spec.noise_sigma);
    return {preprocess(img, spec.preprocess), box};
}

std::vector<IntegralImage> fixture_positives(const DetectorFixtureSpec& spec, Size base) {
    spec.validate();
    std::vector<IntegralImage> out;
    out.reserve(spec.positives);
    for (std::size_t i = 0; i < spec.positives; ++i) {
        const auto frame = fixture_frame(spec, i, true);
        Rng rng(derive(spec.seed, i, 3));
        const Rect& f = *frame.face;
        const double s = rng.uniform(0.9, 1.1);
        const int side = std::max(base.w, static_cast<int>(std::lround(f.w * s)));
        const int jitter = std::max(1, f.w / 12);
        int x = f.x + (f.w - side) / 2 + uniform_int(rng, -jitter, jitter);
        int y = f.y + (f.h - side) / 2 + uniform_int(rng, -jitter, jitter);
        x = std::clamp(x, 0, frame.gray.width() - side);
        y = std::clamp(y, 0, frame.gray.height() - side);
        out.push_back(window_sample(frame.gray, {x, y, side, side}, base));
    }
    return out;
}

NegativeSource fixture_negatives(const DetectorFixtureSpec& spec, Size base) {
    spec.validate();
    // Negative frames live past the positive index range; half carry a face.
    auto frames = std::make_shared<std::vector<FixtureFrame>>();
    for (std::size_t i = 0; i < spec.negative_frames; ++i)
        frames->push_back(fixture_frame(spec, 1000000 + i, i % 2 == 1));
    auto rng = std::make_shared<Rng>(derive(spec.seed, 0, 4));
    return [frames, rng, base]() -> std::optional<IntegralImage> {
        for (;;) {
            const auto& fr = (*frames)[rng->below(frames->size())];
            const int max_side = std::min(fr.gray.width(), fr.gray.height());
            const int side = uniform_int(*rng, base.w, max_side);
            const Rect r{uniform_int(*rng, 0, fr.gray.width() - side), uniform_int(*rng, 0, fr.gray.height() - side),
                         side, side};
            if (fr.face && overlap_ratio(r, *fr.face) >= 0.25) continue;
            return window_sample(fr.gray, r, base);
        }
    };
}

bool detection_matches(const Rect& found, const Rect& truth) noexcept { return overlap_ratio(found, truth) >= 0.5; }

DetectorScore evaluate_detector(const Cascade& cascade, const DetectorFixtureSpec& spec, std::uint64_t first_index,
                                std::size_t count, const ScanConfig& scan) {
    DetectorScore score;
    for (std::size_t i = 0; i < count; ++i) {
        const auto frame = fixture_frame(spec, first_index + i, true);
        const auto boxes = detect(frame.gray, cascade, scan);
        bool hit = false;
        std::size_t fp = 0;
        for (const auto& b : boxes) {
            if (!hit && detection_matches(b.box, *frame.face))
                hit = true;
            else
                ++fp;
        }
        ++score.frames;
        if (hit) ++score.detected;
        score.false_positives += fp;
        score.max_false_positives = std::max(score.max_false_positives, fp);
    }
    return score;
}

}  // namespace drowsy
