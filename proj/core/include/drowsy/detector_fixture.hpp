#pragma once

#include <cstdint>
#include <vector>

#include "drowsy/detector.hpp"
#include "drowsy/imaging.hpp"

namespace drowsy {

// Synthetic face-vs-background data for training and scoring the cascade:
// frames with one face of random size and position among random clutter,
// plus face-free frames for negatives.

struct DetectorFixtureSpec {
    Size frame{160, 160};
    int min_face = 40;
    int max_face = 110;
    double noise_sigma = 8.0;
    int clutter = 6;  // distractor shapes per frame
    std::size_t positives = 300;
    std::size_t negative_frames = 60;
    PreprocessConfig preprocess;
    std::uint64_t seed = 7;

    void validate() const;
};

struct FixtureFrame {
    Image gray;  // preprocessed
    std::optional<Rect> face;
};

/// Frame `index` of the fixture; deterministic in (spec, index). Frames with
/// `with_face == false` contain clutter only.
FixtureFrame fixture_frame(const DetectorFixtureSpec& spec, std::uint64_t index, bool with_face);

/// Base-size windows cut around the true face of frames 0..positives-1 with
/// a little position and scale jitter.
std::vector<IntegralImage> fixture_positives(const DetectorFixtureSpec& spec, Size base);

/// Endless stream of base-size windows from face-free frames and from face
/// frames away from the face (overlap < 0.25).
NegativeSource fixture_negatives(const DetectorFixtureSpec& spec, Size base);

/// True when `found` overlaps `truth` with IoU >= 0.5.
bool detection_matches(const Rect& found, const Rect& truth) noexcept;

struct DetectorScore {
    std::size_t frames = 0;
    std::size_t detected = 0;
    std::size_t false_positives = 0;
    std::size_t max_false_positives = 0;  // worst single frame

    double detection_rate() const noexcept { return frames ? static_cast<double>(detected) / frames : 0.0; }
    double false_positives_per_frame() const noexcept {
        return frames ? static_cast<double>(false_positives) / frames : 0.0;
    }
};

/// Runs detect on `count` face frames starting at `first_index`. A frame
/// counts as detected when some box matches its face; every other box is a
/// false positive.
DetectorScore evaluate_detector(const Cascade& cascade, const DetectorFixtureSpec& spec, std::uint64_t first_index,
                                std::size_t count, const ScanConfig& scan = {});

}  // namespace drowsy
