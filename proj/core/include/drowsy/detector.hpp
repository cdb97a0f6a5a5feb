#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drowsy/image.hpp"

namespace drowsy {

// Viola-Jones style face detection: Haar features over integral images,
// boosted stages of decision stumps, an attentional cascade and a
// multi-scale sliding-window scan.

enum class HaarKind { TwoHorizontal, TwoVertical, ThreeHorizontal, ThreeVertical, Four };

const char* haar_token(HaarKind kind) noexcept;  // "2H", "2V", "3H", "3V", "4"
std::optional<HaarKind> parse_haar_token(std::string_view token) noexcept;

/// A Haar-like feature placed inside the base detection window.
///
/// Sub-rectangle weights: 2H left +1 / right -1, 2V top +1 / bottom -1,
/// 3H and 3V outer +1 / middle -2, 4 diagonal: top-left and bottom-right +1,
/// the other two -1. Weighted areas cancel, so a constant window scores 0.
struct HaarFeature {
    HaarKind kind = HaarKind::TwoHorizontal;
    Rect rect;

    bool operator==(const HaarFeature&) const = default;
};

/// Throws InvalidArgument unless the feature's rect divides evenly for its kind.
void validate_feature(const HaarFeature& feature);

struct WeakClassifier {
    HaarFeature feature;
    double threshold = 0.0;
    int polarity = 1;  // +1: value >= threshold votes face; -1: value < threshold votes face

    bool votes_face(double value) const noexcept { return polarity > 0 ? value >= threshold : value < threshold; }
    bool operator==(const WeakClassifier&) const = default;
};

struct WeightedWeak {
    WeakClassifier classifier;
    double alpha = 0.0;

    bool operator==(const WeightedWeak&) const = default;
};

class Stage {
public:
    Stage(std::vector<WeightedWeak> weak, double threshold);

    const std::vector<WeightedWeak>& weak() const noexcept { return weak_; }
    double threshold() const noexcept { return threshold_; }
    double alpha_sum() const noexcept;

    bool operator==(const Stage&) const = default;

private:
    std::vector<WeightedWeak> weak_;
    double threshold_;
};

class Cascade {
public:
    Cascade(Size base, std::vector<Stage> stages);

    Size base() const noexcept { return base_; }
    const std::vector<Stage>& stages() const noexcept { return stages_; }

    bool operator==(const Cascade&) const = default;

private:
    Size base_;
    std::vector<Stage> stages_;
};

struct FaceBox {
    Rect box;
    int score = 1;  // number of raw detections merged into this box

    bool operator==(const FaceBox&) const = default;
};

// ---- feature evaluation ----------------------------------------------------

/// Population standard deviation of the pixels under `window`, floored at 1.
double window_stddev(const IntegralImage& ii, const Rect& window);

/// Weighted sub-rectangle difference of `feature` after scaling by `scale`
/// and translating to `origin`. Each sub-rectangle sum is renormalized by
/// base_area / scaled_area so responses are comparable across scales.
/// Scaled sub-rectangles are kept inside the scaled window of size `base`.
/// Throws OutOfBounds.
double feature_response(const IntegralImage& ii, const HaarFeature& feature, Point origin, double scale, Size base);

/// feature_response divided by the standard deviation of the scaled window
/// whose unscaled size is `base`.
double eval_feature(const IntegralImage& ii, const HaarFeature& feature, Point origin, double scale, Size base);

/// Side of the base window after scaling, as used by both scanning and evaluation.
Size scaled_window(Size base, double scale) noexcept;

/// All features of every kind on a regular grid (positions and sizes in
/// multiples of `grid_step`) inside a base window.
std::vector<HaarFeature> make_feature_pool(Size base, int grid_step = 2);

// ---- training ---------------------------------------------------------------

struct StumpFit {
    double threshold = 0.0;
    int polarity = 1;
    double weighted_error = 0.0;
};

/// Best decision stump over one feature's values. Candidate thresholds are
/// -inf, midpoints of consecutive distinct values, +inf; ties go to the
/// smallest threshold, then polarity +1. Labels are +1 (face) / -1.
StumpFit train_weak(std::span<const double> values, std::span<const int> labels, std::span<const double> weights);

struct StageTrainConfig {
    int rounds = 10;
    double target_detection_rate = 0.995;
};

/// Per-round record of a stage's boosting run.
struct BoostingLog {
    std::vector<double> errors;                 // weighted error of the chosen stump (unclamped)
    std::vector<double> alphas;
    std::vector<std::vector<double>> weights;   // normalized weights used in each round
    double initial_threshold = 0.0;             // half the alpha sum, before lowering
};

/// Discrete AdaBoost over `pool`. Samples are integral images of base-size
/// windows. Initial weights are 1/(2P) for positives and 1/(2N) for negatives.
Stage train_stage(std::span<const IntegralImage> positives, std::span<const IntegralImage> negatives,
                  std::span<const HaarFeature> pool, const StageTrainConfig& config, BoostingLog* log = nullptr);

/// Produces candidate negative windows (base-size integral images); empty when exhausted.
using NegativeSource = std::function<std::optional<IntegralImage>()>;

struct CascadeTrainConfig {
    Size base{24, 24};
    std::vector<int> rounds_per_stage{10, 40};
    double target_detection_rate = 0.995;
    std::size_t negatives_per_stage = 400;
    std::size_t max_negative_draws = 200000;
    int grid_step = 2;
};

/// Trains stages in order; each stage sees only negatives that all earlier
/// stages accept. Stops early when no such negatives can be found.
Cascade train_cascade(std::span<const IntegralImage> positives, const NegativeSource& negatives,
                      const CascadeTrainConfig& config);

// ---- detection --------------------------------------------------------------

struct CascadeStats {
    std::size_t windows = 0;
    std::size_t stage_evaluations = 0;
};

/// Sum of alphas of the stage's weak classifiers voting face; `inv_std` is
/// the reciprocal of the window's floored standard deviation.
double stage_score(const IntegralImage& ii, const Stage& stage, Point origin, double scale, Size base, double inv_std);

/// True iff every stage accepts the window; stops at the first rejecting stage.
bool classify_window(const IntegralImage& ii, const Cascade& cascade, Point origin, double scale,
                     CascadeStats* stats = nullptr);

struct ScanConfig {
    double scale_factor = 1.25;
    double step_frac = 0.08;
    double group_iou = 0.3;
    int min_neighbors = 3;

    bool operator==(const ScanConfig&) const = default;
};

/// Raw (ungrouped) accepted windows over all scales.
std::vector<Rect> scan_windows(const Image& gray, const Cascade& cascade, const ScanConfig& config,
                               CascadeStats* stats = nullptr);

/// Groups overlapping rectangles; see detect for the rule.
std::vector<FaceBox> group_detections(std::vector<Rect> raw, double group_iou, int min_neighbors);

/// Multi-scale detection: windows grouped by overlap, small groups dropped,
/// each surviving group reported as its mean box, sorted by (y, x).
std::vector<FaceBox> detect(const Image& gray, const Cascade& cascade, const ScanConfig& config = {},
                            CascadeStats* stats = nullptr);

// ---- CASCADE1 text format ---------------------------------------------------

std::string save_cascade(const Cascade& cascade);
Cascade load_cascade(std::string_view text);

}  // namespace drowsy
