#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drowsy/classifier.hpp"
#include "drowsy/dataset.hpp"
#include "drowsy/detector.hpp"
#include "drowsy/fatigue.hpp"
#include "drowsy/features.hpp"
#include "drowsy/imaging.hpp"

namespace drowsy {

/// Every tunable of the pipeline. Text form is `key = value` lines with '#'
/// comments; format_config writes every key with its current value.
struct PipelineConfig {
    PreprocessConfig preprocess;

    bool detector_enabled = false;
    std::string cascade_file;
    ScanConfig scan;

    RoiGeometry geometry;

    std::size_t pca_k = 0;  // 0: choose k from pca_variance
    double pca_variance = 0.95;

    double svm_c = 1.0;
    KernelKind svm_kernel = KernelKind::Rbf;
    std::optional<double> svm_gamma;  // empty: 1 / (k * var) of the projected training data
    double svm_tol = 1e-3;
    int svm_max_passes = 200;

    int folds = 5;
    std::uint64_t seed = 42;

    AlertConfig alert;
    bool treat_no_face_as_fatigued = false;

    PcaTarget pca_target() const;
};

PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string format_config(const PipelineConfig& config);
/// Applies one `key=value` assignment; throws InvalidArgument for unknown keys or bad values.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

/// Preprocessing, face localization and ROI features for single frames.
struct FeatureExtractor {
    PreprocessConfig preprocess;
    std::optional<Cascade> cascade;
    ScanConfig scan;
    RoiGeometry geometry;

    /// Empty when a detector is configured and finds no face. Without a
    /// detector the `hint` box (or the whole frame) is used.
    std::optional<std::vector<double>> operator()(const Image& frame, const std::optional<Rect>& hint) const;

    /// Largest detected face on an already preprocessed frame.
    std::optional<Rect> locate(const Image& gray, const std::optional<Rect>& hint) const;
};

struct PipelineModel {
    static constexpr int kVersion = 1;

    std::optional<Cascade> cascade;
    ScanConfig scan;
    RoiGeometry geometry;
    PreprocessConfig preprocess;
    PcaModel pca;
    SvmModel svm;

    FeatureExtractor extractor() const { return {preprocess, cascade, scan, geometry}; }
    /// Throws ModelMismatch unless the sub-models chain together.
    void check() const;
};

std::string save_pipeline(const PipelineModel& model);
PipelineModel load_pipeline(std::string_view text);

struct FitResult {
    PipelineModel model;
    std::size_t used = 0;
    std::size_t skipped = 0;
    double training_accuracy = 0.0;
    std::vector<std::string> warnings;
};

/// Extracted feature rows for a dataset, with the records they came from.
struct FeatureSet {
    Matrix features;
    std::vector<ClassLabel> labels;
    std::vector<std::string> groups;
    std::vector<std::size_t> source;  // dataset index of every row
    std::vector<std::string> warnings;
};

FeatureSet extract_features(const Dataset& dataset, const FeatureExtractor& extractor);

/// preprocess -> locate face -> ROIs -> PCA -> SVM over the whole dataset.
FitResult fit_pipeline(const Dataset& dataset, const PipelineConfig& config,
                       const std::optional<Cascade>& cascade = std::nullopt);

struct FrameInput {
    Image image;
    std::optional<Rect> hint;
};

struct InferenceResult {
    Trace trace;
    std::vector<std::optional<ClassLabel>> labels;  // empty entries are skipped frames
};

/// Per frame: features -> SVM -> alert unit. Frames without a face leave r
/// unchanged unless `treat_no_face_as_fatigued`.
InferenceResult infer_stream(const PipelineModel& model, const std::vector<FrameInput>& frames,
                             const AlertConfig& alert, bool treat_no_face_as_fatigued = false);

InferenceResult infer_dataset(const PipelineModel& model, const Dataset& dataset, const AlertConfig& alert,
                              bool treat_no_face_as_fatigued = false);

struct MetricsReport {
    std::size_t n = 0;
    std::size_t skipped = 0;
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    Confusion confusion;
    std::vector<double> fold_accuracy;
    double mean_fold_accuracy = 0.0;
    std::optional<double> mean_detection_latency;  // ticks from a simulated onset to the first alarm
    std::size_t onsets = 0;
};

/// Cross-validates the model's SVM settings (C and kernel; `solver` supplies
/// tol and max_passes) on features projected with the model's PCA. Folds are
/// group-aware when every record carries a group.
MetricsReport evaluate(const PipelineModel& model, const Dataset& dataset, int folds, std::uint64_t seed,
                       const SvmParams& solver = {}, const AlertConfig& alert = {},
                       const FoldObserver& observer = {});

/// Onset latency from out-of-fold predictions: each onset replays 20 alert
/// predictions followed by 30 fatigued ones and counts the fatigued ticks
/// until the alert unit leaves Idle.
std::optional<double> onset_latency(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted,
                                    const AlertConfig& alert, std::size_t* onsets = nullptr);

std::string format_metrics(const MetricsReport& report);

}  // namespace drowsy
