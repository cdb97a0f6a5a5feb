#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drowsy/classifier.hpp"
#include "drowsy/image.hpp"

namespace drowsy {

// ---- procedural faces ---------------------------------------------------------

enum class FatigueSign { EyesClosed, Yawn, Both };
enum class AlertExpression { Neutral, Talking };

/// Appearance of one rendered face. Geometry is expressed on a 0..100 grid
/// over the face box, matching the normalized face the features read.
struct FaceParams {
    bool fatigued = false;
    FatigueSign sign = FatigueSign::EyesClosed;
    AlertExpression expression = AlertExpression::Neutral;
    double skin = 185.0;
    double eye_offset = 0.0;  // horizontal shift of both eyes away from the centre line
    double eye_scale = 1.0;
};

struct FaceInstance {
    Rect box;
    FaceParams params;
};

enum class LightLevel { Normal, Dim };

struct SceneSpec {
    Size frame{160, 160};
    double background = 40.0;
    double noise_sigma = 8.0;
    LightLevel light = LightLevel::Normal;
};

/// Draws head ellipses with eyes and mouth on a dark background, dims the
/// scene when requested, then adds Gaussian noise and clamps to [0, 255].
Image render_scene(const SceneSpec& scene, const std::vector<FaceInstance>& faces, std::uint64_t noise_seed);

/// Random appearance for the given class drawn from `seed`.
FaceParams random_face(bool fatigued, std::uint64_t seed);

enum class FrameOrder { Shuffled, Onset };

struct SyntheticSpec {
    int frame_w = 160;
    int frame_h = 160;
    int n_frames = 400;
    double fraction_fatigued = 0.5;
    int jitter = 8;
    double noise_sigma = 8.0;
    LightLevel light = LightLevel::Normal;
    std::uint64_t seed = 1;
    int subjects = 10;
    FrameOrder order = FrameOrder::Shuffled;  // Onset: all alert frames first, then fatigued

    /// Throws InvalidArgument on out-of-range fields.
    void validate() const;
};

struct SyntheticFrame {
    Image image;
    ClassLabel label;
    std::string group;
    Rect box;
    FaceParams face;
};

/// Frame `index` of the dataset described by `spec`; depends only on (spec, index).
SyntheticFrame synth_frame(const SyntheticSpec& spec, int index);

// ---- manifests ----------------------------------------------------------------

struct DatasetRecord {
    std::filesystem::path path;
    ClassLabel label = ClassLabel::Alert;
    std::string group;
    std::optional<Rect> box;
};

using Dataset = std::vector<DatasetRecord>;

/// Renders every frame of `spec` into `dir` as PGM and writes
/// `dir/manifest.csv` (path,label,group,box_x,box_y,box_w,box_h).
/// Returns the manifest path.
std::filesystem::path synth_generate(const SyntheticSpec& spec, const std::filesystem::path& dir);

/// Reads `path,label[,group[,box_x,box_y,box_w,box_h]]` records. A first line
/// whose label is not numeric is a header. Paths resolve against the
/// manifest's directory.
Dataset ingest(const std::filesystem::path& manifest_path);

void write_manifest(const Dataset& dataset, const std::filesystem::path& manifest_path);

}  // namespace drowsy
