#include <fstream>
#include <sstream>

#include "drowsy/error.hpp"
#include "drowsy/pipeline.hpp"
#include "drowsy/text_format.hpp"

namespace drowsy {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
    throw Error(ErrorCode::InvalidArgument, "bad value '" + std::string(value) + "' for " + std::string(key));
}

double real_value(std::string_view key, std::string_view value) {
    try {
        return parse_real(value, 0);
    } catch (const Error&) {
        bad_value(key, value);
    }
}

long long int_value(std::string_view key, std::string_view value) {
    try {
        return parse_integer(value, 0);
    } catch (const Error&) {
        bad_value(key, value);
    }
}

bool bool_value(std::string_view key, std::string_view value) {
    if (value == "true" || value == "on" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "off" || value == "0" || value == "no") return false;
    bad_value(key, value);
}

Rect rect_value(std::string_view key, std::string_view value) {
    const auto parts = split_ws(value);
    if (parts.size() != 4) bad_value(key, value);
    return Rect{static_cast<int>(int_value(key, parts[0])), static_cast<int>(int_value(key, parts[1])),
                static_cast<int>(int_value(key, parts[2])), static_cast<int>(int_value(key, parts[3]))};
}

std::string rect_text(const Rect& r) {
    return std::to_string(r.x) + " " + std::to_string(r.y) + " " + std::to_string(r.w) + " " + std::to_string(r.h);
}

}  // namespace

PcaTarget PipelineConfig::pca_target() const {
    return pca_k > 0 ? PcaTarget::components(pca_k) : PcaTarget::variance(pca_variance);
}

void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
    const std::string v = trim(value);
    if (key == "low_light_mode") c.preprocess.low_light_mode = parse_low_light_mode(v);
    else if (key == "low_light_threshold") c.preprocess.low_light_threshold = real_value(key, v);
    else if (key == "denoise_spatial_sigma") c.preprocess.denoise_spatial_sigma = real_value(key, v);
    else if (key == "denoise_range_sigma") c.preprocess.denoise_range_sigma = real_value(key, v);
    else if (key == "contrast_tiles") c.preprocess.contrast_tiles = static_cast<int>(int_value(key, v));
    else if (key == "contrast_clip_limit") c.preprocess.contrast_clip_limit = real_value(key, v);
    else if (key == "detector") c.detector_enabled = bool_value(key, v);
    else if (key == "cascade_file") c.cascade_file = v;
    else if (key == "scale_factor") c.scan.scale_factor = real_value(key, v);
    else if (key == "step_frac") c.scan.step_frac = real_value(key, v);
    else if (key == "group_iou") c.scan.group_iou = real_value(key, v);
    else if (key == "min_neighbors") c.scan.min_neighbors = static_cast<int>(int_value(key, v));
    else if (key == "face_side") c.geometry.face_side = static_cast<int>(int_value(key, v));
    else if (key == "eye_rect") c.geometry.eye = rect_value(key, v);
    else if (key == "mouth_rect") c.geometry.mouth = rect_value(key, v);
    else if (key == "pca_k") {
        const auto k = int_value(key, v);
        if (k < 0) bad_value(key, v);
        c.pca_k = static_cast<std::size_t>(k);
    } else if (key == "pca_variance") c.pca_variance = real_value(key, v);
    else if (key == "svm_c") c.svm_c = real_value(key, v);
    else if (key == "svm_kernel") {
        if (v == "linear") c.svm_kernel = KernelKind::Linear;
        else if (v == "rbf") c.svm_kernel = KernelKind::Rbf;
        else bad_value(key, v);
    } else if (key == "svm_gamma") {
        if (v == "auto") c.svm_gamma.reset();
        else c.svm_gamma = real_value(key, v);
    } else if (key == "svm_tol") c.svm_tol = real_value(key, v);
    else if (key == "svm_max_passes") c.svm_max_passes = static_cast<int>(int_value(key, v));
    else if (key == "folds") c.folds = static_cast<int>(int_value(key, v));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(int_value(key, v));
    else if (key == "t_low") c.alert.t_low = int_value(key, v);
    else if (key == "t_high") c.alert.t_high = int_value(key, v);
    else if (key == "alarm_duration") c.alert.alarm_duration = real_value(key, v);
    else if (key == "high_persist") c.alert.high_persist = real_value(key, v);
    else if (key == "water_spray") c.alert.water_spray_enabled = bool_value(key, v);
    else if (key == "sample_period") c.alert.sample_period = real_value(key, v);
    else if (key == "realarm_on_recheck") c.alert.realarm_on_recheck = bool_value(key, v);
    else if (key == "treat_no_face_as_fatigued") c.treat_no_face_as_fatigued = bool_value(key, v);
    else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::string_view text) {
    PipelineConfig config;
    LineReader reader(text);
    while (!reader.at_end()) {
        std::string_view line = reader.next("config line");
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(reader.line_number()) + ": expected key = value");
        try {
            set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(reader.line_number()) + ": " + e.what());
        }
    }
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string format_config(const PipelineConfig& c) {
    std::ostringstream out;
    out << "# preprocessing\n"
        << "low_light_mode = " << to_string(c.preprocess.low_light_mode) << '\n'
        << "low_light_threshold = " << format_real(c.preprocess.low_light_threshold) << '\n'
        << "denoise_spatial_sigma = " << format_real(c.preprocess.denoise_spatial_sigma) << '\n'
        << "denoise_range_sigma = " << format_real(c.preprocess.denoise_range_sigma) << '\n'
        << "contrast_tiles = " << c.preprocess.contrast_tiles << '\n'
        << "contrast_clip_limit = " << format_real(c.preprocess.contrast_clip_limit) << '\n'
        << "\n# face detection\n"
        << "detector = " << (c.detector_enabled ? "on" : "off") << '\n'
        << "cascade_file = " << c.cascade_file << '\n'
        << "scale_factor = " << format_real(c.scan.scale_factor) << '\n'
        << "step_frac = " << format_real(c.scan.step_frac) << '\n'
        << "group_iou = " << format_real(c.scan.group_iou) << '\n'
        << "min_neighbors = " << c.scan.min_neighbors << '\n'
        << "\n# eye and mouth windows on the normalized face (x y w h)\n"
        << "face_side = " << c.geometry.face_side << '\n'
        << "eye_rect = " << rect_text(c.geometry.eye) << '\n'
        << "mouth_rect = " << rect_text(c.geometry.mouth) << '\n'
        << "\n# PCA (pca_k = 0 selects k by retained variance)\n"
        << "pca_k = " << c.pca_k << '\n'
        << "pca_variance = " << format_real(c.pca_variance) << '\n'
        << "\n# SVM\n"
        << "svm_c = " << format_real(c.svm_c) << '\n'
        << "svm_kernel = " << (c.svm_kernel == KernelKind::Linear ? "linear" : "rbf") << '\n'
        << "svm_gamma = " << (c.svm_gamma ? format_real(*c.svm_gamma) : std::string("auto")) << '\n'
        << "svm_tol = " << format_real(c.svm_tol) << '\n'
        << "svm_max_passes = " << c.svm_max_passes << '\n'
        << "\n# evaluation\n"
        << "folds = " << c.folds << '\n'
        << "seed = " << c.seed << '\n'
        << "\n# alert unit\n"
        << "t_low = " << c.alert.t_low << '\n'
        << "t_high = " << c.alert.t_high << '\n'
        << "alarm_duration = " << format_real(c.alert.alarm_duration) << '\n'
        << "high_persist = " << format_real(c.alert.high_persist) << '\n'
        << "water_spray = " << (c.alert.water_spray_enabled ? "true" : "false") << '\n'
        << "sample_period = " << format_real(c.alert.sample_period) << '\n'
        << "realarm_on_recheck = " << (c.alert.realarm_on_recheck ? "true" : "false") << '\n'
        << "treat_no_face_as_fatigued = " << (c.treat_no_face_as_fatigued ? "true" : "false") << '\n';
    return out.str();
}

}  // namespace drowsy
