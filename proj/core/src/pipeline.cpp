#include "drowsy/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "drowsy/error.hpp"
#include "drowsy/text_format.hpp"

namespace drowsy {

// ---- feature extraction -----------------------------------------------------

std::optional<Rect> FeatureExtractor::locate(const Image& gray, const std::optional<Rect>& hint) const {
    const Rect frame{0, 0, gray.width(), gray.height()};
    if (!cascade) {
        if (!hint) return frame;
        // clip the hint to the frame
        const int x0 = std::max(hint->x, 0);
        const int y0 = std::max(hint->y, 0);
        const int x1 = std::min(hint->x + hint->w, gray.width());
        const int y1 = std::min(hint->y + hint->h, gray.height());
        if (x1 <= x0 || y1 <= y0) return std::nullopt;
        return Rect{x0, y0, x1 - x0, y1 - y0};
    }
    if (gray.width() < cascade->base().w || gray.height() < cascade->base().h) return std::nullopt;
    const auto faces = detect(gray, *cascade, scan);
    if (faces.empty()) return std::nullopt;
    const FaceBox* best = &faces.front();
    for (const auto& f : faces)
        if (f.box.area() > best->box.area()) best = &f;
    return best->box;
}

std::optional<std::vector<double>> FeatureExtractor::operator()(const Image& frame,
                                                                const std::optional<Rect>& hint) const {
    const Image gray = drowsy::preprocess(frame, preprocess);
    const auto box = locate(gray, hint);
    if (!box) return std::nullopt;
    return face_features(gray, *box, geometry);
}

FeatureSet extract_features(const Dataset& dataset, const FeatureExtractor& extractor) {
    FeatureSet out;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& rec = dataset[i];
        auto v = extractor(read_pnm_file(rec.path), rec.box);
        if (!v) {
            out.warnings.push_back("no face found in " + rec.path.string() + ", frame skipped");
            continue;
        }
        rows.push_back(std::move(*v));
        out.labels.push_back(rec.label);
        out.groups.push_back(rec.group);
        out.source.push_back(i);
    }
    if (!rows.empty()) out.features = Matrix::from_rows(rows);
    return out;
}

// ---- model ------------------------------------------------------------------

void PipelineModel::check() const {
    if (pca.dim() != geometry.feature_length())
        throw Error(ErrorCode::ModelMismatch, "PCA input dimension " + std::to_string(pca.dim()) +
                                                  " does not match ROI feature length " +
                                                  std::to_string(geometry.feature_length()));
    if (svm.dim() != pca.k())
        throw Error(ErrorCode::ModelMismatch, "SVM input dimension " + std::to_string(svm.dim()) +
                                                  " does not match PCA k " + std::to_string(pca.k()));
}

namespace {

std::size_t count_lines(std::string_view text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

void write_section(std::ostringstream& out, std::string_view name, std::string body) {
    if (!body.empty() && body.back() != '\n') body.push_back('\n');
    out << "SECTION " << name << ' ' << count_lines(body) << '\n' << body;
}

std::string rect_text(const Rect& r) {
    return std::to_string(r.x) + ' ' + std::to_string(r.y) + ' ' + std::to_string(r.w) + ' ' + std::to_string(r.h);
}

struct Section {
    std::string name;
    std::string body;
    std::size_t first_line = 0;
};

// key/value lines of a small section
struct Fields {
    std::vector<std::pair<std::string, std::vector<std::string>>> entries;
    std::size_t first_line = 0;
    std::string section;

    const std::vector<std::string>& get(std::string_view key, std::size_t arity) const {
        for (const auto& [k, v] : entries)
            if (k == key) {
                if (v.size() != arity)
                    throw Error(ErrorCode::ParseError, "section " + section + ": wrong number of values for " + k);
                return v;
            }
        throw Error(ErrorCode::ParseError, "section " + section + ": missing key " + std::string(key));
    }
    double real(std::string_view key) const { return parse_real(get(key, 1)[0], first_line); }
    long long integer(std::string_view key) const { return parse_integer(get(key, 1)[0], first_line); }
    Rect rect(std::string_view key) const {
        const auto& v = get(key, 4);
        return Rect{static_cast<int>(parse_integer(v[0], first_line)), static_cast<int>(parse_integer(v[1], first_line)),
                    static_cast<int>(parse_integer(v[2], first_line)), static_cast<int>(parse_integer(v[3], first_line))};
    }
};

Fields parse_fields(const Section& s) {
    Fields f;
    f.first_line = s.first_line;
    f.section = s.name;
    LineReader reader(s.body);
    while (!reader.at_end()) {
        const auto tokens = split_ws(reader.next("field"));
        if (tokens.empty()) continue;
        std::vector<std::string> values(tokens.begin() + 1, tokens.end());
        f.entries.emplace_back(std::string(tokens[0]), std::move(values));
    }
    return f;
}

}  // namespace

std::string save_pipeline(const PipelineModel& model) {
    model.check();
    std::ostringstream out;
    out << "PIPE1\n";

    write_section(out, "geometry",
                  "face_side " + std::to_string(model.geometry.face_side) + "\neye " + rect_text(model.geometry.eye) +
                      "\nmouth " + rect_text(model.geometry.mouth) + '\n');

    const auto& p = model.preprocess;
    write_section(out, "preprocess",
                  "denoise_spatial_sigma " + format_real(p.denoise_spatial_sigma) + "\ndenoise_range_sigma " +
                      format_real(p.denoise_range_sigma) + "\nlow_light_mode " + to_string(p.low_light_mode) +
                      "\nlow_light_threshold " + format_real(p.low_light_threshold) + "\ncontrast_tiles " +
                      std::to_string(p.contrast_tiles) + "\ncontrast_clip_limit " + format_real(p.contrast_clip_limit) +
                      '\n');

    const auto& s = model.scan;
    write_section(out, "detector",
                  std::string("enabled ") + (model.cascade ? "1" : "0") + "\nscale_factor " +
                      format_real(s.scale_factor) + "\nstep_frac " + format_real(s.step_frac) + "\ngroup_iou " +
                      format_real(s.group_iou) + "\nmin_neighbors " + std::to_string(s.min_neighbors) + '\n');
    if (model.cascade) write_section(out, "cascade", save_cascade(*model.cascade));
    write_section(out, "pca", save_pca(model.pca));
    write_section(out, "svm", save_svm(model.svm));
    out << "END\n";
    return out.str();
}

PipelineModel load_pipeline(std::string_view text) {
    LineReader reader(text);
    const auto header = split_ws(reader.next("PIPE1 header"));
    if (header.size() != 1 || header[0] != "PIPE1") {
        if (!header.empty() && header[0].starts_with("PIPE"))
            throw Error(ErrorCode::VersionMismatch, "unsupported pipeline format '" + std::string(header[0]) + "'");
        throw Error(ErrorCode::ParseError, "line 1: expected PIPE1 header");
    }

    std::vector<Section> sections;
    for (;;) {
        const auto tokens = split_ws(reader.next("SECTION or END"));
        const auto line = reader.line_number();
        if (tokens.size() == 1 && tokens[0] == "END") break;
        if (tokens.size() != 3 || tokens[0] != "SECTION")
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected SECTION <name> <lines>");
        Section s;
        s.name = std::string(tokens[1]);
        s.first_line = line + 1;
        const auto n = parse_integer(tokens[2], line);
        if (n < 0) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": negative line count");
        for (long long i = 0; i < n; ++i) {
            s.body += reader.next("section " + s.name);
            s.body += '\n';
        }
        sections.push_back(std::move(s));
    }

    auto find = [&](std::string_view name) -> const Section* {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    };
    auto need = [&](std::string_view name) -> const Section& {
        const Section* s = find(name);
        if (!s) throw Error(ErrorCode::ParseError, "missing section " + std::string(name));
        return *s;
    };

    PipelineModel model;
    {
        const auto f = parse_fields(need("geometry"));
        model.geometry.face_side = static_cast<int>(f.integer("face_side"));
        model.geometry.eye = f.rect("eye");
        model.geometry.mouth = f.rect("mouth");
        try {
            model.geometry.validate();
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, e.what());
        }
    }
    {
        const auto f = parse_fields(need("preprocess"));
        auto& p = model.preprocess;
        p.denoise_spatial_sigma = f.real("denoise_spatial_sigma");
        p.denoise_range_sigma = f.real("denoise_range_sigma");
        try {
            p.low_light_mode = parse_low_light_mode(f.get("low_light_mode", 1)[0]);
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, e.what());
        }
        p.low_light_threshold = f.real("low_light_threshold");
        p.contrast_tiles = static_cast<int>(f.integer("contrast_tiles"));
        p.contrast_clip_limit = f.real("contrast_clip_limit");
    }
    bool enabled = false;
    {
        const auto f = parse_fields(need("detector"));
        enabled = f.integer("enabled") != 0;
        model.scan.scale_factor = f.real("scale_factor");
        model.scan.step_frac = f.real("step_frac");
        model.scan.group_iou = f.real("group_iou");
        model.scan.min_neighbors = static_cast<int>(f.integer("min_neighbors"));
    }
    if (enabled) model.cascade = load_cascade(need("cascade").body);
    model.pca = load_pca(need("pca").body);
    model.svm = load_svm(need("svm").body);
    model.check();
    return model;
}

// ---- training ---------------------------------------------------------------

namespace {

std::optional<Cascade> resolve_cascade(const PipelineConfig& config, const std::optional<Cascade>& given) {
    if (given) return given;
    if (!config.detector_enabled) return std::nullopt;
    if (config.cascade_file.empty())
        throw Error(ErrorCode::InvalidArgument, "detector enabled but no cascade_file configured");
    std::ifstream in(config.cascade_file, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open cascade " + config.cascade_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_cascade(buf.str());
}

bool has_both_classes(std::span<const ClassLabel> labels) {
    bool alert = false, fatigued = false;
    for (auto l : labels) (l == ClassLabel::Alert ? alert : fatigued) = true;
    return alert && fatigued;
}

}  // namespace

FitResult fit_pipeline(const Dataset& dataset, const PipelineConfig& config, const std::optional<Cascade>& cascade) {
    config.geometry.validate();
    if (dataset.empty()) throw Error(ErrorCode::EmptyInput, "empty dataset");
    {
        std::vector<ClassLabel> labels;
        for (const auto& r : dataset) labels.push_back(r.label);
        if (!has_both_classes(labels)) throw Error(ErrorCode::SingleClass, "dataset contains a single class");
    }

    FitResult result;
    auto& model = result.model;
    model.cascade = resolve_cascade(config, cascade);
    model.scan = config.scan;
    model.geometry = config.geometry;
    model.preprocess = config.preprocess;

    auto set = extract_features(dataset, model.extractor());
    result.warnings = std::move(set.warnings);
    result.used = set.labels.size();
    result.skipped = dataset.size() - result.used;
    if (result.used == 0) throw Error(ErrorCode::NoFacesFound, "no face found in any frame");
    if (!has_both_classes(set.labels))
        throw Error(ErrorCode::SingleClass, "frames with a detected face cover a single class");

    model.pca = pca_fit(set.features, config.pca_target());
    const Matrix z = pca_project_rows(model.pca, set.features);

    SvmParams params;
    params.c = config.svm_c;
    params.tol = config.svm_tol;
    params.max_passes = config.svm_max_passes;
    params.kernel = config.svm_kernel == KernelKind::Linear
                        ? KernelSpec::linear()
                        : KernelSpec::rbf(config.svm_gamma ? *config.svm_gamma : scale_gamma(z));
    model.svm = svm_train(z, set.labels, params);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < z.rows(); ++i)
        if (svm_predict(model.svm, z.row(i)) == set.labels[i]) ++correct;
    result.training_accuracy = static_cast<double>(correct) / static_cast<double>(z.rows());
    return result;
}

// ---- inference --------------------------------------------------------------

InferenceResult infer_stream(const PipelineModel& model, const std::vector<FrameInput>& frames,
                             const AlertConfig& alert, bool treat_no_face_as_fatigued) {
    model.check();
    alert.validate();
    const auto extractor = model.extractor();
    AlertUnit unit(alert);
    InferenceResult result;
    for (const auto& frame : frames) {
        std::optional<ClassLabel> label;
        if (auto v = extractor(frame.image, frame.hint)) {
            label = svm_predict(model.svm, pca_project(model.pca, *v));
        } else if (treat_no_face_as_fatigued) {
            label = ClassLabel::Fatigued;
        }
        unit.push(label);
        result.labels.push_back(label);
    }
    result.trace = unit.trace();
    return result;
}

InferenceResult infer_dataset(const PipelineModel& model, const Dataset& dataset, const AlertConfig& alert,
                              bool treat_no_face_as_fatigued) {
    std::vector<FrameInput> frames;
    frames.reserve(dataset.size());
    for (const auto& rec : dataset) frames.push_back({read_pnm_file(rec.path), rec.box});
    return infer_stream(model, frames, alert, treat_no_face_as_fatigued);
}

// ---- evaluation -------------------------------------------------------------

std::optional<double> onset_latency(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted,
                                    const AlertConfig& alert, std::size_t* onsets) {
    if (truth.size() != predicted.size())
        throw Error(ErrorCode::DimensionMismatch, "truth and prediction lengths differ");
    constexpr std::size_t kLead = 20;
    constexpr std::size_t kTail = 30;

    std::vector<ClassLabel> on_alert, on_fatigued;
    for (std::size_t i = 0; i < truth.size(); ++i)
        (truth[i] == ClassLabel::Alert ? on_alert : on_fatigued).push_back(predicted[i]);
    if (onsets) *onsets = 0;
    if (on_alert.empty() || on_fatigued.empty()) return std::nullopt;

    const std::size_t count = std::max<std::size_t>(1, std::min(on_alert.size() / kLead, on_fatigued.size() / kTail));
    double total = 0.0;
    std::size_t detected = 0;
    for (std::size_t o = 0; o < count; ++o) {
        AlertUnit unit(alert);
        for (std::size_t i = 0; i < kLead; ++i) unit.push(on_alert[(o * kLead + i) % on_alert.size()]);
        if (unit.state().mode != AlertMode::Idle) {
            // already alarmed before the onset
            total += 0.0;
            ++detected;
            continue;
        }
        for (std::size_t i = 0; i < kTail; ++i) {
            unit.push(on_fatigued[(o * kTail + i) % on_fatigued.size()]);
            if (unit.state().mode != AlertMode::Idle) {
                total += static_cast<double>(i + 1);
                ++detected;
                break;
            }
        }
    }
    if (onsets) *onsets = count;
    if (detected == 0) return std::nullopt;
    return total / static_cast<double>(detected);
}

MetricsReport evaluate(const PipelineModel& model, const Dataset& dataset, int folds, std::uint64_t seed,
                       const SvmParams& solver, const AlertConfig& alert, const FoldObserver& observer) {
    model.check();
    if (folds < 2) throw Error(ErrorCode::BadK, "folds must be at least 2");
    const auto set = extract_features(dataset, model.extractor());

    MetricsReport report;
    report.n = set.labels.size();
    report.skipped = dataset.size() - report.n;
    if (report.n < static_cast<std::size_t>(folds))
        throw Error(ErrorCode::TooFewSamples, "fewer usable frames than folds");

    const Matrix z = pca_project_rows(model.pca, set.features);
    SvmParams params = solver;
    params.c = model.svm.c;
    params.kernel = model.svm.kernel;

    const bool grouped = std::all_of(set.groups.begin(), set.groups.end(), [](const auto& g) { return !g.empty(); });
    const auto cv = cross_validate(z, set.labels, folds, params, seed,
                                   grouped ? std::span<const std::string>(set.groups) : std::span<const std::string>{},
                                   observer);

    report.confusion = cv.confusion;
    report.fold_accuracy = cv.fold_accuracy;
    report.mean_fold_accuracy = cv.mean_accuracy;
    const auto& c = cv.confusion;
    report.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0) report.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) report.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    report.mean_detection_latency = onset_latency(set.labels, cv.predictions, alert, &report.onsets);
    return report;
}

std::string format_metrics(const MetricsReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("absent"); };
    std::ostringstream out;
    out << "frames " << r.n << '\n'
        << "skipped " << r.skipped << '\n'
        << "accuracy " << format_real(r.accuracy) << '\n'
        << "precision " << opt(r.precision) << '\n'
        << "recall " << opt(r.recall) << '\n'
        << "confusion tp " << r.confusion.tp << " fp " << r.confusion.fp << " tn " << r.confusion.tn << " fn "
        << r.confusion.fn << '\n';
    for (std::size_t i = 0; i < r.fold_accuracy.size(); ++i)
        out << "fold " << i << " accuracy " << format_real(r.fold_accuracy[i]) << '\n';
    out << "mean_fold_accuracy " << format_real(r.mean_fold_accuracy) << '\n'
        << "onsets " << r.onsets << '\n'
        << "mean_detection_latency " << opt(r.mean_detection_latency) << '\n';
    return out.str();
}

}  // namespace drowsy
