#include "drowsy/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "drowsy/error.hpp"
#include "drowsy/imaging.hpp"
#include "drowsy/random.hpp"
#include "drowsy/text_format.hpp"

namespace drowsy {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Float canvas so overlapping shapes compose before quantization.
struct Canvas {
    int w;
    int h;
    std::vector<double> px;

    Canvas(int width, int height, double fill) : w(width), h(height), px(static_cast<std::size_t>(width) * height, fill) {}

    void ellipse(double cx, double cy, double rx, double ry, double value) {
        if (rx <= 0 || ry <= 0) return;
        const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + rx)));
        const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + ry)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dx = (x + 0.5 - cx) / rx;
                const double dy = (y + 0.5 - cy) / ry;
                if (dx * dx + dy * dy <= 1.0) px[static_cast<std::size_t>(y) * w + x] = value;
            }
    }

    void bar(double x0, double y0, double x1, double y1, double value) {
        const int ix0 = std::max(0, static_cast<int>(std::floor(x0)));
        const int ix1 = std::min(w, static_cast<int>(std::ceil(x1)));
        const int iy0 = std::max(0, static_cast<int>(std::floor(y0)));
        const int iy1 = std::min(h, static_cast<int>(std::ceil(y1)));
        for (int y = iy0; y < iy1; ++y)
            for (int x = ix0; x < ix1; ++x) px[static_cast<std::size_t>(y) * w + x] = value;
    }
};

void draw_face(Canvas& canvas, const FaceInstance& face) {
    const double s = face.box.w / 100.0;
    const double sy = face.box.h / 100.0;
    auto X = [&](double u) { return face.box.x + u * s; };
    auto Y = [&](double v) { return face.box.y + v * sy; };
    const FaceParams& p = face.params;

    canvas.ellipse(X(50), Y(50), 44 * s, 50 * sy, p.skin);

    const double feature_ink = 0.3 * p.skin;
    const bool eyes_closed = p.fatigued && (p.sign == FatigueSign::EyesClosed || p.sign == FatigueSign::Both);
    const bool yawning = p.fatigued && (p.sign == FatigueSign::Yawn || p.sign == FatigueSign::Both);

    for (double side : {-1.0, 1.0}) {
        const double ex = 50 + side * (20 + p.eye_offset);
        canvas.bar(X(ex - 11), Y(24), X(ex + 11), Y(26.5), 0.55 * p.skin);  // brow
        if (eyes_closed) {
            canvas.bar(X(ex - 10 * p.eye_scale), Y(35), X(ex + 10 * p.eye_scale), Y(37.5), feature_ink);
        } else {
            canvas.ellipse(X(ex), Y(36), 10 * p.eye_scale * s, 8 * p.eye_scale * sy, feature_ink);
        }
    }
    canvas.bar(X(48.5), Y(48), X(51.5), Y(62), 0.75 * p.skin);  // nose ridge

    if (yawning) {
        canvas.ellipse(X(50), Y(79), 9 * s, 14 * sy, 0.2 * p.skin);
    } else if (p.expression == AlertExpression::Talking) {
        canvas.ellipse(X(50), Y(78), 9 * s, 3.5 * sy, 0.3 * p.skin);
    } else {
        canvas.bar(X(38), Y(77), X(62), Y(79.5), feature_ink);
    }
}

}  // namespace

Image render_scene(const SceneSpec& scene, const std::vector<FaceInstance>& faces, std::uint64_t noise_seed) {
    if (scene.frame.w <= 0 || scene.frame.h <= 0) throw Error(ErrorCode::InvalidArgument, "frame size must be positive");
    Canvas canvas(scene.frame.w, scene.frame.h, scene.background);
    for (const auto& f : faces) draw_face(canvas, f);
    const double gain = scene.light == LightLevel::Dim ? 0.35 : 1.0;
    Rng rng(noise_seed);
    Image out(scene.frame.w, scene.frame.h, 1);
    auto pixels = out.pixels();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        double v = canvas.px[i] * gain;
        if (scene.noise_sigma > 0.0) v += scene.noise_sigma * rng.normal();
        pixels[i] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
    return out;
}

FaceParams random_face(bool fatigued, std::uint64_t seed) {
    Rng rng(seed);
    FaceParams p;
    p.fatigued = fatigued;
    p.sign = static_cast<FatigueSign>(rng.below(3));
    p.expression = rng.uniform() < 0.3 ? AlertExpression::Talking : AlertExpression::Neutral;
    p.skin = rng.uniform(160.0, 210.0);
    p.eye_offset = rng.uniform(-3.0, 3.0);
    p.eye_scale = rng.uniform(0.85, 1.15);
    return p;
}

void SyntheticSpec::validate() const {
    if (frame_w < 120 || frame_h < 120) throw Error(ErrorCode::InvalidArgument, "frames must be at least 120x120");
    if (n_frames < 0) throw Error(ErrorCode::InvalidArgument, "n_frames must be non-negative");
    if (!(fraction_fatigued >= 0.0 && fraction_fatigued <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "fraction_fatigued must lie in [0, 1]");
    if (jitter < 0) throw Error(ErrorCode::InvalidArgument, "jitter must be non-negative");
    if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be non-negative");
    if (subjects < 1) throw Error(ErrorCode::InvalidArgument, "subjects must be >= 1");
}

namespace {

// Label of every frame; exactly round(n * fraction) are fatigued.
std::vector<bool> frame_labels(const SyntheticSpec& spec) {
    const auto n = static_cast<std::size_t>(spec.n_frames);
    const auto n_fatigued = static_cast<std::size_t>(std::floor(spec.n_frames * spec.fraction_fatigued + 0.5));
    std::vector<bool> fatigued(n, false);
    for (std::size_t i = 0; i < n; ++i) fatigued[i] = spec.order == FrameOrder::Onset ? i >= n - n_fatigued : i < n_fatigued;
    if (spec.order == FrameOrder::Shuffled) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng(mix_seed(spec.seed, 0xfeed));
        rng.shuffle(std::span<std::size_t>(perm));
        std::vector<bool> shuffled(n);
        for (std::size_t i = 0; i < n; ++i) shuffled[i] = fatigued[perm[i]];
        return shuffled;
    }
    return fatigued;
}

SyntheticFrame render_indexed(const SyntheticSpec& spec, int index, bool fatigued) {
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(index) * 3 + 1));
    const int subject = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.subjects)));
    // Subject identity fixes the face shape; expression varies per frame.
    FaceParams face = random_face(fatigued, mix_seed(spec.seed, 0x5000 + static_cast<std::uint64_t>(subject)));
    Rng expr(mix_seed(spec.seed, static_cast<std::uint64_t>(index) * 3 + 2));
    face.sign = static_cast<FatigueSign>(expr.below(3));
    face.expression = expr.uniform() < 0.3 ? AlertExpression::Talking : AlertExpression::Neutral;

    const int side = static_cast<int>(std::floor(0.6 * std::min(spec.frame_w, spec.frame_h) + 0.5));
    const int jx = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(spec.jitter) + 1)) - spec.jitter;
    const int jy = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(spec.jitter) + 1)) - spec.jitter;
    const int x = std::clamp((spec.frame_w - side) / 2 + jx, 0, spec.frame_w - side);
    const int y = std::clamp((spec.frame_h - side) / 2 + jy, 0, spec.frame_h - side);
    const Rect box{x, y, side, side};

    SceneSpec scene;
    scene.frame = {spec.frame_w, spec.frame_h};
    scene.noise_sigma = spec.noise_sigma;
    scene.light = spec.light;
    SyntheticFrame out{render_scene(scene, {{box, face}}, mix_seed(spec.seed, static_cast<std::uint64_t>(index) * 3 + 3)),
                       fatigued ? ClassLabel::Fatigued : ClassLabel::Alert, "s" + std::to_string(subject), box, face};
    return out;
}

}  // namespace

SyntheticFrame synth_frame(const SyntheticSpec& spec, int index) {
    spec.validate();
    if (index < 0 || index >= spec.n_frames) throw Error(ErrorCode::OutOfBounds, "frame index out of range");
    return render_indexed(spec, index, frame_labels(spec)[static_cast<std::size_t>(index)]);
}

std::filesystem::path synth_generate(const SyntheticSpec& spec, const std::filesystem::path& dir) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    const auto labels = frame_labels(spec);
    Dataset records;
    for (int i = 0; i < spec.n_frames; ++i) {
        const SyntheticFrame frame = render_indexed(spec, i, labels[static_cast<std::size_t>(i)]);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.pgm", i);
        write_pnm_file(dir / name, frame.image);
        records.push_back({name, frame.label, frame.group, frame.box});
    }
    const auto manifest = dir / "manifest.csv";
    write_manifest(records, manifest);
    return manifest;
}

void write_manifest(const Dataset& dataset, const std::filesystem::path& manifest_path) {
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + manifest_path.string());
    out << "path,label,group,box_x,box_y,box_w,box_h\n";
    for (const auto& r : dataset) {
        out << r.path.generic_string() << ',' << (r.label == ClassLabel::Fatigued ? "+1" : "-1") << ',' << r.group;
        if (r.box) out << ',' << r.box->x << ',' << r.box->y << ',' << r.box->w << ',' << r.box->h;
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "short write to " + manifest_path.string());
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

}  // namespace

Dataset ingest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open manifest " + manifest_path.string());
    const auto base = manifest_path.parent_path();
    Dataset out;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
        const auto fields = split_csv(line);
        const std::string where = manifest_path.string() + ":" + std::to_string(line_no) + ": ";
        if (fields.size() < 2) throw Error(ErrorCode::BadLabel, where + "expected path,label");
        if (first && !looks_numeric(fields[1])) {
            first = false;
            continue;
        }
        first = false;
        if (!looks_numeric(fields[1])) throw Error(ErrorCode::BadLabel, where + "label '" + fields[1] + "'");
        ClassLabel label;
        try {
            label = label_from_int(std::stoll(fields[1]));
        } catch (const Error&) {
            throw Error(ErrorCode::BadLabel, where + "label '" + fields[1] + "' is not +1 or -1");
        } catch (const std::exception&) {
            throw Error(ErrorCode::BadLabel, where + "label '" + fields[1] + "'");
        }
        DatasetRecord rec;
        rec.path = std::filesystem::path(fields[0]);
        if (rec.path.is_relative()) rec.path = base / rec.path;
        rec.label = label;
        if (fields.size() >= 3) rec.group = fields[2];
        if (fields.size() == 7) {
            int v[4];
            for (int k = 0; k < 4; ++k) {
                if (!looks_numeric(fields[3 + k])) throw Error(ErrorCode::ParseError, where + "bad box field");
                v[k] = std::stoi(fields[3 + k]);
            }
            rec.box = Rect{v[0], v[1], v[2], v[3]};
        } else if (fields.size() > 3) {
            throw Error(ErrorCode::ParseError, where + "expected 2, 3 or 7 fields");
        }
        if (!std::filesystem::exists(rec.path)) throw Error(ErrorCode::MissingFile, where + rec.path.string());
        out.push_back(std::move(rec));
    }
    if (out.empty()) throw Error(ErrorCode::EmptyManifest, manifest_path.string() + " has no records");
    return out;
}

}  // namespace drowsy
