#include "drowsy/detector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "drowsy/error.hpp"
#include "drowsy/text_format.hpp"

namespace drowsy {

namespace {

struct Layout {
    int cols;
    int rows;
};

Layout layout_of(HaarKind kind) noexcept {
    switch (kind) {
        case HaarKind::TwoHorizontal: return {2, 1};
        case HaarKind::TwoVertical: return {1, 2};
        case HaarKind::ThreeHorizontal: return {3, 1};
        case HaarKind::ThreeVertical: return {1, 3};
        case HaarKind::Four: return {2, 2};
    }
    return {1, 1};
}

double cell_weight(HaarKind kind, int col, int row) noexcept {
    switch (kind) {
        case HaarKind::TwoHorizontal: return col == 0 ? 1.0 : -1.0;
        case HaarKind::TwoVertical: return row == 0 ? 1.0 : -1.0;
        case HaarKind::ThreeHorizontal: return col == 1 ? -2.0 : 1.0;
        case HaarKind::ThreeVertical: return row == 1 ? -2.0 : 1.0;
        case HaarKind::Four: return col == row ? 1.0 : -1.0;
    }
    return 0.0;
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// A feature resolved to concrete sub-rectangles relative to the window origin.
struct ScaledFeature {
    std::array<Rect, 4> cells{};
    std::array<double, 4> factor{};  // weight * base_area / scaled_area
    int count = 0;
    Rect extent;
};

// Positions/sizes along one axis after scaling, clipped to fit `limit`.
void scale_axis(int offset, int cell, int parts, double scale, int limit, int& out_offset, int& out_cell) {
    out_offset = round_half_up(offset * scale);
    out_cell = std::max(1, round_half_up(cell * scale));
    if (out_offset + parts * out_cell > limit) {
        out_cell = std::max(1, (limit - out_offset) / parts);
        if (out_offset + parts * out_cell > limit) out_offset = std::max(0, limit - parts * out_cell);
    }
}

ScaledFeature scale_feature(const HaarFeature& f, double scale, Size base) {
    const Layout lay = layout_of(f.kind);
    const int cell_w = f.rect.w / lay.cols;
    const int cell_h = f.rect.h / lay.rows;
    const Size win = scaled_window(base, scale);
    int ox = 0, oy = 0, sw = 0, sh = 0;
    if (scale == 1.0) {
        ox = f.rect.x;
        oy = f.rect.y;
        sw = cell_w;
        sh = cell_h;
    } else {
        scale_axis(f.rect.x, cell_w, lay.cols, scale, win.w, ox, sw);
        scale_axis(f.rect.y, cell_h, lay.rows, scale, win.h, oy, sh);
    }
    ScaledFeature out;
    const double renorm = static_cast<double>(cell_w) * cell_h / (static_cast<double>(sw) * sh);
    for (int r = 0; r < lay.rows; ++r) {
        for (int c = 0; c < lay.cols; ++c) {
            out.cells[out.count] = Rect{ox + c * sw, oy + r * sh, sw, sh};
            out.factor[out.count] = cell_weight(f.kind, c, r) * renorm;
            ++out.count;
        }
    }
    out.extent = Rect{ox, oy, sw * lay.cols, sh * lay.rows};
    return out;
}

double scaled_response(const IntegralImage& ii, const ScaledFeature& sf, Point origin) noexcept {
    double total = 0.0;
    for (int i = 0; i < sf.count; ++i) {
        const Rect& c = sf.cells[i];
        const Rect r{origin.x + c.x, origin.y + c.y, c.w, c.h};
        total += sf.factor[i] * static_cast<double>(ii.rect_sum_unchecked(r));
    }
    return total;
}

double inv_window_std(const IntegralImage& ii, const Rect& window) noexcept {
    const double n = static_cast<double>(window.area());
    const double mean = static_cast<double>(ii.rect_sum_unchecked(window)) / n;
    const double var = static_cast<double>(ii.rect_squared_sum_unchecked(window)) / n - mean * mean;
    return 1.0 / std::max(1.0, std::sqrt(std::max(var, 0.0)));
}

struct ScaledStage {
    std::vector<ScaledFeature> features;
    const Stage* stage;
};

std::vector<ScaledStage> scale_cascade(const Cascade& cascade, double scale) {
    std::vector<ScaledStage> out;
    out.reserve(cascade.stages().size());
    for (const Stage& st : cascade.stages()) {
        ScaledStage s{{}, &st};
        s.features.reserve(st.weak().size());
        for (const auto& w : st.weak()) s.features.push_back(scale_feature(w.classifier.feature, scale, cascade.base()));
        out.push_back(std::move(s));
    }
    return out;
}

double scaled_stage_score(const IntegralImage& ii, const ScaledStage& s, Point origin, double inv_std) noexcept {
    double score = 0.0;
    const auto& weak = s.stage->weak();
    for (std::size_t i = 0; i < weak.size(); ++i) {
        const double v = scaled_response(ii, s.features[i], origin) * inv_std;
        if (weak[i].classifier.votes_face(v)) score += weak[i].alpha;
    }
    return score;
}

bool run_cascade(const IntegralImage& ii, const std::vector<ScaledStage>& stages, Point origin, double inv_std,
                 CascadeStats* stats) noexcept {
    if (stats) ++stats->windows;
    for (const auto& s : stages) {
        if (stats) ++stats->stage_evaluations;
        if (scaled_stage_score(ii, s, origin, inv_std) < s.stage->threshold()) return false;
    }
    return true;
}

// Stump search over pre-sorted values. `order` lists sample indices by ascending value.
template <typename Value>
StumpFit best_stump_sorted(std::span<const Value> values, std::span<const std::uint32_t> order,
                           std::span<const int> labels, std::span<const double> weights) {
    double total_pos = 0.0;
    double total_neg = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? total_pos : total_neg) += weights[i];
    const double eps = 1e-12 * (total_pos + total_neg);
    constexpr double inf = std::numeric_limits<double>::infinity();

    StumpFit best{-inf, 1, total_neg};
    auto consider = [&](double threshold, double below_pos, double below_neg) {
        const double err_pos = below_pos + (total_neg - below_neg);
        const double err_neg = below_neg + (total_pos - below_pos);
        if (err_pos < best.weighted_error - eps) best = {threshold, 1, err_pos};
        if (err_neg < best.weighted_error - eps) best = {threshold, -1, err_neg};
    };
    // -inf: nothing lies below the threshold.
    if (total_pos < best.weighted_error - eps) best = {-inf, -1, total_pos};

    double below_pos = 0.0;
    double below_neg = 0.0;
    const std::size_t n = order.size();
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t idx = order[k];
        (labels[idx] > 0 ? below_pos : below_neg) += weights[idx];
        if (k + 1 < n) {
            const double a = static_cast<double>(values[idx]);
            const double b = static_cast<double>(values[order[k + 1]]);
            if (b > a) consider(a + (b - a) / 2.0, below_pos, below_neg);
        }
    }
    consider(inf, below_pos, below_neg);
    return best;
}

void check_samples(std::span<const IntegralImage> samples, Size base, const char* what) {
    for (const auto& s : samples)
        if (s.width() != base.w || s.height() != base.h)
            throw Error(ErrorCode::InvalidArgument, std::string(what) + " window does not match the base size");
}

// Base window size inferred from the training windows.
Size sample_base(std::span<const IntegralImage> samples) { return {samples.front().width(), samples.front().height()}; }

}  // namespace

const char* haar_token(HaarKind kind) noexcept {
    switch (kind) {
        case HaarKind::TwoHorizontal: return "2H";
        case HaarKind::TwoVertical: return "2V";
        case HaarKind::ThreeHorizontal: return "3H";
        case HaarKind::ThreeVertical: return "3V";
        case HaarKind::Four: return "4";
    }
    return "?";
}

std::optional<HaarKind> parse_haar_token(std::string_view token) noexcept {
    if (token == "2H") return HaarKind::TwoHorizontal;
    if (token == "2V") return HaarKind::TwoVertical;
    if (token == "3H") return HaarKind::ThreeHorizontal;
    if (token == "3V") return HaarKind::ThreeVertical;
    if (token == "4") return HaarKind::Four;
    return std::nullopt;
}

void validate_feature(const HaarFeature& feature) {
    const Layout lay = layout_of(feature.kind);
    const Rect& r = feature.rect;
    if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0)
        throw Error(ErrorCode::InvalidArgument, "feature rect must have positive size and non-negative origin");
    if (r.w % lay.cols != 0 || r.h % lay.rows != 0)
        throw Error(ErrorCode::InvalidArgument, std::string("feature rect does not divide evenly for kind ") +
                                                    haar_token(feature.kind));
}

Stage::Stage(std::vector<WeightedWeak> weak, double threshold) : weak_(std::move(weak)), threshold_(threshold) {
    if (weak_.empty()) throw Error(ErrorCode::InvalidArgument, "stage needs at least one weak classifier");
    for (const auto& w : weak_) {
        if (!(w.alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "weak classifier weight must be >= 0");
        if (w.classifier.polarity != 1 && w.classifier.polarity != -1)
            throw Error(ErrorCode::InvalidArgument, "polarity must be +1 or -1");
        validate_feature(w.classifier.feature);
    }
}

double Stage::alpha_sum() const noexcept {
    double s = 0.0;
    for (const auto& w : weak_) s += w.alpha;
    return s;
}

Cascade::Cascade(Size base, std::vector<Stage> stages) : base_(base), stages_(std::move(stages)) {
    if (base_.w <= 0 || base_.h <= 0) throw Error(ErrorCode::InvalidArgument, "base window must be positive");
    if (stages_.empty()) throw Error(ErrorCode::InvalidArgument, "cascade needs at least one stage");
    for (const auto& st : stages_) {
        for (const auto& w : st.weak()) {
            const Rect& r = w.classifier.feature.rect;
            if (r.x + r.w > base_.w || r.y + r.h > base_.h)
                throw Error(ErrorCode::InvalidArgument, "feature does not fit the base window");
        }
    }
}

Size scaled_window(Size base, double scale) noexcept {
    return {std::max(1, round_half_up(base.w * scale)), std::max(1, round_half_up(base.h * scale))};
}

double window_stddev(const IntegralImage& ii, const Rect& window) {
    if (!ii.contains(window)) throw Error(ErrorCode::OutOfBounds, "window outside image");
    return 1.0 / inv_window_std(ii, window);
}

double feature_response(const IntegralImage& ii, const HaarFeature& feature, Point origin, double scale, Size base) {
    if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
    const ScaledFeature sf = scale_feature(feature, scale, base);
    const Rect extent{origin.x + sf.extent.x, origin.y + sf.extent.y, sf.extent.w, sf.extent.h};
    if (!ii.contains(extent)) throw Error(ErrorCode::OutOfBounds, "scaled feature outside image");
    return scaled_response(ii, sf, origin);
}

double eval_feature(const IntegralImage& ii, const HaarFeature& feature, Point origin, double scale, Size base) {
    const double response = feature_response(ii, feature, origin, scale, base);
    const Size win = scaled_window(base, scale);
    return response / window_stddev(ii, Rect{origin.x, origin.y, win.w, win.h});
}

std::vector<HaarFeature> make_feature_pool(Size base, int grid_step) {
    if (grid_step < 1) throw Error(ErrorCode::InvalidArgument, "grid_step must be >= 1");
    std::vector<HaarFeature> pool;
    for (HaarKind kind : {HaarKind::TwoHorizontal, HaarKind::TwoVertical, HaarKind::ThreeHorizontal,
                          HaarKind::ThreeVertical, HaarKind::Four}) {
        const Layout lay = layout_of(kind);
        for (int h = grid_step; h <= base.h; h += grid_step) {
            if (h % lay.rows != 0) continue;
            for (int w = grid_step; w <= base.w; w += grid_step) {
                if (w % lay.cols != 0) continue;
                for (int y = 0; y + h <= base.h; y += grid_step)
                    for (int x = 0; x + w <= base.w; x += grid_step) pool.push_back({kind, Rect{x, y, w, h}});
            }
        }
    }
    return pool;
}

StumpFit train_weak(std::span<const double> values, std::span<const int> labels, std::span<const double> weights) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "no samples");
    if (labels.size() != values.size() || weights.size() != values.size())
        throw Error(ErrorCode::DimensionMismatch, "values, labels and weights differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (labels[i] != 1 && labels[i] != -1) throw Error(ErrorCode::InvalidArgument, "labels must be +1 or -1");
        if (!(weights[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must be non-negative");
        total += weights[i];
    }
    if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must not all be zero");
    std::vector<std::uint32_t> order(values.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    return best_stump_sorted<double>(values, order, labels, weights);
}

double stage_score(const IntegralImage& ii, const Stage& stage, Point origin, double scale, Size base,
                   double inv_std) {
    double score = 0.0;
    for (const auto& w : stage.weak()) {
        const double v = feature_response(ii, w.classifier.feature, origin, scale, base) * inv_std;
        if (w.classifier.votes_face(v)) score += w.alpha;
    }
    return score;
}

Stage train_stage(std::span<const IntegralImage> positives, std::span<const IntegralImage> negatives,
                  std::span<const HaarFeature> pool, const StageTrainConfig& config, BoostingLog* log) {
    if (positives.empty() || negatives.empty()) throw Error(ErrorCode::EmptyInput, "need positive and negative windows");
    if (pool.empty()) throw Error(ErrorCode::NoFeatures, "empty feature pool");
    if (config.rounds < 1) throw Error(ErrorCode::InvalidArgument, "rounds must be >= 1");
    if (!(config.target_detection_rate >= 0.0 && config.target_detection_rate <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "target_detection_rate must lie in [0, 1]");
    const Size base = sample_base(positives);
    check_samples(positives, base, "positive");
    check_samples(negatives, base, "negative");
    for (const auto& f : pool) {
        validate_feature(f);
        if (f.rect.x + f.rect.w > base.w || f.rect.y + f.rect.h > base.h)
            throw Error(ErrorCode::InvalidArgument, "feature does not fit the base window");
    }

    const std::size_t n_pos = positives.size();
    const std::size_t n = n_pos + negatives.size();
    auto sample = [&](std::size_t i) -> const IntegralImage& {
        return i < n_pos ? positives[i] : negatives[i - n_pos];
    };
    std::vector<int> labels(n);
    std::vector<double> weights(n);
    std::vector<double> inv_std(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i < n_pos ? 1 : -1;
        weights[i] = i < n_pos ? 0.5 / n_pos : 0.5 / (n - n_pos);
        inv_std[i] = inv_window_std(sample(i), Rect{0, 0, base.w, base.h});
    }

    // Feature-major table of responses and their ascending sort order.
    const std::size_t nf = pool.size();
    std::vector<float> table(nf * n);
    std::vector<std::uint32_t> orders(nf * n);
    for (std::size_t f = 0; f < nf; ++f) {
        const ScaledFeature sf = scale_feature(pool[f], 1.0, base);
        float* row = table.data() + f * n;
        for (std::size_t i = 0; i < n; ++i)
            row[i] = static_cast<float>(scaled_response(sample(i), sf, Point{0, 0}) * inv_std[i]);
        std::uint32_t* ord = orders.data() + f * n;
        std::iota(ord, ord + n, 0u);
        std::stable_sort(ord, ord + n, [row](auto a, auto b) { return row[a] < row[b]; });
    }

    std::vector<WeightedWeak> chosen;
    for (int round = 0; round < config.rounds; ++round) {
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        for (double& w : weights) w /= total;
        if (log) log->weights.push_back(weights);

        std::size_t best_f = 0;
        StumpFit best{0.0, 1, std::numeric_limits<double>::infinity()};
        for (std::size_t f = 0; f < nf; ++f) {
            const StumpFit fit = best_stump_sorted<float>(std::span<const float>(table.data() + f * n, n),
                                                          std::span<const std::uint32_t>(orders.data() + f * n, n),
                                                          labels, weights);
            if (fit.weighted_error < best.weighted_error - 1e-12) {
                best = fit;
                best_f = f;
            }
        }
        const double eps = std::clamp(best.weighted_error, 1e-10, 1.0 - 1e-10);
        const double beta = eps / (1.0 - eps);
        const double alpha = std::log(1.0 / beta);
        const WeakClassifier weak{pool[best_f], best.threshold, best.polarity};
        const float* row = table.data() + best_f * n;
        for (std::size_t i = 0; i < n; ++i) {
            const bool face = weak.votes_face(static_cast<double>(row[i]));
            if (face == (labels[i] > 0)) weights[i] *= beta;
        }
        chosen.push_back({weak, alpha});
        if (log) {
            log->errors.push_back(best.weighted_error);
            log->alphas.push_back(alpha);
        }
    }

    Stage provisional(chosen, 0.0);
    const double half = 0.5 * provisional.alpha_sum();
    if (log) log->initial_threshold = half;

    std::vector<double> scores(n_pos);
    for (std::size_t i = 0; i < n_pos; ++i) scores[i] = stage_score(positives[i], provisional, Point{0, 0}, 1.0, base, inv_std[i]);
    std::sort(scores.begin(), scores.end(), std::greater<>());
    const auto needed = static_cast<std::size_t>(std::ceil(config.target_detection_rate * n_pos - 1e-9));
    double threshold = half;
    if (needed > 0 && scores[needed - 1] < threshold) threshold = scores[needed - 1];
    return Stage(std::move(chosen), threshold);
}

Cascade train_cascade(std::span<const IntegralImage> positives, const NegativeSource& negatives,
                      const CascadeTrainConfig& config) {
    if (positives.empty()) throw Error(ErrorCode::EmptyInput, "no positive windows");
    if (config.rounds_per_stage.empty()) throw Error(ErrorCode::InvalidArgument, "no stages requested");
    check_samples(positives, config.base, "positive");
    const auto pool = make_feature_pool(config.base, config.grid_step);

    std::vector<Stage> stages;
    for (int rounds : config.rounds_per_stage) {
        std::optional<Cascade> partial;
        if (!stages.empty()) partial.emplace(config.base, stages);
        auto accepted = [&](const IntegralImage& ii) {
            return !partial || classify_window(ii, *partial, Point{0, 0}, 1.0);
        };

        std::vector<IntegralImage> pos;
        for (const auto& p : positives)
            if (accepted(p)) pos.push_back(p);
        std::vector<IntegralImage> neg;
        std::size_t draws = 0;
        while (neg.size() < config.negatives_per_stage && draws < config.max_negative_draws) {
            auto candidate = negatives();
            if (!candidate) break;
            ++draws;
            if (candidate->width() != config.base.w || candidate->height() != config.base.h)
                throw Error(ErrorCode::InvalidArgument, "negative window does not match the base size");
            if (accepted(*candidate)) neg.push_back(std::move(*candidate));
        }
        if (neg.empty() || pos.empty()) break;
        stages.push_back(train_stage(pos, neg, pool, {rounds, config.target_detection_rate}));
    }
    if (stages.empty()) throw Error(ErrorCode::EmptyInput, "no negative windows available for training");
    return Cascade(config.base, std::move(stages));
}

bool classify_window(const IntegralImage& ii, const Cascade& cascade, Point origin, double scale, CascadeStats* stats) {
    if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
    const Size win = scaled_window(cascade.base(), scale);
    const Rect window{origin.x, origin.y, win.w, win.h};
    if (!ii.contains(window)) throw Error(ErrorCode::OutOfBounds, "window outside image");
    return run_cascade(ii, scale_cascade(cascade, scale), origin, inv_window_std(ii, window), stats);
}

std::vector<Rect> scan_windows(const Image& gray, const Cascade& cascade, const ScanConfig& config,
                               CascadeStats* stats) {
    if (gray.channels() != 1) throw Error(ErrorCode::InvalidArgument, "detect expects a gray image");
    const Size base = cascade.base();
    if (gray.width() < base.w || gray.height() < base.h)
        throw Error(ErrorCode::ImageTooSmall, "image smaller than the base window");
    if (!(config.scale_factor > 1.0)) throw Error(ErrorCode::InvalidArgument, "scale_factor must exceed 1");
    if (!(config.step_frac > 0.0)) throw Error(ErrorCode::InvalidArgument, "step_frac must be positive");

    const IntegralImage ii(gray);
    std::vector<Rect> hits;
    for (int k = 0;; ++k) {
        const double scale = std::pow(config.scale_factor, k);
        const Size win = scaled_window(base, scale);
        if (win.w > gray.width() || win.h > gray.height()) break;
        const auto stages = scale_cascade(cascade, scale);
        const int step = std::max(1, round_half_up(config.step_frac * win.w));
        for (int y = 0; y + win.h <= gray.height(); y += step) {
            for (int x = 0; x + win.w <= gray.width(); x += step) {
                const Rect window{x, y, win.w, win.h};
                if (run_cascade(ii, stages, Point{x, y}, inv_window_std(ii, window), stats)) hits.push_back(window);
            }
        }
    }
    return hits;
}

std::vector<FaceBox> group_detections(std::vector<Rect> raw, double group_iou, int min_neighbors) {
    std::sort(raw.begin(), raw.end(), [](const Rect& a, const Rect& b) {
        return std::tie(a.y, a.x, a.w, a.h) < std::tie(b.y, b.x, b.w, b.h);
    });
    std::vector<std::size_t> parent(raw.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t j = i + 1; j < raw.size(); ++j)
            if (overlap_ratio(raw[i], raw[j]) >= group_iou) {
                const auto a = find(i);
                const auto b = find(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }

    struct Acc {
        double x = 0, y = 0, w = 0, h = 0;
        int count = 0;
    };
    std::vector<Acc> acc(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        Acc& a = acc[find(i)];
        a.x += raw[i].x;
        a.y += raw[i].y;
        a.w += raw[i].w;
        a.h += raw[i].h;
        ++a.count;
    }
    std::vector<FaceBox> out;
    for (const Acc& a : acc) {
        if (a.count == 0 || a.count < min_neighbors) continue;
        const double c = a.count;
        out.push_back({Rect{round_half_up(a.x / c), round_half_up(a.y / c), round_half_up(a.w / c),
                            round_half_up(a.h / c)},
                       a.count});
    }
    std::sort(out.begin(), out.end(), [](const FaceBox& a, const FaceBox& b) {
        return std::tie(a.box.y, a.box.x, a.box.w, a.box.h) < std::tie(b.box.y, b.box.x, b.box.w, b.box.h);
    });
    return out;
}

std::vector<FaceBox> detect(const Image& gray, const Cascade& cascade, const ScanConfig& config, CascadeStats* stats) {
    return group_detections(scan_windows(gray, cascade, config, stats), config.group_iou, config.min_neighbors);
}

std::string save_cascade(const Cascade& cascade) {
    std::ostringstream out;
    out << "CASCADE1 " << cascade.base().w << ' ' << cascade.base().h << ' ' << cascade.stages().size() << '\n';
    for (const auto& st : cascade.stages()) {
        out << "STAGE " << st.weak().size() << ' ' << format_real(st.threshold()) << '\n';
        for (const auto& w : st.weak()) {
            const auto& c = w.classifier;
            const Rect& r = c.feature.rect;
            out << "WEAK " << haar_token(c.feature.kind) << ' ' << r.x << ' ' << r.y << ' ' << r.w << ' ' << r.h
                << ' ' << format_real(c.threshold) << ' ' << c.polarity << ' ' << format_real(w.alpha) << '\n';
        }
    }
    return out.str();
}

Cascade load_cascade(std::string_view text) {
    LineReader reader(text);
    auto header = split_ws(reader.next("CASCADE1 header"));
    if (header.empty()) throw Error(ErrorCode::ParseError, "line 1: empty header");
    if (header[0] != "CASCADE1") {
        if (header[0].starts_with("CASCADE"))
            throw Error(ErrorCode::VersionMismatch, "unsupported cascade version '" + std::string(header[0]) + "'");
        throw Error(ErrorCode::ParseError, "line 1: expected CASCADE1 header");
    }
    if (header.size() != 4) throw Error(ErrorCode::ParseError, "line 1: header needs base_w base_h n_stages");
    const auto base_w = parse_integer(header[1], 1);
    const auto base_h = parse_integer(header[2], 1);
    const auto n_stages = parse_integer(header[3], 1);
    if (base_w <= 0 || base_h <= 0 || n_stages <= 0 || base_w > 4096 || base_h > 4096)
        throw Error(ErrorCode::ParseError, "line 1: bad base size or stage count");

    std::vector<Stage> stages;
    for (long long s = 0; s < n_stages; ++s) {
        const auto fields = split_ws(reader.next("STAGE line"));
        const std::size_t ln = reader.line_number();
        if (fields.size() != 3 || fields[0] != "STAGE")
            throw Error(ErrorCode::ParseError, "line " + std::to_string(ln) + ": expected STAGE <n_weak> <threshold>");
        const auto n_weak = parse_integer(fields[1], ln);
        if (n_weak <= 0) throw Error(ErrorCode::ParseError, "line " + std::to_string(ln) + ": stage needs weak classifiers");
        const double threshold = parse_real(fields[2], ln);
        std::vector<WeightedWeak> weak;
        for (long long i = 0; i < n_weak; ++i) {
            const auto f = split_ws(reader.next("WEAK line"));
            const std::size_t wl = reader.line_number();
            const std::string where = "line " + std::to_string(wl) + ": ";
            if (f.size() != 9 || f[0] != "WEAK") throw Error(ErrorCode::ParseError, where + "expected WEAK line");
            const auto kind = parse_haar_token(f[1]);
            if (!kind) throw Error(ErrorCode::ParseError, where + "unknown feature kind '" + std::string(f[1]) + "'");
            const Rect r{static_cast<int>(parse_integer(f[2], wl)), static_cast<int>(parse_integer(f[3], wl)),
                         static_cast<int>(parse_integer(f[4], wl)), static_cast<int>(parse_integer(f[5], wl))};
            const auto polarity = parse_integer(f[7], wl);
            if (polarity != 1 && polarity != -1) throw Error(ErrorCode::ParseError, where + "polarity must be +1 or -1");
            const double alpha = parse_real(f[8], wl);
            if (!(alpha >= 0.0)) throw Error(ErrorCode::ParseError, where + "alpha must be >= 0");
            HaarFeature feature{*kind, r};
            try {
                validate_feature(feature);
            } catch (const Error& e) {
                throw Error(ErrorCode::ParseError, where + e.what());
            }
            if (r.x + r.w > base_w || r.y + r.h > base_h)
                throw Error(ErrorCode::ParseError, where + "feature exceeds base window");
            weak.push_back({WeakClassifier{feature, parse_real(f[6], wl), static_cast<int>(polarity)}, alpha});
        }
        stages.emplace_back(std::move(weak), threshold);
    }
    while (!reader.at_end()) {
        if (!split_ws(reader.next("end")).empty())
            throw Error(ErrorCode::ParseError, "line " + std::to_string(reader.line_number()) + ": trailing content");
    }
    return Cascade(Size{static_cast<int>(base_w), static_cast<int>(base_h)}, std::move(stages));
}

}  // namespace drowsy
