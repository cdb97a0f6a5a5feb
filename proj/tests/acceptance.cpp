// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "drowsy/classifier.hpp"
#include "drowsy/dataset.hpp"
#include "drowsy/detector.hpp"
#include "drowsy/detector_fixture.hpp"
#include "drowsy/fatigue.hpp"
#include "drowsy/features.hpp"
#include "drowsy/imaging.hpp"
#include "drowsy/pipeline.hpp"
#include "drowsy/text_format.hpp"
#include "fatigue_oracle.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace drowsy;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr double kPcaValueTol = 1e-6;
constexpr double kPcaOrthoTol = 1e-8;
constexpr double kKktTol = 1e-3;
constexpr double kDualTol = 1e-4;
constexpr double kBiasTol = 1e-6;
constexpr double kMinDetectionRate = 0.95;
constexpr std::size_t kMaxFalsePositivesPerFrame = 1;
constexpr double kMinCvAccuracy = 0.90;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    return {std::istreambuf_iterator<char>(in), {}};
}

// ---- 1 ------------------------------------------------------------------------

Outcome geometry_invariant() {
    Rng rng(101);
    const RoiGeometry geo;
    bool ok = geo.feature_length() == 4000 && geo.eye == Rect{10, 20, 80, 30} && geo.mouth == Rect{30, 60, 40, 40};
    int frames = 0;
    for (int trial = 0; trial < 40 && ok; ++trial, ++frames) {
        const int w = 24 + static_cast<int>(rng.below(377)), h = 24 + static_cast<int>(rng.below(377));
        const Image frame = test::random_image(rng, w, h, trial % 4 == 0 ? 3 : 1);
        const Image gray = to_grayscale(frame);
        const int side = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(w, h))));
        const Rect box{static_cast<int>(rng.below(static_cast<std::uint64_t>(w - side + 1))),
                       static_cast<int>(rng.below(static_cast<std::uint64_t>(h - side + 1))), side, side};
        const auto v = face_features(gray, box, geo);
        const Image face = normalize_face(gray, box, geo);
        const auto rois = extract_rois(face, geo);
        ok = v.size() == 4000 && face.width() == 100 && face.height() == 100 && rois.eye.width() == 80 &&
             rois.eye.height() == 30 && rois.mouth.width() == 40 && rois.mouth.height() == 40;
        for (int y = 0; y < 30 && ok; ++y)
            for (int x = 0; x < 80 && ok; ++x)
                ok = rois.eye.at(x, y) == face.at(10 + x, 20 + y) && v[y * 80 + x] == face.at(10 + x, 20 + y) / 255.0;
        for (int y = 0; y < 40 && ok; ++y)
            for (int x = 0; x < 40 && ok; ++x)
                ok = rois.mouth.at(x, y) == face.at(30 + x, 60 + y) &&
                     v[2400 + y * 40 + x] == face.at(30 + x, 60 + y) / 255.0;
    }
    return {ok, std::to_string(frames) + " random frames, 4000 = 2400 eye + 1600 mouth"};
}

// ---- 2 ------------------------------------------------------------------------

Outcome integral_oracle() {
    Rng rng(202);
    int rects = 0, mismatches = 0;
    for (int img_i = 0; img_i < 10; ++img_i) {
        const Image img = test::random_image(rng, 64, 64);
        const IntegralImage ii(img);
        for (int k = 0; k < 30; ++k, ++rects) {
            const int x = static_cast<int>(rng.below(64)), y = static_cast<int>(rng.below(64));
            const int w = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(64 - x)));
            const int h = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(64 - y)));
            std::uint64_t brute = 0;
            for (int r = y; r < y + h; ++r)
                for (int c = x; c < x + w; ++c) brute += img.at(c, r);
            mismatches += ii.rect_sum({x, y, w, h}) != brute;
        }
    }
    return {mismatches == 0, std::to_string(rects) + " rectangles on 10 images, " + std::to_string(mismatches) +
                                 " mismatches"};
}

// ---- 3 ------------------------------------------------------------------------

double mean_residual(const PcaModel& model, const Matrix& x) {
    double total = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto rec = pca_reconstruct(model, pca_project(model, x.row(i)));
        for (std::size_t j = 0; j < x.cols(); ++j) total += (x(i, j) - rec[j]) * (x(i, j) - rec[j]);
    }
    return total / static_cast<double>(x.rows());
}

Outcome pca_oracle() {
    Rng rng(303);
    double worst_value = 0, worst_vector = 0, worst_ortho = 0;
    bool monotone = true;
    const int datasets = 60;
    for (int trial = 0; trial < datasets; ++trial) {
        const std::size_t n = 3 + rng.below(8), d = 2 + rng.below(5);
        const auto x = test::random_matrix(rng, n, d);
        const auto o = test::oracle_pca(x);
        const std::size_t kmax = std::min(n - 1, d);
        const auto model = pca_fit(x, PcaTarget::components(kmax));
        if (model.k() != kmax) return {false, "dataset " + std::to_string(trial) + " kept the wrong number of components"};
        for (std::size_t c = 0; c < kmax; ++c) {
            const auto ci = static_cast<Eigen::Index>(c);
            worst_value = std::max(worst_value, std::abs(model.eigenvalues[c] - o.values(ci)));
            double dot_v = 0;
            for (std::size_t j = 0; j < d; ++j) dot_v += model.components(c, j) * o.vectors(static_cast<Eigen::Index>(j), ci);
            const double sign = dot_v < 0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < d; ++j)
                worst_vector = std::max(worst_vector, std::abs(model.components(c, j) -
                                                               sign * o.vectors(static_cast<Eigen::Index>(j), ci)));
            for (std::size_t c2 = 0; c2 < kmax; ++c2)
                worst_ortho = std::max(worst_ortho, std::abs(dot(model.components.row(c), model.components.row(c2)) -
                                                             (c == c2 ? 1.0 : 0.0)));
        }
        double previous = INFINITY;
        for (std::size_t k = 1; k <= kmax; ++k) {
            const double r = mean_residual(pca_fit(x, PcaTarget::components(k)), x);
            if (r > previous + 1e-12) monotone = false;
            previous = r;
        }
    }
    const bool pass = worst_value <= kPcaValueTol && worst_vector <= kPcaValueTol && worst_ortho <= kPcaOrthoTol && monotone;
    return {pass, std::to_string(datasets) + " datasets, max eigenvalue err " + fmt(worst_value, 3) +
                      ", max component err " + fmt(worst_vector, 3) + ", max orthonormality err " +
                      fmt(worst_ortho, 3) + (monotone ? ", residual non-increasing" : ", residual increased")};
}

// ---- 4 ------------------------------------------------------------------------

Outcome svm_oracle() {
    Rng rng(404);
    int kkt_sets = 0, kkt_violations = 0;
    for (int trial = 0; trial < 20; ++trial, ++kkt_sets) {
        Matrix x;
        std::vector<ClassLabel> y;
        test::separable_set(rng, 20 + rng.below(30), 2 + rng.below(4), x, y);
        const double c = trial % 2 ? 1.0 : 10.0;
        const KernelSpec kernel = trial % 3 ? KernelSpec::linear() : KernelSpec::rbf(0.3);
        SmoTrace trace;
        svm_train(x, y, {c, kernel, kKktTol, 10000}, &trace);
        bool ok = trace.converged;
        double eq = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double a = trace.alphas[i], yf = to_int(y[i]) * trace.outputs[i];
            eq += to_int(y[i]) * a;
            if (a < 0 || a > c + 1e-9) ok = false;
            if (a <= 1e-8) ok = ok && yf >= 1 - kKktTol;
            else if (a >= c - 1e-8) ok = ok && yf <= 1 + kKktTol;
            else ok = ok && std::abs(yf - 1) <= kKktTol;
        }
        ok = ok && std::abs(eq) < 1e-6;
        kkt_violations += !ok;
    }

    double worst_dual = 0;
    for (int trial = 0; trial < 30; ++trial) {
        Matrix x;
        std::vector<ClassLabel> y;
        test::separable_set(rng, 4, 2, x, y);
        const double c = trial % 2 ? 0.5 : 5.0;
        const KernelSpec kernel = trial % 3 ? KernelSpec::linear() : KernelSpec::rbf(0.5);
        SmoTrace trace;
        svm_train(x, y, {c, kernel, 1e-6, 1000}, &trace);
        worst_dual = std::max(worst_dual, std::abs(dual_objective(x, y, trace.alphas, kernel) -
                                                   test::brute_force_dual(x, y, c, kernel)));
    }

    const auto xor_x = Matrix::from_rows({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
    const std::vector<ClassLabel> xor_y{ClassLabel::Alert, ClassLabel::Alert, ClassLabel::Fatigued, ClassLabel::Fatigued};
    const auto xor_model = svm_train(xor_x, xor_y, {10.0, KernelSpec::rbf(1.0), 1e-3, 1000});
    int xor_errors = 0;
    for (std::size_t i = 0; i < 4; ++i) xor_errors += svm_predict(xor_model, xor_x.row(i)) != xor_y[i];

    const auto two_x = Matrix::from_rows({{1, 0}, {-1, 0}});
    const std::vector<ClassLabel> two_y{ClassLabel::Fatigued, ClassLabel::Alert};
    const double bias = svm_train(two_x, two_y, {1.0, KernelSpec::linear(), 1e-3, 200}).bias;

    const bool pass = kkt_violations == 0 && worst_dual <= kDualTol && xor_errors == 0 && std::abs(bias) <= kBiasTol;
    return {pass, "KKT held on " + std::to_string(kkt_sets - kkt_violations) + "/" + std::to_string(kkt_sets) +
                      " sets, n=4 dual gap " + fmt(worst_dual, 3) + ", XOR errors " + std::to_string(xor_errors) +
                      ", two-point b " + fmt(bias, 3)};
}

// ---- 5 ------------------------------------------------------------------------

Outcome detector_fixture() {
    DetectorFixtureSpec spec;
    spec.positives = 300;
    CascadeTrainConfig train;
    train.negatives_per_stage = 400;
    const auto positives = fixture_positives(spec, train.base);
    const auto cascade = train_cascade(positives, fixture_negatives(spec, train.base), train);
    const auto score = evaluate_detector(cascade, spec, 5000, 100);
    const bool pass = cascade.stages().size() == 2 && positives.size() >= 200 &&
                      score.detection_rate() >= kMinDetectionRate &&
                      score.max_false_positives <= kMaxFalsePositivesPerFrame;
    return {pass, std::to_string(cascade.stages().size()) + " stages (" + std::to_string(train.rounds_per_stage[0]) + "+" +
                      std::to_string(train.rounds_per_stage[1]) + " rounds), " + std::to_string(positives.size()) +
                      " positives, 400 negatives per stage; " + std::to_string(score.frames) +
                      " held-out frames: detection " + fmt(score.detection_rate()) + ", false positives " +
                      fmt(score.false_positives_per_frame()) + " per frame (worst frame " +
                      std::to_string(score.max_false_positives) + ")"};
}

// ---- 6 ------------------------------------------------------------------------

Outcome accumulator_exhaustive() {
    std::vector<AlertConfig> configs{AlertConfig{}};
    for (double persist : {0.0, 2.0, 3.0})
        for (bool spray : {false, true}) {
            AlertConfig c;
            c.t_low = 2;
            c.t_high = 4;
            c.alarm_duration = 3;
            c.high_persist = persist;
            c.water_spray_enabled = spray;
            configs.push_back(c);
        }
    std::size_t traces = 0, trajectory_errors = 0, discipline_errors = 0;
    std::string first_violation;
    for (const auto& cfg : configs) {
        for (unsigned bits = 0; bits < (1u << 14); ++bits, ++traces) {
            std::vector<ClassLabel> labels;
            for (int i = 0; i < 14; ++i) labels.push_back((bits >> i) & 1u ? ClassLabel::Fatigued : ClassLabel::Alert);
            const Trace trace = simulate(labels, cfg);
            long long r = 0;
            bool same = trace.ticks.size() == 14;
            for (std::size_t i = 0; i < labels.size() && same; ++i) {
                r = std::max(0LL, r + to_int(labels[i]));
                same = trace.ticks[i].r == r;
            }
            trajectory_errors += !same;
            const std::string v = test::event_discipline_violation(trace);
            if (!v.empty()) {
                if (first_violation.empty()) first_violation = v;
                ++discipline_errors;
            }
        }
    }
    return {trajectory_errors == 0 && discipline_errors == 0,
            std::to_string(traces) + " traces (2^14 sequences x " + std::to_string(configs.size()) +
                " configs), " + std::to_string(trajectory_errors) + " trajectory mismatches, " +
                std::to_string(discipline_errors) + " discipline violations" +
                (first_violation.empty() ? "" : " (" + first_violation + ")")};
}

// ---- 7 ------------------------------------------------------------------------

Outcome alert_timing() {
    AlertConfig cfg;
    cfg.t_low = 5;
    cfg.t_high = 15;
    cfg.high_persist = 5;
    cfg.sample_period = 1.0;
    const std::vector<ClassLabel> labels(40, ClassLabel::Fatigued);
    const Trace trace = simulate(labels, cfg);
    auto first_tick = [&](ActuatorAction a) -> long long {
        for (const auto& e : trace.events)
            if (e.action == a) return static_cast<long long>(e.timestamp / cfg.sample_period + 0.5);
        return -1;
    };
    auto count = [&](ActuatorAction a) {
        return std::count_if(trace.events.begin(), trace.events.end(), [&](const auto& e) { return e.action == a; });
    };
    const long long on = first_tick(ActuatorAction::AlarmOn), reduce = first_tick(ActuatorAction::ReduceSpeed),
                    stop = first_tick(ActuatorAction::StopVehicle);
    const bool pass = on == 5 && reduce == 15 && stop == 20 && count(ActuatorAction::AlarmOn) == 1 &&
                      count(ActuatorAction::ReduceSpeed) == 1 && count(ActuatorAction::StopVehicle) == 1;
    return {pass, "AlarmOn at tick " + std::to_string(on) + ", ReduceSpeed at tick " + std::to_string(reduce) +
                      ", StopVehicle at tick " + std::to_string(stop)};
}

// ---- 8 ------------------------------------------------------------------------

Outcome end_to_end() {
    test::TempDir dir("acceptance_e2e");
    SyntheticSpec train_spec;
    train_spec.n_frames = 400;
    train_spec.fraction_fatigued = 0.5;
    train_spec.noise_sigma = 8;
    train_spec.seed = 2024;
    SyntheticSpec test_spec = train_spec;
    test_spec.n_frames = 100;
    test_spec.seed = 2025;
    const Dataset train = ingest(synth_generate(train_spec, dir.path() / "train"));
    const Dataset held_out = ingest(synth_generate(test_spec, dir.path() / "test"));

    PipelineConfig config;
    config.detector_enabled = false;
    const FitResult fit = fit_pipeline(train, config);
    const MetricsReport cv = evaluate(fit.model, train, 5, config.seed);
    const auto inferred = infer_dataset(fit.model, held_out, config.alert);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < held_out.size(); ++i) correct += inferred.labels[i] == held_out[i].label;
    const double holdout = static_cast<double>(correct) / static_cast<double>(held_out.size());
    return {cv.mean_fold_accuracy >= kMinCvAccuracy,
            "400 train / 100 test frames, pca k " + std::to_string(fit.model.pca.k()) + ", 5-fold mean accuracy " +
                fmt(cv.mean_fold_accuracy) + ", held-out accuracy " + fmt(holdout)};
}

// ---- 9 ------------------------------------------------------------------------

int run(const std::string& command) {
    return std::system((command + " > /dev/null 2>&1").c_str());
}

Outcome cli_determinism() {
    test::TempDir dir("acceptance_cli");
    const std::string cli = std::string("\"") + DROWSY_CLI_PATH + "\"";
    const fs::path data = dir.path() / "data";
    if (run(cli + " synth -o \"" + data.string() + "\" -n 200 --seed 9 --order onset") != 0)
        return {false, "synth failed"};
    const std::string manifest = (data / "manifest.csv").string();
    for (const char* name : {"run1", "run2"}) {
        const fs::path out = dir.path() / name;
        fs::create_directories(out);
        if (run(cli + " train -m \"" + manifest + "\" -o \"" + out.string() + "\"") != 0) return {false, "train failed"};
        if (run(cli + " simulate -m \"" + manifest + "\" --model \"" + (out / "model.pipe").string() + "\" -o \"" +
                (out / "trace.txt").string() + "\"") != 0)
            return {false, "simulate failed"};
    }
    std::string differing;
    std::size_t bytes = 0;
    for (const char* file : {"model.pca", "model.svm", "model.pipe", "trace.txt"}) {
        const std::string a = slurp(dir.path() / "run1" / file), b = slurp(dir.path() / "run2" / file);
        bytes += a.size();
        if (a.empty() || a != b) differing += std::string(differing.empty() ? "" : ", ") + file;
    }
    return {differing.empty(), differing.empty()
                                   ? "PCA1, SVM1, PIPE1 and trace identical across two runs (" + std::to_string(bytes) +
                                         " bytes)"
                                   : "differs: " + differing};
}

// ---- 10 -----------------------------------------------------------------------

Outcome codec_round_trips() {
    Rng rng(1010);
    int pnm = 0, cascades = 0, pcas = 0, svms = 0;
    bool ok = true;
    for (int i = 0; i < 40 && ok; ++i, ++pnm) {
        const Image img = test::random_image(rng, 1 + static_cast<int>(rng.below(80)), 1 + static_cast<int>(rng.below(80)),
                                             i % 2 ? 3 : 1);
        const auto bytes = save_pnm(img);
        const Image back = load_pnm(bytes);
        ok = back == img && save_pnm(back) == bytes;
    }
    const auto pool = make_feature_pool({24, 24}, 2);
    for (int i = 0; i < 20 && ok; ++i, ++cascades) {
        std::vector<Stage> stages;
        const int n_stages = 1 + static_cast<int>(rng.below(4));
        for (int s = 0; s < n_stages; ++s) {
            std::vector<WeightedWeak> weak;
            const int n_weak = 1 + static_cast<int>(rng.below(12));
            for (int w = 0; w < n_weak; ++w)
                weak.push_back({{pool[rng.below(pool.size())], rng.normal() * 1e3, rng.below(2) ? 1 : -1},
                                rng.uniform(0.0, 5.0)});
            stages.emplace_back(std::move(weak), rng.normal() * 10);
        }
        const Cascade c({24, 24}, std::move(stages));
        const std::string text = save_cascade(c);
        const Cascade back = load_cascade(text);
        ok = back == c && save_cascade(back) == text;
    }
    for (int i = 0; i < 20 && ok; ++i, ++pcas) {
        const auto x = test::random_matrix(rng, 3 + rng.below(20), 2 + rng.below(30));
        const auto model = pca_fit(x, PcaTarget::variance(rng.uniform(0.5, 1.0)));
        const std::string text = save_pca(model);
        const PcaModel back = load_pca(text);
        ok = back == model && save_pca(back) == text;
    }
    for (int i = 0; i < 20 && ok; ++i, ++svms) {
        Matrix x;
        std::vector<ClassLabel> y;
        test::separable_set(rng, 10 + rng.below(30), 2 + rng.below(5), x, y);
        const KernelSpec kernel = i % 2 ? KernelSpec::linear() : KernelSpec::rbf(rng.uniform(0.05, 2.0));
        const auto model = svm_train(x, y, {rng.uniform(0.1, 10.0), kernel, 1e-3, 200});
        const std::string text = save_svm(model);
        const SvmModel back = load_svm(text);
        ok = back == model && save_svm(back) == text;
        for (int probe = 0; probe < 20 && ok; ++probe) {
            std::vector<double> v(x.cols());
            for (auto& e : v) e = rng.normal() * 3;
            ok = svm_decision(back, v) == svm_decision(model, v);
        }
    }
    return {ok, std::to_string(pnm) + " PNM, " + std::to_string(cascades) + " CASCADE1, " + std::to_string(pcas) +
                    " PCA1, " + std::to_string(svms) + " SVM1 instances reloaded bit-exact"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "geometry invariant", 1.0, geometry_invariant},
        {2, "integral image oracle", 5.0, integral_oracle},
        {3, "PCA oracle suite", 10.0, pca_oracle},
        {4, "SVM oracle suite", 30.0, svm_oracle},
        {5, "detector fixture", 120.0, detector_fixture},
        {6, "accumulator exhaustive equivalence", 30.0, accumulator_exhaustive},
        {7, "alert timing", 1.0, alert_timing},
        {8, "end-to-end desk-scale run", 180.0, end_to_end},
        {9, "CLI determinism", 180.0, cli_determinism},
        {10, "codec round-trips", 10.0, codec_round_trips},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds < c.limit_seconds;
        const bool pass = outcome.pass && in_time;
        failures += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << ' ' << c.id << ' ' << c.name << ": " << outcome.detail << " ["
                  << fmt(seconds, 3) << " s, limit " << fmt(c.limit_seconds, 4) << " s"
                  << (in_time ? "" : ", over time") << "]" << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
