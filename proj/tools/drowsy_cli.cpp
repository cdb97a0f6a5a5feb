#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "drowsy/detector_fixture.hpp"
#include "drowsy/error.hpp"
#include "drowsy/pipeline.hpp"
#include "drowsy/text_format.hpp"

namespace fs = std::filesystem;
using namespace drowsy;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kModel = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

// Config file first, then every --set in order.
struct ConfigOptions {
    std::string file;
    std::vector<std::string> sets;

    void add(CLI::App* cmd) {
        cmd->add_option("-c,--config", file, "Config file (key = value lines)")->check(CLI::ExistingFile);
        cmd->add_option("--set", sets, "Override one config key, e.g. --set svm_c=10");
    }

    PipelineConfig build() const {
        PipelineConfig config = file.empty() ? PipelineConfig{} : load_config(file);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
            try {
                set_config_value(config, s.substr(0, eq), s.substr(eq + 1));
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
        }
        return config;
    }
};

int run_synth(const SyntheticSpec& spec, const std::string& out) {
    const auto manifest = synth_generate(spec, out);
    std::cout << "wrote " << spec.n_frames << " frames, manifest " << manifest.string() << '\n';
    return kOk;
}

int run_train(const ConfigOptions& opts, const std::string& manifest, const std::string& out_dir) {
    const auto config = opts.build();
    const auto dataset = ingest(manifest);
    const auto fit = fit_pipeline(dataset, config);
    for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
    const fs::path dir(out_dir);
    write_text(dir / "model.pca", save_pca(fit.model.pca));
    write_text(dir / "model.svm", save_svm(fit.model.svm));
    write_text(dir / "model.pipe", save_pipeline(fit.model));
    std::cout << "frames used " << fit.used << ", skipped " << fit.skipped << '\n'
              << "pca components " << fit.model.pca.k() << '\n'
              << "support vectors " << fit.model.svm.dual_coef.size() << '\n'
              << "training accuracy " << format_real(fit.training_accuracy) << '\n';
    return kOk;
}

nlohmann::json report_json(const MetricsReport& r) {
    nlohmann::json j;
    j["frames"] = r.n;
    j["skipped"] = r.skipped;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision ? nlohmann::json(*r.precision) : nlohmann::json(nullptr);
    j["recall"] = r.recall ? nlohmann::json(*r.recall) : nlohmann::json(nullptr);
    j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}};
    j["fold_accuracy"] = r.fold_accuracy;
    j["mean_fold_accuracy"] = r.mean_fold_accuracy;
    j["onsets"] = r.onsets;
    j["mean_detection_latency"] =
        r.mean_detection_latency ? nlohmann::json(*r.mean_detection_latency) : nlohmann::json(nullptr);
    return j;
}

int run_eval(const ConfigOptions& opts, const std::string& manifest, const std::string& model_path,
             const std::string& json_path) {
    const auto config = opts.build();
    const auto model = load_pipeline(read_text(model_path));
    const auto dataset = ingest(manifest);
    SvmParams solver;
    solver.tol = config.svm_tol;
    solver.max_passes = config.svm_max_passes;
    const auto report = evaluate(model, dataset, config.folds, config.seed, solver, config.alert);
    std::cout << format_metrics(report);
    if (!json_path.empty()) write_text(json_path, report_json(report).dump(2) + '\n');
    return kOk;
}

int run_simulate(const ConfigOptions& opts, const std::string& manifest, const std::string& model_path,
                 const std::string& out) {
    const auto config = opts.build();
    const auto model = load_pipeline(read_text(model_path));
    const auto dataset = ingest(manifest);
    const auto result = infer_dataset(model, dataset, config.alert, config.treat_no_face_as_fatigued);
    const auto text = format_trace(result.trace);
    if (out.empty())
        std::cout << text;
    else
        write_text(out, text);
    return kOk;
}

int run_detect_train(const DetectorFixtureSpec& spec, const CascadeTrainConfig& train, const std::string& out,
                     std::size_t eval_frames) {
    const auto positives = fixture_positives(spec, train.base);
    const auto cascade = train_cascade(positives, fixture_negatives(spec, train.base), train);
    write_text(out, save_cascade(cascade));
    std::cout << "stages " << cascade.stages().size() << ", wrote " << out << '\n';
    if (eval_frames > 0) {
        const auto score = evaluate_detector(cascade, spec, 5000, eval_frames);
        std::cout << "held-out frames " << score.frames << '\n'
                  << "detection rate " << format_real(score.detection_rate()) << '\n'
                  << "false positives per frame " << format_real(score.false_positives_per_frame()) << '\n'
                  << "max false positives in a frame " << score.max_false_positives << '\n';
    }
    return kOk;
}

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError:
        case ErrorCode::VersionMismatch:
        case ErrorCode::ModelMismatch:
        case ErrorCode::DimensionMismatch:
            return kModel;
        case ErrorCode::InvalidArgument:
            return kUsage;
        default:
            return kData;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driver fatigue detection: synthetic data, training, evaluation and alert simulation"};
    app.require_subcommand(1);

    SyntheticSpec synth;
    std::string synth_out;
    std::string light = "normal";
    std::string order = "shuffled";
    auto* cmd_synth = app.add_subcommand("synth", "Render synthetic frames and a manifest");
    cmd_synth->add_option("-o,--out", synth_out, "Output directory")->required();
    cmd_synth->add_option("-n,--frames", synth.n_frames, "Number of frames")->capture_default_str();
    cmd_synth->add_option("--width", synth.frame_w, "Frame width")->capture_default_str();
    cmd_synth->add_option("--height", synth.frame_h, "Frame height")->capture_default_str();
    cmd_synth->add_option("--fraction-fatigued", synth.fraction_fatigued, "Share of fatigued frames")
        ->capture_default_str();
    cmd_synth->add_option("--jitter", synth.jitter, "Max face offset in pixels")->capture_default_str();
    cmd_synth->add_option("--noise", synth.noise_sigma, "Gaussian noise sigma")->capture_default_str();
    cmd_synth->add_option("--light", light, "normal or dim")
        ->check(CLI::IsMember({"normal", "dim"}))
        ->capture_default_str();
    cmd_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    cmd_synth->add_option("--subjects", synth.subjects, "Number of simulated subjects")->capture_default_str();
    cmd_synth->add_option("--order", order, "shuffled, or onset (alert frames first)")
        ->check(CLI::IsMember({"shuffled", "onset"}))
        ->capture_default_str();

    ConfigOptions train_opts;
    std::string train_manifest, train_out = ".";
    auto* cmd_train = app.add_subcommand("train", "Fit PCA and SVM; writes model.pca, model.svm, model.pipe");
    cmd_train->add_option("-m,--manifest", train_manifest, "Dataset manifest")->required();
    cmd_train->add_option("-o,--out-dir", train_out, "Directory for the model files")->capture_default_str();
    train_opts.add(cmd_train);

    ConfigOptions eval_opts;
    std::string eval_manifest, eval_model, eval_json;
    auto* cmd_eval = app.add_subcommand("eval", "Cross-validated metrics for a trained model");
    cmd_eval->add_option("-m,--manifest", eval_manifest, "Dataset manifest")->required();
    cmd_eval->add_option("--model", eval_model, "PIPE1 model file")->required();
    cmd_eval->add_option("--json", eval_json, "Also write the report as JSON");
    eval_opts.add(cmd_eval);

    ConfigOptions sim_opts;
    std::string sim_manifest, sim_model, sim_out;
    auto* cmd_sim = app.add_subcommand("simulate", "Run frames through the model and alert unit; prints the trace");
    cmd_sim->add_option("-m,--manifest", sim_manifest, "Frames in stream order")->required();
    cmd_sim->add_option("--model", sim_model, "PIPE1 model file")->required();
    cmd_sim->add_option("-o,--out", sim_out, "Trace file (default: stdout)");
    sim_opts.add(cmd_sim);
    std::optional<long long> t_low, t_high;
    std::optional<double> alarm_duration, high_persist, sample_period;
    bool water_spray = false;
    cmd_sim->add_option("--t-low", t_low, "Low fatigue threshold");
    cmd_sim->add_option("--t-high", t_high, "High fatigue threshold");
    cmd_sim->add_option("--alarm-duration", alarm_duration, "Seconds before the alarm re-check");
    cmd_sim->add_option("--high-persist", high_persist, "Seconds of high fatigue before stopping the vehicle");
    cmd_sim->add_option("--sample-period", sample_period, "Seconds per frame");
    cmd_sim->add_flag("--water-spray", water_spray, "Enable the water spray actuator");

    DetectorFixtureSpec fixture;
    CascadeTrainConfig cascade_train;
    std::string cascade_out;
    std::size_t eval_frames = 100;
    auto* cmd_det = app.add_subcommand("detect-train", "Train a face cascade on the synthetic detector fixture");
    cmd_det->add_option("-o,--out", cascade_out, "CASCADE1 output file")->required();
    cmd_det->add_option("--positives", fixture.positives, "Positive windows")->capture_default_str();
    cmd_det->add_option("--negatives-per-stage", cascade_train.negatives_per_stage, "Negatives per stage")
        ->capture_default_str();
    cmd_det->add_option("--rounds", cascade_train.rounds_per_stage, "Boosting rounds per stage")
        ->delimiter(',')
        ->capture_default_str();
    cmd_det->add_option("--seed", fixture.seed, "Fixture seed")->capture_default_str();
    cmd_det->add_option("--eval-frames", eval_frames, "Held-out frames to score (0 to skip)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*cmd_synth) {
            synth.light = light == "dim" ? LightLevel::Dim : LightLevel::Normal;
            synth.order = order == "onset" ? FrameOrder::Onset : FrameOrder::Shuffled;
            try {
                synth.validate();
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            return run_synth(synth, synth_out);
        }
        if (*cmd_train) return run_train(train_opts, train_manifest, train_out);
        if (*cmd_eval) return run_eval(eval_opts, eval_manifest, eval_model, eval_json);
        if (*cmd_sim) {
            if (t_low) sim_opts.sets.push_back("t_low=" + std::to_string(*t_low));
            if (t_high) sim_opts.sets.push_back("t_high=" + std::to_string(*t_high));
            if (alarm_duration) sim_opts.sets.push_back("alarm_duration=" + format_real(*alarm_duration));
            if (high_persist) sim_opts.sets.push_back("high_persist=" + format_real(*high_persist));
            if (sample_period) sim_opts.sets.push_back("sample_period=" + format_real(*sample_period));
            if (water_spray) sim_opts.sets.push_back("water_spray=true");
            return run_simulate(sim_opts, sim_manifest, sim_model, sim_out);
        }
        if (*cmd_det) return run_detect_train(fixture, cascade_train, cascade_out, eval_frames);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
