#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drowsy/linalg.hpp"

namespace drowsy {

/// Classifier output: +1 fatigued, -1 alert.
enum class ClassLabel : int { Alert = -1, Fatigued = 1 };

constexpr int to_int(ClassLabel label) noexcept { return static_cast<int>(label); }
/// Throws BadLabel for anything other than +1 / -1.
ClassLabel label_from_int(long long value);

enum class KernelKind { Linear, Rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::Rbf;
    double gamma = 1.0;  // rbf only

    static KernelSpec linear() { return {KernelKind::Linear, 0.0}; }
    static KernelSpec rbf(double gamma) { return {KernelKind::Rbf, gamma}; }

    double operator()(std::span<const double> u, std::span<const double> v) const noexcept;
    bool operator==(const KernelSpec&) const = default;
};

/// gamma = 1 / (k * var(X)) over all entries of X; 1 when X has no spread.
double scale_gamma(const Matrix& x);

struct SvmModel {
    Matrix support_vectors;         // m x k
    std::vector<double> dual_coef;  // alpha_i * y_i
    double bias = 0.0;
    KernelSpec kernel;
    double c = 1.0;

    std::size_t dim() const noexcept { return support_vectors.cols(); }
    bool operator==(const SvmModel&) const = default;
};

struct SvmParams {
    double c = 1.0;
    KernelSpec kernel;
    double tol = 1e-3;
    int max_passes = 200;
};

/// Optional instrumentation of one SMO run.
struct SmoTrace {
    std::vector<double> objective;   // dual objective after every successful pair update
    std::vector<double> alphas;      // final multipliers for every training sample
    std::vector<double> outputs;     // final decision values f(x_i) for every training sample
    int passes = 0;
    bool converged = false;
    bool check_feasibility = false;  // verify box and equality constraints after every step
};

/// Soft-margin SVM dual solved by sequential minimal optimization.
SvmModel svm_train(const Matrix& x, std::span<const ClassLabel> y, const SvmParams& params, SmoTrace* trace = nullptr);

double svm_decision(const SvmModel& model, std::span<const double> x);
/// Decision >= 0 maps to Fatigued.
ClassLabel svm_predict(const SvmModel& model, std::span<const double> x);

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
double dual_objective(const Matrix& x, std::span<const ClassLabel> y, std::span<const double> alpha,
                      const KernelSpec& kernel);

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    void add(ClassLabel truth, ClassLabel predicted) noexcept;
    bool operator==(const Confusion&) const = default;
};

struct CvReport {
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
    Confusion confusion;
    std::vector<int> fold_of;                 // test fold of every sample
    std::vector<ClassLabel> predictions;      // pooled out-of-fold predictions

    bool operator==(const CvReport&) const = default;
};

/// Called once per fold with the training and test indices it uses.
using FoldObserver = std::function<void(int fold, std::span<const std::size_t> train, std::span<const std::size_t> test)>;

/// Seeded, stratified k-fold assignment. With `groups`, whole groups are
/// dealt to folds so that no group appears on both sides of a split.
std::vector<int> assign_folds(std::span<const ClassLabel> y, int folds, std::uint64_t seed,
                              std::span<const std::string> groups = {});

CvReport cross_validate(const Matrix& x, std::span<const ClassLabel> y, int folds, const SvmParams& params,
                        std::uint64_t seed, std::span<const std::string> groups = {},
                        const FoldObserver& observer = {});

std::string save_svm(const SvmModel& model);
SvmModel load_svm(std::string_view text);

}  // namespace drowsy
