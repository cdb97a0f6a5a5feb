#include "drowsy/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "drowsy/error.hpp"
#include "drowsy/random.hpp"
#include "drowsy/text_format.hpp"

namespace drowsy {

ClassLabel label_from_int(long long value) {
    if (value == 1) return ClassLabel::Fatigued;
    if (value == -1) return ClassLabel::Alert;
    throw Error(ErrorCode::BadLabel, "label must be +1 or -1, got " + std::to_string(value));
}

double KernelSpec::operator()(std::span<const double> u, std::span<const double> v) const noexcept {
    if (kind == KernelKind::Linear) return dot(u, v);
    double d2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double scale_gamma(const Matrix& x) {
    const auto values = x.data();
    if (values.empty()) return 1.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    if (!(var > 0.0)) return 1.0;
    return 1.0 / (static_cast<double>(x.cols()) * var);
}

namespace {

constexpr std::size_t kFullCacheLimit = 4096;

class KernelMatrix {
public:
    KernelMatrix(const Matrix& x, const KernelSpec& kernel) : x_(x), kernel_(kernel), n_(x.rows()) {
        diag_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) diag_[i] = kernel_(x_.row(i), x_.row(i));
        if (n_ <= kFullCacheLimit) {
            cache_ = Matrix(n_, n_);
            for (std::size_t i = 0; i < n_; ++i) {
                cache_(i, i) = diag_[i];
                for (std::size_t j = i + 1; j < n_; ++j) cache_(i, j) = cache_(j, i) = kernel_(x_.row(i), x_.row(j));
            }
        }
    }

    double operator()(std::size_t i, std::size_t j) const noexcept {
        if (i == j) return diag_[i];
        if (cache_.rows() != 0) return cache_(i, j);
        return kernel_(x_.row(i), x_.row(j));
    }

private:
    const Matrix& x_;
    KernelSpec kernel_;
    std::size_t n_;
    std::vector<double> diag_;
    Matrix cache_;
};

void check_training_input(const Matrix& x, std::span<const ClassLabel> y, const SvmParams& params) {
    if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "sample and label counts differ");
    if (x.rows() < 2) throw Error(ErrorCode::TooFewSamples, "need at least two samples");
    const bool has_pos = std::find(y.begin(), y.end(), ClassLabel::Fatigued) != y.end();
    const bool has_neg = std::find(y.begin(), y.end(), ClassLabel::Alert) != y.end();
    if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClass, "training data holds a single class");
    if (!(params.c > 0.0) || !std::isfinite(params.c)) throw Error(ErrorCode::InvalidArgument, "C must be positive");
    if (!(params.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
    if (params.max_passes < 1) throw Error(ErrorCode::InvalidArgument, "max_passes must be >= 1");
    if (params.kernel.kind == KernelKind::Rbf && !(params.kernel.gamma > 0.0))
        throw Error(ErrorCode::InvalidArgument, "rbf gamma must be positive");
    for (double v : x.data())
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite feature value");
}

class SmoSolver {
public:
    SmoSolver(const Matrix& x, std::span<const ClassLabel> y, const SvmParams& params, SmoTrace* trace)
        : kernel_(x, params.kernel), c_(params.c), tol_(params.tol), n_(x.rows()), trace_(trace) {
        y_.reserve(n_);
        for (auto l : y) y_.push_back(static_cast<double>(to_int(l)));
        alpha_.assign(n_, 0.0);
        g_.assign(n_, 0.0);
        bias_ = compute_bias();
    }

    void run(int max_passes) {
        int passes = 0;
        bool converged = false;
        while (passes < max_passes) {
            int changed = 0;
            for (std::size_t i = 0; i < n_; ++i)
                if (violates(i) && optimize(i)) ++changed;
            ++passes;
            if (changed == 0) {
                converged = true;
                break;
            }
        }
        if (trace_) {
            trace_->passes = passes;
            trace_->converged = converged;
            trace_->alphas = alpha_;
            trace_->outputs.resize(n_);
            for (std::size_t i = 0; i < n_; ++i) trace_->outputs[i] = g_[i] + bias_;
        }
    }

    const std::vector<double>& alpha() const noexcept { return alpha_; }
    double bias() const noexcept { return bias_; }

private:
    double error(std::size_t i) const noexcept { return g_[i] + bias_ - y_[i]; }

    bool violates(std::size_t i) const noexcept {
        const double r = y_[i] * error(i);
        return (r < -tol_ && alpha_[i] < c_) || (r > tol_ && alpha_[i] > 0.0);
    }

    bool optimize(std::size_t i) {
        const double ei = error(i);
        std::size_t best = i;
        double gap = -1.0;
        for (std::size_t j = 0; j < n_; ++j) {
            if (j == i) continue;
            const double d = std::abs(ei - error(j));
            if (d > gap) {
                gap = d;
                best = j;
            }
        }
        if (best != i && take_step(i, best)) return true;
        for (std::size_t off = 1; off < n_; ++off) {
            const std::size_t j = (i + off) % n_;
            if (j != best && take_step(i, j)) return true;
        }
        return false;
    }

    bool take_step(std::size_t i, std::size_t j) {
        const double ai = alpha_[i];
        const double aj = alpha_[j];
        const double yi = y_[i];
        const double yj = y_[j];
        const double s = yi * yj;
        double lo, hi;
        if (s < 0) {
            lo = std::max(0.0, aj - ai);
            hi = std::min(c_, c_ + aj - ai);
        } else {
            lo = std::max(0.0, ai + aj - c_);
            hi = std::min(c_, ai + aj);
        }
        if (hi - lo < 1e-12 * c_) return false;

        const double kij = kernel_(i, j);
        const double eta = kernel_(i, i) + kernel_(j, j) - 2.0 * kij;
        const double ei = error(i);
        const double ej = error(j);
        // Objective gain of moving alpha_j by delta along the constraint line.
        auto gain = [&](double delta) { return delta * yj * (ei - ej) - 0.5 * eta * delta * delta; };

        double aj_new;
        if (eta > 1e-12) {
            aj_new = std::clamp(aj + yj * (ei - ej) / eta, lo, hi);
        } else {
            const double g_lo = gain(lo - aj);
            const double g_hi = gain(hi - aj);
            if (g_lo > g_hi + 1e-12) aj_new = lo;
            else if (g_hi > g_lo + 1e-12) aj_new = hi;
            else return false;
        }
        if (std::abs(aj_new - aj) < 1e-10 * (aj_new + aj + 1e-10)) return false;
        if (gain(aj_new - aj) <= 0.0) return false;

        double ai_new = ai + s * (aj - aj_new);
        auto snap = [this](double a) {
            if (a < 1e-12 * c_) return 0.0;
            if (a > c_ * (1.0 - 1e-12)) return c_;
            return a;
        };
        ai_new = snap(ai_new);
        aj_new = snap(aj_new);

        const double di = yi * (ai_new - ai);
        const double dj = yj * (aj_new - aj);
        for (std::size_t k = 0; k < n_; ++k) g_[k] += di * kernel_(i, k) + dj * kernel_(j, k);
        alpha_[i] = ai_new;
        alpha_[j] = aj_new;
        bias_ = compute_bias();

        if (trace_) {
            if (trace_->check_feasibility) check_feasible();
            double w = 0.0;
            for (std::size_t k = 0; k < n_; ++k) w += alpha_[k] - 0.5 * alpha_[k] * y_[k] * g_[k];
            trace_->objective.push_back(w);
        }
        return true;
    }

    // Average over free multipliers; otherwise the midpoint of the interval
    // that the bound multipliers' KKT conditions allow.
    double compute_bias() const noexcept {
        double sum = 0.0;
        std::size_t free = 0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n_; ++k) {
            const double target = y_[k] - g_[k];
            if (alpha_[k] > 0.0 && alpha_[k] < c_) {
                sum += target;
                ++free;
            } else if ((alpha_[k] == 0.0) == (y_[k] > 0)) {
                lo = std::max(lo, target);
            } else {
                hi = std::min(hi, target);
            }
        }
        if (free > 0) return sum / static_cast<double>(free);
        if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
        if (std::isfinite(lo)) return lo;
        if (std::isfinite(hi)) return hi;
        return 0.0;
    }

    void check_feasible() const {
        double eq = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
            if (alpha_[k] < 0.0 || alpha_[k] > c_)
                throw Error(ErrorCode::InvalidArgument, "SMO left the box constraint");
            eq += alpha_[k] * y_[k];
        }
        if (std::abs(eq) > 1e-6) throw Error(ErrorCode::InvalidArgument, "SMO broke the equality constraint");
    }

    KernelMatrix kernel_;
    double c_;
    double tol_;
    std::size_t n_;
    SmoTrace* trace_;
    std::vector<double> y_;
    std::vector<double> alpha_;
    std::vector<double> g_;  // sum_j alpha_j y_j K(i, j), without bias
    double bias_ = 0.0;
};

}  // namespace

SvmModel svm_train(const Matrix& x, std::span<const ClassLabel> y, const SvmParams& params, SmoTrace* trace) {
    check_training_input(x, y, params);
    SmoSolver solver(x, y, params, trace);
    solver.run(params.max_passes);

    const auto& alpha = solver.alpha();
    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] > 1e-8) sv.push_back(i);
    if (sv.empty()) throw Error(ErrorCode::DegenerateData, "SMO produced no support vectors");

    SvmModel model;
    model.support_vectors = Matrix(sv.size(), x.cols());
    model.dual_coef.reserve(sv.size());
    for (std::size_t m = 0; m < sv.size(); ++m) {
        std::copy(x.row(sv[m]).begin(), x.row(sv[m]).end(), model.support_vectors.row(m).begin());
        model.dual_coef.push_back(alpha[sv[m]] * to_int(y[sv[m]]));
    }
    model.bias = solver.bias();
    model.kernel = params.kernel;
    model.c = params.c;
    return model;
}

double svm_decision(const SvmModel& model, std::span<const double> x) {
    if (x.size() != model.dim())
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(model.dim()) + " inputs, got " + std::to_string(x.size()));
    double f = model.bias;
    for (std::size_t m = 0; m < model.dual_coef.size(); ++m)
        f += model.dual_coef[m] * model.kernel(model.support_vectors.row(m), x);
    return f;
}

ClassLabel svm_predict(const SvmModel& model, std::span<const double> x) {
    return svm_decision(model, x) >= 0.0 ? ClassLabel::Fatigued : ClassLabel::Alert;
}

double dual_objective(const Matrix& x, std::span<const ClassLabel> y, std::span<const double> alpha,
                      const KernelSpec& kernel) {
    double linear = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        linear += alpha[i];
        for (std::size_t j = 0; j < alpha.size(); ++j)
            quad += alpha[i] * alpha[j] * to_int(y[i]) * to_int(y[j]) * kernel(x.row(i), x.row(j));
    }
    return linear - 0.5 * quad;
}

void Confusion::add(ClassLabel truth, ClassLabel predicted) noexcept {
    if (truth == ClassLabel::Fatigued) (predicted == ClassLabel::Fatigued ? tp : fn)++;
    else (predicted == ClassLabel::Fatigued ? fp : tn)++;
}

std::vector<int> assign_folds(std::span<const ClassLabel> y, int folds, std::uint64_t seed,
                              std::span<const std::string> groups) {
    if (folds < 2) throw Error(ErrorCode::TooFewSamples, "need at least two folds");
    if (y.size() < static_cast<std::size_t>(folds))
        throw Error(ErrorCode::TooFewSamples, "fewer samples than folds");
    if (!groups.empty() && groups.size() != y.size())
        throw Error(ErrorCode::DimensionMismatch, "group and label counts differ");
    Rng rng(seed);
    std::vector<int> fold_of(y.size(), 0);

    if (groups.empty()) {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < y.size(); ++i) (y[i] == ClassLabel::Fatigued ? pos : neg).push_back(i);
        rng.shuffle(std::span<std::size_t>(pos));
        rng.shuffle(std::span<std::size_t>(neg));
        std::size_t counter = 0;
        for (auto i : pos) fold_of[i] = static_cast<int>(counter++ % folds);
        for (auto i : neg) fold_of[i] = static_cast<int>(counter++ % folds);
        return fold_of;
    }

    std::vector<std::string> names;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        auto& m = members[groups[i]];
        if (m.empty()) names.push_back(groups[i]);
        m.push_back(i);
    }
    if (names.size() < static_cast<std::size_t>(folds))
        throw Error(ErrorCode::TooFewSamples, "fewer groups than folds");
    rng.shuffle(std::span<std::string>(names));
    std::vector<std::size_t> fold_size(folds, 0);
    for (const auto& name : names) {
        const auto target = static_cast<int>(std::min_element(fold_size.begin(), fold_size.end()) - fold_size.begin());
        for (auto i : members[name]) fold_of[i] = target;
        fold_size[target] += members[name].size();
    }
    return fold_of;
}

CvReport cross_validate(const Matrix& x, std::span<const ClassLabel> y, int folds, const SvmParams& params,
                        std::uint64_t seed, std::span<const std::string> groups, const FoldObserver& observer) {
    if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "sample and label counts differ");
    const bool has_pos = std::find(y.begin(), y.end(), ClassLabel::Fatigued) != y.end();
    const bool has_neg = std::find(y.begin(), y.end(), ClassLabel::Alert) != y.end();
    if (folds < 2 || y.size() < static_cast<std::size_t>(folds))
        throw Error(ErrorCode::TooFewSamples, "need folds >= 2 and at least one sample per fold");
    if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClass, "data holds a single class");

    CvReport report;
    report.fold_of = assign_folds(y, folds, seed, groups);
    report.predictions.assign(y.size(), ClassLabel::Alert);
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < y.size(); ++i) (report.fold_of[i] == f ? test : train).push_back(i);
        if (observer) observer(f, train, test);
        Matrix xt(train.size(), x.cols());
        std::vector<ClassLabel> yt;
        for (std::size_t r = 0; r < train.size(); ++r) {
            std::copy(x.row(train[r]).begin(), x.row(train[r]).end(), xt.row(r).begin());
            yt.push_back(y[train[r]]);
        }
        const SvmModel model = svm_train(xt, yt, params);
        std::size_t correct = 0;
        for (auto i : test) {
            const ClassLabel p = svm_predict(model, x.row(i));
            report.predictions[i] = p;
            report.confusion.add(y[i], p);
            if (p == y[i]) ++correct;
        }
        report.fold_accuracy.push_back(test.empty() ? 0.0 : static_cast<double>(correct) / test.size());
    }
    report.mean_accuracy =
        std::accumulate(report.fold_accuracy.begin(), report.fold_accuracy.end(), 0.0) / report.fold_accuracy.size();
    return report;
}

std::string save_svm(const SvmModel& model) {
    std::ostringstream out;
    out << "SVM1 " << model.dim() << ' ' << model.dual_coef.size() << ' ' << format_real(model.c) << ' ';
    if (model.kernel.kind == KernelKind::Linear) out << "linear";
    else out << "rbf " << format_real(model.kernel.gamma);
    out << '\n' << format_real(model.bias) << '\n';
    for (std::size_t m = 0; m < model.dual_coef.size(); ++m) {
        out << format_real(model.dual_coef[m]);
        for (double v : model.support_vectors.row(m)) out << ' ' << format_real(v);
        out << '\n';
    }
    return out.str();
}

SvmModel load_svm(std::string_view text) {
    LineReader reader(text);
    const auto header = split_ws(reader.next("SVM1 header"));
    if (header.empty()) throw Error(ErrorCode::ParseError, "line 1: empty header");
    if (header[0] != "SVM1") {
        if (header[0].starts_with("SVM"))
            throw Error(ErrorCode::VersionMismatch, "unsupported SVM version '" + std::string(header[0]) + "'");
        throw Error(ErrorCode::ParseError, "line 1: expected SVM1 header");
    }
    if (header.size() < 5) throw Error(ErrorCode::ParseError, "line 1: header needs <k> <m> <C> <kernel>");
    const auto k = parse_integer(header[1], 1);
    const auto m = parse_integer(header[2], 1);
    if (k <= 0 || m <= 0) throw Error(ErrorCode::ParseError, "line 1: bad dimensions");
    SvmModel model;
    model.c = parse_real(header[3], 1);
    if (!(model.c > 0.0)) throw Error(ErrorCode::ParseError, "line 1: C must be positive");
    if (header[4] == "linear" && header.size() == 5) {
        model.kernel = KernelSpec::linear();
    } else if (header[4] == "rbf" && header.size() == 6) {
        model.kernel = KernelSpec::rbf(parse_real(header[5], 1));
        if (!(model.kernel.gamma > 0.0)) throw Error(ErrorCode::ParseError, "line 1: gamma must be positive");
    } else {
        throw Error(ErrorCode::ParseError, "line 1: bad kernel '" + std::string(header[4]) + "'");
    }
    const auto bias_fields = split_ws(reader.next("bias line"));
    if (bias_fields.size() != 1) throw Error(ErrorCode::ParseError, "line 2: expected the bias");
    model.bias = parse_real(bias_fields[0], 2);
    model.support_vectors = Matrix(static_cast<std::size_t>(m), static_cast<std::size_t>(k));
    for (long long i = 0; i < m; ++i) {
        const auto fields = split_ws(reader.next("support vector line"));
        const std::size_t ln = reader.line_number();
        if (fields.size() != static_cast<std::size_t>(k) + 1)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(ln) + ": expected coefficient and " +
                                                   std::to_string(k) + " entries");
        model.dual_coef.push_back(parse_real(fields[0], ln));
        auto row = model.support_vectors.row(static_cast<std::size_t>(i));
        for (long long j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = parse_real(fields[static_cast<std::size_t>(j) + 1], ln);
    }
    while (!reader.at_end())
        if (!split_ws(reader.next("end")).empty())
            throw Error(ErrorCode::ParseError, "line " + std::to_string(reader.line_number()) + ": trailing content");
    return model;
}

}  // namespace drowsy
