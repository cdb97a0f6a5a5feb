#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "drowsy/classifier.hpp"
#include "drowsy/error.hpp"
#include "drowsy/random.hpp"
#include "oracles.hpp"

using namespace drowsy;
using namespace test;

namespace {

constexpr auto kPos = ClassLabel::Fatigued;
constexpr auto kNeg = ClassLabel::Alert;

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("labels") {
    CHECK(to_int(kPos) == 1);
    CHECK(to_int(kNeg) == -1);
    CHECK(label_from_int(1) == kPos);
    CHECK(label_from_int(-1) == kNeg);
    CHECK(code_of([] { label_from_int(2); }) == ErrorCode::BadLabel);
    CHECK(code_of([] { label_from_int(0); }) == ErrorCode::BadLabel);
}

TEST_CASE("kernels") {
    const std::vector<double> u{1, 2, 3}, v{-1, 0, 2};
    CHECK(KernelSpec::linear()(u, v) == 5.0);
    CHECK(KernelSpec::rbf(0.5)(u, v) == doctest::Approx(std::exp(-0.5 * 9.0)));
    CHECK(KernelSpec::rbf(0.5)(u, u) == 1.0);
    const auto x = Matrix::from_rows({{0, 0}, {2, 2}});
    CHECK(scale_gamma(x) == doctest::Approx(1.0 / (2 * 1.0)));
    CHECK(scale_gamma(Matrix::from_rows({{3, 3}, {3, 3}})) == 1.0);
}

TEST_CASE("symmetric two-point problem") {
    const auto x = Matrix::from_rows({{-1, 0}, {1, 0}});
    const std::vector<ClassLabel> y{kNeg, kPos};
    const auto model = svm_train(x, y, {10.0, KernelSpec::linear(), 1e-3, 200});
    CHECK(std::abs(model.bias) < 1e-6);
    CHECK(model.support_vectors.rows() == 2);
    CHECK(std::abs(svm_decision(model, std::vector<double>{0, 0})) < 1e-6);
    CHECK(std::abs(svm_decision(model, std::vector<double>{0, 5})) < 1e-6);
    CHECK(svm_decision(model, std::vector<double>{1, 0}) == doctest::Approx(1.0));
    CHECK(svm_decision(model, std::vector<double>{-1, 0}) == doctest::Approx(-1.0));
    CHECK(svm_predict(model, std::vector<double>{0.2, 0}) == kPos);
    CHECK(svm_predict(model, std::vector<double>{-0.2, 0}) == kNeg);
}

TEST_CASE("xor with an rbf kernel") {
    const auto x = Matrix::from_rows({{1, 1}, {-1, -1}, {1, -1}, {-1, 1}});
    const std::vector<ClassLabel> y{kPos, kPos, kNeg, kNeg};
    const auto model = svm_train(x, y, {10.0, KernelSpec::rbf(1.0), 1e-3, 200});
    for (std::size_t i = 0; i < 4; ++i) CHECK(svm_predict(model, x.row(i)) == y[i]);
}

TEST_CASE("prediction tie rule") {
    SvmModel m;
    m.support_vectors = Matrix::from_rows({{1.0}});
    m.dual_coef = {0.0};
    m.kernel = KernelSpec::linear();
    m.bias = 0.0;
    CHECK(svm_predict(m, std::vector<double>{3.0}) == kPos);
    m.bias = 0.7;
    CHECK(svm_predict(m, std::vector<double>{3.0}) == kPos);
    m.bias = -0.7;
    CHECK(svm_predict(m, std::vector<double>{3.0}) == kNeg);
    CHECK(code_of([&] { svm_decision(m, std::vector<double>{1, 2}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("kkt conditions on separable sets") {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        Matrix x;
        std::vector<ClassLabel> y;
        separable_set(rng, 20 + rng.below(30), 2 + rng.below(4), x, y);
        const double c = trial % 2 ? 1.0 : 10.0;
        const KernelSpec kernel = trial % 3 ? KernelSpec::linear() : KernelSpec::rbf(0.3);
        const double tol = 1e-3;
        SmoTrace trace;
        trace.check_feasibility = true;
        const auto model = svm_train(x, y, {c, kernel, tol, 10000}, &trace);
        REQUIRE(trace.converged);
        double eq = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double a = trace.alphas[i];
            const double yf = to_int(y[i]) * trace.outputs[i];
            eq += to_int(y[i]) * a;
            CHECK(a >= 0.0);
            CHECK(a <= c + 1e-9);
            if (a <= 1e-8) CHECK(yf >= 1 - tol);
            else if (a >= c - 1e-8) CHECK(yf <= 1 + tol);
            else CHECK(std::abs(yf - 1) <= tol);
        }
        CHECK(std::abs(eq) < 1e-6);
        double coef_sum = 0;
        for (double dc : model.dual_coef) {
            coef_sum += dc;
            CHECK(std::abs(dc) <= c + 1e-9);
        }
        CHECK(std::abs(coef_sum) < 1e-6);
        // outputs recorded by the solver are the model's decisions
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(svm_decision(model, x.row(i)) == doctest::Approx(trace.outputs[i]).epsilon(1e-9));
        // the objective never decreases
        for (std::size_t s = 1; s < trace.objective.size(); ++s)
            CHECK(trace.objective[s] >= trace.objective[s - 1] - 1e-12);
    }
}

TEST_CASE("free support vectors sit on the margin") {
    Rng rng(4);
    Matrix x;
    std::vector<ClassLabel> y;
    separable_set(rng, 30, 2, x, y);
    SmoTrace trace;
    const auto model = svm_train(x, y, {10.0, KernelSpec::linear(), 1e-3, 500}, &trace);
    bool found = false;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == kPos && trace.alphas[i] > 1e-8 && trace.alphas[i] < 10.0 - 1e-8) {
            CHECK(std::abs(svm_decision(model, x.row(i)) - 1.0) <= 1e-3);
            found = true;
        }
    CHECK(found);
}

TEST_CASE("dual objective matches brute force for four points") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        Matrix x;
        std::vector<ClassLabel> y;
        separable_set(rng, 4, 2, x, y);
        const double c = trial % 2 ? 0.5 : 5.0;
        const KernelSpec kernel = trial % 3 ? KernelSpec::linear() : KernelSpec::rbf(0.5);
        SmoTrace trace;
        svm_train(x, y, {c, kernel, 1e-6, 1000}, &trace);
        const double ours = dual_objective(x, y, trace.alphas, kernel);
        const double oracle = brute_force_dual(x, y, c, kernel);
        CHECK(std::abs(ours - oracle) < 1e-4);
    }
}

TEST_CASE("decision matches a kernel-sum loop") {
    Rng rng(6);
    Matrix x;
    std::vector<ClassLabel> y;
    separable_set(rng, 40, 3, x, y);
    const auto model = svm_train(x, y, {1.0, KernelSpec::rbf(0.4), 1e-3, 200});
    for (int t = 0; t < 20; ++t) {
        std::vector<double> v{rng.normal(), rng.normal(), rng.normal()};
        double expected = model.bias;
        for (std::size_t s = 0; s < model.support_vectors.rows(); ++s) {
            double d2 = 0;
            for (std::size_t j = 0; j < 3; ++j) d2 += (v[j] - model.support_vectors(s, j)) * (v[j] - model.support_vectors(s, j));
            expected += model.dual_coef[s] * std::exp(-0.4 * d2);
        }
        CHECK(std::abs(svm_decision(model, v) - expected) < 1e-10);
    }
}

TEST_CASE("training errors") {
    const auto x = Matrix::from_rows({{0, 1}, {1, 0}, {2, 2}});
    CHECK(code_of([&] { svm_train(x, std::vector<ClassLabel>{kPos, kPos, kPos}, {}); }) == ErrorCode::SingleClass);
    CHECK(code_of([&] { svm_train(Matrix::from_rows({{0, NAN}, {1, 0}}), std::vector<ClassLabel>{kPos, kNeg}, {}); }) ==
          ErrorCode::NonFinite);
    CHECK(code_of([&] { svm_train(x, std::vector<ClassLabel>{kPos, kNeg}, {}); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { svm_train(Matrix::from_rows({{0, 1}}), std::vector<ClassLabel>{kPos}, {}); }) ==
          ErrorCode::TooFewSamples);
}

TEST_CASE("fold assignment") {
    Rng rng(7);
    std::vector<ClassLabel> y(53);
    for (auto& l : y) l = rng.below(3) ? kNeg : kPos;
    for (int folds : {2, 3, 5, 10}) {
        const auto f = assign_folds(y, folds, 42);
        std::vector<int> size(folds), pos(folds), neg(folds);
        for (std::size_t i = 0; i < y.size(); ++i) {
            ++size[f[i]];
            ++(y[i] == kPos ? pos : neg)[f[i]];
        }
        const auto [smin, smax] = std::minmax_element(size.begin(), size.end());
        CHECK(*smin >= int(y.size()) / folds);
        CHECK(*smax <= (int(y.size()) + folds - 1) / folds);
        CHECK(*std::max_element(pos.begin(), pos.end()) - *std::min_element(pos.begin(), pos.end()) <= 1);
        CHECK(*std::max_element(neg.begin(), neg.end()) - *std::min_element(neg.begin(), neg.end()) <= 1);
    }
    CHECK(assign_folds(y, 5, 42) == assign_folds(y, 5, 42));
    CHECK(assign_folds(y, 5, 42) != assign_folds(y, 5, 43));
}

TEST_CASE("group-aware folds keep subjects together") {
    Rng rng(8);
    std::vector<ClassLabel> y(80);
    std::vector<std::string> g(80);
    for (std::size_t i = 0; i < 80; ++i) {
        y[i] = i % 2 ? kPos : kNeg;
        g[i] = "s" + std::to_string(rng.below(10));
    }
    const auto f = assign_folds(y, 5, 1, g);
    std::map<std::string, std::set<int>> folds_of;
    for (std::size_t i = 0; i < 80; ++i) folds_of[g[i]].insert(f[i]);
    for (const auto& [name, set] : folds_of) CHECK(set.size() == 1);
    std::set<int> used(f.begin(), f.end());
    CHECK(used.size() == 5);
    CHECK(code_of([&] { assign_folds(y, 11, 1, g); }) == ErrorCode::TooFewSamples);
}

TEST_CASE("cross validation") {
    Rng rng(9);
    Matrix base;
    std::vector<ClassLabel> yb;
    separable_set(rng, 20, 2, base, yb);
    // duplicate every sample
    Matrix x(40, 2);
    std::vector<ClassLabel> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t j = 0; j < 2; ++j) x(i, j) = base(i % 20, j);
        y[i] = yb[i % 20];
    }
    const SvmParams params{1.0, KernelSpec::linear(), 1e-3, 200};

    std::vector<std::vector<std::size_t>> test_sets;
    const auto report = cross_validate(x, y, 4, params, 5, {},
                                       [&](int, std::span<const std::size_t> train, std::span<const std::size_t> test) {
                                           std::set<std::size_t> tr(train.begin(), train.end());
                                           for (auto t : test) CHECK(tr.count(t) == 0);
                                           CHECK(train.size() + test.size() == 40);
                                           test_sets.emplace_back(test.begin(), test.end());
                                       });
    CHECK(report.mean_accuracy == 1.0);
    CHECK(report.fold_accuracy.size() == 4);
    CHECK(report.confusion.total() == 40);
    CHECK(report.predictions == y);
    std::vector<int> seen(40, 0);
    for (const auto& t : test_sets)
        for (auto i : t) ++seen[i];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));

    CHECK(cross_validate(x, y, 4, params, 5) == report);
    CHECK(cross_validate(x, y, 4, params, 6).fold_of != report.fold_of);

    CHECK(code_of([&] { cross_validate(x, y, 1, params, 5); }) == ErrorCode::TooFewSamples);
    CHECK(code_of([&] { cross_validate(x, std::vector<ClassLabel>(40, kPos), 4, params, 5); }) ==
          ErrorCode::SingleClass);
}

TEST_CASE("confusion counts") {
    Confusion c;
    c.add(kPos, kPos);
    c.add(kPos, kNeg);
    c.add(kNeg, kPos);
    c.add(kNeg, kNeg);
    c.add(kNeg, kNeg);
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 2);
    CHECK(c.total() == 5);
}

TEST_CASE("svm text format") {
    Rng rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix x;
        std::vector<ClassLabel> y;
        separable_set(rng, 20, 3, x, y);
        const auto kernel = trial % 2 ? KernelSpec::linear() : KernelSpec::rbf(rng.uniform(0.01, 2.0));
        const auto model = svm_train(x, y, {rng.uniform(0.1, 10), kernel, 1e-3, 200});
        const auto text = save_svm(model);
        const auto back = load_svm(text);
        CHECK(back == model);
        CHECK(save_svm(back) == text);
        for (int t = 0; t < 10; ++t) {
            std::vector<double> v{rng.normal(), rng.normal(), rng.normal()};
            CHECK(svm_decision(back, v) == svm_decision(model, v));
        }
    }
    CHECK(code_of([] { load_svm("SVM2 1 1 1 linear\n0\n1 1\n"); }) == ErrorCode::VersionMismatch);
    CHECK(code_of([] { load_svm("SVM1 1 1 1 poly\n0\n1 1\n"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { load_svm("SVM1 1 2 1 linear\n0\n1 1\n"); }) == ErrorCode::ParseError);
}
