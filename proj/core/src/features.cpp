#include "drowsy/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drowsy/error.hpp"
#include "drowsy/imaging.hpp"
#include "drowsy/text_format.hpp"

namespace drowsy {

void RoiGeometry::validate() const {
    auto fits = [this](const Rect& r) {
        return r.w > 0 && r.h > 0 && r.x >= 0 && r.y >= 0 && r.x + r.w <= face_side && r.y + r.h <= face_side;
    };
    if (face_side <= 0 || !fits(eye) || !fits(mouth))
        throw Error(ErrorCode::InvalidArgument, "eye and mouth windows must fit inside the normalized face");
}

Image normalize_face(const Image& gray, const Rect& box, const RoiGeometry& geometry) {
    if (gray.channels() != 1) throw Error(ErrorCode::InvalidArgument, "normalize_face expects a gray image");
    if (!gray.contains(box)) throw Error(ErrorCode::OutOfBounds, "face box outside image");
    return resize_bilinear(crop(gray, box), geometry.face_side, geometry.face_side);
}

FaceRois extract_rois(const Image& face, const RoiGeometry& geometry) {
    if (face.channels() != 1 || face.width() != geometry.face_side || face.height() != geometry.face_side)
        throw Error(ErrorCode::WrongDimensions, "expected a " + std::to_string(geometry.face_side) + "x" +
                                                    std::to_string(geometry.face_side) + " gray face");
    geometry.validate();
    return {crop(face, geometry.eye), crop(face, geometry.mouth)};
}

std::vector<double> assemble(const Image& eye, const Image& mouth, const RoiGeometry& geometry) {
    if (eye.channels() != 1 || eye.width() != geometry.eye.w || eye.height() != geometry.eye.h)
        throw Error(ErrorCode::WrongDimensions, "eye window has the wrong size");
    if (mouth.channels() != 1 || mouth.width() != geometry.mouth.w || mouth.height() != geometry.mouth.h)
        throw Error(ErrorCode::WrongDimensions, "mouth window has the wrong size");
    std::vector<double> out;
    out.reserve(geometry.feature_length());
    for (auto p : eye.pixels()) out.push_back(p / 255.0);
    for (auto p : mouth.pixels()) out.push_back(p / 255.0);
    return out;
}

std::vector<double> face_features(const Image& gray, const Rect& box, const RoiGeometry& geometry) {
    const auto rois = extract_rois(normalize_face(gray, box, geometry), geometry);
    return assemble(rois.eye, rois.mouth, geometry);
}

namespace {

void fix_sign(std::span<double> v) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    if (v[arg] < 0.0)
        for (double& x : v) x = -x;
}

void normalize(std::span<double> v) {
    const double norm = std::sqrt(dot(v, v));
    for (double& x : v) x /= norm;
}

}  // namespace

PcaModel pca_fit(const Matrix& samples, PcaTarget target) {
    const std::size_t n = samples.rows();
    const std::size_t d = samples.cols();
    if (n < 2 || d == 0) throw Error(ErrorCode::DegenerateData, "need at least two samples");
    for (double x : samples.data())
        if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "non-finite sample value");
    if (target.explicit_count()) {
        if (target.count() > std::min(n - 1, d))
            throw Error(ErrorCode::BadK, "k must lie in [1, min(n-1, d)], got " + std::to_string(target.count()));
    } else if (!(target.fraction() > 0.0 && target.fraction() <= 1.0)) {
        throw Error(ErrorCode::BadK, "variance fraction must lie in (0, 1]");
    }

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += samples(i, j);
    for (double& m : mean) m /= static_cast<double>(n);
    Matrix centered(n, d);
    double total_ss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = samples(i, j) - mean[j];
            centered(i, j) = c;
            total_ss += c * c;
        }
    if (total_ss == 0.0) throw Error(ErrorCode::DegenerateData, "all samples are identical");
    const double denom = static_cast<double>(n - 1);

    std::vector<double> values;
    Matrix basis;  // candidate components as rows
    if (n <= d) {
        Matrix gram(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) gram(i, j) = gram(j, i) = dot(centered.row(i), centered.row(j)) / denom;
        const auto eig = jacobi_eigen(std::move(gram));
        values = eig.values;
        basis = Matrix(n, d);
        for (std::size_t c = 0; c < n; ++c) {
            auto row = basis.row(c);
            for (std::size_t i = 0; i < n; ++i) {
                const double u = eig.vectors(i, c);
                if (u == 0.0) continue;
                const auto src = centered.row(i);
                for (std::size_t j = 0; j < d; ++j) row[j] += u * src[j];
            }
        }
    } else {
        Matrix cov(d, d);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += centered(i, a) * centered(i, b);
                cov(a, b) = cov(b, a) = s / denom;
            }
        const auto eig = jacobi_eigen(std::move(cov));
        values = eig.values;
        basis = Matrix(d, d);
        for (std::size_t c = 0; c < d; ++c)
            for (std::size_t j = 0; j < d; ++j) basis(c, j) = eig.vectors(j, c);
    }

    // Numerical rank: eigenvalues indistinguishable from zero carry no direction.
    const double lambda_max = std::max(values.front(), 0.0);
    std::size_t rank = 0;
    while (rank < values.size() && values[rank] > 1e-10 * lambda_max) ++rank;

    std::size_t k = 0;
    if (target.explicit_count()) {
        k = target.count();
        if (k > rank)
            throw Error(ErrorCode::BadK, "k = " + std::to_string(k) + " exceeds the data rank " + std::to_string(rank));
    } else {
        double total = 0.0;
        for (std::size_t i = 0; i < rank; ++i) total += values[i];
        double cum = 0.0;
        while (k < rank) {
            cum += values[k++];
            if (cum >= target.fraction() * total * (1.0 - 1e-12)) break;
        }
    }

    PcaModel model;
    model.mean = std::move(mean);
    model.components = Matrix(k, d);
    model.eigenvalues.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t c = 0; c < k; ++c) {
        auto row = model.components.row(c);
        std::copy(basis.row(c).begin(), basis.row(c).end(), row.begin());
        // Two passes of modified Gram-Schmidt against the earlier rows keep
        // lifted Gram-path vectors orthonormal to working precision.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t p = 0; p < c; ++p) {
                const auto prev = model.components.row(p);
                const double proj = dot(row, prev);
                for (std::size_t j = 0; j < d; ++j) row[j] -= proj * prev[j];
            }
            normalize(row);
        }
        fix_sign(row);
        model.eigenvalues[c] = std::max(model.eigenvalues[c], 0.0);
    }
    return model;
}

std::vector<double> pca_project(const PcaModel& model, std::span<const double> v) {
    if (v.size() != model.dim())
        throw Error(ErrorCode::DimensionMismatch,
                    "expected length " + std::to_string(model.dim()) + ", got " + std::to_string(v.size()));
    std::vector<double> centered(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) centered[j] = v[j] - model.mean[j];
    std::vector<double> z(model.k());
    for (std::size_t c = 0; c < model.k(); ++c) z[c] = dot(model.components.row(c), centered);
    return z;
}

std::vector<double> pca_reconstruct(const PcaModel& model, std::span<const double> z) {
    if (z.size() != model.k())
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(model.k()) + " coefficients, got " + std::to_string(z.size()));
    std::vector<double> out = model.mean;
    for (std::size_t c = 0; c < model.k(); ++c) {
        const auto row = model.components.row(c);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += z[c] * row[j];
    }
    return out;
}

Matrix pca_project_rows(const PcaModel& model, const Matrix& samples) {
    Matrix out(samples.rows(), model.k());
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        const auto z = pca_project(model, samples.row(i));
        std::copy(z.begin(), z.end(), out.row(i).begin());
    }
    return out;
}

std::string save_pca(const PcaModel& model) {
    std::ostringstream out;
    out << "PCA1 " << model.dim() << ' ' << model.k() << '\n';
    for (std::size_t j = 0; j < model.dim(); ++j) out << (j ? " " : "") << format_real(model.mean[j]);
    out << '\n';
    for (std::size_t c = 0; c < model.k(); ++c) {
        out << format_real(model.eigenvalues[c]);
        for (double x : model.components.row(c)) out << ' ' << format_real(x);
        out << '\n';
    }
    return out.str();
}

PcaModel load_pca(std::string_view text) {
    LineReader reader(text);
    const auto header = split_ws(reader.next("PCA1 header"));
    if (header.empty()) throw Error(ErrorCode::ParseError, "line 1: empty header");
    if (header[0] != "PCA1") {
        if (header[0].starts_with("PCA"))
            throw Error(ErrorCode::VersionMismatch, "unsupported PCA version '" + std::string(header[0]) + "'");
        throw Error(ErrorCode::ParseError, "line 1: expected PCA1 header");
    }
    if (header.size() != 3) throw Error(ErrorCode::ParseError, "line 1: header needs <d> <k>");
    const auto d = parse_integer(header[1], 1);
    const auto k = parse_integer(header[2], 1);
    if (d <= 0 || k <= 0 || k > d) throw Error(ErrorCode::ParseError, "line 1: bad dimensions");

    PcaModel model;
    const auto mean_fields = split_ws(reader.next("mean line"));
    if (mean_fields.size() != static_cast<std::size_t>(d))
        throw Error(ErrorCode::ParseError, "line 2: expected " + std::to_string(d) + " mean entries");
    for (auto f : mean_fields) model.mean.push_back(parse_real(f, 2));
    model.components = Matrix(static_cast<std::size_t>(k), static_cast<std::size_t>(d));
    for (long long c = 0; c < k; ++c) {
        const auto fields = split_ws(reader.next("component line"));
        const std::size_t ln = reader.line_number();
        if (fields.size() != static_cast<std::size_t>(d) + 1)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(ln) + ": expected eigenvalue and " +
                                                   std::to_string(d) + " entries");
        model.eigenvalues.push_back(parse_real(fields[0], ln));
        auto row = model.components.row(static_cast<std::size_t>(c));
        for (long long j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = parse_real(fields[static_cast<std::size_t>(j) + 1], ln);
    }
    while (!reader.at_end())
        if (!split_ws(reader.next("end")).empty())
            throw Error(ErrorCode::ParseError, "line " + std::to_string(reader.line_number()) + ": trailing content");
    return model;
}

}  // namespace drowsy
