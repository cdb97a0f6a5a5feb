#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drowsy/image.hpp"
#include "drowsy/linalg.hpp"

namespace drowsy {

/// Placement of the eye and mouth windows inside the normalized face.
/// Rect origins are (x = column, y = row).
struct RoiGeometry {
    int face_side = 100;
    Rect eye{10, 20, 80, 30};
    Rect mouth{30, 60, 40, 40};

    std::size_t feature_length() const noexcept {
        return static_cast<std::size_t>(eye.area() + mouth.area());
    }
    /// Throws InvalidArgument unless both windows fit in the face square.
    void validate() const;

    bool operator==(const RoiGeometry&) const = default;
};

inline constexpr std::size_t kFeatureLength = 4000;

struct FaceRois {
    Image eye;
    Image mouth;
};

/// Crop `box` out of a gray frame and resample it to face_side x face_side.
Image normalize_face(const Image& gray, const Rect& box, const RoiGeometry& geometry = {});

/// Pure crops of the eye and mouth windows. Throws WrongDimensions.
FaceRois extract_rois(const Image& face, const RoiGeometry& geometry = {});

/// Eye pixels row-major, then mouth pixels row-major, each scaled to [0, 1].
std::vector<double> assemble(const Image& eye, const Image& mouth, const RoiGeometry& geometry = {});

/// normalize_face -> extract_rois -> assemble.
std::vector<double> face_features(const Image& gray, const Rect& box, const RoiGeometry& geometry = {});

// ---- PCA ----------------------------------------------------------------------

/// Either an explicit component count or the fraction of variance to retain.
class PcaTarget {
public:
    static PcaTarget components(std::size_t k) { return PcaTarget(k, 0.0); }
    static PcaTarget variance(double fraction) { return PcaTarget(0, fraction); }

    bool explicit_count() const noexcept { return k_ != 0; }
    std::size_t count() const noexcept { return k_; }
    double fraction() const noexcept { return fraction_; }

private:
    PcaTarget(std::size_t k, double fraction) : k_(k), fraction_(fraction) {}
    std::size_t k_;
    double fraction_;
};

struct PcaModel {
    std::vector<double> mean;
    Matrix components;                // k x d, orthonormal rows
    std::vector<double> eigenvalues;  // k, non-increasing, >= 0

    std::size_t dim() const noexcept { return mean.size(); }
    std::size_t k() const noexcept { return components.rows(); }
    bool operator==(const PcaModel&) const = default;
};

/// Fits on the rows of `samples`. For n <= d the n x n Gram matrix of the
/// centred data is diagonalized and its eigenvectors lifted back to d-space;
/// otherwise the d x d covariance is diagonalized. Each component's largest
/// magnitude entry is made positive.
PcaModel pca_fit(const Matrix& samples, PcaTarget target = PcaTarget::variance(0.95));

std::vector<double> pca_project(const PcaModel& model, std::span<const double> v);
std::vector<double> pca_reconstruct(const PcaModel& model, std::span<const double> z);

/// Projects every row of `samples`.
Matrix pca_project_rows(const PcaModel& model, const Matrix& samples);

std::string save_pca(const PcaModel& model);
PcaModel load_pca(std::string_view text);

}  // namespace drowsy
