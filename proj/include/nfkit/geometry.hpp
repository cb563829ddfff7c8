#ifndef NFKIT_GEOMETRY_HPP
#define NFKIT_GEOMETRY_HPP

#include "nfkit/core.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

namespace nfkit {

class Carrier {
public:
    explicit Carrier(double frequency_hz) : frequency_hz_(frequency_hz) {
        detail::require_positive(frequency_hz, "carrier frequency");
    }

    double frequency_hz() const noexcept { return frequency_hz_; }
    double wavelength() const noexcept { return speed_of_light / frequency_hz_; }
    double wavenumber() const noexcept { return two_pi / wavelength(); }

    friend bool operator==(const Carrier&, const Carrier&) = default;

private:
    double frequency_hz_;
};

// Discrete antenna array. Positions are immutable after construction; the
// aperture D is the largest pairwise element distance.
class ArrayGeometry {
public:
    explicit ArrayGeometry(std::vector<Vec3> elements, double spacing = 0.0)
        : elements_(std::move(elements)), spacing_(spacing) {
        detail::require(!elements_.empty(), Errc::invalid_argument, "array needs at least one element");
        for (const auto& p : elements_)
            detail::require(p.allFinite(), Errc::invalid_argument, "element positions must be finite");
        std::vector<std::size_t> order(elements_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        auto lex = [&](std::size_t a, std::size_t b) {
            const Vec3& p = elements_[a];
            const Vec3& q = elements_[b];
            return std::tie(p.x(), p.y(), p.z()) < std::tie(q.x(), q.y(), q.z());
        };
        std::sort(order.begin(), order.end(), lex);
        for (std::size_t i = 1; i < order.size(); ++i)
            detail::require(elements_[order[i]] != elements_[order[i - 1]], Errc::invalid_argument,
                            "array elements must not coincide");
        aperture_ = collinear_extent().value_or(-1.0);
        if (aperture_ < 0.0) {
            aperture_ = 0.0;
            for (std::size_t i = 0; i < elements_.size(); ++i)
                for (std::size_t j = i + 1; j < elements_.size(); ++j)
                    aperture_ = std::max(aperture_, (elements_[i] - elements_[j]).norm());
        }
        centroid_ = Vec3::Zero();
        for (const auto& p : elements_) centroid_ += p;
        centroid_ /= static_cast<double>(elements_.size());
    }

    std::size_t size() const noexcept { return elements_.size(); }
    const std::vector<Vec3>& elements() const noexcept { return elements_; }
    const Vec3& element(std::size_t i) const { return elements_.at(i); }
    double aperture() const noexcept { return aperture_; }
    // Uniform-layout convenience value; 0 for irregular layouts.
    double spacing() const noexcept { return spacing_; }
    const Vec3& centroid() const noexcept { return centroid_; }

    // Contiguous block of elements [first, first + count).
    ArrayGeometry subarray(std::size_t first, std::size_t count) const {
        detail::require(count >= 1 && first + count <= elements_.size(), Errc::invalid_argument,
                        "subarray range out of bounds");
        return ArrayGeometry({elements_.begin() + static_cast<std::ptrdiff_t>(first),
                              elements_.begin() + static_cast<std::ptrdiff_t>(first + count)},
                             spacing_);
    }

    // Same layout shifted by `offset`.
    ArrayGeometry translated(const Vec3& offset) const {
        std::vector<Vec3> moved = elements_;
        for (auto& p : moved) p += offset;
        return ArrayGeometry(std::move(moved), spacing_);
    }

private:
    // Extent along the common line when every element is collinear.
    std::optional<double> collinear_extent() const {
        if (elements_.size() == 1) return 0.0;
        const Vec3& p0 = elements_.front();
        std::size_t far = 0;
        for (std::size_t i = 1; i < elements_.size(); ++i)
            if ((elements_[i] - p0).squaredNorm() > (elements_[far] - p0).squaredNorm()) far = i;
        const double scale = (elements_[far] - p0).norm();
        const Vec3 u = (elements_[far] - p0) / scale;
        double lo = 0.0, hi = 0.0;
        for (const auto& p : elements_) {
            const Vec3 rel = p - p0;
            const double t = rel.dot(u);
            if ((rel - t * u).norm() > 1e-12 * scale) return std::nullopt;
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        return hi - lo;
    }

    std::vector<Vec3> elements_;
    double spacing_ = 0.0;
    double aperture_ = 0.0;
    Vec3 centroid_;
};

// ULA on the y axis, centred at the origin, broadside along +x.
inline ArrayGeometry make_uniform_linear_array(std::size_t n, double spacing) {
    detail::require(n >= 1, Errc::invalid_argument, "array needs at least one element");
    detail::require_positive(spacing, "element spacing");
    std::vector<Vec3> pos;
    pos.reserve(n);
    const double half = 0.5 * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        pos.emplace_back(0.0, (static_cast<double>(i) - half) * spacing, 0.0);
    return ArrayGeometry(std::move(pos), spacing);
}

// Half-wavelength ULA.
inline ArrayGeometry make_uniform_linear_array(std::size_t n, const Carrier& carrier) {
    return make_uniform_linear_array(n, carrier.wavelength() / 2.0);
}

// UPA in the y-z plane; columns along y, rows along z.
inline ArrayGeometry make_uniform_planar_array(std::size_t rows, std::size_t cols, double spacing) {
    detail::require(rows >= 1 && cols >= 1, Errc::invalid_argument, "planar array needs rows, cols >= 1");
    detail::require_positive(spacing, "element spacing");
    std::vector<Vec3> pos;
    pos.reserve(rows * cols);
    const double hr = 0.5 * static_cast<double>(rows - 1);
    const double hc = 0.5 * static_cast<double>(cols - 1);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            pos.emplace_back(0.0, (static_cast<double>(c) - hc) * spacing, (static_cast<double>(r) - hr) * spacing);
    return ArrayGeometry(std::move(pos), spacing);
}

// Rectangular radiating surface in the plane x = center.x(), split into a
// ny x nz grid of equal patches. `depth` is the surface thickness used for
// volume bookkeeping (V = extent_y * extent_z * depth).
class ApertureSurface {
public:
    ApertureSurface(Vec3 center, double extent_y, double extent_z, std::size_t patches_y, std::size_t patches_z,
                    double depth = 1.0)
        : center_(std::move(center)), extent_y_(extent_y), extent_z_(extent_z), patches_y_(patches_y),
          patches_z_(patches_z), depth_(depth) {
        detail::require(center_.allFinite(), Errc::invalid_argument, "surface centre must be finite");
        detail::require_positive(extent_y, "surface extent_y");
        detail::require_positive(extent_z, "surface extent_z");
        detail::require_positive(depth, "surface depth");
        detail::require(patches_y >= 1 && patches_z >= 1, Errc::invalid_argument, "patch counts must be >= 1");
    }

    const Vec3& center() const noexcept { return center_; }
    double extent_y() const noexcept { return extent_y_; }
    double extent_z() const noexcept { return extent_z_; }
    double depth() const noexcept { return depth_; }
    std::size_t patches_y() const noexcept { return patches_y_; }
    std::size_t patches_z() const noexcept { return patches_z_; }
    std::size_t patch_count() const noexcept { return patches_y_ * patches_z_; }
    double patch_area() const noexcept {
        return (extent_y_ / static_cast<double>(patches_y_)) * (extent_z_ / static_cast<double>(patches_z_));
    }
    double area() const noexcept { return extent_y_ * extent_z_; }
    double volume() const noexcept { return area() * depth_; }

    // Patch p = iz * patches_y + iy.
    Vec3 patch_center(std::size_t p) const {
        const std::size_t iy = p % patches_y_;
        const std::size_t iz = p / patches_y_;
        const double dy = extent_y_ / static_cast<double>(patches_y_);
        const double dz = extent_z_ / static_cast<double>(patches_z_);
        return center_ + Vec3(0.0, -0.5 * extent_y_ + (static_cast<double>(iy) + 0.5) * dy,
                              -0.5 * extent_z_ + (static_cast<double>(iz) + 0.5) * dz);
    }

    std::vector<Vec3> patch_centers() const {
        std::vector<Vec3> out;
        out.reserve(patch_count());
        for (std::size_t p = 0; p < patch_count(); ++p) out.push_back(patch_center(p));
        return out;
    }

    bool overlaps(const ApertureSurface& other) const {
        if (std::abs(center_.x() - other.center_.x()) > 1e-12) return false;
        const bool y = std::abs(center_.y() - other.center_.y()) < 0.5 * (extent_y_ + other.extent_y_);
        const bool z = std::abs(center_.z() - other.center_.z()) < 0.5 * (extent_z_ + other.extent_z_);
        return y && z;
    }

private:
    Vec3 center_;
    double extent_y_;
    double extent_z_;
    std::size_t patches_y_;
    std::size_t patches_z_;
    double depth_;
};

enum class FieldRegion { ReactiveNear, RadiatingNear, Far };

inline std::string_view to_string(FieldRegion r) {
    switch (r) {
    case FieldRegion::ReactiveNear: return "reactive_near";
    case FieldRegion::RadiatingNear: return "radiating_near";
    case FieldRegion::Far: return "far";
    }
    return "unknown";
}

struct FieldRegionReport {
    double fresnel_boundary_m = 0.0;
    double rayleigh_distance_m = 0.0;
    double distance_m = 0.0;
    FieldRegion region = FieldRegion::Far;
};

/// Near/far boundary 2 D^2 / lambda.
inline double rayleigh_distance(double aperture_d, double wavelength) {
    detail::require_nonnegative(aperture_d, "aperture");
    detail::require_positive(wavelength, "wavelength");
    return 2.0 * aperture_d * aperture_d / wavelength;
}

/// Reactive/radiating boundary 0.62 sqrt(D^3 / lambda).
inline double fresnel_boundary(double aperture_d, double wavelength) {
    detail::require_nonnegative(aperture_d, "aperture");
    detail::require_positive(wavelength, "wavelength");
    return 0.62 * std::sqrt(aperture_d * aperture_d * aperture_d / wavelength);
}

/// Aperture whose Rayleigh distance equals `distance`: sqrt(distance * lambda / 2).
inline double aperture_for_rayleigh_distance(double distance, double wavelength) {
    detail::require_nonnegative(distance, "distance");
    detail::require_positive(wavelength, "wavelength");
    return std::sqrt(distance * wavelength / 2.0);
}

// Regions are measured from the array centroid. The far threshold is the
// larger boundary, so sub-wavelength apertures where the Fresnel value
// exceeds the Rayleigh value never report RadiatingNear.
inline FieldRegionReport classify_point(const ArrayGeometry& array, const Vec3& point, const Carrier& carrier) {
    detail::require(point.allFinite(), Errc::invalid_argument, "observation point must be finite");
    FieldRegionReport rep;
    rep.fresnel_boundary_m = fresnel_boundary(array.aperture(), carrier.wavelength());
    rep.rayleigh_distance_m = rayleigh_distance(array.aperture(), carrier.wavelength());
    rep.distance_m = (point - array.centroid()).norm();
    const double far = std::max(rep.fresnel_boundary_m, rep.rayleigh_distance_m);
    if (rep.distance_m >= far)
        rep.region = FieldRegion::Far;
    else if (rep.distance_m < rep.fresnel_boundary_m)
        rep.region = FieldRegion::ReactiveNear;
    else
        rep.region = FieldRegion::RadiatingNear;
    return rep;
}

} // namespace nfkit

#endif
