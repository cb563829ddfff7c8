#ifndef NFKIT_ANALYSIS_HPP
#define NFKIT_ANALYSIS_HPP

#include "nfkit/channel.hpp"

#include <Eigen/SVD>

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace nfkit {

struct ScalingCurve {
    std::vector<double> sizes;
    std::vector<double> received_power; // W
    std::string model;
};

struct DofReport {
    std::size_t empirical_dof = 1;
    double bound_dof = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> singular_values; // descending
};

/// Received power P_t ||h||^2 under maximum-ratio transmission.
inline double received_power_mrt(const ChannelMatrix& channel, double transmit_power) {
    detail::require_nonnegative(transmit_power, "transmit power");
    const double g = channel.entries.squaredNorm();
    if (!(g > 0.0)) throw Error(Errc::degenerate_channel, "channel is identically zero");
    return transmit_power * g;
}

// Symmetric ULA growth: element k sits at y = s * ceil(k/2) * (+1 for odd k,
// -1 for even k > 0), so every prefix is the previous array plus edge elements.
struct UlaGrowth {
    double spacing = 0.0;

    ArrayGeometry array(std::size_t n) const {
        detail::require_positive(spacing, "growth spacing");
        detail::require(n >= 1, Errc::invalid_argument, "growth size must be >= 1");
        std::vector<Vec3> pos;
        pos.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double step = static_cast<double>((k + 1) / 2);
            pos.emplace_back(0.0, (k % 2 == 1 ? 1.0 : -1.0) * step * spacing, 0.0);
        }
        return ArrayGeometry(std::move(pos), spacing);
    }
};

namespace detail {

inline void require_increasing(std::span<const double> sizes) {
    require(!sizes.empty(), Errc::invalid_argument, "size list is empty");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        require(sizes[i] > sizes[i - 1], Errc::invalid_argument, "sizes must be strictly increasing");
}

} // namespace detail

inline ScalingCurve power_scaling_curve(const UlaGrowth& growth, const Vec3& receiver, const Carrier& carrier,
                                        std::span<const double> element_counts, double transmit_power = 1.0) {
    detail::require_positive(growth.spacing, "growth spacing");
    detail::require_increasing(element_counts);
    ScalingCurve curve{{}, {}, "discrete_ula"};
    for (double n : element_counts) {
        detail::require(n >= 1.0 && n == std::floor(n), Errc::invalid_argument, "element counts must be integers >= 1");
        const auto array = growth.array(static_cast<std::size_t>(n));
        curve.sizes.push_back(n);
        curve.received_power.push_back(received_power_mrt(nusw_channel(array, receiver, carrier), transmit_power));
    }
    return curve;
}

/// Limit of the broadside ULA power sum over infinitely many elements:
/// P_t (lambda/4pi)^2 sum_k 1/(d^2 + k^2 s^2) = P_t (lambda/4pi)^2 (pi/(s d)) coth(pi d / s).
inline double ula_power_ceiling(double spacing, double broadside_distance, const Carrier& carrier,
                                double transmit_power = 1.0) {
    detail::require_positive(spacing, "spacing");
    detail::require_positive(broadside_distance, "distance");
    const double a = carrier.wavelength() / (4.0 * pi);
    const double x = pi * broadside_distance / spacing;
    return transmit_power * a * a * (pi / (spacing * broadside_distance)) / std::tanh(x);
}

struct CharacteristicVolume {
    double side_m = 0.0;
    double volume_m3 = 0.0;
    double area_m2() const { return side_m * side_m; }
};

/// Largest cube whose Rayleigh distance is `distance`: side sqrt(d lambda / 2).
inline CharacteristicVolume characteristic_volume(double distance, const Carrier& carrier) {
    detail::require_positive(distance, "distance");
    const double s = aperture_for_rayleigh_distance(distance, carrier.wavelength());
    return {s, s * s * s};
}

// Continuous-aperture received power. Each patch radiates as an aperture with
// gain 4 pi A / lambda^2, so a patch contributes P_t A / (4 pi d^2), i.e.
// P_t * 4 pi * A * |G|^2. An aperture of one characteristic volume therefore
// reproduces the aperture Friis power at its far-field boundary.
inline double continuous_received_power(std::span<const ApertureSurface> surfaces, const Vec3& receiver,
                                        const Carrier& carrier, double transmit_power = 1.0) {
    detail::require_nonnegative(transmit_power, "transmit power");
    double sum = 0.0;
    for (const auto& s : surfaces) {
        const double area = s.patch_area();
        for (std::size_t p = 0; p < s.patch_count(); ++p)
            sum += area * std::norm(greens_function(s.patch_center(p), receiver, carrier));
    }
    return transmit_power * 4.0 * pi * sum;
}

inline double continuous_received_power(const ApertureSurface& surface, const Vec3& receiver, const Carrier& carrier,
                                        double transmit_power = 1.0) {
    return continuous_received_power(std::span<const ApertureSurface>(&surface, 1), receiver, carrier,
                                     transmit_power);
}

// Strip aperture centred at the origin in the x = 0 plane, fixed height along
// z, growing symmetrically along y. Patches are at most `patch_size` wide.
struct StripGrowth {
    double height = 0.0;
    double patch_size = 0.0;

    ApertureSurface surface(double length) const {
        detail::require_positive(height, "strip height");
        detail::require_positive(patch_size, "patch size");
        const auto ny = static_cast<std::size_t>(std::ceil(length / patch_size - 1e-9));
        const auto nz = static_cast<std::size_t>(std::ceil(height / patch_size - 1e-9));
        return ApertureSurface(Vec3::Zero(), length, height, std::max<std::size_t>(ny, 1),
                               std::max<std::size_t>(nz, 1));
    }
};

inline ScalingCurve continuous_power_scaling(const StripGrowth& growth, const Vec3& receiver, const Carrier& carrier,
                                             std::span<const double> lengths, double transmit_power = 1.0) {
    detail::require_positive(growth.height, "strip height");
    detail::require_positive(growth.patch_size, "patch size");
    detail::require_increasing(lengths);
    ScalingCurve curve{{}, {}, "continuous_strip"};
    for (double len : lengths) {
        detail::require_nonnegative(len, "strip length");
        curve.sizes.push_back(len);
        curve.received_power.push_back(
            len == 0.0 ? 0.0 : continuous_received_power(growth.surface(len), receiver, carrier, transmit_power));
    }
    return curve;
}

/// Descending singular values.
inline std::vector<double> singular_values(const CMatrix& m) {
    Eigen::BDCSVD<CMatrix> svd(m);
    const auto& s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

/// Number of singular values at or above threshold * sigma_1.
inline std::size_t count_above(const std::vector<double>& sv, double threshold) {
    if (sv.empty() || !(sv.front() > 0.0)) return 0;
    std::size_t n = 0;
    for (double s : sv)
        if (s >= threshold * sv.front()) ++n;
    return n;
}

inline constexpr double default_dof_threshold = 0.01;

/// Effective rank: singular values within `threshold` of the largest.
inline DofReport effective_dof(const ChannelMatrix& channel, double threshold = default_dof_threshold) {
    detail::require(channel.entries.size() > 0, Errc::invalid_argument, "empty channel matrix");
    detail::require(threshold > 0.0 && threshold < 1.0, Errc::invalid_argument, "threshold must lie in (0, 1)");
    DofReport rep;
    rep.singular_values = singular_values(channel.entries);
    if (!(rep.singular_values.front() > 0.0)) throw Error(Errc::degenerate_channel, "channel matrix is zero");
    rep.empirical_dof = count_above(rep.singular_values, threshold);
    return rep;
}

/// min{N_T, N_R, 2 L_T^2 L_R^2 / (d lambda)^2}.
inline double dof_bound_discrete(double n_t, double n_r, double l_t, double l_r, double d, double wavelength) {
    for (double v : {n_t, n_r, l_t, l_r, d, wavelength}) detail::require_positive(v, "DoF bound argument");
    const double geometric = 2.0 * l_t * l_t * l_r * l_r / ((d * wavelength) * (d * wavelength));
    return std::min({n_t, n_r, geometric});
}

/// 2 V_T V_R / ((d lambda)^2 dz_T dz_R).
inline double dof_bound_continuous(double v_t, double v_r, double d, double wavelength, double dz_t, double dz_r) {
    for (double v : {v_t, v_r, d, wavelength, dz_t, dz_r}) detail::require_positive(v, "DoF bound argument");
    return 2.0 * v_t * v_r / ((d * wavelength) * (d * wavelength) * dz_t * dz_r);
}

/// Integer DoF from a real bound; free space always keeps one mode.
inline std::size_t integer_dof(double bound) {
    if (!(bound >= 1.0)) return 1;
    return static_cast<std::size_t>(std::floor(bound));
}

/// Rayleigh distance of the two apertures taken together, 2 (D_T + D_R)^2 / lambda.
inline double joint_rayleigh_distance(double aperture_t, double aperture_r, double wavelength) {
    return rayleigh_distance(aperture_t + aperture_r, wavelength);
}

// Modes within 10 dB of the dominant one. See README for why this differs
// from the effective-rank threshold.
inline const double default_mode_threshold = 1.0 / std::sqrt(10.0);

inline DofReport communication_modes(const ChannelMatrix& op, double threshold = default_mode_threshold) {
    detail::require(op.model == ChannelModel::GreenOperator, Errc::invalid_argument,
                    "communication modes need a Green's operator");
    return effective_dof(op, threshold);
}

inline csv::Table scaling_to_csv(const ScalingCurve& c) {
    csv::Table t({"size", "power"});
    for (std::size_t i = 0; i < c.sizes.size(); ++i) t.add_row({c.sizes[i], c.received_power[i]});
    return t;
}

inline csv::Table singular_values_to_csv(const DofReport& r) {
    csv::Table t({"index", "sigma"});
    for (std::size_t i = 0; i < r.singular_values.size(); ++i)
        t.add_row({static_cast<std::int64_t>(i), r.singular_values[i]});
    return t;
}

} // namespace nfkit

#endif
