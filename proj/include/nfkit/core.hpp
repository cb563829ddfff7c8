#ifndef NFKIT_CORE_HPP
#define NFKIT_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nfkit {

using cdouble = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double speed_of_light = 299792458.0; // m/s
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Error categories double as the CLI's machine-readable failure classes.
enum class Errc {
    invalid_argument,
    singular_geometry,
    degenerate_channel,
    configuration,
    diagnostic,
    io,
};

inline std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::singular_geometry: return "singular-geometry";
    case Errc::degenerate_channel: return "degenerate-channel";
    case Errc::configuration: return "configuration";
    case Errc::diagnostic: return "diagnostic";
    case Errc::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

namespace detail {

inline void require(bool ok, Errc code, const std::string& what) {
    if (!ok) throw Error(code, what);
}

inline void require_positive(double v, std::string_view name) {
    if (!(std::isfinite(v) && v > 0.0))
        throw Error(Errc::invalid_argument, std::string(name) + " must be positive and finite");
}

inline void require_nonnegative(double v, std::string_view name) {
    if (!(std::isfinite(v) && v >= 0.0))
        throw Error(Errc::invalid_argument, std::string(name) + " must be non-negative and finite");
}

} // namespace detail

inline double deg2rad(double deg) { return deg * pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / pi; }

// Polar coordinates in the array plane: angle measured from the array (y) axis,
// so 90 degrees is broadside along +x.
inline Vec3 polar_point(double range, double angle_rad) {
    return {range * std::sin(angle_rad), range * std::cos(angle_rad), 0.0};
}

inline Vec3 direction(double angle_rad) { return polar_point(1.0, angle_rad); }

// Transmit-side array gain |sum_n h_n w_n|^2 (y = h^T w).
inline double array_gain(const CVector& channel, const CVector& weights) {
    return std::norm(channel.cwiseProduct(weights).sum());
}

} // namespace nfkit

#endif
