#ifndef NFKIT_CHANNEL_HPP
#define NFKIT_CHANNEL_HPP

#include "nfkit/csv.hpp"
#include "nfkit/geometry.hpp"
#include "nfkit/parallel.hpp"

#include <cstdint>
#include <vector>

namespace nfkit {

enum class ChannelModel { FarFieldPlanar, NUSW, GreenOperator };

// Transfer coefficients, receivers along rows and transmitters along columns.
// Single-ended channels (array -> point) are stored as N x 1.
struct ChannelMatrix {
    CMatrix entries;
    Carrier carrier;
    ChannelModel model;

    CVector vector() const {
        detail::require(entries.cols() == 1, Errc::invalid_argument, "channel is not a vector");
        return entries.col(0);
    }
};

struct WidebandChannelSet {
    std::vector<double> frequencies_hz;
    std::vector<ChannelMatrix> channels;
};

namespace detail {

inline double checked_distance(const Vec3& a, const Vec3& b) {
    const double d = (a - b).norm();
    if (!(d > 0.0)) throw Error(Errc::singular_geometry, "zero distance between source and observation point");
    return d;
}

// Friis amplitude with exact spherical phase for one element pair.
inline cdouble friis_link(double distance, double wavelength) {
    const double k = two_pi / wavelength;
    return std::polar(wavelength / (4.0 * pi * distance), -k * distance);
}

} // namespace detail

/// Planar-wave channel toward direction `angle_rad`: g * exp(+j k <u, p_n>).
/// The sign makes this the large-distance limit of nusw_channel up to a
/// common phase, since d_n ~ r - <u, p_n>.
inline ChannelMatrix farfield_channel(const ArrayGeometry& array, double angle_rad, const Carrier& carrier,
                                      double gain = 1.0) {
    const Vec3 u = direction(angle_rad);
    const double k = carrier.wavenumber();
    CMatrix h(array.size(), 1);
    for (std::size_t n = 0; n < array.size(); ++n)
        h(static_cast<Eigen::Index>(n), 0) = std::polar(gain, k * u.dot(array.element(n)));
    return {std::move(h), carrier, ChannelModel::FarFieldPlanar};
}

/// Non-uniform spherical wave channel from every element to one receiver point.
inline ChannelMatrix nusw_channel(const ArrayGeometry& array, const Vec3& receiver, const Carrier& carrier) {
    CMatrix h(array.size(), 1);
    const double lambda = carrier.wavelength();
    for (std::size_t n = 0; n < array.size(); ++n)
        h(static_cast<Eigen::Index>(n), 0) =
            detail::friis_link(detail::checked_distance(receiver, array.element(n)), lambda);
    return {std::move(h), carrier, ChannelModel::NUSW};
}

/// N_R x N_T NUSW matrix between two arrays.
inline ChannelMatrix nusw_mimo_channel(const ArrayGeometry& tx, const ArrayGeometry& rx, const Carrier& carrier) {
    CMatrix h(rx.size(), tx.size());
    const double lambda = carrier.wavelength();
    for (std::size_t r = 0; r < rx.size(); ++r)
        for (std::size_t t = 0; t < tx.size(); ++t)
            h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) =
                detail::friis_link(detail::checked_distance(rx.element(r), tx.element(t)), lambda);
    return {std::move(h), carrier, ChannelModel::NUSW};
}

/// Scalar free-space Green's function exp(-j k d) / (4 pi d).
inline cdouble greens_function(const Vec3& src, const Vec3& dst, const Carrier& carrier) {
    const double d = detail::checked_distance(src, dst);
    return std::polar(1.0 / (4.0 * pi * d), -carrier.wavenumber() * d);
}

/// Patch-collocated Green's operator, P_R x P_T, weighted by sqrt(A_p A_q) so
/// its singular values approximate those of the continuous operator.
inline ChannelMatrix greens_operator(const ApertureSurface& tx, const ApertureSurface& rx, const Carrier& carrier,
                                     unsigned threads = 1) {
    if (tx.overlaps(rx)) throw Error(Errc::singular_geometry, "transmit and receive surfaces overlap");
    const auto src = tx.patch_centers();
    const auto dst = rx.patch_centers();
    const double weight = std::sqrt(tx.patch_area() * rx.patch_area());
    CMatrix g(static_cast<Eigen::Index>(dst.size()), static_cast<Eigen::Index>(src.size()));
    parallel_for(src.size(), threads, [&](std::size_t p) {
        for (std::size_t q = 0; q < dst.size(); ++q)
            g(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) =
                weight * greens_function(src[p], dst[q], carrier);
    });
    return {std::move(g), carrier, ChannelModel::GreenOperator};
}

/// Subcarrier grid f_m = center - B/2 + m B / (M - 1); the centre frequency alone when M = 1.
inline std::vector<double> subcarrier_frequencies(double center_hz, double bandwidth_hz, std::size_t m_subcarriers) {
    detail::require_positive(center_hz, "centre frequency");
    detail::require_nonnegative(bandwidth_hz, "bandwidth");
    detail::require(m_subcarriers >= 1, Errc::invalid_argument, "need at least one subcarrier");
    detail::require(center_hz - bandwidth_hz / 2.0 > 0.0, Errc::invalid_argument,
                    "lowest subcarrier frequency must be positive");
    std::vector<double> f(m_subcarriers, center_hz);
    if (m_subcarriers > 1) {
        const double step = bandwidth_hz / static_cast<double>(m_subcarriers - 1);
        for (std::size_t m = 0; m < m_subcarriers; ++m)
            f[m] = center_hz - bandwidth_hz / 2.0 + static_cast<double>(m) * step;
        if (m_subcarriers % 2 == 1) f[m_subcarriers / 2] = center_hz;
    }
    return f;
}

inline WidebandChannelSet wideband_channels(const ArrayGeometry& array, const Vec3& receiver, double center_hz,
                                            double bandwidth_hz, std::size_t m_subcarriers, unsigned threads = 1) {
    WidebandChannelSet set;
    set.frequencies_hz = subcarrier_frequencies(center_hz, bandwidth_hz, m_subcarriers);
    set.channels.assign(m_subcarriers, ChannelMatrix{CMatrix(), Carrier(center_hz), ChannelModel::NUSW});
    parallel_for(m_subcarriers, threads, [&](std::size_t m) {
        set.channels[m] = nusw_channel(array, receiver, Carrier(set.frequencies_hz[m]));
    });
    return set;
}

inline csv::Table channel_to_csv(const ChannelMatrix& h) {
    csv::Table t({"row", "col", "re", "im"});
    for (Eigen::Index r = 0; r < h.entries.rows(); ++r)
        for (Eigen::Index c = 0; c < h.entries.cols(); ++c)
            t.add_row({std::int64_t{r}, std::int64_t{c}, h.entries(r, c).real(), h.entries(r, c).imag()});
    return t;
}

} // namespace nfkit

#endif
