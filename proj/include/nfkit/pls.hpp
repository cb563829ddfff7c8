#ifndef NFKIT_PLS_HPP
#define NFKIT_PLS_HPP

#include "nfkit/beamforming.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace nfkit {

struct PlsScenario {
    ArrayGeometry array;
    Carrier carrier;
    Vec3 bob;
    std::optional<Vec3> eve; // empty: no eavesdropper
    double transmit_power = 1.0; // W
    double noise_power = 1.0;    // W
};

enum class SecrecyMode { NearFocus, FarSteer };

inline std::string_view to_string(SecrecyMode m) {
    return m == SecrecyMode::NearFocus ? "near_focus" : "far_steer";
}

namespace detail {

inline void validate(const PlsScenario& s) {
    require_positive(s.transmit_power, "transmit power");
    require_positive(s.noise_power, "noise power");
    require_positive(s.bob.norm(), "Bob distance");
    if (s.eve) require_positive(s.eve->norm(), "Eve distance");
}

inline double link_rate(const PlsScenario& s, const Vec3& at, const CVector& w) {
    const double g = array_gain(nusw_channel(s.array, at, s.carrier).vector(), w);
    return std::log2(1.0 + s.transmit_power * g / s.noise_power);
}

// Angle from the array axis of a point in the x-y plane.
inline double polar_angle(const Vec3& p) { return std::atan2(p.x(), p.y()); }

} // namespace detail

/// max(0, log2(1 + P g_B / s2) - log2(1 + P g_E / s2)) with amplitude-true NUSW channels.
inline double secrecy_rate(const PlsScenario& s, const Beamformer& bf) {
    detail::validate(s);
    detail::require(static_cast<std::size_t>(bf.weights.size()) == s.array.size(), Errc::invalid_argument,
                    "beamformer size does not match the array");
    detail::require(std::abs(bf.weights.norm() - 1.0) <= 1e-9, Errc::invalid_argument, "beamformer must be unit norm");
    const double rb = detail::link_rate(s, s.bob, bf.weights);
    const double re = s.eve ? detail::link_rate(s, *s.eve, bf.weights) : 0.0;
    return std::max(0.0, rb - re);
}

inline Beamformer secrecy_beamformer(const PlsScenario& s, SecrecyMode mode) {
    return mode == SecrecyMode::NearFocus ? beamfocusing_vector(s.array, s.bob, s.carrier)
                                          : beamsteering_vector(s.array, detail::polar_angle(s.bob), s.carrier);
}

/// Noise power that puts Bob's SNR at `snr_db` under near-field focusing.
inline double noise_for_bob_snr(const ArrayGeometry& array, const Vec3& bob, const Carrier& carrier,
                                double transmit_power, double snr_db) {
    detail::require_positive(transmit_power, "transmit power");
    const auto w = beamfocusing_vector(array, bob, carrier);
    const double g = array_gain(nusw_channel(array, bob, carrier).vector(), w.weights);
    return transmit_power * g / std::pow(10.0, snr_db / 10.0);
}

struct SecrecyCurve {
    std::vector<double> eve_distances_m;
    std::vector<double> rates;
    SecrecyMode mode = SecrecyMode::NearFocus;
};

/// Eve swept along Bob's direction; the template's own Eve is ignored.
inline SecrecyCurve secrecy_sweep(const PlsScenario& tmpl, std::span<const double> eve_distances, SecrecyMode mode,
                                  unsigned threads = 1) {
    detail::validate(tmpl);
    for (double d : eve_distances) detail::require_positive(d, "Eve distance");
    const Beamformer bf = secrecy_beamformer(tmpl, mode);
    const double angle = detail::polar_angle(tmpl.bob);
    SecrecyCurve curve{{eve_distances.begin(), eve_distances.end()}, std::vector<double>(eve_distances.size()), mode};
    parallel_for(eve_distances.size(), threads, [&](std::size_t i) {
        PlsScenario s = tmpl;
        s.eve = polar_point(eve_distances[i], angle);
        curve.rates[i] = secrecy_rate(s, bf);
    });
    return curve;
}

inline csv::Table secrecy_to_csv(std::span<const SecrecyCurve> curves) {
    csv::Table t({"eve_distance_m", "secrecy_bps_hz", "mode"});
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.rates.size(); ++i)
            t.add_row({c.eve_distances_m[i], c.rates[i], std::string(to_string(c.mode))});
    return t;
}

} // namespace nfkit

#endif
