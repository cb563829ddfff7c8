#ifndef NFKIT_BEAMFORMING_HPP
#define NFKIT_BEAMFORMING_HPP

#include "nfkit/channel.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace nfkit {

enum class BeamKind { Steering, Focusing, Hybrid };

struct Beamformer {
    CVector weights; // unit norm
    BeamKind kind = BeamKind::Steering;
};

// Gain convention for the transmit beamformer is |sum_n a_n w_n|^2 (y = a^T w).

/// conj(planar-wave phases) / sqrt(N).
inline Beamformer beamsteering_vector(const ArrayGeometry& array, double angle_rad, const Carrier& carrier) {
    CVector w = farfield_channel(array, angle_rad, carrier).vector().conjugate();
    w /= std::sqrt(static_cast<double>(array.size()));
    return {std::move(w), BeamKind::Steering};
}

/// exp(+j k d_n) / sqrt(N) with d_n the exact element-to-focus distance.
inline Beamformer beamfocusing_vector(const ArrayGeometry& array, const Vec3& focus, const Carrier& carrier) {
    const double k = carrier.wavenumber();
    const double norm = 1.0 / std::sqrt(static_cast<double>(array.size()));
    CVector w(array.size());
    for (std::size_t n = 0; n < array.size(); ++n)
        w(static_cast<Eigen::Index>(n)) = std::polar(norm, k * detail::checked_distance(focus, array.element(n)));
    return {std::move(w), BeamKind::Focusing};
}

enum class PatternNormalization {
    PhaseOnly,   // exp(-j k d_n) / sqrt(N); focus gain is exactly 1
    MatchedFilter // amplitude-weighted 1/d_n response, normalised to unit norm
};

/// Unit-norm response of the array to a point source.
inline CVector spherical_response(const ArrayGeometry& array, const Vec3& point, const Carrier& carrier,
                                  PatternNormalization mode = PatternNormalization::PhaseOnly) {
    const double k = carrier.wavenumber();
    CVector a(array.size());
    for (std::size_t n = 0; n < array.size(); ++n) {
        const double d = detail::checked_distance(point, array.element(n));
        const double amp = mode == PatternNormalization::PhaseOnly ? 1.0 : 1.0 / d;
        a(static_cast<Eigen::Index>(n)) = std::polar(amp, -k * d);
    }
    a.normalize();
    return a;
}

struct PolarAxes {
    std::vector<double> angles;    // rad, ascending
    std::vector<double> distances; // m, ascending

    void validate() const {
        detail::require(!angles.empty() && !distances.empty(), Errc::invalid_argument, "polar grid is empty");
        for (std::size_t i = 1; i < angles.size(); ++i)
            detail::require(angles[i] > angles[i - 1], Errc::invalid_argument, "grid angles must ascend");
        for (std::size_t i = 1; i < distances.size(); ++i)
            detail::require(distances[i] > distances[i - 1], Errc::invalid_argument, "grid distances must ascend");
        detail::require(distances.front() > 0.0, Errc::invalid_argument, "grid distances must be positive");
    }

    // Evenly spaced axis helper, both ends included.
    static std::vector<double> linspace(double first, double last, std::size_t count) {
        detail::require(count >= 1, Errc::invalid_argument, "axis needs at least one point");
        std::vector<double> v(count, first);
        if (count > 1)
            for (std::size_t i = 0; i < count; ++i)
                v[i] = first + (last - first) * static_cast<double>(i) / static_cast<double>(count - 1);
        return v;
    }
};

// values(i, j): distance i, angle j.
struct PolarGrid {
    std::vector<double> angles;
    std::vector<double> distances;
    RMatrix values;

    std::pair<std::size_t, std::size_t> argmax() const {
        Eigen::Index r = 0, c = 0;
        values.maxCoeff(&r, &c);
        return {static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
    }
};

inline std::size_t nearest_index(const std::vector<double>& axis, double v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (std::abs(axis[i] - v) < std::abs(axis[best] - v)) best = i;
    return best;
}

inline PolarGrid radiation_pattern(const Beamformer& bf, const ArrayGeometry& array, const PolarAxes& axes,
                                   const Carrier& carrier,
                                   PatternNormalization mode = PatternNormalization::PhaseOnly,
                                   unsigned threads = 1) {
    axes.validate();
    detail::require(static_cast<std::size_t>(bf.weights.size()) == array.size(), Errc::invalid_argument,
                    "beamformer size does not match the array");
    PolarGrid grid{axes.angles, axes.distances,
                   RMatrix(static_cast<Eigen::Index>(axes.distances.size()),
                           static_cast<Eigen::Index>(axes.angles.size()))};
    const std::size_t cells = axes.distances.size() * axes.angles.size();
    parallel_for(cells, threads, [&](std::size_t cell) {
        const std::size_t i = cell / axes.angles.size();
        const std::size_t j = cell % axes.angles.size();
        const CVector a = spherical_response(array, polar_point(axes.distances[i], axes.angles[j]), carrier, mode);
        grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = array_gain(a, bf.weights);
    });
    return grid;
}

inline csv::Table polar_grid_to_csv(const PolarGrid& g, std::string_view value_column = "value") {
    csv::Table t({"angle_deg", "distance_m", std::string(value_column)});
    for (std::size_t i = 0; i < g.distances.size(); ++i)
        for (std::size_t j = 0; j < g.angles.size(); ++j)
            t.add_row({rad2deg(g.angles[j]), g.distances[i],
                       g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    return t;
}

/// |a_N(p1)^H a_N(p2)| for half-wavelength ULAs of each size.
inline std::vector<double> asymptotic_orthogonality(std::span<const std::size_t> sizes, const Vec3& p1,
                                                    const Vec3& p2, const Carrier& carrier) {
    std::vector<double> out;
    out.reserve(sizes.size());
    for (std::size_t n : sizes) {
        const auto array = make_uniform_linear_array(n, carrier);
        out.push_back(std::abs(spherical_response(array, p1, carrier).dot(spherical_response(array, p2, carrier))));
    }
    return out;
}

// ---------------------------------------------------------------------------
// TTD-based hybrid structures

enum class HybridKind { FullyConnected, SubConnected, HybridFarNear };
enum class ChainRole { NearField, FarField, Idle };

inline std::string_view to_string(HybridKind k) {
    switch (k) {
    case HybridKind::FullyConnected: return "fully_connected";
    case HybridKind::SubConnected: return "sub_connected";
    case HybridKind::HybridFarNear: return "hybrid_far_near";
    }
    return "unknown";
}

inline std::string_view to_string(ChainRole r) {
    switch (r) {
    case ChainRole::NearField: return "near_field";
    case ChainRole::FarField: return "far_field";
    case ChainRole::Idle: return "idle";
    }
    return "unknown";
}

// Local antenna range [first, first + count) within the chain's antenna list.
struct TtdSegment {
    std::size_t first = 0;
    std::size_t count = 0;
    double delay_s = 0.0;
};

struct RfChain {
    std::vector<std::size_t> antennas; // global indices
    std::vector<double> ps_phases;     // rad in [0, 2pi), one per antenna
    std::vector<TtdSegment> ttds;      // empty: PS-only
    ChainRole role = ChainRole::NearField;
    std::optional<std::size_t> user;
};

struct HybridStructure {
    HybridKind kind = HybridKind::FullyConnected;
    std::size_t n_antennas = 0;
    double center_hz = 0.0;
    double max_delay_s = 0.0;
    std::vector<RfChain> chains;

    std::size_t n_rf() const noexcept { return chains.size(); }
    std::size_t n_ps() const noexcept {
        std::size_t n = 0;
        for (const auto& c : chains) n += c.antennas.size();
        return n;
    }
    std::size_t n_ttd() const noexcept {
        std::size_t n = 0;
        for (const auto& c : chains) n += c.ttds.size();
        return n;
    }

    void validate() const {
        auto fail = [](const std::string& m) { throw Error(Errc::configuration, m); };
        // Sub-array membership: SC chains each own a block; HFN splits into the
        // far-field block and the large block shared by the other chains.
        std::vector<std::vector<int>> groups;
        for (std::size_t ci = 0; ci < chains.size(); ++ci) {
            std::size_t g = ci;
            if (kind == HybridKind::HybridFarNear) g = chains[ci].role == ChainRole::FarField ? 0 : 1;
            if (groups.size() <= g) groups.resize(g + 1, std::vector<int>(n_antennas, 0));
            for (std::size_t a : chains[ci].antennas)
                if (a < n_antennas) groups[g][a] = 1;
        }
        std::vector<int> owner(n_antennas, 0);
        for (const auto& g : groups)
            for (std::size_t a = 0; a < n_antennas; ++a) owner[a] += g[a];
        for (const auto& c : chains) {
            if (c.ps_phases.size() != c.antennas.size()) fail("phase count does not match antenna count");
            for (double ph : c.ps_phases)
                if (!(ph >= 0.0 && ph < two_pi)) fail("phase shifter value outside [0, 2pi)");
            for (std::size_t a : c.antennas)
                if (a >= n_antennas) fail("antenna index out of range");
            std::size_t covered = 0;
            for (const auto& s : c.ttds) {
                if (s.first != covered || s.count == 0) fail("TTD segments must tile the chain contiguously");
                covered += s.count;
                if (!(s.delay_s >= 0.0 && s.delay_s <= max_delay_s)) fail("TTD delay outside [0, max_delay]");
            }
            if (!c.ttds.empty() && covered != c.antennas.size()) fail("TTD segments do not cover the chain");
        }
        if (kind != HybridKind::FullyConnected)
            for (int o : owner)
                if (o != 1) fail("sub-array partition must cover every antenna exactly once");
    }
};

struct HardwareCost {
    std::size_t n_rf = 0;
    std::size_t n_ttd = 0;
    std::size_t n_ps = 0;
    double power_w = 0.0;
};

struct UnitPowers {
    double ps_w = 0.0;
    double ttd_w = 0.0;
    double rf_w = 0.0;
};

inline HardwareCost hardware_cost(const HybridStructure& s, const UnitPowers& unit) {
    detail::require_nonnegative(unit.ps_w, "PS unit power");
    detail::require_nonnegative(unit.ttd_w, "TTD unit power");
    detail::require_nonnegative(unit.rf_w, "RF unit power");
    HardwareCost c{s.n_rf(), s.n_ttd(), s.n_ps(), 0.0};
    c.power_w = static_cast<double>(c.n_ps) * unit.ps_w + static_cast<double>(c.n_ttd) * unit.ttd_w +
                static_cast<double>(c.n_rf) * unit.rf_w;
    return c;
}

inline double wrap_phase(double ph) {
    double w = std::fmod(ph, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w = 0.0;
    return w;
}

/// Default TTD range: twice the light-crossing time of the array.
inline double default_max_delay(const ArrayGeometry& array) { return 2.0 * array.aperture() / speed_of_light; }

/// Frequency-dependent weights of one chain on the full array, before
/// normalisation: exp(j ps_n) exp(-j 2 pi f tau_s) / sqrt(|chain|).
inline CVector chain_weights(const HybridStructure& s, const RfChain& chain, double frequency_hz) {
    CVector w = CVector::Zero(static_cast<Eigen::Index>(s.n_antennas));
    const double scale = 1.0 / std::sqrt(static_cast<double>(chain.antennas.size()));
    for (std::size_t i = 0; i < chain.antennas.size(); ++i)
        w(static_cast<Eigen::Index>(chain.antennas[i])) = std::polar(scale, chain.ps_phases[i]);
    for (const auto& seg : chain.ttds) {
        const cdouble delay = std::polar(1.0, -two_pi * frequency_hz * seg.delay_s);
        for (std::size_t i = seg.first; i < seg.first + seg.count; ++i)
            w(static_cast<Eigen::Index>(chain.antennas[i])) *= delay;
    }
    return w;
}

/// Unit-norm effective beamformer for `user` at one frequency (identity digital stage).
inline CVector effective_weights(const HybridStructure& s, std::size_t user, double frequency_hz) {
    CVector w = CVector::Zero(static_cast<Eigen::Index>(s.n_antennas));
    bool any = false;
    for (const auto& c : s.chains)
        if (c.user == user && !c.antennas.empty()) {
            w += chain_weights(s, c, frequency_hz);
            any = true;
        }
    detail::require(any, Errc::invalid_argument, "no RF chain serves this user");
    w.normalize();
    return w;
}

/// PS-only focusing structure: one RF chain, all antennas, no TTDs.
inline HybridStructure make_ps_only(const ArrayGeometry& array, const Vec3& focus, const Carrier& carrier) {
    HybridStructure s;
    s.kind = HybridKind::FullyConnected;
    s.n_antennas = array.size();
    s.center_hz = carrier.frequency_hz();
    s.max_delay_s = default_max_delay(array);
    RfChain c;
    const double k = carrier.wavenumber();
    for (std::size_t n = 0; n < array.size(); ++n) {
        c.antennas.push_back(n);
        c.ps_phases.push_back(wrap_phase(k * detail::checked_distance(focus, array.element(n))));
    }
    c.user = 0;
    s.chains.push_back(std::move(c));
    return s;
}

/// Per-subcarrier normalised array gain |h_m^T w(f_m)|^2 / ||h_m||^2 in [0, 1].
inline std::vector<double> beam_split_gain(const HybridStructure& s, std::size_t user,
                                           const WidebandChannelSet& wideband) {
    s.validate();
    std::vector<double> gain;
    gain.reserve(wideband.channels.size());
    for (std::size_t m = 0; m < wideband.channels.size(); ++m) {
        const CVector h = wideband.channels[m].vector();
        detail::require(static_cast<std::size_t>(h.size()) == s.n_antennas, Errc::invalid_argument,
                        "structure and channel sizes differ");
        const CVector w = effective_weights(s, user, wideband.frequencies_hz[m]);
        gain.push_back(array_gain(h, w) / h.squaredNorm());
    }
    return gain;
}

struct WidebandParams {
    double center_hz = 0.0;
    double bandwidth_hz = 0.0;
    std::size_t subcarriers = 1;
};

namespace detail {

// PS phases and TTD delays for one chain given per-antenna path lengths.
// Delays come from a least-squares fit of each segment's residual phase
// (k_f - k_c) * L against 2 pi (f - f_c) over the subcarriers.
inline void design_chain(RfChain& chain, const std::vector<double>& path, std::size_t n_ttd,
                         const WidebandParams& wb, double max_delay) {
    const auto freqs = subcarrier_frequencies(wb.center_hz, wb.bandwidth_hz, wb.subcarriers);
    const double kc = two_pi * wb.center_hz / speed_of_light;
    const std::size_t n = chain.antennas.size();
    std::vector<double> slope(n_ttd, 0.0);
    const std::size_t seg_len = n_ttd ? n / n_ttd : 0;
    double sxx = 0.0;
    for (double f : freqs) sxx += std::pow(two_pi * (f - wb.center_hz), 2);
    for (std::size_t s = 0; s < n_ttd; ++s) {
        if (sxx == 0.0) break;
        double sxy = 0.0;
        for (double f : freqs) {
            const double kf = two_pi * f / speed_of_light;
            double resid = 0.0;
            for (std::size_t i = s * seg_len; i < (s + 1) * seg_len; ++i) resid += (kf - kc) * path[i];
            resid /= static_cast<double>(seg_len);
            sxy += two_pi * (f - wb.center_hz) * resid;
        }
        slope[s] = sxy / sxx;
    }
    const double top = n_ttd ? *std::max_element(slope.begin(), slope.end()) : 0.0;
    chain.ttds.clear();
    for (std::size_t s = 0; s < n_ttd; ++s)
        chain.ttds.push_back({s * seg_len, seg_len, std::clamp(top - slope[s], 0.0, max_delay)});
    chain.ps_phases.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = n_ttd ? chain.ttds[i / seg_len].delay_s : 0.0;
        chain.ps_phases[i] = wrap_phase(kc * path[i] + two_pi * wb.center_hz * tau);
    }
}

} // namespace detail

/// FC or SC TTD hybrid beamformer with one dedicated RF chain per user.
/// FC chains see the whole array with exact spherical path lengths. SC chain r
/// owns the r-th contiguous sub-array, serves user r mod U and uses the
/// far-field path model seen from its sub-array centroid.
inline HybridStructure design_ttd_hybrid(HybridKind kind, const ArrayGeometry& array, std::span<const Vec3> users,
                                         std::size_t n_rf, std::size_t n_ttd_per_rf, const WidebandParams& wb,
                                         std::optional<double> max_delay = std::nullopt) {
    auto fail = [](const std::string& m) { throw Error(Errc::configuration, m); };
    if (kind == HybridKind::HybridFarNear) fail("use partition_hfn for the hybrid far/near structure");
    if (users.empty()) fail("at least one user is required");
    if (n_rf < users.size()) fail("dedicated-beam mode needs n_rf >= number of users");
    const std::size_t n = array.size();
    const std::size_t chain_size = kind == HybridKind::FullyConnected ? n : n / n_rf;
    if (kind == HybridKind::SubConnected && n % n_rf != 0) fail("sub-connected: antennas must split evenly across RF chains");
    if (n_ttd_per_rf > 0 && chain_size % n_ttd_per_rf != 0) fail("TTD count must divide the antennas per RF chain");
    detail::require_positive(wb.center_hz, "centre frequency");

    HybridStructure s;
    s.kind = kind;
    s.n_antennas = n;
    s.center_hz = wb.center_hz;
    s.max_delay_s = max_delay.value_or(default_max_delay(array));
    for (std::size_t r = 0; r < n_rf; ++r) {
        RfChain c;
        const std::size_t first = kind == HybridKind::FullyConnected ? 0 : r * chain_size;
        for (std::size_t i = 0; i < chain_size; ++i) c.antennas.push_back(first + i);
        const bool active = kind == HybridKind::SubConnected || r < users.size();
        if (!active) {
            c.role = ChainRole::Idle;
            c.ps_phases.assign(chain_size, 0.0);
            for (std::size_t t = 0; t < n_ttd_per_rf; ++t)
                c.ttds.push_back({t * (chain_size / n_ttd_per_rf), chain_size / n_ttd_per_rf, 0.0});
            s.chains.push_back(std::move(c));
            continue;
        }
        const std::size_t u = r % users.size();
        c.user = u;
        std::vector<double> path(chain_size);
        if (kind == HybridKind::FullyConnected) {
            c.role = ChainRole::NearField;
            for (std::size_t i = 0; i < chain_size; ++i)
                path[i] = detail::checked_distance(users[u], array.element(c.antennas[i]));
        } else {
            c.role = ChainRole::FarField;
            const Vec3 centre = array.subarray(first, chain_size).centroid();
            const Vec3 rel = users[u] - centre;
            const double rc = rel.norm();
            if (!(rc > 0.0)) throw Error(Errc::singular_geometry, "user at sub-array centroid");
            const Vec3 dir = rel / rc;
            for (std::size_t i = 0; i < chain_size; ++i)
                path[i] = rc - dir.dot(array.element(c.antennas[i]) - centre);
        }
        detail::design_chain(c, path, n_ttd_per_rf, wb, s.max_delay_s);
        s.chains.push_back(std::move(c));
    }
    s.validate();
    return s;
}

enum class Qos { DelaySensitive, HighRate };

struct HfnUser {
    Vec3 location;
    Qos qos = Qos::HighRate;
};

/// Size of the far-field (small) block that partition_hfn would choose.
/// Largest leading block [0, n) whose Rayleigh distance does not exceed the
/// distance from its centroid to every delay-sensitive user, capped at `cap`.
inline std::size_t hfn_small_size(const ArrayGeometry& array, std::span<const HfnUser> users, const Carrier& carrier,
                                  std::size_t cap) {
    std::size_t best = 0;
    for (std::size_t n = std::min(cap, array.size()); n >= 2; --n) {
        const auto block = array.subarray(0, n);
        const double rd = rayleigh_distance(block.aperture(), carrier.wavelength());
        bool ok = true;
        for (const auto& u : users)
            if (u.qos == Qos::DelaySensitive && (u.location - block.centroid()).norm() < rd) ok = false;
        if (ok) {
            best = n;
            break;
        }
    }
    return best;
}

/// Hybrid far/near partition. Chain 0 drives the small leading block with
/// far-field steering toward the first delay-sensitive user; the remaining
/// chains drive the large block, each focusing on one high-rate user.
inline HybridStructure partition_hfn(const ArrayGeometry& array, std::span<const HfnUser> users, std::size_t n_rf,
                                     const Carrier& carrier) {
    auto fail = [](const std::string& m) { throw Error(Errc::configuration, m); };
    std::vector<std::size_t> ds, hr;
    for (std::size_t i = 0; i < users.size(); ++i) (users[i].qos == Qos::DelaySensitive ? ds : hr).push_back(i);
    if (users.empty()) fail("hfn: no users");
    if (n_rf < 1) fail("hfn: need at least one RF chain");
    const std::size_t n = array.size();
    const double k = carrier.wavenumber();

    HybridStructure s;
    s.kind = HybridKind::HybridFarNear;
    s.n_antennas = n;
    s.center_hz = carrier.frequency_hz();
    s.max_delay_s = default_max_delay(array);

    std::size_t n_small = 0;
    if (!ds.empty()) {
        const std::size_t large_chains = hr.empty() ? 0 : n_rf - 1;
        if (!hr.empty() && n_rf < 2) fail("hfn: high-rate users need an RF chain besides the far-field one");
        const std::size_t cap = hr.empty() ? n : n - std::max<std::size_t>(1, large_chains);
        n_small = hfn_small_size(array, users, carrier, cap);
        if (n_small == 0) {
            double closest = std::numeric_limits<double>::infinity();
            for (std::size_t i : ds) closest = std::min(closest, (users[i].location - array.centroid()).norm());
            fail("hfn: no feasible far-field sub-array; a delay-sensitive user at " + csv::format_number(closest) +
                 " m is inside the near field of even a 2-element block (Rayleigh distance " +
                 csv::format_number(rayleigh_distance(array.subarray(0, 2).aperture(), carrier.wavelength())) +
                 " m)");
        }
        RfChain far;
        far.role = ChainRole::FarField;
        far.user = ds.front();
        const auto block = array.subarray(0, n_small);
        const Vec3 rel = users[ds.front()].location - block.centroid();
        const Vec3 dir = rel.normalized();
        for (std::size_t i = 0; i < n_small; ++i) {
            far.antennas.push_back(i);
            far.ps_phases.push_back(wrap_phase(-k * dir.dot(array.element(i) - block.centroid())));
        }
        s.chains.push_back(std::move(far));
    }
    const std::size_t near_chains = ds.empty() ? n_rf : n_rf - 1;
    if (hr.size() > near_chains) fail("hfn: more high-rate users than RF chains for the large sub-array");
    for (std::size_t r = 0; r < near_chains; ++r) {
        RfChain c;
        if (r < hr.size() && n_small < n) {
            c.role = ChainRole::NearField;
            c.user = hr[r];
            for (std::size_t i = n_small; i < n; ++i) {
                c.antennas.push_back(i);
                c.ps_phases.push_back(
                    wrap_phase(k * detail::checked_distance(users[hr[r]].location, array.element(i))));
            }
        } else {
            c.role = ChainRole::Idle;
        }
        s.chains.push_back(std::move(c));
    }
    s.validate();
    return s;
}

/// Antennas owned by the far-field block (0 when there is none).
inline std::size_t hfn_small_block(const HybridStructure& s) {
    for (const auto& c : s.chains)
        if (c.role == ChainRole::FarField) return c.antennas.size();
    return 0;
}

} // namespace nfkit

#endif
