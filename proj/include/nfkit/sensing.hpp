#ifndef NFKIT_SENSING_HPP
#define NFKIT_SENSING_HPP

#include "nfkit/beamforming.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace nfkit {

struct Target {
    double range_m = 0.0;
    double angle_rad = 0.0;
    cdouble amplitude{1.0, 0.0};
};

// N x L receive snapshots.
struct SnapshotSet {
    CMatrix data;
    double noise_power = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

// Independent, reproducible stream per (seed, snapshot).
inline std::mt19937_64 snapshot_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

inline cdouble complex_gaussian(std::mt19937_64& rng, double variance) {
    std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
    const double re = g(rng);
    const double im = g(rng);
    return {re, im};
}

} // namespace detail

/// y_l = sum_k s_kl a(r_k, theta_k) + n_l with unit-modulus spherical
/// responses, s_kl ~ amplitude_k * CN(0, 1) and n_l ~ CN(0, 10^(-snr/10)).
inline SnapshotSet simulate_snapshots(const ArrayGeometry& array, std::span<const Target> targets, std::size_t snapshots,
                                      double snr_db, std::uint64_t seed, const Carrier& carrier, unsigned threads = 1) {
    detail::require(snapshots >= 1, Errc::invalid_argument, "snapshot count must be >= 1");
    detail::require(std::isfinite(snr_db), Errc::invalid_argument, "SNR must be finite");
    const auto n = static_cast<Eigen::Index>(array.size());
    CMatrix steering(n, static_cast<Eigen::Index>(targets.size()));
    for (std::size_t k = 0; k < targets.size(); ++k) {
        detail::require_positive(targets[k].range_m, "target range");
        detail::require(std::abs(targets[k].amplitude) > 0.0, Errc::invalid_argument, "target amplitude must be nonzero");
        steering.col(static_cast<Eigen::Index>(k)) =
            spherical_response(array, polar_point(targets[k].range_m, targets[k].angle_rad), carrier) *
            std::sqrt(static_cast<double>(n));
    }
    SnapshotSet out{CMatrix(n, static_cast<Eigen::Index>(snapshots)), std::pow(10.0, -snr_db / 10.0), seed};
    parallel_for(snapshots, threads, [&](std::size_t l) {
        auto rng = detail::snapshot_stream(seed, l);
        CVector y = CVector::Zero(n);
        for (std::size_t k = 0; k < targets.size(); ++k)
            y += targets[k].amplitude * detail::complex_gaussian(rng, 1.0) * steering.col(static_cast<Eigen::Index>(k));
        for (Eigen::Index i = 0; i < n; ++i) y(i) += detail::complex_gaussian(rng, out.noise_power);
        out.data.col(static_cast<Eigen::Index>(l)) = y;
    });
    return out;
}

struct SubspaceSplit {
    CMatrix signal; // N x k, eigenvectors of the k largest eigenvalues
    CMatrix noise;  // N x (N - k)
    RVector eigenvalues; // ascending
};

inline SubspaceSplit split_subspaces(const SnapshotSet& s, std::size_t k) {
    const auto n = s.data.rows();
    detail::require(s.data.cols() >= 1 && n >= 1, Errc::invalid_argument, "empty snapshot set");
    detail::require(k < static_cast<std::size_t>(n), Errc::invalid_argument, "target count must be below the antenna count");
    const CMatrix r = s.data * s.data.adjoint() / static_cast<double>(s.data.cols());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
    if (es.info() != Eigen::Success) throw Error(Errc::diagnostic, "covariance eigendecomposition failed");
    const RVector& ev = es.eigenvalues();
    const auto ki = static_cast<Eigen::Index>(k);
    if (k > 0 && !(ev(n - ki) > 1e-12 * std::max(ev(n - 1), 0.0)))
        throw Error(Errc::diagnostic, "covariance rank is below the requested target count " + std::to_string(k));
    return {es.eigenvectors().rightCols(ki), es.eigenvectors().leftCols(n - ki), ev};
}

/// 1 / ||E_n^H a||^2 over the grid, with a the unit-norm spherical response.
/// The noise projection is formed as a - E_s (E_s^H a), which equals E_n E_n^H a.
inline PolarGrid music_spectrum(const SnapshotSet& snapshots, std::size_t k_targets, const PolarAxes& axes,
                                const ArrayGeometry& array, const Carrier& carrier, unsigned threads = 1) {
    axes.validate();
    detail::require(static_cast<std::size_t>(snapshots.data.rows()) == array.size(), Errc::invalid_argument,
                    "snapshot rows do not match the array");
    const auto sub = split_subspaces(snapshots, k_targets);
    PolarGrid grid{axes.angles, axes.distances,
                   RMatrix(static_cast<Eigen::Index>(axes.distances.size()),
                           static_cast<Eigen::Index>(axes.angles.size()))};
    parallel_for(axes.distances.size() * axes.angles.size(), threads, [&](std::size_t cell) {
        const std::size_t i = cell / axes.angles.size();
        const std::size_t j = cell % axes.angles.size();
        const CVector a = spherical_response(array, polar_point(axes.distances[i], axes.angles[j]), carrier);
        const CVector resid = a - sub.signal * (sub.signal.adjoint() * a);
        const double den = std::max(resid.squaredNorm(), std::numeric_limits<double>::min());
        grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 / den;
    });
    return grid;
}

struct TargetEstimate {
    double range_m = 0.0;
    double angle_rad = 0.0;
    double value = 0.0;
};

/// The k largest strict 8-neighbour local maxima, returned sorted by range.
inline std::vector<TargetEstimate> estimate_targets(const PolarGrid& spectrum, std::size_t k) {
    detail::require(k >= 1, Errc::invalid_argument, "need k >= 1");
    const auto rows = spectrum.values.rows();
    const auto cols = spectrum.values.cols();
    std::vector<TargetEstimate> peaks;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double v = spectrum.values(i, j);
            bool strict = true;
            for (Eigen::Index di = -1; di <= 1 && strict; ++di)
                for (Eigen::Index dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const Eigen::Index a = i + di, b = j + dj;
                    if (a < 0 || b < 0 || a >= rows || b >= cols) continue;
                    if (!(spectrum.values(a, b) < v)) {
                        strict = false;
                        break;
                    }
                }
            if (strict)
                peaks.push_back({spectrum.distances[static_cast<std::size_t>(i)],
                                 spectrum.angles[static_cast<std::size_t>(j)], v});
        }
    if (peaks.size() < k)
        throw Error(Errc::diagnostic, "found " + std::to_string(peaks.size()) + " local maxima, need " +
                                          std::to_string(k));
    std::sort(peaks.begin(), peaks.end(), [](const TargetEstimate& a, const TargetEstimate& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.range_m != b.range_m) return a.range_m < b.range_m;
        return a.angle_rad < b.angle_rad;
    });
    peaks.resize(k);
    std::sort(peaks.begin(), peaks.end(),
              [](const TargetEstimate& a, const TargetEstimate& b) { return a.range_m < b.range_m; });
    return peaks;
}

/// Ratio of the weaker of the two largest local maxima of a 1-D profile to
/// the minimum between them; 1 when fewer than two peaks exist.
inline double peak_to_saddle_contrast(std::span<const double> profile) {
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const bool left = i == 0 || profile[i - 1] < profile[i];
        const bool right = i + 1 == profile.size() || profile[i + 1] < profile[i];
        if (left && right && profile.size() > 1) peaks.push_back(i);
    }
    if (peaks.size() < 2) return 1.0;
    std::partial_sort(peaks.begin(), peaks.begin() + 2, peaks.end(),
                      [&](std::size_t a, std::size_t b) { return profile[a] > profile[b]; });
    const std::size_t lo = std::min(peaks[0], peaks[1]);
    const std::size_t hi = std::max(peaks[0], peaks[1]);
    const double saddle = *std::min_element(profile.begin() + static_cast<std::ptrdiff_t>(lo),
                                            profile.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    return std::min(profile[lo], profile[hi]) / saddle;
}

inline csv::Table spectrum_to_csv(const PolarGrid& g) {
    csv::Table t({"angle_deg", "distance_m", "value_db"});
    for (std::size_t i = 0; i < g.distances.size(); ++i)
        for (std::size_t j = 0; j < g.angles.size(); ++j)
            t.add_row({rad2deg(g.angles[j]), g.distances[i],
                       10.0 * std::log10(g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))});
    return t;
}

inline csv::Table estimates_to_csv(const std::vector<TargetEstimate>& est) {
    csv::Table t({"rank", "range_m", "angle_deg"});
    for (std::size_t i = 0; i < est.size(); ++i)
        t.add_row({static_cast<std::int64_t>(i + 1), est[i].range_m, rad2deg(est[i].angle_rad)});
    return t;
}

} // namespace nfkit

#endif
