#include "nfkit/sensing.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace nfkit;
using Catch::Approx;

namespace {

std::vector<double> range_profile(const PolarGrid& g, std::size_t angle_index) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < g.values.rows(); ++i) out.push_back(g.values(i, static_cast<Eigen::Index>(angle_index)));
    return out;
}

PolarAxes range_axis(double angle, double lo, double hi, std::size_t count) {
    return {{angle}, PolarAxes::linspace(lo, hi, count)};
}

} // namespace

TEST_CASE("snapshot statistics") {
    const Carrier c(28e9);
    const auto a = make_uniform_linear_array(16, c);
    SECTION("no targets: every eigenvalue sits near the noise power") {
        const auto s = simulate_snapshots(a, {}, 4000, 3.0, 11, c);
        const auto split = split_subspaces(s, 0);
        for (Eigen::Index i = 0; i < split.eigenvalues.size(); ++i) {
            CHECK(split.eigenvalues(i) > 0.75 * s.noise_power);
            CHECK(split.eigenvalues(i) < 1.3 * s.noise_power);
        }
        CHECK(s.noise_power == Approx(std::pow(10.0, -0.3)));
    }
    SECTION("noiseless single target has a rank-one covariance") {
        const std::vector<Target> t{{4.0, 1.0}};
        const auto s = simulate_snapshots(a, t, 50, 400.0, 3, c);
        const CMatrix r = s.data * s.data.adjoint();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
        const auto& ev = es.eigenvalues();
        CHECK(ev(14) / ev(15) < 1e-12);
        // Each column is a multiple of the unit-modulus response.
        const CVector resp = spherical_response(a, polar_point(4.0, 1.0), c) * 4.0;
        for (Eigen::Index l = 0; l < 5; ++l) {
            const cdouble ratio = s.data(0, l) / resp(0);
            CHECK((s.data.col(l) - ratio * resp).norm() < 1e-9 * s.data.col(l).norm());
        }
    }
    SECTION("determinism and thread invariance") {
        const std::vector<Target> t{{5.0, 1.0}, {9.0, 2.0, {0.5, 0.5}}};
        const auto s1 = simulate_snapshots(a, t, 64, 10.0, 42, c, 1);
        const auto s2 = simulate_snapshots(a, t, 64, 10.0, 42, c, 4);
        const auto s3 = simulate_snapshots(a, t, 64, 10.0, 43, c, 1);
        CHECK(s1.data == s2.data);
        CHECK(s1.data != s3.data);
    }
    SECTION("invalid input") {
        const std::vector<Target> bad{{0.0, 1.0}};
        CHECK_THROWS_AS(simulate_snapshots(a, bad, 10, 10, 1, c), Error);
        CHECK_THROWS_AS(simulate_snapshots(a, {}, 0, 10, 1, c), Error);
    }
}

TEST_CASE("subspace split") {
    const Carrier c(28e9);
    const auto a = make_uniform_linear_array(32, c);
    const std::vector<Target> t{{3.0, deg2rad(60)}, {6.0, deg2rad(100)}};
    const auto s = simulate_snapshots(a, t, 200, 140.0, 5, c);
    SECTION("target responses are orthogonal to the noise subspace") {
        const auto split = split_subspaces(s, 2);
        CHECK(split.signal.cols() == 2);
        CHECK(split.noise.cols() == 30);
        for (const auto& tg : t) {
            const CVector v = spherical_response(a, polar_point(tg.range_m, tg.angle_rad), c);
            CHECK((split.noise.adjoint() * v).norm() < 1e-6);
        }
        CHECK((split.signal.adjoint() * split.noise).norm() < 1e-10);
    }
    SECTION("target count must stay below the antenna count") {
        try {
            split_subspaces(s, 32);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::invalid_argument);
        }
    }
    SECTION("asking for more targets than the covariance rank") {
        const auto noiseless = simulate_snapshots(a, std::vector<Target>{t[0]}, 40, 400.0, 2, c);
        try {
            split_subspaces(noiseless, 3);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::diagnostic);
        }
    }
}

TEST_CASE("music spectrum") {
    const Carrier c(28e9);
    const auto a = make_uniform_linear_array(128, c);
    SECTION("noiseless on-grid peak beats every other cell by 40 dB") {
        const std::vector<Target> t{{4.0, deg2rad(70)}};
        const auto s = simulate_snapshots(a, t, 100, 300.0, 9, c);
        const PolarAxes axes{PolarAxes::linspace(deg2rad(60), deg2rad(80), 41), PolarAxes::linspace(2, 8, 61)};
        const auto g = music_spectrum(s, 1, axes, a, c);
        const auto [i, j] = g.argmax();
        CHECK(axes.distances[i] == Approx(4.0));
        CHECK(rad2deg(axes.angles[j]) == Approx(70.0));
        const double peak = g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        RMatrix rest = g.values;
        rest(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
        CHECK(10 * std::log10(peak / rest.maxCoeff()) >= 40.0);
    }
    SECTION("scaling the data leaves the spectrum unchanged") {
        const std::vector<Target> t{{4.0, deg2rad(70)}, {6.0, deg2rad(85)}};
        auto s = simulate_snapshots(a, t, 60, 10.0, 9, c);
        const PolarAxes axes{PolarAxes::linspace(deg2rad(60), deg2rad(90), 16), PolarAxes::linspace(2, 8, 13)};
        const auto g1 = music_spectrum(s, 2, axes, a, c);
        s.data *= cdouble(0.0, 37.0);
        const auto g2 = music_spectrum(s, 2, axes, a, c);
        CHECK(((g1.values - g2.values).array().abs() / g1.values.array()).maxCoeff() < 1e-6);
    }
    SECTION("thread count does not change the spectrum") {
        const std::vector<Target> t{{4.0, deg2rad(70)}};
        const auto s = simulate_snapshots(a, t, 30, 10.0, 1, c);
        const PolarAxes axes{PolarAxes::linspace(1.0, 1.5, 11), PolarAxes::linspace(2, 8, 7)};
        CHECK(music_spectrum(s, 1, axes, a, c, 1).values == music_spectrum(s, 1, axes, a, c, 5).values);
    }
    SECTION("snapshot rows must match the array") {
        const auto s = simulate_snapshots(make_uniform_linear_array(8, c), {}, 10, 10, 1, c);
        CHECK_THROWS_AS(music_spectrum(s, 1, range_axis(1, 1, 2, 2), a, c), Error);
    }
}

TEST_CASE("range resolution along one direction") {
    const Carrier c(28e9);
    const auto a = make_uniform_linear_array(512, c);
    const double th = deg2rad(45);
    auto contrast = [&](double r1, double r2, double lo, double hi) {
        const std::vector<Target> t{{r1, th}, {r2, th}};
        const auto s = simulate_snapshots(a, t, 100, 10.0, 21, c);
        const auto g = music_spectrum(s, 2, range_axis(th, lo, hi, 301), a, c);
        return peak_to_saddle_contrast(range_profile(g, 0));
    };
    const double near = contrast(10.0, 25.0, 5.0, 50.0);
    CHECK(10 * std::log10(near) > 10.0);
    // Same angular setup deep in the far field: range is barely observable.
    const double rd = rayleigh_distance(a.aperture(), c.wavelength());
    const double far = contrast(2 * rd, 2.5 * rd, 1.5 * rd, 3 * rd);
    CHECK(far < near);
}

TEST_CASE("target estimation") {
    SECTION("three targets at 45 degrees within one grid cell") {
        const Carrier c(28e9);
        const auto a = make_uniform_linear_array(512, c);
        const std::vector<Target> t{{10.0, deg2rad(45)}, {25.0, deg2rad(45)}, {40.0, deg2rad(45)}};
        const auto s = simulate_snapshots(a, t, 100, 10.0, 7, c, 2);
        PolarAxes axes;
        for (double r = 5.0; r <= 50.0 + 1e-9; r += 0.5) axes.distances.push_back(r);
        for (double d = 40.0; d <= 50.0 + 1e-9; d += 0.5) axes.angles.push_back(deg2rad(d));
        const auto est = estimate_targets(music_spectrum(s, 3, axes, a, c, 2), 3);
        REQUIRE(est.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(std::abs(est[i].range_m - t[i].range_m) <= 0.5 + 1e-9);
            CHECK(std::abs(rad2deg(est[i].angle_rad) - 45.0) <= 0.5 + 1e-9);
        }
    }
    SECTION("a flat spectrum yields a diagnostic") {
        PolarGrid g{{0.1, 0.2, 0.3}, {1, 2, 3}, RMatrix::Constant(3, 3, 2.0)};
        try {
            estimate_targets(g, 1);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::diagnostic);
        }
    }
    SECTION("peaks are ranked by value, then reported by range") {
        RMatrix v = RMatrix::Zero(5, 3);
        v(1, 1) = 3.0;
        v(3, 1) = 5.0;
        const PolarGrid g{{0.1, 0.2, 0.3}, {1, 2, 3, 4, 5}, v};
        const auto one = estimate_targets(g, 1);
        CHECK(one[0].range_m == 4.0);
        const auto two = estimate_targets(g, 2);
        CHECK(two[0].range_m == 2.0);
        CHECK(two[1].range_m == 4.0);
    }
}

TEST_CASE("peak to saddle contrast") {
    const std::vector<double> two{1, 5, 2, 4, 1};
    CHECK(peak_to_saddle_contrast(two) == Approx(2.0));
    const std::vector<double> one{1, 2, 3, 2, 1};
    CHECK(peak_to_saddle_contrast(one) == 1.0);
}

TEST_CASE("sensing csv export") {
    const PolarGrid g{{0.5}, {2.0}, RMatrix::Constant(1, 1, 100.0)};
    CHECK(spectrum_to_csv(g).str().rfind("angle_deg,distance_m,value_db\n", 0) == 0);
    CHECK(estimates_to_csv({{3.0, pi / 4, 1.0}}).str() == "rank,range_m,angle_deg\n1,3,45\n");
}
