#include "nfkit/channel.hpp"
#include "oracles.hpp"

#include <Eigen/SVD>
#include <catch_amalgamated.hpp>

using namespace nfkit;
using Catch::Approx;

namespace {

oracle::P3 p3(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

double correlation(const CVector& a, const CVector& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

} // namespace

TEST_CASE("farfield channel") {
    const Carrier c(3e9);
    SECTION("single element has zero phase") {
        const auto h = farfield_channel(make_uniform_linear_array(1, 0.05), 0.7, c).vector();
        CHECK(std::abs(h(0) - cdouble(1.0, 0.0)) < 1e-15);
    }
    SECTION("broadside pair is equal") {
        const auto h = farfield_channel(make_uniform_linear_array(2, c), pi / 2, c).vector();
        CHECK(std::abs(h(0) - h(1)) < 1e-12);
    }
    SECTION("128 elements at 45 degrees against the per-element dot product") {
        const auto a = make_uniform_linear_array(128, c);
        const double th = deg2rad(45.0);
        const auto h = farfield_channel(a, th, c).vector();
        const double k = 2 * oracle::pi / oracle::wavelength(3e9);
        for (std::size_t n = 0; n < a.size(); ++n) {
            const auto p = p3(a.element(n));
            const double proj = p.x * std::sin(th) + p.y * std::cos(th);
            const cdouble expect(std::cos(k * proj), std::sin(k * proj));
            CHECK(std::abs(h(static_cast<Eigen::Index>(n)) - expect) < 1e-9);
        }
        // Increment between neighbours is k (lambda / 2) cos(theta).
        const double step = std::arg(h(1) / h(0));
        CHECK(step == Approx(k * a.spacing() * std::cos(th)));
    }
}

TEST_CASE("nusw channel") {
    const Carrier c(28e9);
    const double lambda = c.wavelength();
    SECTION("one element at one wavelength") {
        const auto a = make_uniform_linear_array(1, 0.01);
        const auto h = nusw_channel(a, Vec3(lambda, 0, 0), c).vector();
        CHECK(std::abs(h(0)) == Approx(1.0 / (4 * pi)));
        CHECK(std::abs(std::arg(h(0))) < 1e-9);
    }
    SECTION("equidistant pair") {
        const auto h = nusw_channel(make_uniform_linear_array(2, c), Vec3(3.0, 0, 0), c).vector();
        CHECK(std::abs(h(0) - h(1)) < 1e-15);
    }
    SECTION("entries match the Friis oracle to 1e-12") {
        const auto a = make_uniform_linear_array(64, c);
        const Vec3 rx = polar_point(2.5, 1.1);
        const auto h = nusw_channel(a, rx, c).vector();
        for (std::size_t n = 0; n < a.size(); ++n) {
            const auto ref = oracle::link(p3(a.element(n)), p3(rx), oracle::wavelength(28e9));
            const auto got = h(static_cast<Eigen::Index>(n));
            CHECK(std::abs(std::abs(got) - std::abs(ref)) <= 1e-12 * std::abs(ref));
            CHECK(std::abs(got - ref) <= 1e-9 * std::abs(ref));
        }
    }
    SECTION("coincident receiver") {
        const auto a = make_uniform_linear_array(4, c);
        CHECK_THROWS_AS(nusw_channel(a, a.element(2), c), Error);
        try {
            nusw_channel(a, a.element(2), c);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::singular_geometry);
        }
    }
}

TEST_CASE("nusw converges to the planar wave beyond the Rayleigh distance") {
    const Carrier c(3e9);
    const auto a = make_uniform_linear_array(128, c);
    const double rd = rayleigh_distance(a.aperture(), c.wavelength());
    for (double th : {pi / 2, deg2rad(60.0), deg2rad(120.0)}) {
        const auto ff = farfield_channel(a, th, c).vector();
        CHECK(correlation(ff, nusw_channel(a, polar_point(10 * rd, th), c).vector()) >= 0.99);
        CHECK(correlation(ff, nusw_channel(a, polar_point(0.1 * rd, th), c).vector()) < 0.95);
    }
}

TEST_CASE("mimo channel") {
    const Carrier c(28e9);
    const double lambda = c.wavelength();
    SECTION("scalar case is Friis") {
        const auto t = make_uniform_linear_array(1, 0.01);
        const auto r = t.translated(Vec3(2.0, 0, 0));
        CHECK(std::abs(nusw_mimo_channel(t, r, c).entries(0, 0) - oracle::link({0, 0, 0}, {2, 0, 0}, lambda)) < 1e-15);
    }
    SECTION("4x4 at five wavelengths matches the pair table") {
        const auto t = make_uniform_linear_array(4, c);
        const auto r = t.translated(Vec3(5 * lambda, 0, 0));
        const auto h = nusw_mimo_channel(t, r, c).entries;
        REQUIRE(h.rows() == 4);
        REQUIRE(h.cols() == 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const auto ref = oracle::link(p3(t.element(j)), p3(r.element(i)), oracle::wavelength(28e9));
                CHECK(std::abs(h(i, j) - ref) <= 1e-9 * std::abs(ref));
            }
    }
    SECTION("reciprocity") {
        const auto t = make_uniform_planar_array(3, 2, 0.02);
        const auto r = make_uniform_linear_array(5, c).translated(Vec3(0.7, 0.1, 0.05));
        const CMatrix a = nusw_mimo_channel(t, r, c).entries;
        const CMatrix b = nusw_mimo_channel(r, t, c).entries;
        CHECK((a - b.transpose()).norm() <= 1e-15 * a.norm());
    }
}

TEST_CASE("green's function") {
    const Carrier c(28e9);
    const double lambda = c.wavelength();
    const auto g1 = greens_function(Vec3::Zero(), Vec3(lambda, 0, 0), c);
    CHECK(g1.real() == Approx(1.0 / (4 * pi * lambda)));
    CHECK(std::abs(g1.imag()) < 1e-9 * std::abs(g1));
    const auto g2 = greens_function(Vec3::Zero(), Vec3(0, lambda / 2, 0), c);
    CHECK(g2.real() == Approx(-1.0 / (2 * pi * lambda)));
    CHECK(std::abs(g2.imag()) < 1e-9 * std::abs(g2));
    const auto g3 = greens_function(Vec3::Zero(), Vec3(0, 0, 3.7), c);
    CHECK(std::abs(g3) == Approx(1.0 / (4 * pi * 3.7)));
    const double k = 2 * oracle::pi / oracle::wavelength(28e9);
    const double expect = std::remainder(-k * 3.7, 2 * oracle::pi);
    CHECK(std::abs(std::remainder(std::arg(g3) - expect, 2 * oracle::pi)) < 1e-6);
    CHECK_THROWS_AS(greens_function(Vec3(1, 1, 1), Vec3(1, 1, 1), c), Error);
}

TEST_CASE("green's operator") {
    const Carrier c(29979245800.0); // lambda = 1 cm
    SECTION("single patch") {
        const ApertureSurface t(Vec3::Zero(), 0.1, 0.2, 1, 1);
        const ApertureSurface r(Vec3(1, 0, 0), 0.3, 0.1, 1, 1);
        const auto g = greens_operator(t, r, c);
        CHECK(std::abs(g.entries(0, 0) - greens_function(Vec3::Zero(), Vec3(1, 0, 0), c) * std::sqrt(0.02 * 0.03)) <
              1e-15);
    }
    SECTION("swap gives the transpose") {
        const ApertureSurface t(Vec3::Zero(), 0.1, 0.1, 4, 3);
        const ApertureSurface r(Vec3(0.5, 0.05, 0), 0.1, 0.2, 2, 5);
        const CMatrix a = greens_operator(t, r, c).entries;
        const CMatrix b = greens_operator(r, t, c).entries;
        CHECK((a - b.transpose()).norm() <= 1e-14 * a.norm());
    }
    SECTION("leading singular value is stable under refinement below lambda/4") {
        const double side = 0.03;
        auto sigma1 = [&](std::size_t np) {
            const ApertureSurface t(Vec3::Zero(), side, side, np, np);
            const ApertureSurface r(Vec3(0.2, 0, 0), side, side, np, np);
            Eigen::BDCSVD<CMatrix> svd(greens_operator(t, r, c).entries);
            return svd.singularValues()(0);
        };
        const double a = sigma1(13); // patch 2.3 mm < lambda / 4
        const double b = sigma1(26);
        CHECK(std::abs(a - b) / b < 0.01);
    }
    SECTION("threads do not change the result") {
        const ApertureSurface t(Vec3::Zero(), 0.1, 0.1, 8, 8);
        const ApertureSurface r(Vec3(0.4, 0, 0), 0.1, 0.1, 8, 8);
        CHECK(greens_operator(t, r, c, 1).entries == greens_operator(t, r, c, 4).entries);
    }
    SECTION("overlapping surfaces") {
        const ApertureSurface t(Vec3::Zero(), 0.1, 0.1, 2, 2);
        CHECK_THROWS_AS(greens_operator(t, t, c), Error);
    }
}

TEST_CASE("wideband channels") {
    SECTION("single subcarrier equals narrowband") {
        const auto a = make_uniform_linear_array(16, Carrier(1e11));
        const Vec3 rx = polar_point(3.0, 1.0);
        const auto set = wideband_channels(a, rx, 1e11, 5e9, 1);
        REQUIRE(set.frequencies_hz.size() == 1);
        CHECK(set.frequencies_hz[0] == 1e11);
        CHECK(set.channels[0].entries == nusw_channel(a, rx, Carrier(1e11)).entries);
    }
    SECTION("zero bandwidth gives identical channels") {
        const auto a = make_uniform_linear_array(8, Carrier(1e11));
        const auto set = wideband_channels(a, Vec3(1, 0, 0), 1e11, 0.0, 3);
        CHECK(set.channels[0].entries == set.channels[2].entries);
    }
    SECTION("256 antennas, 129 subcarriers, recomputed per element") {
        const auto a = make_uniform_linear_array(256, Carrier(1e11));
        const Vec3 rx = polar_point(10.0, deg2rad(45.0));
        const auto set = wideband_channels(a, rx, 1e11, 1e10, 129, 3);
        REQUIRE(set.frequencies_hz.size() == 129);
        CHECK(set.frequencies_hz.front() == Approx(95e9));
        CHECK(set.frequencies_hz.back() == Approx(105e9));
        CHECK(set.frequencies_hz[64] == 1e11);
        for (std::size_t m = 1; m < 129; ++m) CHECK(set.frequencies_hz[m] > set.frequencies_hz[m - 1]);
        for (std::size_t m : {0u, 40u, 128u})
            for (Eigen::Index n : {0, 77, 255}) {
                const auto ref = oracle::link(p3(a.element(static_cast<std::size_t>(n))), p3(rx),
                                              oracle::wavelength(set.frequencies_hz[m]));
                CHECK(std::abs(set.channels[m].entries(n, 0) - ref) <= 1e-9 * std::abs(ref));
            }
        CHECK(set.channels[64].entries == nusw_channel(a, rx, Carrier(1e11)).entries);
    }
    SECTION("non-positive edge frequency") {
        const auto a = make_uniform_linear_array(2, 0.01);
        CHECK_THROWS_AS(wideband_channels(a, Vec3(1, 0, 0), 1e9, 2e9, 5), Error);
    }
}

TEST_CASE("channel csv export") {
    const auto a = make_uniform_linear_array(2, 0.01);
    const auto t = channel_to_csv(nusw_channel(a, Vec3(1, 0, 0), Carrier(1e10)));
    const auto s = t.str();
    CHECK(s.rfind("row,col,re,im\n", 0) == 0);
    CHECK(t.rows() == 2);
}
