#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cornerlab/geometry.hpp"

using namespace cornerlab;

namespace {

BodyGeometry equilateral(double side = 1.0) {
    const double h = side * std::sqrt(3.0) / 2.0;
    return BodyGeometry::polygon({{-side / 2, -h / 3}, {side / 2, -h / 3}, {0.0, 2 * h / 3}});
}

BodyGeometry l_hexagon() {
    return BodyGeometry::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
}

}  // namespace

TEST(Geometry, TriangleCornersProtrude) {
    const auto body = equilateral();
    const auto cs = classify_corners(body);
    ASSERT_EQ(cs.size(), 3u);
    for (const auto& c : cs) {
        EXPECT_NEAR(c.fluid_angle, 5 * pi / 3, 1e-12);
        EXPECT_TRUE(c.protruding);
        EXPECT_TRUE(c.pacman_verified);
        EXPECT_GT(c.pacman_radius, 0.0);
        EXPECT_NEAR(c.theta1 - c.theta0, c.fluid_angle, 1e-15);
    }
}

TEST(Geometry, ClockwiseInputIsNormalized) {
    const auto body = BodyGeometry::polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
    EXPECT_GT(BodyGeometry::signed_area(body.polyline()), 0.0);
    for (const auto& c : body.corners()) EXPECT_NEAR(c.fluid_angle, 1.5 * pi, 1e-12);
}

TEST(Geometry, SlitTipsHaveFullAngle) {
    const auto body = BodyGeometry::slit({-1, 0}, {1, 0});
    const auto cs = classify_corners(body);
    ASSERT_EQ(cs.size(), 2u);
    for (const auto& c : cs) {
        EXPECT_NEAR(c.fluid_angle, two_pi, 1e-12);
        EXPECT_TRUE(c.protruding);
        EXPECT_TRUE(c.pacman_verified);
    }
    EXPECT_FALSE(body.closed());
}

TEST(Geometry, LHexagonAngles) {
    const auto cs = classify_corners(l_hexagon());
    ASSERT_EQ(cs.size(), 6u);
    int protruding = 0, receding = 0;
    for (const auto& c : cs) {
        if (c.protruding) {
            ++protruding;
            EXPECT_NEAR(c.fluid_angle, 1.5 * pi, 1e-12);
        } else {
            ++receding;
            EXPECT_NEAR(c.fluid_angle, 0.5 * pi, 1e-12);
            EXPECT_NEAR(c.location.x, 1.0, 0);
            EXPECT_NEAR(c.location.y, 1.0, 0);
        }
    }
    EXPECT_EQ(protruding, 5);
    EXPECT_EQ(receding, 1);
}

TEST(Geometry, AngleSumOfSimplePolygons) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.5, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 3 + trial % 9;
        std::vector<Vec2> v;
        for (int k = 0; k < n; ++k) v.push_back(U(rng) * unit_from_angle(two_pi * k / n));
        const auto body = BodyGeometry::polygon(v);
        double sum = 0.0;
        for (const auto& c : body.corners()) sum += pi - (two_pi - c.fluid_angle);
        EXPECT_NEAR(sum, two_pi, 1e-10);
    }
    double sum = 0.0;
    for (const auto& c : l_hexagon().corners()) sum += pi - (two_pi - c.fluid_angle);
    EXPECT_NEAR(sum, two_pi, 1e-12);
}

TEST(Geometry, PacmanTest) {
    const auto tri = equilateral();
    const auto& c0 = tri.corners()[0];
    EXPECT_TRUE(pacman_test(tri, c0, 1e-3));
    // a convex body stays inside the solid cone of each vertex
    EXPECT_TRUE(pacman_test(tri, c0, 10.0));

    const auto L = l_hexagon();
    for (const auto& c : L.corners()) {
        if (!c.protruding) {
            for (double r : {1e-3, 0.5, 5.0}) EXPECT_FALSE(pacman_test(L, c, r));
            continue;
        }
        if (c.location == Vec2{1, 2}) {
            EXPECT_TRUE(pacman_test(L, c, 0.5));
            EXPECT_FALSE(pacman_test(L, c, 1.5));  // reaches the arm top y = 1
        }
    }
    EXPECT_THROW(pacman_test(tri, c0, 0.0), std::invalid_argument);
}

TEST(Geometry, InsideAndCrossings) {
    const auto L = l_hexagon();
    EXPECT_TRUE(L.inside({0.5, 0.5}));
    EXPECT_FALSE(L.inside({1.5, 1.5}));
    const auto xs = L.row_crossings(0.5);
    ASSERT_EQ(xs.size(), 2u);
    EXPECT_DOUBLE_EQ(xs[0], 0.0);
    EXPECT_DOUBLE_EQ(xs[1], 2.0);
    // a row through a vertex at a local extremum is not counted
    const auto tri = equilateral();
    EXPECT_EQ(tri.row_crossings(tri.corners()[2].location.y).size() % 2, 0u);
    const auto c = BodyGeometry::circle({0, 0}, 1.0);
    const auto ys = c.column_crossings(0.6);
    ASSERT_EQ(ys.size(), 2u);
    EXPECT_NEAR(ys[1], 0.8, 1e-15);
    EXPECT_NEAR(c.distance({3.0, 0.0}), 2.0, 1e-15);
}

TEST(Geometry, DegenerateEdgeRejected) {
    EXPECT_THROW(BodyGeometry::polygon({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), DegenerateGeometry);
}

TEST(KarmanTrefftz, MapBasics) {
    for (double nu : {1.5, 1.75, 2.0}) {
        EXPECT_NEAR(std::abs(karman_trefftz_map({1.0, 0.0}, nu) - complex(nu, 0.0)), 0.0, 1e-15);
        const complex big(3e6, 2e6);
        EXPECT_NEAR(std::abs(karman_trefftz_map(big, nu) / big - 1.0), 0.0, 1e-5);
        // dz/dzeta -> 1
        EXPECT_NEAR(std::abs(karman_trefftz_derivative(big, nu) - 1.0), 0.0, 1e-5);
    }
}

TEST(KarmanTrefftz, FlatPlate) {
    for (int k = 1; k < 64; ++k) {
        const complex zeta = std::polar(1.0, two_pi * k / 64.0);
        if (std::abs(zeta + 1.0) < 1e-9) continue;
        const complex z = karman_trefftz_map(zeta, 2.0);
        EXPECT_NEAR(z.imag(), 0.0, 1e-12);
        EXPECT_LE(std::abs(z.real()), 2.0 + 1e-12);
    }
    KarmanTrefftzProfile p{2.0, {0.0, 0.0}, 0.0, 1.0, std::nullopt};
    const auto body = profile_to_body(p, 512);
    ASSERT_EQ(body.corners().size(), 2u);
    for (const auto& c : body.corners()) EXPECT_NEAR(c.fluid_angle, two_pi, 1e-12);
}

TEST(KarmanTrefftz, DerivativeMatchesDifference) {
    const double nu = 1.5;
    for (const complex zeta : {complex(1.2, 0.7), complex(-0.3, 1.4), complex(2.0, -1.0)}) {
        const double h = 1e-6;
        const complex fd = (karman_trefftz_map(zeta + h, nu) - karman_trefftz_map(zeta - h, nu)) / (2 * h);
        EXPECT_NEAR(std::abs(fd - karman_trefftz_derivative(zeta, nu)), 0.0, 1e-7);
    }
}

TEST(KarmanTrefftz, Fig4Profile) {
    KarmanTrefftzProfile p{1.5, {0.0, 0.0}, 0.0, 1.0, std::nullopt};
    const auto body = profile_to_body(p, 2048);
    ASSERT_EQ(body.corners().size(), 2u);
    for (const auto& c : body.corners()) {
        EXPECT_NEAR(c.fluid_angle, 1.5 * pi, 1e-12);
        EXPECT_TRUE(c.protruding);
        EXPECT_TRUE(c.pacman_verified);
    }
    EXPECT_NEAR(body.corners()[0].location.x, 1.5, 1e-15);
    EXPECT_NEAR(body.corners()[1].location.x, -1.5, 1e-15);
    // symmetric about both axes
    for (const Vec2& q : body.polyline()) {
        EXPECT_NEAR(body.distance({q.x, -q.y}), 0.0, 1e-3);
        EXPECT_NEAR(body.distance({-q.x, q.y}), 0.0, 1e-3);
    }
}

TEST(KarmanTrefftz, Fig6ProfileHasOneCorner) {
    KarmanTrefftzProfile p{1.75, {-0.1, 0.0}, 0.0, 1.0, std::nullopt};
    const auto body = profile_to_body(p, 2048);
    ASSERT_EQ(body.corners().size(), 1u);
    EXPECT_NEAR(body.corners()[0].fluid_angle, 1.75 * pi, 1e-12);
    EXPECT_GT(BodyGeometry::signed_area(body.polyline()), 0.0);
}

TEST(KarmanTrefftz, IdentityLimitIsCircle) {
    KarmanTrefftzProfile p{1.0, {0.0, 0.0}, 0.0, 1.0, std::nullopt};
    const auto body = profile_to_body(p, 256);
    EXPECT_TRUE(body.corners().empty());
    for (const Vec2& q : body.polyline()) EXPECT_NEAR(norm(q), 1.0, 1e-14);
}

TEST(KarmanTrefftz, InvalidProfile) {
    KarmanTrefftzProfile p{1.5, {-0.1, 0.0}, 0.0, 1.0, 1.0};
    EXPECT_THROW(profile_to_body(p), InvalidProfile);
    KarmanTrefftzProfile q{2.5, {0.0, 0.0}, 0.0, 1.0, std::nullopt};
    EXPECT_THROW(profile_to_body(q), InvalidProfile);
}

TEST(KarmanTrefftz, InverseRoundTrip) {
    for (const complex mu : {complex(0.0, 0.0), complex(-0.1, 0.0), complex(-0.08, 0.12)}) {
        KarmanTrefftzProfile p{1.75, mu, 0.0, 1.0, std::nullopt};
        const double R = p.circle_radius();
        for (double rr : {1.0001, 1.1, 2.0, 10.0})
            for (int k = 0; k < 60; ++k) {
                const complex zeta = mu + std::polar(R * rr, two_pi * (k + 0.5) / 60.0);
                const complex z = profile_map(p, zeta);
                EXPECT_NEAR(std::abs(profile_inverse(p, z) - zeta), 0.0, 1e-9 * std::abs(zeta));
            }
    }
}

TEST(KarmanTrefftz, InjectiveOnFarAnnulus) {
    std::vector<complex> img;
    for (double r : {5.0, 6.0, 8.0})
        for (int k = 0; k < 200; ++k) img.push_back(karman_trefftz_map(std::polar(r, two_pi * k / 200.0), 1.5));
    double dmin = 1e300;
    for (std::size_t i = 0; i < img.size(); ++i)
        for (std::size_t j = i + 1; j < img.size(); ++j) dmin = std::min(dmin, std::abs(img[i] - img[j]));
    EXPECT_GT(dmin, 1e-3);
}

TEST(KarmanTrefftz, PolylineCornerAngleMatches) {
    for (auto [nu, mu] : {std::pair{1.5, complex(0.0, 0.0)}, std::pair{1.75, complex(-0.1, 0.0)}}) {
        KarmanTrefftzProfile p{nu, mu, 0.0, 1.0, std::nullopt};
        const auto body = profile_to_body(p, 2048);
        const auto& pts = body.polyline();
        const std::size_t n = pts.size();
        for (const auto& c : body.corners()) {
            const Vec2 prev = pts[(c.vertex + n - 1) % n] - c.location;
            const Vec2 next = pts[(c.vertex + 1) % n] - c.location;
            const double measured = wrap_2pi(angle_of(next) - angle_of(prev));
            EXPECT_NEAR(deg(measured), deg(nu * pi), 1.0);
            EXPECT_NEAR(deg(wrap_around(angle_of(prev), c.theta0)), deg(c.theta0), 1.0);
        }
    }
}
