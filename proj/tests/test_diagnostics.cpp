#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cornerlab/diagnostics.hpp"

using namespace cornerlab;

namespace {

// A : D^2 of r^(1-eps) f(theta) by central differences in Cartesian coordinates
double fd_residual(const SubsolutionParams& p, const Coefficients& A, Vec2 x) {
    auto s = [&](Vec2 q) {
        const double r = norm(q);
        const double t = p.theta_c + std::remainder(angle_of(q) - p.theta_c, two_pi);
        return std::pow(r, 1 - p.eps) * p.f(t);
    };
    const double d = 1e-4 * norm(x);
    const double uxx = (s(x + Vec2{d, 0}) - 2 * s(x) + s(x - Vec2{d, 0})) / (d * d);
    const double uyy = (s(x + Vec2{0, d}) - 2 * s(x) + s(x - Vec2{0, d})) / (d * d);
    const double uxy = (s(x + Vec2{d, d}) - s(x + Vec2{d, -d}) - s(x + Vec2{-d, d}) + s(x + Vec2{-d, -d})) / (4 * d * d);
    return -(A.axx * uxx + 2 * A.axy * uxy + A.ayy * uyy);
}

BodyGeometry equilateral_triangle() {
    const double s = std::sqrt(3.0) / 2;
    return BodyGeometry::polygon({{0.0, 1.0}, {-s, -0.5}, {s, -0.5}});
}

KarmanTrefftzProfile one_corner_profile(double alpha_deg) {
    KarmanTrefftzProfile p;
    p.center_mu = {-0.1, 0.0};
    p.nu = 1.5;
    p.alpha = rad(alpha_deg);
    return p;
}

}  // namespace

TEST(Subsolution, AmplitudeExamples) {
    EXPECT_NEAR(subsolution_params(0.0, two_pi, 1.0).a, 1.0, 1e-12);
    EXPECT_NEAR(subsolution_params(0.0, 1.5 * pi, 1.0).a, std::sqrt(2.0), 1e-12);
    EXPECT_THROW(subsolution_params(0.0, pi, 1.0), NotProtruding);
    const auto p = subsolution_params(0.3, 0.3 + rad(270), 2.0);
    EXPECT_NEAR(p.eps, 1.0 / (3.0 * (1.0 + 3.0 * std::sqrt(2.0)) + 1.0), 1e-15);
}

TEST(Subsolution, ProfilePositiveInsideZeroOnRadii) {
    for (double deg_open : {191.0, 270.0, 315.0, 360.0}) {
        const auto p = subsolution_params(-1.0, -1.0 + rad(deg_open), 1.0);
        EXPECT_NEAR(p.f(p.theta0), 0.0, 1e-12);
        EXPECT_NEAR(p.f(p.theta1), 0.0, 1e-12);
        double fmax = 0.0, tmax = 0.0;
        for (int k = 1; k < 10000; ++k) {
            const double t = p.theta0 + (p.theta1 - p.theta0) * k / 10000.0;
            ASSERT_GT(p.f(t), 0.0);
            if (p.f(t) > fmax) {
                fmax = p.f(t);
                tmax = t;
            }
        }
        EXPECT_NEAR(tmax, p.theta_c, 1e-3);
        EXPECT_NEAR(p.f(p.theta_c) - p.fpp(p.theta_c) - 2 * p.f(p.theta_c) + 1.0, 0.0, 1e-12);
    }
}

TEST(Subsolution, ResidualMatchesFiniteDifferences) {
    const auto p = subsolution_params(0.2, 0.2 + rad(300), 3.0);
    const Coefficients A{2.0, 0.4, 1.2};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double r = 0.1 + u(rng), t = p.theta0 + 0.05 + (p.theta1 - p.theta0 - 0.1) * u(rng);
        const double scaled = subsolution_residual(p, A, r, t) * std::pow(r, -1 - p.eps);
        EXPECT_NEAR(scaled, fd_residual(p, A, r * unit_from_angle(t)), 1e-5 * (1 + std::abs(scaled)));
    }
}

TEST(Subsolution, LaplacianAndAnisotropicOperators) {
    const auto p = subsolution_params(0.0, 1.5 * pi, 1.0);
    const auto lap = verify_subsolution(p, [](Vec2) { return Coefficients{}; }, 10000, 3);
    EXPECT_LE(lap.max_residual, 0.0);
    const Coefficients D{2.0, 0.0, 1.0};
    EXPECT_NEAR(ellipticity_ratio(D), 2.0, 1e-15);
    const auto pd = subsolution_params(0.0, 1.5 * pi, 2.0);
    EXPECT_LE(verify_subsolution(pd, [&](Vec2) { return D; }, 10000, 4).max_residual, 0.0);
}

TEST(Subsolution, RandomEllipticOperators) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const double l1 = 0.1 + u(rng), l2 = l1 * (1.0 + 9.0 * u(rng)), phi = pi * u(rng);
        const double c = std::cos(phi), s = std::sin(phi);
        const Coefficients A{l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
        const double t0 = two_pi * u(rng);
        const auto q = subsolution_params(t0, t0 + rad(191.0 + 169.0 * u(rng)), ellipticity_ratio(A));
        EXPECT_LE(verify_subsolution(q, [&](Vec2) { return A; }, 1000, std::uint64_t(k)).max_residual, 0.0);
    }
}

TEST(Subsolution, InflatedExponentViolates) {
    auto p = subsolution_params(0.0, 1.5 * pi, 1.0);
    p.eps = 0.5;
    EXPECT_THROW(verify_subsolution(p, [](Vec2) { return Coefficients{}; }, 10000, 5), ConstructionViolation);
    EXPECT_GT(verify_subsolution(p, [](Vec2) { return Coefficients{}; }, 10000, 5, false).max_residual, 0.0);
}

TEST(Exponent, PowerLawFit) {
    std::vector<double> r, v;
    for (int k = 0; k < 6; ++k) {
        r.push_back(std::ldexp(1.0, -k));
        v.push_back(3.0 * std::pow(r.back(), -0.4));
    }
    const auto f = fit_power_law(r, v);
    EXPECT_NEAR(f.exponent, -0.4, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    EXPECT_TRUE(f.conclusive);
    EXPECT_FALSE(fit_power_law({1, 0.5, 0.25, 0.125}, {1, 2, 0.5, 3}).conclusive);
}

TEST(Exponent, ConformalCornerOracle) {
    const auto p = one_corner_profile(90.0);
    const auto body = profile_to_body(p);
    ASSERT_EQ(body.protruding_count(), 1u);
    const auto& c = body.corners()[0];
    const auto off = blowup_exponent(conformal_evaluator(ConformalFlow::profile(p, 0.0), body), c, 0.25, 6);
    EXPECT_NEAR(off.exponent, 1.0 / 1.5 - 1.0, 0.05);
    const auto on = blowup_exponent(conformal_evaluator(ConformalFlow::profile(p, kutta_circulation(p)), body), c, 0.25, 6);
    EXPECT_GE(on.exponent, -bounded_threshold);
}

TEST(Exponent, NumericCornerMatchesOracle) {
    const auto p = one_corner_profile(90.0);
    const auto body = profile_to_body(p);
    GridParams gp;
    gp.h = 1.0 / 16;
    gp.r_far = 10.0;
    gp.refine_levels = 6;
    FlowSolver s(external_flow_discretization(body, gp));
    const auto probes = corner_probes(s.disc(), body, {gp.h, 6, gp.refine_width});
    for (double G : {0.0, kutta_circulation(p)}) {
        const auto flow = ConformalFlow::profile(p, G);
        const auto slots =
            s.disc().slot_values([&](int owner, Vec2 q) { return owner == far_owner ? flow.psi(q) : 0.0; });
        const auto f = s.make_linear_field(slots, FarField::incompressible(1.0, G, p.alpha));
        const auto fit = blowup_exponent(probes[0], f);
        const auto oracle = blowup_exponent(conformal_evaluator(flow, body), probes[0].corner, probes[0].radii[0], 6);
        EXPECT_NEAR(fit.exponent, oracle.exponent, 0.05) << G;
    }
}

TEST(Theorem, TriangleSweepPasses) {
    const auto body = equilateral_triangle();
    GridParams gp;
    gp.h = 1.0 / 16;
    gp.r_far = 10.0;
    gp.refine_levels = 5;
    FlowSolver s(external_flow_discretization(body, gp));
    const auto pair = s.solve_incompressible(FarField::incompressible());
    const auto probes = corner_probes(s.disc(), body, {gp.h, 5, gp.refine_width});
    const auto table = circulation_sweep(pair, probes, default_gamma_grid());
    ASSERT_EQ(table.rows.size(), 41u);
    for (const auto& row : table.rows) {
        double smin = 1.0;
        for (const auto& c : row.corners) smin = std::min(smin, c.exponent);
        EXPECT_LE(smin, -0.15) << row.gamma_circ;
    }
    EXPECT_LE(table.max_simultaneously_bounded, 2u);
    EXPECT_EQ(theorem_check(body, table).verdict, "PASS");
}

TEST(Theorem, VerdictRules) {
    const auto body = equilateral_triangle();
    SweepTable t;
    SweepRow all;
    for (int k = 0; k < 3; ++k) {
        CornerReport c;
        c.corner = k;
        c.protruding = true;
        c.conclusive = true;
        c.bounded = true;
        c.exponent = 0.1;
        all.corners.push_back(c);
    }
    t.rows.push_back(all);
    EXPECT_EQ(theorem_check(body, t).verdict, "FAIL");
    t.rows[0].corners[1].conclusive = false;
    EXPECT_EQ(theorem_check(body, t).verdict, "INCONCLUSIVE");
    t.rows[0].status = "supersonic_encounter";
    EXPECT_EQ(theorem_check(body, t).verdict, "PASS");
    KarmanTrefftzProfile p;
    p.nu = 1.5;
    EXPECT_EQ(theorem_check(profile_to_body(p), t).verdict, "NOT_APPLICABLE");
    EXPECT_EQ(theorem_check(body, t, true).verdict, "NOT_APPLICABLE");
}

TEST(Theorem, GammaGridSpansKuttaValues) {
    const auto g = default_gamma_grid({2.0, -3.0});
    EXPECT_EQ(g.size(), 43u);
    EXPECT_DOUBLE_EQ(g.front(), -6.0);
    EXPECT_DOUBLE_EQ(g.back(), 6.0);
    EXPECT_NE(std::find(g.begin(), g.end(), 2.0), g.end());
}

TEST(Exponent, DiscreteKuttaRegularizesTheCorner) {
    auto p = one_corner_profile(90.0);
    const auto body = profile_to_body(p);
    GridParams gp;
    gp.h = 1.0 / 16;
    gp.r_far = 10.0;
    gp.refine_levels = 6;
    FlowSolver s(external_flow_discretization(body, gp));
    const auto pair = s.solve_incompressible(FarField::incompressible(1.0, 0.0, p.alpha));
    const auto probes = corner_probes(s.disc(), body, {gp.h, 6, gp.refine_width});
    const double k = discrete_kutta_circulation(pair, probes[0]);
    EXPECT_NEAR(k, kutta_circulation(p), 0.1 * std::abs(kutta_circulation(p)));
    EXPECT_GE(blowup_exponent(probes[0], pair.at(k)).exponent, -bounded_threshold);
    EXPECT_LE(blowup_exponent(probes[0], pair.at(0.0)).exponent, -0.25);
}
