#include <gtest/gtest.h>

#include <cmath>

#include "cornerlab/topology.hpp"

using namespace cornerlab;

namespace {

StreamlineGraph trace_circle(double gamma, double attach_tol, double same_tol = 1e-3) {
    const auto flow = ConformalFlow::circle(gamma);
    const auto e = conformal_evaluator(flow, BodyGeometry::circle({0, 0}, 1.0));
    TraceOptions o;
    o.h = 1.0 / 16;
    o.attach_tol = attach_tol;
    o.same_point_tol = same_tol;
    return trace_body_streamline(e, o);
}

}  // namespace

TEST(Topology, StraightLineZeroSet) {
    ScalarEvaluator e;
    e.psi = [](Vec2 p) { return p.y - 0.3; };
    e.in_fluid = [](Vec2) { return true; };
    const auto s = sample_evaluator(e, {-1, -1}, {1, 1}, 0.1);
    const auto z = extract_zero_set(s, e.psi);
    ASSERT_EQ(z.curves.size(), 1u);
    EXPECT_FALSE(z.closed[0]);
    for (const Vec2& p : z.curves[0]) EXPECT_NEAR(p.y, 0.3, 1e-9);
    EXPECT_NEAR(std::abs(z.curves[0].front().x - z.curves[0].back().x), 2.0, 1e-12);
}

TEST(Topology, CircleContourIsClosed) {
    ScalarEvaluator e;
    e.psi = [](Vec2 p) { return norm_sq(p) - 0.5; };
    e.in_fluid = [](Vec2) { return true; };
    const auto z = extract_zero_set(sample_evaluator(e, {-1, -1}, {1, 1}, 0.05), e.psi);
    ASSERT_EQ(z.curves.size(), 1u);
    EXPECT_TRUE(z.closed[0]);
}

TEST(Topology, PowerVerticesHaveExactMultiplicity) {
    for (int m = 1; m <= 4; ++m) {
        auto psi = [m](Vec2 p) { return std::imag(std::pow(p.to_complex(), m)); };
        const auto v = classify_vertex(psi, {0.0, 0.0}, 0.1);
        EXPECT_EQ(v.m, m);
        EXPECT_TRUE(v.resolved);
        ASSERT_EQ(v.spacings.size(), std::size_t(2 * m));
        for (double s : v.spacings) EXPECT_NEAR(deg(s), 180.0 / m, 1.0);
    }
}

TEST(Topology, VertexCandidatesOnGrid) {
    ScalarEvaluator e;
    e.psi = [](Vec2 p) { return std::imag(std::pow(p.to_complex(), 3)); };
    e.in_fluid = [](Vec2) { return true; };
    const auto c = vertex_candidates(sample_evaluator(e, {-1, -1}, {1, 1}, 0.125));
    ASSERT_EQ(c.size(), 1u);
    EXPECT_NEAR(norm(c[0]), 0.0, 1e-12);
}

TEST(Topology, BoundaryVertexCountsTheWall) {
    // psi = x y in the upper half plane: one interior ray plus the wall
    auto psi = [](Vec2 p) { return p.x * p.y; };
    auto fluid = [](Vec2 p) { return p.y >= 0.0; };
    const auto v = classify_vertex(psi, {0.0, 0.0}, 0.1, fluid);
    EXPECT_TRUE(v.boundary);
    EXPECT_EQ(v.m, 2);
}

TEST(Topology, CircleWithoutCirculationAttachesAtRightAngles) {
    const auto g = trace_circle(0.0, 1e-4);
    ASSERT_EQ(g.outcome, "two_attachments");
    ASSERT_EQ(g.attachments.size(), 2u);
    EXPECT_NEAR(g.attachments[0].body_point.x, -1.0, 1e-6);
    EXPECT_NEAR(g.attachments[1].body_point.x, 1.0, 1e-6);
    for (const auto& a : g.attachments) EXPECT_NEAR(a.angle_deg, 90.0, 1.0);
}

TEST(Topology, SubcriticalCirculationAngles) {
    const auto g = trace_circle(12.0, 1e-4);
    ASSERT_EQ(g.outcome, "two_attachments");
    const double phi = std::asin(12.0 / (4 * pi));
    EXPECT_NEAR(g.attachments[0].body_point.x, -std::cos(phi), 1e-5);
    EXPECT_NEAR(g.attachments[0].body_point.y, std::sin(phi), 1e-5);
    for (const auto& a : g.attachments) EXPECT_NEAR(a.angle_deg, 90.0, 2.0);
}

TEST(Topology, CriticalCirculationDoubleAttachment) {
    const auto g = trace_circle(4 * pi, 1e-4);
    ASSERT_EQ(g.outcome, "double_attachment");
    for (const auto& a : g.attachments) {
        EXPECT_NEAR(a.body_point.y, 1.0, 1e-4);
        EXPECT_NEAR(a.angle_deg, 60.0, 3.0);
    }
}

TEST(Topology, SupercriticalCirculationFreeStreamline) {
    const auto g = trace_circle(12.8, 1e-4);
    EXPECT_EQ(g.outcome, "through_curve");
    ASSERT_EQ(g.curves.size(), 1u);
    EXPECT_EQ(g.curves[0].start.kind, EndKind::NegInfinity);
    EXPECT_EQ(g.curves[0].end.kind, EndKind::PosInfinity);
    const auto r = check_structure(g, BodyGeometry::circle({0, 0}, 1.0));
    EXPECT_TRUE(r.cycle_free);
    EXPECT_TRUE(r.curve_count_ok);
    EXPECT_EQ(r.unbounded_ends, 2u);
}

TEST(Topology, TransitionAtCriticalCirculation) {
    double lo = 12.0, hi = 12.8;
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        (trace_circle(mid, 1e-5).outcome == "through_curve" ? hi : lo) = mid;
    }
    EXPECT_NEAR(0.5 * (lo + hi), 4 * pi, 0.005 * 4 * pi);
}

TEST(Topology, ProfileTrailingCornerAttachment) {
    KarmanTrefftzProfile p;
    p.center_mu = {-0.1, 0.0};
    p.nu = 315.0 / 180.0;
    p.alpha = 0.0;
    const auto body = profile_to_body(p);
    const auto flow = ConformalFlow::profile(p, kutta_circulation(p));
    TraceOptions o;
    o.h = 1.0 / 16;
    o.attach_tol = 1e-4;
    const auto g = trace_body_streamline(conformal_evaluator(flow, body), o);
    ASSERT_EQ(g.attachments.size(), 2u);
    const auto r = check_structure(g, body);
    EXPECT_FALSE(r.theorem_flag);
    EXPECT_EQ(r.protruding_unattached, 0u);
}

TEST(Topology, NumericCircleFieldIsCycleFree) {
    GridParams gp;
    gp.h = 1.0 / 8;
    gp.r_far = 8.0;
    FlowSolver s(external_flow_discretization(BodyGeometry::circle({0, 0}, 1.0), gp));
    for (double G : {0.0, 12.8}) {
        const auto f = s.solve_incompressible(FarField::incompressible()).at(G);
        const auto r = field_structure(f, BodyGeometry::circle({0, 0}, 1.0), gp.r_far);
        EXPECT_TRUE(r.cycle_free) << G;
        EXPECT_TRUE(r.curve_count_ok) << G;
        EXPECT_EQ(r.unbounded_ends, 2u) << G;
        EXPECT_FALSE(r.inconclusive) << G;
    }
}

TEST(Topology, NodalCurveGrazingTheBodySplits) {
    GridParams gp;
    gp.h = 1.0 / 8;
    gp.r_far = 8.0;
    const auto circle = BodyGeometry::circle({0, 0}, 1.0);
    FlowSolver s(external_flow_discretization(circle, gp));
    // free streamline stays about 0.21 off the body at 12.8
    const auto f = s.solve_incompressible(FarField::incompressible()).at(12.8);
    EXPECT_EQ(field_streamline_graph(f, circle, gp.r_far, 0.05).outcome, "through_curve");
    const auto g = field_streamline_graph(f, circle, gp.r_far, 0.3);
    ASSERT_EQ(g.attachments.size(), 2u);
    EXPECT_EQ(g.outcome, "double_attachment");
    EXPECT_NEAR(g.attachments[0].body_point.y, 1.0, 0.05);
}
