// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// if any criterion fails. Oracles are written out here independently of the
// library code they check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cornerlab/scenario.hpp"

using namespace cornerlab;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

Scenario preset(const std::string& name) { return load_scenario(std::filesystem::path(CORNERLAB_PRESET_DIR) / (name + ".json")); }

BodyGeometry equilateral_triangle() {
    const double s = std::sqrt(3.0) / 2;
    return BodyGeometry::polygon({{0.0, 1.0}, {-s, -0.5}, {s, -0.5}});
}

// --- 1: gas closure ---------------------------------------------------------

double oracle_sonic_mu(double gamma, double B) {
    // mu along the Bernoulli curve is rho^2 (B - pi(rho)); bisect its stationary point
    auto pi_of = [&](double r) { return gamma / (gamma - 1) * std::pow(r, gamma - 1); };
    auto dpi = [&](double r) { return gamma * std::pow(r, gamma - 2); };
    double lo = 1e-12, hi = std::pow(B * (gamma - 1) / gamma, 1 / (gamma - 1));
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (2 * mid * (B - pi_of(mid)) - mid * mid * dpi(mid) > 0 ? lo : hi) = mid;
    }
    const double r = 0.5 * (lo + hi);
    return r * r * (B - pi_of(r));
}

void criterion1(Outcome& o) {
    const GasModel gas(1.4, 3.5);
    const double mu1 = sonic_mu(gas), oracle = oracle_sonic_mu(1.4, 3.5);
    o.detail << "mu1=" << mu1 << " oracle=" << oracle;
    o.require(std::abs(mu1 - oracle) <= 1e-8, "mu1 within 1e-8 of the bisection oracle");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int monotone = 0;
    double roundtrip = 0.0;
    for (int k = 0; k < 1000; ++k) {
        double a = mu1 * u(rng), b = mu1 * u(rng);
        if (a > b) std::swap(a, b);
        if (a < b && tau(a, gas) < tau(b, gas)) ++monotone;
        if (a == b) ++monotone;
        const double q = std::sqrt(sonic_speed_sq(gas)) * u(rng);
        const double rho = density_from_speed(q, gas);
        const double back = std::sqrt(2.0 * 0.5 * rho * rho * q * q) / density_from_mu(0.5 * rho * rho * q * q, gas);
        roundtrip = std::max(roundtrip, std::abs(back - q));
    }
    o.detail << " monotone=" << monotone << "/1000 roundtrip=" << roundtrip;
    o.require(monotone == 1000, "tau increasing on every random pair");
    o.require(roundtrip <= 1e-9, "rho/q round trip within 1e-9");
}

// --- 2: conformal oracle agreement ------------------------------------------

void criterion2(Outcome& o) {
    const auto body = BodyGeometry::circle({0, 0}, 1.0);
    const auto flow = ConformalFlow::circle(0.0);
    std::vector<double> exact_bc_err;
    for (int N : {32, 64, 128}) {
        GridParams gp;
        gp.h = 1.0 / N;
        gp.r_far = 20.0;
        FlowSolver s(external_flow_discretization(body, gp));
        auto annulus_error = [&](const DiscreteField& f) {
            const Discretization& d = *f.disc;
            double e = 0.0, scale = 0.0;
            for (std::size_t j = 0; j < d.ny(); ++j)
                for (std::size_t i = 0; i < d.nx(); ++i) {
                    const Vec2 p{d.xs()[i], d.ys()[j]};
                    if (norm(p) < 1.1 || norm(p) > 5.0) continue;
                    e = std::max(e, std::abs(f.node_value(d.node(i, j)) - flow.psi(p)));
                    scale = std::max(scale, std::abs(flow.psi(p)));
                }
            return std::pair{e, scale};
        };
        if (N == 64) {
            const auto [e, scale] = annulus_error(s.solve_incompressible(FarField::incompressible()).at(0.0));
            o.detail << "rel err h=1/64: " << e / scale << "; ";
            o.require(e / scale <= 0.02, "relative error at most 2% in 1.1 <= r <= 5");
        }
        // discretization error alone: closed-form data on the outer boundary
        const auto slots = s.disc().slot_values([&](int owner, Vec2 q) { return owner == far_owner ? flow.psi(q) : 0.0; });
        exact_bc_err.push_back(annulus_error(s.make_linear_field(slots, FarField::incompressible())).first);
    }
    const double p1 = std::log2(exact_bc_err[0] / exact_bc_err[1]), p2 = std::log2(exact_bc_err[1] / exact_bc_err[2]);
    o.detail << "orders " << p1 << ", " << p2;
    o.require(std::min(p1, p2) >= 1.8, "observed order at least 1.8");
}

// --- 3 and 4: circle topology and attachment angles --------------------------

StreamlineGraph trace_circle(double gamma, double step, double attach_tol) {
    const auto body = BodyGeometry::circle({0, 0}, 1.0);
    TraceOptions t;
    t.h = step;
    t.attach_tol = attach_tol;
    t.same_point_tol = 1e-3;
    return trace_body_streamline(conformal_evaluator(ConformalFlow::circle(gamma), body), t);
}

void criterion3(Outcome& o) {
    const char* expected[] = {"two_attachments", "double_attachment", "through_curve"};
    const char* names[] = {"zerocorner-12", "zerocorner-12.57", "zerocorner-12.8"};
    for (int k = 0; k < 3; ++k) {
        const Scenario s = preset(names[k]);
        const auto g = scenario_graph(s, build_body(s));
        o.detail << names[k] << "=" << g.outcome << " ";
        o.require(g.outcome == expected[k], std::string(names[k]) + " is " + expected[k]);
    }
    const bool below = trace_circle(12.0, 1.0 / 16, 1e-5).outcome != "through_curve";
    const bool above = trace_circle(12.8, 1.0 / 16, 1e-5).outcome == "through_curve";
    o.require(below && above, "transition bracketed in (12, 12.8)");
    double lo = 12.0, hi = 12.8;
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        (trace_circle(mid, 1.0 / 16, 1e-5).outcome == "through_curve" ? hi : lo) = mid;
    }
    const double gc = 0.5 * (lo + hi);
    o.detail << "transition=" << gc << " (4 pi=" << 4 * pi << ")";
    o.require(std::abs(gc - 4 * pi) <= 0.005 * 4 * pi, "transition within 0.5% of 4 pi");
}

void criterion4(Outcome& o) {
    const double finest = 1.0 / 64;
    const auto sub = trace_circle(12.0, finest, 1e-4);
    o.require(sub.attachments.size() == 2, "two attachments at 12");
    o.detail << "angles at 12:";
    for (const auto& a : sub.attachments) {
        o.detail << " " << a.angle_deg;
        o.require(std::abs(a.angle_deg - 90.0) <= 2.0, "90 +- 2 degrees");
    }
    const auto crit = trace_circle(4 * pi, finest, 1e-4);
    o.require(crit.outcome == "double_attachment" && crit.attachments.size() == 2, "double attachment at 4 pi");
    o.detail << "; at 4 pi:";
    for (const auto& a : crit.attachments) {
        o.detail << " " << a.angle_deg;
        o.require(std::abs(a.angle_deg - 60.0) <= 3.0, "60 +- 3 degrees");
    }
}

// --- 5: vertex law -----------------------------------------------------------

void criterion5(Outcome& o) {
    for (int m = 1; m <= 4; ++m) {
        auto psi = [m](Vec2 p) { return std::imag(std::pow(p.to_complex(), m)); };
        const auto v = classify_vertex(psi, {0.0, 0.0}, 0.1);
        double worst = 0.0;
        for (double s : v.spacings) worst = std::max(worst, std::abs(deg(s) - 180.0 / m));
        o.detail << "m=" << v.m << " (spacing err " << worst << " deg) ";
        o.require(v.m == m && v.spacings.size() == std::size_t(2 * m), "exact multiplicity");
        o.require(worst <= 1.0, "spacing pi/m within 1 degree");
    }
}

// --- 6: subsolution inequality ---------------------------------------------

void criterion6(Outcome& o) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = -std::numeric_limits<double>::infinity();
    int checks = 0;
    for (double open_deg : {191.0, 270.0, 315.0, 360.0}) {
        const double t0 = two_pi * u(rng);
        const auto p = subsolution_params(t0, t0 + rad(open_deg), 1.0);
        worst = std::max(worst, verify_subsolution(p, [](Vec2) { return Coefficients{}; }, 10000, rng(), false).max_residual);
        ++checks;
        for (int k = 0; k < 100; ++k) {
            const double l1 = 0.1 + u(rng), l2 = l1 * (1.0 + 9.0 * u(rng)), phi = pi * u(rng);
            const double c = std::cos(phi), s = std::sin(phi);
            const Coefficients A{l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
            const auto q = subsolution_params(t0, t0 + rad(open_deg), ellipticity_ratio(A));
            worst = std::max(worst, verify_subsolution(q, [&](Vec2) { return A; }, 10000, rng(), false).max_residual);
            ++checks;
        }
    }
    o.detail << checks << " operator/angle checks, max residual " << worst;
    o.require(worst <= 0.0, "residual <= 0 everywhere");
    auto bad = subsolution_params(0.0, 1.5 * pi, 1.0);
    bad.eps = 0.5;
    const double control = verify_subsolution(bad, [](Vec2) { return Coefficients{}; }, 10000, 6, false).max_residual;
    o.detail << "; inflated-eps control max residual " << control;
    o.require(control > 0.0, "negative control violates");
}

// --- 7: corner exponent calibration ----------------------------------------

void criterion7(Outcome& o) {
    KarmanTrefftzProfile p;
    p.center_mu = {-0.1, 0.0};
    p.nu = 1.5;
    p.alpha = rad(90.0);
    const auto body = profile_to_body(p);
    GridParams gp;
    gp.h = 1.0 / 32;
    gp.r_far = 20.0;
    gp.refine_levels = 6;
    FlowSolver s(external_flow_discretization(body, gp));
    const auto pair = s.solve_incompressible(FarField::incompressible(1.0, 0.0, p.alpha));
    const auto probes = corner_probes(s.disc(), body, {gp.h, 6, gp.refine_width});
    o.require(probes.size() == 1, "one protruding corner");
    if (probes.empty()) return;
    const auto off = blowup_exponent(probes[0], pair.at(0.0));
    const double kutta = discrete_kutta_circulation(pair, probes[0]);
    const auto on = blowup_exponent(probes[0], pair.at(kutta));
    o.detail << "270 deg corner: no Kutta " << off.exponent << " (r2 " << off.r2 << "), Kutta " << on.exponent
             << " (discrete circulation " << kutta << ", closed form " << kutta_circulation(p) << ")";
    o.require(std::abs(off.exponent + 1.0 / 3.0) <= 0.05, "-1/3 +- 0.05 without Kutta");
    o.require(on.exponent >= -0.05, ">= -0.05 with Kutta");
}

// --- 8: theorem harness ----------------------------------------------------

void criterion8(Outcome& o) {
    const auto body = equilateral_triangle();
    GridParams gp;
    gp.h = 1.0 / 64;
    gp.r_far = 20.0;
    gp.refine_levels = 6;
    FlowSolver s(external_flow_discretization(body, gp));
    const auto pair = s.solve_incompressible(FarField::incompressible());
    const auto probes = corner_probes(s.disc(), body, {gp.h, 6, gp.refine_width});
    const auto table = circulation_sweep(pair, probes, default_gamma_grid({}, 41));
    double worst = -1.0;
    for (const auto& row : table.rows) {
        double m = 1.0;
        for (const auto& c : row.corners) m = std::min(m, c.exponent);
        worst = std::max(worst, m);
    }
    const auto verdict = theorem_check(body, table);
    o.detail << "triangle h=1/64, " << table.rows.size() << " gammas: largest per-row minimum exponent " << worst
             << ", verdict " << verdict.verdict;
    o.require(table.rows.size() == 41 && worst <= -0.15, "every gamma has a corner with exponent <= -0.15");
    o.require(verdict.verdict == "PASS", "verdict PASS");

    const Scenario f4 = preset("fig4");
    const auto lens = build_body(f4);
    GridParams lp = gp;
    FlowSolver ls(external_flow_discretization(lens, lp));
    const auto field = ls.solve_incompressible(FarField::incompressible()).at(0.0);
    o.detail << "; fig4 gamma=0 exponents";
    for (const auto& probe : corner_probes(ls.disc(), lens, {lp.h, 6, lp.refine_width})) {
        const auto r = corner_report(probe, 0, field);
        o.detail << " " << r.exponent;
        o.require(r.bounded && r.conclusive, "fig4 corners bounded at gamma 0");
    }
}

// --- 9: compressible behaviour ---------------------------------------------

void criterion9(Outcome& o) {
    const GasModel gas = GasModel::normalized(1.4);
    const auto body = BodyGeometry::circle({0, 0}, 1.0);
    GridParams gp;
    gp.h = 1.0 / 16;
    gp.r_far = 10.0;
    FlowSolver s(external_flow_discretization(body, gp));
    FlowSolver::Continuation c;
    c.mach_target = 0.3;
    const auto f = s.solve_compressible(gas, 0.0, c);
    o.detail << "circle M=0.3: residual " << f.residual << ", max Mach " << f.max_mach;
    o.require(f.residual <= 1e-8 && f.max_mach < 1.0, "converged and subsonic");

    // psi / (rho_inf v_inf) against the incompressible field, near the body
    const auto inc = s.solve_incompressible(FarField::incompressible()).at(0.0);
    std::vector<double> ms{0.05, 0.1, 0.2}, diffs;
    for (double m : ms) {
        c.mach_target = m;
        const auto fm = s.solve_compressible(gas, 0.0, c);
        const double scale = fm.ff.rho_inf * fm.ff.vinf;
        const Discretization& d = *fm.disc;
        double e = 0.0;
        for (std::size_t j = 0; j < d.ny(); ++j)
            for (std::size_t i = 0; i < d.nx(); ++i) {
                const Vec2 p{d.xs()[i], d.ys()[j]};
                if (norm(p) > 5.0 || d.kind(d.node(i, j)) != NodeKind::Unknown) continue;
                e = std::max(e, std::abs(fm.node_value(d.node(i, j)) / scale - inc.node_value(d.node(i, j))));
            }
        diffs.push_back(e);
    }
    // least-squares slope of log diff against log M
    double mx = 0, my = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < ms.size(); ++k) {
        mx += std::log(ms[k]) / double(ms.size());
        my += std::log(diffs[k]) / double(ms.size());
    }
    for (std::size_t k = 0; k < ms.size(); ++k) {
        sxx += (std::log(ms[k]) - mx) * (std::log(ms[k]) - mx);
        sxy += (std::log(ms[k]) - mx) * (std::log(diffs[k]) - my);
    }
    const double slope = sxy / sxx;
    o.detail << "; O(M^2) slope " << slope;
    o.require(std::abs(slope - 2.0) <= 0.3, "log-log slope 2 +- 0.3");

    const auto tri = equilateral_triangle();
    GridParams tp;
    tp.h = 1.0 / 16;
    tp.r_far = 10.0;
    tp.refine_levels = 5;
    FlowSolver ts(external_flow_discretization(tri, tp));
    const auto probes = corner_probes(ts.disc(), tri, {tp.h, 5, tp.refine_width});
    c.mach_target = 0.3;
    const auto table = circulation_sweep(ts, gas, c, 0.0, probes, default_gamma_grid({}, 21));
    int supersonic = 0, unbounded = 0, other = 0;
    for (const auto& row : table.rows) {
        if (row.status == "supersonic_encounter") {
            ++supersonic;
            continue;
        }
        double m = 1.0;
        for (const auto& cr : row.corners) m = std::min(m, cr.exponent);
        if (row.status == "ok" && m <= -0.15) ++unbounded; else ++other;
    }
    o.detail << "; triangle M=0.3 over " << table.rows.size() << " gammas: " << supersonic << " supersonic, " << unbounded
             << " with an unbounded corner, " << other << " neither (evidence only)";
    o.require(table.rows.size() == 21 && other == 0, "every gamma supersonic or with an unbounded corner");
}

// --- 10: structural invariants -----------------------------------------------

void criterion10(Outcome& o) {
    struct Case {
        std::string label;
        BodyGeometry body;
        DiscreteField field;
        double r_far;
    };
    std::vector<Case> cases;
    GridParams gp;
    gp.h = 1.0 / 16;
    gp.r_far = 10.0;
    const auto circle = BodyGeometry::circle({0, 0}, 1.0);
    FlowSolver cs(external_flow_discretization(circle, gp));
    const auto pair = cs.solve_incompressible(FarField::incompressible());
    for (double G : {0.0, 12.0, 12.8}) cases.push_back({"circle G=" + num(G), circle, pair.at(G), gp.r_far});
    FlowSolver::Continuation c;
    c.mach_target = 0.3;
    cases.push_back({"circle M=0.3", circle, cs.solve_compressible(GasModel::normalized(1.4), 0.0, c), gp.r_far});
    const Scenario f4 = preset("fig4");
    const auto lens = build_body(f4);
    FlowSolver ls(external_flow_discretization(lens, gp));
    cases.push_back({"fig4", lens, ls.solve_incompressible(FarField::incompressible()).at(0.0), gp.r_far});
    const auto tri = equilateral_triangle();
    FlowSolver ts(external_flow_discretization(tri, gp));
    cases.push_back({"triangle G=0", tri, ts.solve_incompressible(FarField::incompressible()).at(0.0), gp.r_far});
    for (const auto& k : cases) {
        const bool dmp = check_max_principle(k.field).holds;
        const auto st = field_structure(k.field, k.body, k.r_far);
        o.detail << k.label << ": dmp " << dmp << " cycles " << st.cycles << " ends " << st.unbounded_ends << "; ";
        o.require(dmp, k.label + " maximum principle");
        o.require(st.cycle_free, k.label + " cycle-free");
        o.require(st.unbounded_ends == 2, k.label + " two unbounded ends");
    }
}

// --- 11: channel ---------------------------------------------------------------

void criterion11(Outcome& o) {
    const Scenario s = preset("channel");
    ChannelParams p = s.body.channel;
    p.h = s.grid.h;
    p.refine_levels = s.grid.refine_levels;
    p.refine_width = s.grid.refine_width;
    const auto r = channel_analysis(p);
    o.detail << "reflected range [" << r.reflected_min << ", " << r.reflected_max << "], exponents";
    o.require(r.dmp.holds && r.reflected_min >= -1.0 - 1e-12 && r.reflected_max <= 1.0 + 1e-12, "psi in [-1, 1]");
    for (const auto& c : r.corners) {
        o.detail << " " << c.exponent;
        o.require(c.exponent >= -0.05, "bounded velocity at every diamond corner");
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"gas closure", criterion1},
        {"conformal oracle agreement", criterion2},
        {"circle topology", criterion3},
        {"attachment angles", criterion4},
        {"vertex law", criterion5},
        {"subsolution inequality", criterion6},
        {"corner exponent calibration", criterion7},
        {"theorem harness", criterion8},
        {"compressible behaviour", criterion9},
        {"structural invariants", criterion10},
        {"channel scenario", criterion11},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[k].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %zu (%s): %s  %s  (%.1f s)\n", k + 1, criteria[k].first, o.pass ? "PASS" : "FAIL",
                    o.detail.str().c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
