#ifndef CORNERLAB_DIAGNOSTICS_HPP
#define CORNERLAB_DIAGNOSTICS_HPP

// Corner singularity analysis: the pacman subsolution r^(1-eps) f(theta),
// blow-up exponents of |grad psi| at corners, circulation sweeps, and the
// verdict that no circulation bounds three protruding corners at once.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "conformal.hpp"
#include "core.hpp"
#include "geometry.hpp"
#include "solver.hpp"
#include "topology.hpp"

namespace cornerlab {

// ---------------------------------------------------------------------------
// Subsolution
// ---------------------------------------------------------------------------

struct SubsolutionParams {
    double theta0 = 0.0, theta1 = 0.0, theta_c = 0.0;
    double a = 1.0;
    double eps = 0.0;
    double C = 1.0;
    double rbar = 1.0;
    // comparison constants; they carry no quantitative role here
    double iota = 1.0, iota_tilde = 1.0;

    [[nodiscard]] double f(double t) const { return 1.0 + a * std::cos(t - theta_c); }
    [[nodiscard]] double fp(double t) const { return -a * std::sin(t - theta_c); }
    [[nodiscard]] double fpp(double t) const { return -a * std::cos(t - theta_c); }
};

inline SubsolutionParams subsolution_params(double theta0, double theta1, double C, double rbar = 1.0) {
    const double Theta = theta1 - theta0;
    if (!(Theta > pi) || Theta > two_pi + 1e-12) throw NotProtruding("pacman opening must lie in (pi, 2 pi]");
    if (!(C >= 1.0)) throw std::invalid_argument("ellipticity ratio C must be at least 1");
    SubsolutionParams p;
    p.theta0 = theta0;
    p.theta1 = theta1;
    p.theta_c = 0.5 * (theta0 + theta1);
    p.a = -1.0 / std::cos(0.5 * Theta);
    p.C = C;
    p.eps = 1.0 / ((1.0 + C) * (1.0 + 3.0 * p.a) + 1.0);
    p.rbar = rbar;
    return p;
}

/// Constant-coefficient (or frozen) second-order operator L = -A : D^2.
struct Coefficients {
    double axx = 1.0, axy = 0.0, ayy = 1.0;
};

/// r^(1+eps) L(r^(1-eps) f(theta)) at polar point (r, t) about the pacman
/// center; the subsolution property is that this is <= 0.
inline double subsolution_residual(const SubsolutionParams& p, const Coefficients& A, double r, double t) {
    const double e = p.eps, f = p.f(t), fp = p.fp(t), fpp = p.fpp(t);
    // polar derivatives scaled by r^(1+eps)
    const double u_rr = (1 - e) * (-e) * f;
    const double u_r = (1 - e) * f;         // times 1/r below
    const double u_rt = (1 - e) * fp;       // times 1/r below
    const double u_t = fp, u_tt = fpp;      // times 1/r^2 below
    const double c = std::cos(t), s = std::sin(t);
    const double uxx = c * c * u_rr - 2 * s * c * u_rt + s * s * u_r + s * s * u_tt + 2 * s * c * u_t;
    const double uyy = s * s * u_rr + 2 * s * c * u_rt + c * c * u_r + c * c * u_tt - 2 * s * c * u_t;
    const double uxy = s * c * u_rr + (c * c - s * s) * u_rt - s * c * u_r - s * c * u_tt - (c * c - s * s) * u_t;
    (void)r;
    return -(A.axx * uxx + 2 * A.axy * uxy + A.ayy * uyy);
}

struct SubsolutionCheck {
    double max_residual = -std::numeric_limits<double>::infinity();
    Vec2 worst;  // (r, theta)
    std::size_t samples = 0;
};

/// Samples L(r^(1-eps) f) at random points of the pacman. With `strict` a
/// residual above 1e-12 raises ConstructionViolation.
inline SubsolutionCheck verify_subsolution(const SubsolutionParams& p,
                                           const std::function<Coefficients(Vec2)>& sampler, std::size_t n_samples,
                                           std::uint64_t seed = 1, bool strict = true) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    SubsolutionCheck out;
    out.samples = n_samples;
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double r = p.rbar * (1.0 - ur(rng));
        const double t = p.theta0 + (p.theta1 - p.theta0) * ur(rng);
        const double res = subsolution_residual(p, sampler(r * unit_from_angle(t)), r, t);
        if (res > out.max_residual) {
            out.max_residual = res;
            out.worst = {r, t};
        }
    }
    if (strict && out.max_residual > 1e-12)
        throw ConstructionViolation("subsolution inequality violated at r = " + std::to_string(out.worst.x) +
                                    ", theta = " + std::to_string(out.worst.y));
    return out;
}

/// Smallest C with |a_xx|, |a_xy| <= C a_yy in every rotated frame: the
/// eigenvalue ratio of A.
inline double ellipticity_ratio(const Coefficients& A) {
    const double m = 0.5 * (A.axx + A.ayy), d = std::hypot(0.5 * (A.axx - A.ayy), A.axy);
    const double lo = m - d, hi = m + d;
    if (!(lo > 0.0)) throw std::invalid_argument("coefficients are not elliptic");
    return std::max(1.0, hi / lo);
}

// ---------------------------------------------------------------------------
// Blow-up exponents
// ---------------------------------------------------------------------------

inline constexpr double bounded_threshold = 0.05;

struct ExponentFit {
    double exponent = std::numeric_limits<double>::quiet_NaN();
    double r2 = 0.0;
    std::vector<double> radii, values;
    bool conclusive = false;
};

/// Least-squares slope of log(value) against log(radius).
inline ExponentFit fit_power_law(std::vector<double> radii, std::vector<double> values) {
    ExponentFit f;
    f.radii = std::move(radii);
    f.values = std::move(values);
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < f.radii.size(); ++k)
        if (f.values[k] > 0.0 && std::isfinite(f.values[k])) {
            lx.push_back(std::log(f.radii[k]));
            ly.push_back(std::log(f.values[k]));
        }
    const std::size_t n = lx.size();
    if (n < 4) return f;
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += lx[k];
        my += ly[k];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
        syy += (ly[k] - my) * (ly[k] - my);
    }
    f.exponent = sxy / sxx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    bool monotone = true;
    for (std::size_t k = 1; k < n; ++k)
        if ((ly[k] - ly[k - 1]) * (lx[k] - lx[k - 1]) * f.exponent < 0.0) monotone = false;
    f.conclusive = monotone || f.r2 >= 0.9;
    return f;
}

/// Triangles of a discretization grouped by dyadic radius about a corner:
/// radius r_k = W h 2^-k sits inside refinement level k and is resolved by
/// W cells at every level.
struct CornerProbe {
    CornerRecord corner;
    std::vector<double> radii;
    std::vector<std::vector<Discretization::Triangle>> rings;
};

inline CornerProbe make_corner_probe(const Discretization& d, const CornerRecord& c, double h, int levels,
                                     double width = 8.0) {
    CornerProbe p;
    p.corner = c;
    for (int k = 1; k <= levels; ++k) p.radii.push_back(width * h * std::ldexp(1.0, -k));
    p.rings.resize(p.radii.size());
    const double Theta = c.theta1 - c.theta0, lo = c.theta0 + 0.1 * Theta, hi = c.theta1 - 0.1 * Theta;
    const double rmax = p.radii.front() * 1.5;
    d.for_each_triangle([&](const Discretization::Triangle& t) {
        const Vec2 q = t.centroid - c.location;
        const double rho = norm(q);
        if (rho > rmax || rho == 0.0) return;
        const double ang = wrap_around(angle_of(q), 0.5 * (lo + hi));
        if (ang < lo || ang > hi) return;
        const double size = std::sqrt(2.0 * t.area);
        for (std::size_t k = 0; k < p.radii.size(); ++k)
            if (std::abs(rho - p.radii[k]) <= 0.5 * size) p.rings[k].push_back(t);
    });
    return p;
}

/// Exponent s of max |grad psi| ~ r^s over the probe radii.
inline ExponentFit blowup_exponent(const CornerProbe& p, const DiscreteField& f) {
    std::vector<double> vals;
    for (const auto& ring : p.rings) {
        double m = 0.0;
        for (const auto& t : ring) m = std::max(m, detail::triangle_layers(t, f.u, f.slots).mu[0]);
        vals.push_back(std::sqrt(2.0 * m));
    }
    return fit_power_law(p.radii, vals);
}

/// Discrete Kutta condition: the circulation minimizing the squared gradient of
/// psi0 + Gamma psi1 over the innermost ring of the probe. The closed-form value
/// belongs to the unbounded domain; the truncated discrete problem needs its own.
inline double discrete_kutta_circulation(const FlowSolver::IncompressiblePair& pair, const CornerProbe& p) {
    const double unit = 1.0 / pair.psi0.ff.rho_inf;
    const DiscreteField f0 = pair.at(0.0), fp = pair.at(unit), fm = pair.at(-unit);
    double dot = 0.0, g1sq = 0.0;
    for (const auto& t : p.rings.back()) {
        const double m0 = detail::triangle_layers(t, f0.u, f0.slots).mu[0];
        const double mp = detail::triangle_layers(t, fp.u, fp.slots).mu[0];
        const double mm = detail::triangle_layers(t, fm.u, fm.slots).mu[0];
        dot += 0.5 * (mp - mm);
        g1sq += mp + mm - 2.0 * m0;
    }
    if (!(g1sq > 0.0)) throw NotApplicable("circulation field has no gradient at this corner");
    return -dot / g1sq * unit;
}

/// Same estimate for an analytic field: sampled max over arcs of radius
/// r0 2^-k, k = 0..levels-1.
inline ExponentFit blowup_exponent(const ScalarEvaluator& e, const CornerRecord& c, double r0, int levels,
                                   int samples = 721) {
    std::vector<double> radii, vals;
    const double Theta = c.theta1 - c.theta0, lo = c.theta0 + 0.1 * Theta, hi = c.theta1 - 0.1 * Theta;
    for (int k = 0; k < levels; ++k) {
        const double r = r0 * std::ldexp(1.0, -k);
        double m = 0.0;
        for (int j = 0; j < samples; ++j) {
            const Vec2 q = c.location + r * unit_from_angle(lo + (hi - lo) * double(j) / double(samples - 1));
            if (e.in_fluid && !e.in_fluid(q)) continue;
            m = std::max(m, norm(e.grad(q)));
        }
        radii.push_back(r);
        vals.push_back(m);
    }
    return fit_power_law(radii, vals);
}

// ---------------------------------------------------------------------------
// Circulation sweeps
// ---------------------------------------------------------------------------

struct CornerReport {
    int corner = -1;
    bool protruding = false;
    std::optional<bool> attached;
    double exponent = std::numeric_limits<double>::quiet_NaN();
    double r2 = 0.0;
    bool bounded = false;
    bool conclusive = false;
    int levels = 0;
};

struct SweepRow {
    double gamma_circ = 0.0;
    std::string status = "ok";  // ok | supersonic_encounter | solver_failure
    std::string message;
    std::vector<CornerReport> corners;
    [[nodiscard]] std::size_t bounded_protruding() const {
        std::size_t n = 0;
        for (const auto& c : corners)
            if (c.protruding && c.bounded && c.conclusive) ++n;
        return n;
    }
};

struct SweepTable {
    std::vector<SweepRow> rows;
    std::size_t max_simultaneously_bounded = 0;
};

inline CornerReport corner_report(const CornerProbe& p, int id, const DiscreteField& f) {
    CornerReport r;
    r.corner = id;
    r.protruding = p.corner.protruding;
    const ExponentFit fit = blowup_exponent(p, f);
    r.exponent = fit.exponent;
    r.r2 = fit.r2;
    r.conclusive = fit.conclusive;
    r.bounded = fit.exponent >= -bounded_threshold;
    r.levels = int(p.radii.size());
    return r;
}

/// 41 uniform values over +-2 times the largest magnitude in `kutta_values`
/// (or over +-8 pi when none is given), plus the values themselves.
inline std::vector<double> default_gamma_grid(const std::vector<double>& kutta_values = {}, int n = 41) {
    double span = 0.0;
    for (double k : kutta_values) span = std::max(span, 2.0 * std::abs(k));
    if (!(span > 0.0)) span = 8.0 * pi;
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(-span + 2.0 * span * double(i) / double(n - 1));
    for (double k : kutta_values) g.push_back(k);
    std::sort(g.begin(), g.end());
    return g;
}

struct ProbeSettings {
    double h = 1.0 / 32;
    int levels = 6;
    double width = 8.0;
};

inline std::vector<CornerProbe> corner_probes(const Discretization& d, const BodyGeometry& body,
                                              const ProbeSettings& s) {
    std::vector<CornerProbe> out;
    for (const auto& c : body.corners()) out.push_back(make_corner_probe(d, c, s.h, s.levels, s.width));
    return out;
}

/// Incompressible sweep from one pair of solves (psi_0 + rho Gamma psi_1).
inline SweepTable circulation_sweep(const FlowSolver::IncompressiblePair& pair, const std::vector<CornerProbe>& probes,
                                    const std::vector<double>& gammas) {
    SweepTable t;
    for (double G : gammas) {
        SweepRow row;
        row.gamma_circ = G;
        const DiscreteField f = pair.at(G);
        for (std::size_t k = 0; k < probes.size(); ++k) row.corners.push_back(corner_report(probes[k], int(k), f));
        t.max_simultaneously_bounded = std::max(t.max_simultaneously_bounded, row.bounded_protruding());
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Compressible sweep: one continuation solve per circulation. Supersonic
/// encounters and solver failures are recorded and the sweep continues.
inline SweepTable circulation_sweep(const FlowSolver& solver, const GasModel& gas,
                                    const FlowSolver::Continuation& cont, double alpha,
                                    const std::vector<CornerProbe>& probes, const std::vector<double>& gammas) {
    SweepTable t;
    for (double G : gammas) {
        SweepRow row;
        row.gamma_circ = G;
        try {
            const DiscreteField f = solver.solve_compressible(gas, G, cont, alpha);
            for (std::size_t k = 0; k < probes.size(); ++k)
                row.corners.push_back(corner_report(probes[k], int(k), f));
        } catch (const SupersonicEncounter& e) {
            row.status = "supersonic_encounter";
            row.message = e.what();
        } catch (const Error& e) {
            row.status = "solver_failure";
            row.message = e.what();
        }
        t.max_simultaneously_bounded = std::max(t.max_simultaneously_bounded, row.bounded_protruding());
        t.rows.push_back(std::move(row));
    }
    return t;
}

struct TheoremVerdict {
    std::string verdict;  // PASS | FAIL | INCONCLUSIVE | NOT_APPLICABLE
    std::vector<std::string> notes;
    std::vector<std::vector<int>> unbounded_per_row;  // protruding corners left unbounded at each Gamma
    std::size_t evidence_rows = 0;                    // rows closed by a supersonic encounter
};

/// PASS iff no row bounds every protruding corner. Inconclusive corners can
/// only turn the verdict into INCONCLUSIVE, never into PASS.
inline TheoremVerdict theorem_check(const BodyGeometry& body, const SweepTable& t, bool infinity_altered = false) {
    TheoremVerdict v;
    if (body.protruding_count() < 3) {
        v.verdict = "NOT_APPLICABLE";
        v.notes.push_back("theorem hypothesis unmet: fewer than three protruding corners");
        return v;
    }
    if (infinity_altered) {
        v.verdict = "NOT_APPLICABLE";
        v.notes.push_back("not a counterexample: infinity is restricted to four channels");
        return v;
    }
    bool fail = false, inconclusive = false;
    for (const auto& row : t.rows) {
        std::vector<int> unb;
        if (row.status == "supersonic_encounter") {
            ++v.evidence_rows;
            v.unbounded_per_row.push_back(unb);
            continue;
        }
        if (row.status != "ok") {
            inconclusive = true;
            v.notes.push_back("solver failure at Gamma = " + std::to_string(row.gamma_circ));
            v.unbounded_per_row.push_back(unb);
            continue;
        }
        bool row_inconclusive = false;
        for (const auto& c : row.corners) {
            if (!c.protruding) continue;
            if (!c.conclusive) row_inconclusive = true;
            else if (!c.bounded) unb.push_back(c.corner);
        }
        if (unb.empty()) (row_inconclusive ? inconclusive : fail) = true;
        v.unbounded_per_row.push_back(std::move(unb));
    }
    v.verdict = fail ? "FAIL" : inconclusive ? "INCONCLUSIVE" : "PASS";
    if (v.evidence_rows > 0)
        v.notes.push_back("supersonic encounters are evidence of nonexistence of a subsonic solution, not proof");
    return v;
}

}  // namespace cornerlab

#endif  // CORNERLAB_DIAGNOSTICS_HPP
