#ifndef CORNERLAB_SOLVER_HPP
#define CORNERLAB_SOLVER_HPP

// Stream-function solvers. Incompressible: one sparse LDL^T factorization and
// superposition psi0 + rho_inf Gamma psi1. Compressible: Newton on the convex
// discrete energy with Armijo backtracking, PCG inner solves preconditioned by
// the incompressible factorization, and Mach continuation.

#include <Eigen/CholmodSupport>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "discretization.hpp"
#include "gas.hpp"
#include "geometry.hpp"
#include "grid.hpp"

namespace cornerlab {

struct FarField {
    double rho_inf = 1.0;
    double vinf = 1.0;
    double mach_inf = 0.0;
    double beta = 1.0;
    double gamma_circ = 0.0;
    double c0 = 0.0;
    double alpha = 0.0;  // flow direction; the asymptotics are written in flow-aligned coordinates

    static FarField incompressible(double vinf = 1.0, double gamma_circ = 0.0, double alpha = 0.0) {
        FarField f;
        f.vinf = vinf;
        f.gamma_circ = gamma_circ;
        f.alpha = alpha;
        return f;
    }

    static FarField compressible(const GasModel& gas, double mach_inf, double gamma_circ = 0.0, double alpha = 0.0) {
        FarField f;
        f.mach_inf = mach_inf;
        f.beta = prandtl_glauert(mach_inf);
        f.vinf = freestream_speed(mach_inf, gas);
        f.rho_inf = freestream_density(mach_inf, gas);
        f.gamma_circ = gamma_circ;
        f.alpha = alpha;
        return f;
    }
};

/// rho_inf (v_inf y - Gamma/(2 pi) beta log sqrt(x^2 + beta^2 y^2)) + c0 in flow-aligned coordinates.
inline double far_field_psi(Vec2 p, const FarField& ff) {
    if (p.x == 0.0 && p.y == 0.0) throw std::domain_error("far_field_psi: evaluated at the origin");
    const double ca = std::cos(ff.alpha), sa = std::sin(ff.alpha);
    const double x = ca * p.x + sa * p.y, y = -sa * p.x + ca * p.y;
    const double r = std::sqrt(x * x + ff.beta * ff.beta * y * y);
    return ff.rho_inf * (ff.vinf * y - ff.gamma_circ / two_pi * ff.beta * std::log(r)) + ff.c0;
}

// ---------------------------------------------------------------------------
// Problem set-up helpers
// ---------------------------------------------------------------------------

struct GridParams {
    double h = 1.0 / 32.0;
    double r_far = 20.0;
    double core_margin = 0.5;
    double stretch = 0.6;
    int refine_levels = 0;
    double refine_width = 8.0;
    bool refine_corners = true;
    bool protruding_only = true;
    std::vector<Vec2> extra_refine;
};

inline constexpr int body_owner = 0;
inline constexpr int far_owner = 1;

/// Body with psi = 0 inside a far-field ring; ring data are set per solve.
inline std::shared_ptr<Discretization> external_flow_discretization(const BodyGeometry& body, const GridParams& gp) {
    const auto box = body.bounding_box();
    if (gp.r_far < 1.5 * body.diameter()) throw GridError("far-field ring too close to the body");
    AxisSpec ax, ay;
    ax.lo = ay.lo = -gp.r_far;
    ax.hi = ay.hi = gp.r_far;
    ax.core_lo = box.lo.x - gp.core_margin;
    ax.core_hi = box.hi.x + gp.core_margin;
    ay.core_lo = box.lo.y - gp.core_margin;
    ay.core_hi = box.hi.y + gp.core_margin;
    ax.h = ay.h = gp.h;
    ax.stretch = ay.stretch = gp.stretch;
    ax.refine_levels = ay.refine_levels = gp.refine_levels;
    ax.refine_width = ay.refine_width = gp.refine_width;
    for (const auto& c : body.corners()) {
        ax.forced.push_back(c.location.x);
        ay.forced.push_back(c.location.y);
        if (gp.refine_corners && (c.protruding || !gp.protruding_only)) {
            ax.refine_at.push_back(c.location.x);
            ay.refine_at.push_back(c.location.y);
        }
    }
    for (const Vec2& p : gp.extra_refine) {
        ax.refine_at.push_back(p.x);
        ay.refine_at.push_back(p.y);
    }
    std::vector<BoundaryPiece> pieces;
    pieces.push_back(BoundaryPiece{body, false, [](Vec2) { return 0.0; }, "body"});
    pieces.push_back(BoundaryPiece{BodyGeometry::circle({0.0, 0.0}, gp.r_far, 64), true,
                                   [](Vec2) { return 0.0; }, "far_field"});
    return std::make_shared<Discretization>(make_axis(ax), make_axis(ay), std::move(pieces));
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

struct DiscreteField {
    std::shared_ptr<const Discretization> disc;
    Eigen::VectorXd u;                 // unknown values
    std::vector<double> slots;         // boundary data
    std::optional<GasModel> gas;       // absent: incompressible
    FarField ff;
    double residual = 0.0;
    std::vector<double> residual_history;
    std::vector<double> energy_history;
    double max_mu = 0.0;
    double max_mach = 0.0;
    Vec2 max_mu_location;
    int iterations = 0;

    [[nodiscard]] double value_of(int code) const {
        return code >= 0 ? u[code] : slots[std::size_t(-1 - code)];
    }

    /// Nodal value; NaN at excluded nodes.
    [[nodiscard]] double node_value(std::size_t n) const {
        switch (disc->kind(n)) {
            case NodeKind::Unknown: return u[disc->unknown_of(n)];
            case NodeKind::Dirichlet: return slots[std::size_t(disc->slot_of_node(n))];
            default: return std::numeric_limits<double>::quiet_NaN();
        }
    }

    [[nodiscard]] double tau0() const { return gas ? tau(0.0, *gas) : 1.0 / ff.rho_inf; }
};

/// Linear combination a*f + b*g on the same discretization.
inline DiscreteField combine(const DiscreteField& f, double a, const DiscreteField& g, double b) {
    DiscreteField r = f;
    r.u = a * f.u + b * g.u;
    for (std::size_t s = 0; s < r.slots.size(); ++s) r.slots[s] = a * f.slots[s] + b * g.slots[s];
    return r;
}

// ---------------------------------------------------------------------------
// Energy evaluation shared by the linear and nonlinear paths
// ---------------------------------------------------------------------------

struct EnergyEval {
    double energy = 0.0;
    bool admissible = true;      // every triangle has mu_tilde below the sonic threshold
    double max_mu_true = 0.0;
    Vec2 max_mu_location;
};

namespace detail {

inline double term_value(int code, const Eigen::VectorXd& u, const std::vector<double>& g) {
    return code >= 0 ? u[code] : g[std::size_t(-1 - code)];
}

// A cut triangle is split into layers by the arm fractions theta_k = w_k / wg_k:
// layer l has weight c_l = theta_(l) - theta_(l-1) and sees every term with
// theta_k >= theta_(l), each with its true weight wg_k. Summed over layers the
// quadratic part reproduces the weights w_k, while the innermost layer carries
// the full gradient, so density is evaluated on the true local speed.
struct TriangleLayers {
    int terms = 0, layers = 0;
    double d[4] = {};
    double c[4] = {};
    double mu[4] = {};
    double cut[4] = {};  // theta threshold of each layer
    double theta[4] = {};
};

inline TriangleLayers triangle_layers(const Discretization::Triangle& t, const Eigen::VectorXd& u,
                                      const std::vector<double>& g) {
    TriangleLayers L;
    L.terms = t.n;
    for (int k = 0; k < t.n; ++k) {
        const auto& tm = t.t[k];
        L.d[k] = term_value(tm.p, u, g) - term_value(tm.q, u, g);
        L.theta[k] = tm.w / tm.wg;
    }
    double th[4];
    std::copy(L.theta, L.theta + t.n, th);
    std::sort(th, th + t.n);
    double prev = 0.0;
    for (int k = 0; k < t.n; ++k) {
        if (k > 0 && th[k] == th[k - 1]) continue;
        const int l = L.layers++;
        L.c[l] = th[k] - prev;
        L.cut[l] = th[k];
        prev = th[k];
        double m = 0.0;
        for (int j = 0; j < t.n; ++j)
            if (L.theta[j] >= th[k]) m += 0.5 * t.t[j].wg * L.d[j] * L.d[j];
        L.mu[l] = m;
    }
    return L;
}

}  // namespace detail

class FlowSolver {
public:
    explicit FlowSolver(std::shared_ptr<const Discretization> disc) : disc_(std::move(disc)) { assemble_linear(); }

    [[nodiscard]] const Discretization& disc() const { return *disc_; }
    [[nodiscard]] std::shared_ptr<const Discretization> disc_ptr() const { return disc_; }
    [[nodiscard]] const Eigen::SparseMatrix<double>& stiffness() const { return K_; }

    /// Solves the linear problem (tau = 1) for given boundary data.
    Eigen::VectorXd solve_linear(const std::vector<double>& slots, double* residual_out = nullptr) const {
        Eigen::VectorXd f = linear_rhs(slots);
        Eigen::VectorXd u = ldlt_->solve(f);
        // one step of iterative refinement
        Eigen::VectorXd r = f - K_ * u;
        u += ldlt_->solve(r);
        if (residual_out) *residual_out = linear_residual(u, slots);
        return u;
    }

    /// max_i |K u - f|_i / max_i sum_j |flux contributions|_i.
    [[nodiscard]] double linear_residual(const Eigen::VectorXd& u, const std::vector<double>& slots) const {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(Eigen::Index(disc_->unknown_count()));
        Eigen::VectorXd scale = Eigen::VectorXd::Zero(g.size());
        disc_->for_each_triangle([&](const Discretization::Triangle& t) {
            for (int k = 0; k < t.n; ++k) {
                const auto& tm = t.t[k];
                const double d = detail::term_value(tm.p, u, slots) - detail::term_value(tm.q, u, slots);
                const double fl = t.area * tm.w * d;
                if (tm.p >= 0) { g[tm.p] += fl; scale[tm.p] += std::abs(fl); }
                if (tm.q >= 0) { g[tm.q] -= fl; scale[tm.q] += std::abs(fl); }
            }
        });
        const double s = scale.size() ? scale.maxCoeff() : 0.0;
        return s > 0.0 ? g.cwiseAbs().maxCoeff() / s : 0.0;
    }

    /// Boundary data for external flows: body value zero, ring value from ff.
    [[nodiscard]] std::vector<double> far_field_slots(const FarField& ff) const {
        return disc_->slot_values([&](int owner, Vec2 p) {
            if (owner == far_owner) return far_field_psi(p, ff);
            return disc_->pieces()[std::size_t(owner)].value(p);
        });
    }

    /// Incompressible pair: psi0 (uniform stream, zero circulation) and psi1
    /// (ring data -(1/2pi) log r). Any circulation is psi0 + rho_inf Gamma psi1.
    struct IncompressiblePair {
        DiscreteField psi0, psi1;
        [[nodiscard]] DiscreteField at(double gamma_circ) const {
            DiscreteField f = combine(psi0, 1.0, psi1, psi0.ff.rho_inf * gamma_circ);
            f.ff.gamma_circ = gamma_circ;
            return f;
        }
    };

    IncompressiblePair solve_incompressible(const FarField& ff) const {
        if (ff.mach_inf != 0.0) throw std::invalid_argument("solve_incompressible: requires M_inf = 0");
        FarField f0 = ff;
        f0.gamma_circ = 0.0;
        FarField f1 = ff;
        f1.vinf = 0.0;
        f1.rho_inf = 1.0;
        f1.gamma_circ = 1.0;
        f1.c0 = 0.0;
        IncompressiblePair out;
        out.psi0 = make_linear_field(far_field_slots(f0), f0);
        out.psi1 = make_linear_field(far_field_slots(f1), f1);
        return out;
    }

    DiscreteField make_linear_field(std::vector<double> slots, const FarField& ff) const {
        DiscreteField f;
        f.disc = disc_;
        f.ff = ff;
        f.slots = std::move(slots);
        f.u = solve_linear(f.slots, &f.residual);
        f.residual_history.push_back(f.residual);
        f.iterations = 1;
        if (!(f.residual <= 1e-10)) throw SolverDiverged("linear solve residual " + std::to_string(f.residual) + " above tolerance");
        update_stats(f);
        return f;
    }

    // ------------------------------------------------------------------
    // compressible
    // ------------------------------------------------------------------

    struct Continuation {
        double mach_target = 0.3;
        double max_step = 0.05;
        double min_step = 0.005;
        double tol = 1e-8;
        int max_newton = 60;
        int max_pcg = 400;
    };

    /// Mach continuation from the incompressible solution to the target.
    DiscreteField solve_compressible(const GasModel& gas, double gamma_circ, const Continuation& cont,
                                     double alpha = 0.0) const {
        if (cont.mach_target >= 1.0) throw NotSubsonic("free-stream Mach number must be below 1");
        DiscreteField cur;
        Eigen::VectorXd prev_u;
        double prev_M = 0.0;
        bool started = false;
        double M = 0.0;
        double step = std::min(cont.max_step, cont.mach_target);
        while (M < cont.mach_target - 1e-14) {
            const double next = std::min(cont.mach_target, M + step);
            DiscreteField trial;
            trial.disc = disc_;
            trial.gas = gas;
            trial.ff = FarField::compressible(gas, next, gamma_circ, alpha);
            trial.slots = far_field_slots(trial.ff);
            // predictors: secant in M, scaled previous solution, linear solve
            std::vector<Eigen::VectorXd> guesses;
            if (started && prev_u.size())
                guesses.push_back(cur.u + (cur.u - prev_u) * ((next - M) / (M - prev_M)));
            if (started) guesses.push_back(cur.u * (trial.ff.rho_inf * trial.ff.vinf) / (cur.ff.rho_inf * cur.ff.vinf));
            guesses.push_back(solve_linear(trial.slots));
            bool have_guess = false;
            for (auto& g : guesses)
                if (energy(g, trial.slots, gas).admissible) {
                    trial.u = std::move(g);
                    have_guess = true;
                    break;
                }
            try {
                if (!have_guess) {
                    const EnergyEval e = energy(guesses.back(), trial.slots, gas);
                    throw SupersonicEncounter("no subsonic starting state for the continuation step", e.max_mu_location, next);
                }
                newton(trial, cont, next);
                if (started) {
                    prev_u = cur.u;
                    prev_M = M;
                }
                cur = std::move(trial);
                started = true;
                M = next;
                step = std::min(cont.max_step, step * 1.5);
            } catch (const SolverDiverged&) {
                step *= 0.5;
                if (step < cont.min_step) throw;
            } catch (const SupersonicEncounter&) {
                step *= 0.5;
                if (step < cont.min_step) throw;
            }
        }
        return cur;
    }

    /// Energy, admissibility and extreme momentum over triangles.
    EnergyEval energy(const Eigen::VectorXd& u, const std::vector<double>& slots, const GasModel& gas) const {
        EnergyEval e;
        const double mu1 = sonic_mu(gas);
        disc_->for_each_triangle([&](const Discretization::Triangle& t) {
            const auto L = detail::triangle_layers(t, u, slots);
            const double m = L.mu[0];
            if (m > e.max_mu_true) {
                e.max_mu_true = m;
                e.max_mu_location = t.centroid;
            }
            if (m >= mu1) {
                e.admissible = false;
                return;
            }
            if (e.admissible)
                for (int l = 0; l < L.layers; ++l) e.energy += t.area * L.c[l] * energy_density(L.mu[l], gas);
        });
        if (!e.admissible) e.energy = std::numeric_limits<double>::infinity();
        return e;
    }

    /// Gradient of the discrete energy; returns max |g| over the max absolute flux sum.
    double gradient(const Eigen::VectorXd& u, const std::vector<double>& slots, const GasModel& gas,
                    Eigen::VectorXd& g) const {
        g.setZero(Eigen::Index(disc_->unknown_count()));
        Eigen::VectorXd scale = Eigen::VectorXd::Zero(g.size());
        const double mu1 = sonic_mu(gas);
        disc_->for_each_triangle([&](const Discretization::Triangle& t) {
            const auto L = detail::triangle_layers(t, u, slots);
            double coef[4] = {};
            for (int l = 0; l < L.layers; ++l) {
                const double ta = t.area * L.c[l] * tau(std::min(L.mu[l], mu1), gas);
                for (int k = 0; k < t.n; ++k)
                    if (L.theta[k] >= L.cut[l]) coef[k] += ta;
            }
            for (int k = 0; k < t.n; ++k) {
                const auto& tm = t.t[k];
                const double fl = coef[k] * tm.wg * L.d[k];
                if (tm.p >= 0) { g[tm.p] += fl; scale[tm.p] += std::abs(fl); }
                if (tm.q >= 0) { g[tm.q] -= fl; scale[tm.q] += std::abs(fl); }
            }
        });
        const double s = scale.size() ? scale.maxCoeff() : 0.0;
        return s > 0.0 ? g.cwiseAbs().maxCoeff() / s : 0.0;
    }

    /// Hessian-vector product: sum over layers of c (tau H + tau' b b^T).
    struct Hessian {
        const FlowSolver* solver;
        std::vector<double> tau_l, taup_l;  // per layer, in traversal order

        Eigen::VectorXd apply(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const std::vector<double>& slots) const {
            Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
            std::size_t idx = 0;
            solver->disc_->for_each_triangle([&](const Discretization::Triangle& t) {
                const auto L = detail::triangle_layers(t, u, slots);
                double dx[4];
                for (int k = 0; k < t.n; ++k) {
                    const auto& tm = t.t[k];
                    dx[k] = (tm.p >= 0 ? x[tm.p] : 0.0) - (tm.q >= 0 ? x[tm.q] : 0.0);
                }
                double coef[4] = {};
                for (int l = 0; l < L.layers; ++l, ++idx) {
                    const double ca = t.area * L.c[l];
                    double bx = 0.0;
                    for (int k = 0; k < t.n; ++k)
                        if (L.theta[k] >= L.cut[l]) {
                            coef[k] += ca * tau_l[idx];
                            bx += t.t[k].wg * L.d[k] * dx[k];
                        }
                    const double tp = ca * taup_l[idx] * bx;
                    if (tp != 0.0)
                        for (int k = 0; k < t.n; ++k)
                            if (L.theta[k] >= L.cut[l]) {
                                const auto& tm = t.t[k];
                                const double c = tp * tm.wg * L.d[k];
                                if (tm.p >= 0) y[tm.p] += c;
                                if (tm.q >= 0) y[tm.q] -= c;
                            }
                }
                for (int k = 0; k < t.n; ++k) {
                    const auto& tm = t.t[k];
                    const double hx = coef[k] * tm.wg * dx[k];
                    if (tm.p >= 0) y[tm.p] += hx;
                    if (tm.q >= 0) y[tm.q] -= hx;
                }
            });
            return y;
        }
    };

private:
    void newton(DiscreteField& f, const Continuation& cont, double mach) const {
        const GasModel& gas = *f.gas;
        const double mu1 = sonic_mu(gas);
        EnergyEval e = energy(f.u, f.slots, gas);
        if (!e.admissible)
            throw SupersonicEncounter("initial state is locally supersonic", e.max_mu_location, mach);
        f.energy_history.clear();
        f.residual_history.clear();
        f.energy_history.push_back(e.energy);
        Eigen::VectorXd g;
        for (int it = 0; it < cont.max_newton; ++it) {
            const double res = gradient(f.u, f.slots, gas, g);
            f.residual_history.push_back(res);
            f.residual = res;
            f.iterations = it;
            if (res <= cont.tol) {
                update_stats(f);
                if (f.max_mu >= mu1)
                    throw SupersonicEncounter("converged field reaches the sonic threshold", f.max_mu_location, mach);
                return;
            }
            Hessian H = hessian_at(f.u, f.slots, gas);
            Eigen::VectorXd delta = pcg(H, f.u, f.slots, -g, cont.max_pcg);
            // Armijo backtracking; the energy is infinite past the sonic threshold. Once the
            // predicted decrease is below the rounding of the total energy, the residual decides.
            const double slope = g.dot(delta);
            const bool roundoff = -slope <= 1e-11 * std::abs(e.energy);
            double alpha = 1.0;
            bool accepted = false;
            EnergyEval et;
            Eigen::VectorXd gt;
            while (alpha > 1e-10) {
                Eigen::VectorXd trial = f.u + alpha * delta;
                et = energy(trial, f.slots, gas);
                const bool decrease = roundoff ? et.admissible && gradient(trial, f.slots, gas, gt) < res
                                               : et.energy <= e.energy + 1e-4 * alpha * slope + 1e-15 * std::abs(e.energy);
                if (et.admissible && decrease) {
                    f.u = std::move(trial);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                if (!et.admissible && e.max_mu_true > 0.99 * mu1)
                    throw SupersonicEncounter("line search blocked at the sonic threshold", e.max_mu_location, mach);
                // energy stagnated at round-off level: accept if the residual is already small
                if (res <= 100.0 * cont.tol) {
                    update_stats(f);
                    return;
                }
                throw SolverDiverged("line search failed");
            }
            e = et;
            f.energy_history.push_back(e.energy);
        }
        throw SolverDiverged("Newton iteration limit reached");
    }

    Hessian hessian_at(const Eigen::VectorXd& u, const std::vector<double>& slots, const GasModel& gas) const {
        Hessian H{this, {}, {}};
        const double mu_cap = sonic_mu(gas) * (1.0 - 1e-12);
        disc_->for_each_triangle([&](const Discretization::Triangle& t) {
            const auto L = detail::triangle_layers(t, u, slots);
            for (int l = 0; l < L.layers; ++l) {
                const double m = std::min(L.mu[l], mu_cap);
                H.tau_l.push_back(tau(m, gas));
                H.taup_l.push_back(tau_prime(m, gas));
            }
        });
        return H;
    }

    Eigen::VectorXd pcg(const Hessian& H, const Eigen::VectorXd& u, const std::vector<double>& slots,
                        const Eigen::VectorXd& b, int max_it) const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
        Eigen::VectorXd r = b;
        Eigen::VectorXd z = ldlt_->solve(r);
        Eigen::VectorXd p = z;
        double rz = r.dot(z);
        const double bnorm = b.norm();
        if (bnorm == 0.0) return x;
        for (int it = 0; it < max_it; ++it) {
            const Eigen::VectorXd Ap = H.apply(p, u, slots);
            const double pAp = p.dot(Ap);
            if (!(pAp > 0.0)) break;
            const double a = rz / pAp;
            x += a * p;
            r -= a * Ap;
            if (r.norm() <= 1e-12 * bnorm) break;
            z = ldlt_->solve(r);
            const double rz_new = r.dot(z);
            p = z + (rz_new / rz) * p;
            rz = rz_new;
        }
        return x;
    }

    void update_stats(DiscreteField& f) const {
        f.max_mu = 0.0;
        disc_->for_each_triangle([&](const Discretization::Triangle& t) {
            const double m = detail::triangle_layers(t, f.u, f.slots).mu[0];
            if (m > f.max_mu) {
                f.max_mu = m;
                f.max_mu_location = t.centroid;
            }
        });
        if (f.gas) {
            const double mu1 = sonic_mu(*f.gas);
            f.max_mach = f.max_mu < mu1 ? mach_from_mu(f.max_mu, *f.gas) : std::numeric_limits<double>::infinity();
        } else {
            f.max_mach = 0.0;
        }
    }

    Eigen::VectorXd linear_rhs(const std::vector<double>& slots) const {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(Eigen::Index(disc_->unknown_count()));
        disc_->for_each_triangle([&](const Discretization::Triangle& t) {
            for (int k = 0; k < t.n; ++k) {
                const auto& tm = t.t[k];
                const double c = t.area * tm.w;
                if (tm.p >= 0 && tm.q < 0) f[tm.p] += c * slots[std::size_t(-1 - tm.q)];
                if (tm.q >= 0 && tm.p < 0) f[tm.q] += c * slots[std::size_t(-1 - tm.p)];
            }
        });
        return f;
    }

    void assemble_linear() {
        const auto n = Eigen::Index(disc_->unknown_count());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(std::size_t(n) * 8);
        disc_->for_each_triangle([&](const Discretization::Triangle& t) {
            for (int k = 0; k < t.n; ++k) {
                const auto& tm = t.t[k];
                const double c = t.area * tm.w;
                if (tm.p >= 0) trip.emplace_back(tm.p, tm.p, c);
                if (tm.q >= 0) trip.emplace_back(tm.q, tm.q, c);
                if (tm.p >= 0 && tm.q >= 0) {
                    trip.emplace_back(tm.p, tm.q, -c);
                    trip.emplace_back(tm.q, tm.p, -c);
                }
            }
        });
        K_.resize(n, n);
        K_.setFromTriplets(trip.begin(), trip.end());
        trip.clear();
        trip.shrink_to_fit();
        ldlt_ = std::make_unique<Eigen::CholmodSimplicialLDLT<Eigen::SparseMatrix<double>>>();
        ldlt_->compute(K_);
        if (ldlt_->info() != Eigen::Success) throw GridError("singular stiffness: fluid region without boundary data");
    }

    std::shared_ptr<const Discretization> disc_;
    Eigen::SparseMatrix<double> K_;
    std::unique_ptr<Eigen::CholmodSimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

// ---------------------------------------------------------------------------
// Diagnostics on solved fields
// ---------------------------------------------------------------------------

struct MaxPrincipleReport {
    bool holds = true;
    double boundary_min = 0.0, boundary_max = 0.0;
    double field_min = 0.0, field_max = 0.0;
};

/// Unknowns stay within the range of the boundary data that touch the fluid.
inline MaxPrincipleReport check_max_principle(const DiscreteField& f, double rel_tol = 1e-9) {
    MaxPrincipleReport r;
    r.boundary_min = std::numeric_limits<double>::infinity();
    r.boundary_max = -r.boundary_min;
    f.disc->for_each_triangle([&](const Discretization::Triangle& t) {
        for (int k = 0; k < t.n; ++k)
            for (int code : {t.t[k].p, t.t[k].q})
                if (code < 0) {
                    const double v = f.slots[std::size_t(-1 - code)];
                    r.boundary_min = std::min(r.boundary_min, v);
                    r.boundary_max = std::max(r.boundary_max, v);
                }
    });
    r.field_min = f.u.size() ? f.u.minCoeff() : 0.0;
    r.field_max = f.u.size() ? f.u.maxCoeff() : 0.0;
    const double tol = rel_tol * std::max(1.0, r.boundary_max - r.boundary_min);
    r.holds = r.field_min >= r.boundary_min - tol && r.field_max <= r.boundary_max + tol;
    return r;
}

/// Nodal velocity samples v = tau(mu) (psi_y, -psi_x) by centered differences
/// that use cut arms where present. One-sided rows are flagged.
struct VelocitySample {
    double vx = 0.0, vy = 0.0, mach = 0.0;
    bool lower_order = false;
};

inline std::vector<VelocitySample> velocity_field(const DiscreteField& f) {
    const Discretization& d = *f.disc;
    std::vector<VelocitySample> out(d.nx() * d.ny());
    const auto& xs = d.xs();
    const auto& ys = d.ys();
    auto derivative = [&](std::size_t i, std::size_t j, bool horizontal, bool& one_sided) {
        const std::size_t n = d.node(i, j);
        const double u0 = f.node_value(n);
        double a = 0.0, ua = 0.0, b = 0.0, ub = 0.0;
        bool ha = false, hb = false;
        const std::size_t m = horizontal ? d.nx() : d.ny();
        const std::size_t k = horizontal ? i : j;
        const auto& ax = horizontal ? xs : ys;
        if (k > 0) {
            const std::size_t nb = horizontal ? d.node(i - 1, j) : d.node(i, j - 1);
            const auto* arm = horizontal ? d.h_arm(i - 1, j, false) : d.v_arm(i, j - 1, false);
            const double len = ax[k] - ax[k - 1];
            if (arm) { a = arm->theta * len; ua = f.slots[std::size_t(arm->slot)]; ha = true; }
            else if (d.kind(nb) != NodeKind::Excluded) { a = len; ua = f.node_value(nb); ha = true; }
        }
        if (k + 1 < m) {
            const std::size_t nb = horizontal ? d.node(i + 1, j) : d.node(i, j + 1);
            const auto* arm = horizontal ? d.h_arm(i, j, true) : d.v_arm(i, j, true);
            const double len = ax[k + 1] - ax[k];
            if (arm) { b = arm->theta * len; ub = f.slots[std::size_t(arm->slot)]; hb = true; }
            else if (d.kind(nb) != NodeKind::Excluded) { b = len; ub = f.node_value(nb); hb = true; }
        }
        if (ha && hb) return (a * a * (ub - u0) + b * b * (u0 - ua)) / (a * b * (a + b));
        one_sided = true;
        if (hb) return (ub - u0) / b;
        if (ha) return (u0 - ua) / a;
        return 0.0;
    };
    for (std::size_t j = 0; j < d.ny(); ++j)
        for (std::size_t i = 0; i < d.nx(); ++i) {
            const std::size_t n = d.node(i, j);
            VelocitySample& s = out[n];
            if (d.kind(n) == NodeKind::Excluded) {
                s.vx = s.vy = s.mach = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            bool one = false;
            const double px = derivative(i, j, true, one);
            const double py = derivative(i, j, false, one);
            s.lower_order = one || d.kind(n) == NodeKind::Dirichlet;
            const double mu = 0.5 * (px * px + py * py);
            double t = f.tau0();
            if (f.gas) {
                const double mu1 = sonic_mu(*f.gas);
                t = tau(std::min(mu, mu1), *f.gas);
                s.mach = mu < mu1 ? mach_from_mu(mu, *f.gas) : std::numeric_limits<double>::infinity();
            }
            s.vx = t * py;
            s.vy = -t * px;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Four-channel flow in one quadrant
// ---------------------------------------------------------------------------

struct ChannelParams {
    double diamond = 1.0;      // half-diagonal a of the diamond |x| + |y| <= a
    double wall = 2.0;         // walls occupy x >= H, y >= H in the quadrant
    double fillet = 0.5;       // radius of the rounded wall corner
    double box = 8.0;          // quadrant truncated to [0, L]^2
    double h = 1.0 / 32.0;
    int refine_levels = 6;
    double refine_width = 8.0;
    int fillet_samples = 256;
};

inline std::shared_ptr<Discretization> channel_quadrant_discretization(const ChannelParams& p) {
    const double a = p.diamond, H = p.wall, rho = p.fillet, L = p.box;
    if (!(a > 0 && a < H && rho >= 0 && rho < L - H && H < L)) throw GridError("channel geometry is inconsistent");
    std::vector<BoundaryPiece> pieces;
    // quarter diamond with its legs on the axes
    pieces.push_back(BoundaryPiece{BodyGeometry::polygon({{0, 0}, {a, 0}, {0, a}}), false,
                                   [](Vec2) { return 0.0; }, "diamond"});
    // wall block with a rounded corner, extending past the box
    std::vector<Vec2> wall;
    const double E = L + 1.0;
    const Vec2 c{H + rho, H + rho};
    std::vector<std::size_t> corner_idx;
    if (rho > 0.0) {
        for (int k = 0; k <= p.fillet_samples; ++k) {
            const double t = 1.5 * pi - 0.5 * pi * double(k) / double(p.fillet_samples);  // from (H+rho, H) to (H, H+rho)
            wall.push_back(c + rho * unit_from_angle(t));
        }
        // clockwise so far; corners only where the block meets its far edges
    } else {
        wall.push_back({H, H});
        corner_idx.push_back(0);
    }
    wall.push_back({H, E});
    wall.push_back({E, E});
    wall.push_back({E, H});
    std::reverse(wall.begin(), wall.end());
    const std::size_t n = wall.size();
    corner_idx.clear();
    corner_idx.push_back(0);
    corner_idx.push_back(1);
    corner_idx.push_back(2);
    if (rho == 0.0) corner_idx.push_back(n - 1);
    pieces.push_back(BoundaryPiece{BodyGeometry::from_polyline(wall, corner_idx), false,
                                   [](Vec2) { return 1.0; }, "wall"});
    // truncation box: axes carry psi = 0, the channel exits a uniform stream
    pieces.push_back(BoundaryPiece{BodyGeometry::polygon({{0, 0}, {L, 0}, {L, L}, {0, L}}), true,
                                   [H, L](Vec2 q) {
                                       const double tol = 1e-9 * L;
                                       if (std::abs(q.x - L) <= tol) return std::clamp(q.y / H, 0.0, 1.0);
                                       if (std::abs(q.y - L) <= tol) return std::clamp(q.x / H, 0.0, 1.0);
                                       return 0.0;
                                   },
                                   "box"});
    AxisSpec ax;
    ax.lo = 0.0;
    ax.hi = L;
    ax.core_lo = 0.0;
    ax.core_hi = L;
    ax.h = p.h;
    ax.stretch = 0.0;
    ax.forced = {0.0, a, H, H + rho, L};
    ax.refine_at = {0.0, a};
    ax.refine_levels = p.refine_levels;
    ax.refine_width = p.refine_width;
    AxisSpec ay = ax;
    return std::make_shared<Discretization>(make_axis(ax), make_axis(ay), std::move(pieces));
}

/// Laplace solve on the quadrant with psi = 0 on the diamond and the axes,
/// psi = 1 on the wall.
inline DiscreteField channel_quadrant_flow(const ChannelParams& p) {
    FlowSolver solver(channel_quadrant_discretization(p));
    FarField ff;
    ff.vinf = 0.0;
    return solver.make_linear_field(solver.disc().default_slot_values(), ff);
}

}  // namespace cornerlab

#endif  // CORNERLAB_SOLVER_HPP
