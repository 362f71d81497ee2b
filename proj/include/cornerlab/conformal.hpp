#ifndef CORNERLAB_CONFORMAL_HPP
#define CORNERLAB_CONFORMAL_HPP

// Exact incompressible flows past a circle and its Karman-Trefftz images.
// Circulation is positive counterclockwise.

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>

#include "core.hpp"
#include "geometry.hpp"

namespace cornerlab {

struct CirclePlaneFlow {
    double vinf = 1.0;
    double alpha = 0.0;
    double radius = 1.0;
    complex center{0.0, 0.0};
    double gamma_circ = 0.0;
};

inline complex complex_potential(complex zeta, const CirclePlaneFlow& f) {
    const complex s = zeta - f.center;
    if (std::abs(s) < f.radius * (1.0 - 1e-12)) throw std::domain_error("complex_potential: point inside the circle");
    const complex ea = std::polar(1.0, f.alpha);
    return f.vinf * (std::conj(ea) * s + ea * f.radius * f.radius / s) -
           complex(0.0, f.gamma_circ / two_pi) * std::log(s);
}

inline complex complex_velocity_circle(complex zeta, const CirclePlaneFlow& f) {
    const complex s = zeta - f.center;
    const complex ea = std::polar(1.0, f.alpha);
    return f.vinf * (std::conj(ea) - ea * f.radius * f.radius / (s * s)) -
           complex(0.0, f.gamma_circ / two_pi) / s;
}

/// psi = Im W shifted to vanish on the circle.
inline double stream_function_circle(complex zeta, const CirclePlaneFlow& f) {
    return complex_potential(zeta, f).imag() + f.gamma_circ / two_pi * std::log(f.radius);
}

/// Circle angles (about the center) of the stagnation points; empty when
/// |Gamma| exceeds 4 pi vinf R.
inline std::vector<double> stagnation_angles(const CirclePlaneFlow& f) {
    const double s = f.gamma_circ / (4.0 * pi * f.vinf * f.radius);
    if (std::abs(s) > 1.0) return {};
    const double a = std::asin(s);
    if (std::abs(std::abs(s) - 1.0) < 1e-15) return {f.alpha + a};
    return {f.alpha + a, f.alpha + pi - a};
}

inline double critical_circulation(const CirclePlaneFlow& f) { return 4.0 * pi * f.vinf * f.radius; }

struct PhysicalVelocity {
    double vx = 0.0;
    double vy = 0.0;
    bool singular = false;
};

/// Flow in the physical plane. Without a profile the map is the identity and
/// the body is the circle of the circle-plane flow.
class ConformalFlow {
public:
    ConformalFlow(CirclePlaneFlow flow, std::optional<KarmanTrefftzProfile> profile = std::nullopt)
        : flow_(flow), profile_(std::move(profile)) {
        if (profile_) {
            profile_->validate();
            flow_.center = profile_->center_mu;
            flow_.radius = profile_->circle_radius();
            flow_.alpha = profile_->alpha;
            flow_.vinf = profile_->vinf;
        }
    }

    static ConformalFlow circle(double gamma_circ, double vinf = 1.0, double alpha = 0.0, double radius = 1.0) {
        return ConformalFlow(CirclePlaneFlow{vinf, alpha, radius, {0.0, 0.0}, gamma_circ});
    }

    static ConformalFlow profile(const KarmanTrefftzProfile& p, double gamma_circ) {
        CirclePlaneFlow f;
        f.gamma_circ = gamma_circ;
        return ConformalFlow(f, p);
    }

    [[nodiscard]] const CirclePlaneFlow& circle_flow() const { return flow_; }
    [[nodiscard]] CirclePlaneFlow& circle_flow() { return flow_; }
    [[nodiscard]] const std::optional<KarmanTrefftzProfile>& profile() const { return profile_; }
    [[nodiscard]] double gamma_circ() const { return flow_.gamma_circ; }
    void set_gamma_circ(double g) { flow_.gamma_circ = g; }

    [[nodiscard]] complex to_zeta(Vec2 z) const {
        return profile_ ? profile_inverse(*profile_, z.to_complex()) : z.to_complex();
    }
    [[nodiscard]] Vec2 to_z(complex zeta) const {
        return profile_ ? Vec2(profile_map(*profile_, zeta)) : Vec2(zeta);
    }
    [[nodiscard]] complex map_derivative(complex zeta) const {
        return profile_ ? karman_trefftz_derivative(zeta, profile_->nu, profile_->branch_center()) : complex(1.0, 0.0);
    }

    [[nodiscard]] bool in_fluid(Vec2 z) const {
        const complex zeta = to_zeta(z);
        return std::abs(zeta - flow_.center) >= flow_.radius * (1.0 - 1e-13);
    }

    [[nodiscard]] double psi(Vec2 z) const {
        complex zeta = to_zeta(z);
        const complex s = zeta - flow_.center;
        if (std::abs(s) < flow_.radius) zeta = flow_.center + s / std::abs(s) * flow_.radius;
        return stream_function_circle(zeta, flow_);
    }

    /// Velocity at the image of zeta; corner pre-images resolved by a limit.
    [[nodiscard]] PhysicalVelocity velocity_at_zeta(complex zeta) const {
        complex dw = complex_velocity_circle(zeta, flow_);
        complex dz = map_derivative(zeta);
        PhysicalVelocity v;
        if (std::abs(dz) < 1e-12 || !std::isfinite(std::abs(dz))) {
            const double scale = std::max(1.0, std::abs(flow_.vinf));
            if (std::abs(dw) > 1e-9 * scale) {
                v.singular = true;
                v.vx = v.vy = std::numeric_limits<double>::infinity();
                return v;
            }
            const complex s = zeta - flow_.center;
            const complex off = zeta + 1e-7 * s / std::abs(s) * flow_.radius;
            dw = complex_velocity_circle(off, flow_);
            dz = map_derivative(off);
        }
        const complex uv = dw / dz;  // u - i v
        v.vx = uv.real();
        v.vy = -uv.imag();
        return v;
    }

    [[nodiscard]] PhysicalVelocity velocity(Vec2 z) const { return velocity_at_zeta(to_zeta(z)); }

    /// grad psi = (-v, u).
    [[nodiscard]] Vec2 grad(Vec2 z) const {
        const PhysicalVelocity v = velocity(z);
        return {-v.vy, v.vx};
    }

    /// Trailing-edge pre-image angle about the circle center.
    [[nodiscard]] double trailing_angle() const {
        if (!profile_ || profile_->is_identity()) throw NotApplicable("no trailing corner: the Kutta condition is void");
        return std::arg(1.0 - profile_->center_mu);
    }

private:
    CirclePlaneFlow flow_;
    std::optional<KarmanTrefftzProfile> profile_;
};

/// Circulation making dW/dzeta vanish at the trailing pre-image zeta = 1.
inline double kutta_circulation(const KarmanTrefftzProfile& p) {
    if (p.is_identity()) throw NotApplicable("no trailing corner: the Kutta condition is void");
    const double theta_te = std::arg(1.0 - p.center_mu);
    return 4.0 * pi * p.vinf * p.circle_radius() * std::sin(theta_te - p.alpha);
}

/// Circulation bounding the leading corner (zeta = -1) of a two-corner profile.
inline double leading_kutta_circulation(const KarmanTrefftzProfile& p) {
    if (!p.has_leading_corner() || p.is_identity()) throw NotApplicable("profile has no leading corner");
    const double theta_le = std::arg(-1.0 - p.center_mu);
    return 4.0 * pi * p.vinf * p.circle_radius() * std::sin(theta_le - p.alpha);
}

}  // namespace cornerlab

#endif  // CORNERLAB_CONFORMAL_HPP
