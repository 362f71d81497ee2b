#ifndef CORNERLAB_GAS_HPP
#define CORNERLAB_GAS_HPP

// Polytropic gas p = rho^gamma / gamma with enthalpy pi(rho) normalized to
// pi(0) = 0, the Bernoulli closure and the momentum closure tau(mu) = 1/rho.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "core.hpp"

namespace cornerlab {

template <class Real = double>
struct basic_gas_model {
    Real gamma = Real(1.4);
    Real bernoulli = Real(3.5);

    basic_gas_model() = default;
    basic_gas_model(Real g, Real b) : gamma(g), bernoulli(b) {
        if (!(g > Real(1))) throw std::invalid_argument("gas: gamma must exceed 1");
        if (!(b > Real(0))) throw std::invalid_argument("gas: bernoulli constant must be positive");
    }

    // B = gamma/(gamma-1), stagnation density 1
    static basic_gas_model normalized(Real g) {
        if (!(g > Real(1))) throw std::invalid_argument("gas: gamma must exceed 1");
        return basic_gas_model(g, g / (g - Real(1)));
    }
};

using GasModel = basic_gas_model<double>;

template <class Real = double>
struct basic_flow_sample {
    Real density = 0;
    Real speed = 0;
    Real sound_speed = 0;
    Real mach = 0;
    Real momentum_half_sq = 0;
};

using FlowSample = basic_flow_sample<double>;

template <class Real>
Real pi_from_density(Real rho, const basic_gas_model<Real>& gas) {
    if (rho < Real(0)) throw std::domain_error("pi_from_density: negative density");
    return gas.gamma / (gas.gamma - Real(1)) * std::pow(rho, gas.gamma - Real(1));
}

template <class Real>
Real density_from_pi(Real pi_value, const basic_gas_model<Real>& gas) {
    if (pi_value < Real(0)) throw std::domain_error("density_from_pi: negative enthalpy");
    return std::pow(pi_value * (gas.gamma - Real(1)) / gas.gamma, Real(1) / (gas.gamma - Real(1)));
}

template <class Real>
Real sound_speed_sq(Real rho, const basic_gas_model<Real>& gas) {
    return gas.gamma * std::pow(rho, gas.gamma - Real(1));
}

template <class Real>
Real stagnation_density(const basic_gas_model<Real>& gas) {
    return density_from_pi(gas.bernoulli, gas);
}

template <class Real>
Real limit_speed(const basic_gas_model<Real>& gas) {
    return std::sqrt(Real(2) * gas.bernoulli);
}

template <class Real>
Real density_from_speed(Real q, const basic_gas_model<Real>& gas) {
    if (q < Real(0)) throw std::domain_error("density_from_speed: negative speed");
    const Real rest = gas.bernoulli - Real(0.5) * q * q;
    if (rest < -Real(64) * std::numeric_limits<Real>::epsilon() * gas.bernoulli)
        throw LimitSpeedExceeded("speed exceeds the limit speed sqrt(2B)");
    return density_from_pi(std::max(rest, Real(0)), gas);
}

template <class Real>
Real sonic_speed_sq(const basic_gas_model<Real>& gas) {
    return Real(2) * (gas.gamma - Real(1)) * gas.bernoulli / (gas.gamma + Real(1));
}

template <class Real>
Real sonic_density(const basic_gas_model<Real>& gas) {
    return density_from_pi(gas.bernoulli - Real(0.5) * sonic_speed_sq(gas), gas);
}

template <class Real>
Real sonic_mu(const basic_gas_model<Real>& gas) {
    const Real rs = sonic_density(gas);
    return Real(0.5) * rs * rs * sonic_speed_sq(gas);
}

namespace detail {

// F(rho, mu) - B on the subsonic branch; increasing in rho there.
template <class Real>
Real closure_residual(Real rho, Real mu, const basic_gas_model<Real>& gas) {
    return mu / (rho * rho) + pi_from_density(rho, gas) - gas.bernoulli;
}

template <class Real>
Real closure_slope(Real rho, Real mu, const basic_gas_model<Real>& gas) {
    return -Real(2) * mu / (rho * rho * rho) + gas.gamma * std::pow(rho, gas.gamma - Real(2));
}

}  // namespace detail

/// Subsonic density for momentum argument mu = |rho v|^2 / 2.
template <class Real>
Real density_from_mu(Real mu, const basic_gas_model<Real>& gas) {
    if (mu < Real(0)) throw std::domain_error("tau: negative momentum argument");
    const Real rho0 = stagnation_density(gas);
    if (mu == Real(0)) return rho0;
    const Real mu1 = sonic_mu(gas);
    if (mu > mu1 * (Real(1) + Real(64) * std::numeric_limits<Real>::epsilon()))
        throw SupersonicState("momentum argument beyond the sonic threshold");
    // within rounding of mu1 the root is a double root; return it in closed form
    if (mu >= mu1 * (Real(1) - Real(64) * std::numeric_limits<Real>::epsilon())) return sonic_density(gas);

    // lower end: turning point of F in rho (sonic density for this mu)
    Real lo = std::pow(Real(2) * mu / gas.gamma, Real(1) / (gas.gamma + Real(1)));
    Real hi = rho0;
    if (detail::closure_residual(lo, mu, gas) >= Real(0)) return lo;  // sonic within rounding

    Real rho = Real(0.5) * (lo + hi);
    // start from the incompressible guess when it falls in the bracket
    {
        const Real guess = rho0 - mu / (rho0 * rho0 * rho0 * sound_speed_sq(rho0, gas));
        if (guess > lo && guess < hi) rho = guess;
    }
    for (int it = 0; it < 200; ++it) {
        const Real g = detail::closure_residual(rho, mu, gas);
        if (g > Real(0)) hi = rho; else lo = rho;
        const Real slope = detail::closure_slope(rho, mu, gas);
        Real next = (slope > Real(0)) ? rho - g / slope : Real(0.5) * (lo + hi);
        if (!(next > lo && next < hi)) next = Real(0.5) * (lo + hi);
        const Real step = std::abs(next - rho);
        rho = next;
        if (step <= Real(4) * std::numeric_limits<Real>::epsilon() * rho) break;
        if (hi - lo <= Real(4) * std::numeric_limits<Real>::epsilon() * hi) break;
    }
    return rho;
}

template <class Real>
Real tau(Real mu, const basic_gas_model<Real>& gas) {
    return Real(1) / density_from_mu(mu, gas);
}

/// d tau / d mu = 1 / (rho^3 (c^2 - q^2)).
template <class Real>
Real tau_prime(Real mu, const basic_gas_model<Real>& gas) {
    const Real rho = density_from_mu(mu, gas);
    const Real q2 = Real(2) * mu / (rho * rho);
    const Real gap = sound_speed_sq(rho, gas) - q2;
    if (gap <= Real(0)) return std::numeric_limits<Real>::infinity();
    return Real(1) / (rho * rho * rho * gap);
}

template <class Real>
basic_flow_sample<Real> sample_from_mu(Real mu, const basic_gas_model<Real>& gas) {
    basic_flow_sample<Real> s;
    s.density = density_from_mu(mu, gas);
    s.momentum_half_sq = mu;
    s.speed = std::sqrt(Real(2) * mu) / s.density;
    s.sound_speed = std::sqrt(sound_speed_sq(s.density, gas));
    s.mach = s.speed / s.sound_speed;
    return s;
}

template <class Real>
basic_flow_sample<Real> sample_from_speed(Real q, const basic_gas_model<Real>& gas) {
    basic_flow_sample<Real> s;
    s.density = density_from_speed(q, gas);
    s.speed = q;
    s.sound_speed = std::sqrt(sound_speed_sq(s.density, gas));
    s.mach = s.sound_speed > Real(0) ? q / s.sound_speed : std::numeric_limits<Real>::infinity();
    s.momentum_half_sq = Real(0.5) * s.density * s.density * q * q;
    return s;
}

template <class Real>
Real mach_from_mu(Real mu, const basic_gas_model<Real>& gas) {
    return sample_from_mu(mu, gas).mach;
}

namespace detail {

template <class Real>
Real gauss_legendre_tau(Real a, Real b, const basic_gas_model<Real>& gas) {
    static constexpr std::array<double, 8> x{
        -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
        0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> w{
        0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
        0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    const Real mid = Real(0.5) * (a + b), half = Real(0.5) * (b - a);
    Real sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += Real(w[i]) * tau(mid + half * Real(x[i]), gas);
    return sum * half;
}

}  // namespace detail

/// Antiderivative T of tau with T(0) = 0. Closed form in terms of rho(mu);
/// tiny arguments use quadrature to avoid cancellation.
template <class Real>
Real energy_density(Real mu, const basic_gas_model<Real>& gas) {
    if (mu < Real(0)) throw std::domain_error("energy_density: negative momentum argument");
    if (mu == Real(0)) return Real(0);
    const Real mu1 = sonic_mu(gas);
    if (mu < Real(1e-3) * mu1) return detail::gauss_legendre_tau(Real(0), mu, gas);
    const Real rho = density_from_mu(mu, gas);
    const Real rho0 = stagnation_density(gas);
    const Real g1 = gas.gamma - Real(1);
    const Real h = gas.bernoulli * rho - std::pow(rho, gas.gamma) / g1;
    const Real h0 = gas.bernoulli * rho0 - std::pow(rho0, gas.gamma) / g1;
    return mu / rho + (h - h0);
}

template <class Real>
Real prandtl_glauert(Real mach_inf) {
    if (mach_inf < Real(0)) throw std::domain_error("prandtl_glauert: negative Mach number");
    if (mach_inf >= Real(1)) throw NotSubsonic("prandtl_glauert: free stream is not subsonic");
    return std::sqrt(Real(1) - mach_inf * mach_inf);
}

/// Free-stream speed for a prescribed free-stream Mach number.
template <class Real>
Real freestream_speed(Real mach_inf, const basic_gas_model<Real>& gas) {
    const Real g1 = gas.gamma - Real(1);
    const Real m2 = mach_inf * mach_inf;
    return std::sqrt(m2 * g1 * gas.bernoulli / (Real(1) + Real(0.5) * g1 * m2));
}

template <class Real>
Real freestream_density(Real mach_inf, const basic_gas_model<Real>& gas) {
    return density_from_speed(freestream_speed(mach_inf, gas), gas);
}

}  // namespace cornerlab

#endif  // CORNERLAB_GAS_HPP
