#ifndef CORNERLAB_CORE_HPP
#define CORNERLAB_CORE_HPP

// Small shared vocabulary: 2D vectors, error types, angle helpers.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cornerlab {

using complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}
    explicit Vec2(complex z) : x(z.real()), y(z.imag()) {}

    [[nodiscard]] complex to_complex() const { return {x, y}; }

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm_sq(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double angle_of(Vec2 a) { return std::atan2(a.y, a.x); }
inline Vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }
/// Counterclockwise rotation by pi/2.
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// Maps an angle into [0, 2pi).
inline double wrap_2pi(double a) {
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

/// Maps an angle into (center - pi, center + pi].
inline double wrap_around(double a, double center) {
    double r = a - center;
    r = std::remainder(r, two_pi);
    if (r <= -pi) r += two_pi;
    return center + r;
}

inline double deg(double rad) { return rad * 180.0 / pi; }
inline double rad(double degrees) { return degrees * pi / 180.0; }

// ---------------------------------------------------------------------------
// Error types. Physical non-existence signals derive from PhysicsSignal so the
// CLI can tell them apart from genuine failures.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PhysicsSignal : Error {
    using Error::Error;
};

/// Speed above the limit speed sqrt(2B): no density solves the Bernoulli relation.
struct LimitSpeedExceeded : PhysicsSignal {
    using PhysicsSignal::PhysicsSignal;
};

/// Momentum argument beyond the sonic threshold of the specific-volume closure.
struct SupersonicState : PhysicsSignal {
    using PhysicsSignal::PhysicsSignal;
};

struct NotSubsonic : Error {
    using Error::Error;
};

/// An iterate of the compressible solver needed a locally supersonic state.
struct SupersonicEncounter : PhysicsSignal {
    SupersonicEncounter(const std::string& what, Vec2 where, double mach_inf_)
        : PhysicsSignal(what), location(where), mach_inf(mach_inf_) {}
    Vec2 location;
    double mach_inf;
};

struct SolverDiverged : Error {
    using Error::Error;
};

struct GridError : Error {
    using Error::Error;
};

struct DegenerateGeometry : Error {
    using Error::Error;
};

struct InvalidProfile : Error {
    using Error::Error;
};

struct MapSingularity : Error {
    using Error::Error;
};

struct NotApplicable : Error {
    using Error::Error;
};

struct NotProtruding : Error {
    using Error::Error;
};

struct ConstructionViolation : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

}  // namespace cornerlab

#endif  // CORNERLAB_CORE_HPP
