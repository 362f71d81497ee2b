#ifndef CORNERLAB_GEOMETRY_HPP
#define CORNERLAB_GEOMETRY_HPP

// Bodies as closed counterclockwise polylines with corner metadata. The solid
// lies to the left of the traversal, the fluid to the right. A slit is the
// two-point polyline a -> b -> a.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace cornerlab {

struct CornerRecord {
    Vec2 location;
    double fluid_angle = 0.0;  // Theta in (0, 2pi]
    bool protruding = false;
    double theta0 = 0.0;       // fluid sector sweeps counterclockwise from theta0 ...
    double theta1 = 0.0;       // ... to theta1 = theta0 + Theta
    std::size_t vertex = 0;    // index into the polyline
    double pacman_radius = 0.0;
    bool pacman_verified = false;

    [[nodiscard]] double bisector() const { return 0.5 * (theta0 + theta1); }
};

/// Boundary piece between two consecutive corners (or the whole loop when there
/// are none). `curve` evaluates the analytic parametrization when known.
struct BoundarySegment {
    std::size_t first = 0;  // polyline index range, wrapping modulo the loop length
    std::size_t last = 0;
    double t0 = 0.0, t1 = 1.0;
    std::function<Vec2(double)> curve;
};

struct ExactCircle {
    Vec2 center;
    double radius = 1.0;
};

struct BoundaryPoint {
    Vec2 point;
    Vec2 tangent;  // unit, along the counterclockwise traversal
    double distance = 0.0;
    std::size_t edge = 0;
};

class BodyGeometry {
public:
    BodyGeometry() = default;

    /// Polygon with every vertex a corner. Orientation is normalized to counterclockwise.
    static BodyGeometry polygon(std::vector<Vec2> vertices) {
        if (vertices.size() < 2) throw DegenerateGeometry("polygon needs at least two vertices");
        if (vertices.size() >= 3 && signed_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());
        std::vector<std::size_t> idx(vertices.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        return from_polyline(std::move(vertices), idx);
    }

    static BodyGeometry slit(Vec2 a, Vec2 b) { return polygon({a, b}); }

    static BodyGeometry circle(Vec2 center, double radius, std::size_t n_samples = 1024) {
        if (!(radius > 0.0)) throw DegenerateGeometry("circle radius must be positive");
        std::vector<Vec2> pts(n_samples);
        for (std::size_t k = 0; k < n_samples; ++k)
            pts[k] = center + radius * unit_from_angle(two_pi * double(k) / double(n_samples));
        BodyGeometry b = from_polyline(std::move(pts), {});
        b.circle_ = ExactCircle{center, radius};
        b.segments_.front().t0 = 0.0;
        b.segments_.front().t1 = two_pi;
        b.segments_.front().curve = [center, radius](double t) { return center + radius * unit_from_angle(t); };
        return b;
    }

    /// General constructor: counterclockwise loop, corner vertex indices,
    /// optional exact corner tangents (theta0 per corner, Theta per corner).
    static BodyGeometry from_polyline(std::vector<Vec2> pts, std::vector<std::size_t> corner_vertices,
                                      std::vector<std::pair<double, double>> exact_tangents = {}) {
        BodyGeometry b;
        b.pts_ = std::move(pts);
        const std::size_t n = b.pts_.size();
        for (std::size_t i = 0; i < n; ++i)
            if (norm(b.pts_[(i + 1) % n] - b.pts_[i]) == 0.0)
                throw DegenerateGeometry("zero-length boundary edge");
        std::sort(corner_vertices.begin(), corner_vertices.end());
        b.exact_tangents_ = std::move(exact_tangents);
        if (!b.exact_tangents_.empty() && b.exact_tangents_.size() != corner_vertices.size())
            throw std::invalid_argument("exact tangents must match corners");
        b.corner_vertices_ = corner_vertices;
        if (corner_vertices.empty()) {
            b.segments_.push_back(BoundarySegment{0, n == 0 ? 0 : n - 1, 0.0, 1.0, {}});
        } else {
            for (std::size_t c = 0; c < corner_vertices.size(); ++c) {
                const std::size_t a = corner_vertices[c];
                const std::size_t e = corner_vertices[(c + 1) % corner_vertices.size()];
                b.segments_.push_back(BoundarySegment{a, e, 0.0, 1.0, {}});
            }
        }
        b.corners_ = b.compute_corners();
        return b;
    }

    [[nodiscard]] const std::vector<Vec2>& polyline() const { return pts_; }
    [[nodiscard]] std::size_t size() const { return pts_.size(); }
    [[nodiscard]] Vec2 vertex(std::size_t i) const { return pts_[i % pts_.size()]; }
    [[nodiscard]] const std::vector<CornerRecord>& corners() const { return corners_; }
    [[nodiscard]] const std::vector<BoundarySegment>& segments() const { return segments_; }
    [[nodiscard]] std::vector<BoundarySegment>& segments() { return segments_; }
    [[nodiscard]] const std::optional<ExactCircle>& exact_circle() const { return circle_; }
    [[nodiscard]] bool closed() const { return pts_.size() >= 3 && std::abs(signed_area(pts_)) > 0.0; }
    [[nodiscard]] const std::vector<std::size_t>& corner_vertices() const { return corner_vertices_; }

    [[nodiscard]] std::size_t protruding_count() const {
        return std::size_t(std::count_if(corners_.begin(), corners_.end(),
                                         [](const CornerRecord& c) { return c.protruding; }));
    }

    static double signed_area(const std::vector<Vec2>& p) {
        double a = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) a += cross(p[i], p[(i + 1) % p.size()]);
        return 0.5 * a;
    }

    /// Strictly inside the solid (even-odd rule; exact for the circle).
    [[nodiscard]] bool inside(Vec2 p) const {
        if (circle_) return norm(p - circle_->center) < circle_->radius;
        bool in = false;
        const std::size_t n = pts_.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Vec2 a = pts_[j], b = pts_[i];
            if ((a.y > p.y) != (b.y > p.y)) {
                const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if (x > p.x) in = !in;
            }
        }
        return in;
    }

    [[nodiscard]] BoundaryPoint closest(Vec2 p) const {
        BoundaryPoint best;
        if (circle_) {
            Vec2 d = p - circle_->center;
            const double r = norm(d);
            const Vec2 u = r > 0.0 ? d / r : Vec2{1.0, 0.0};
            best.point = circle_->center + circle_->radius * u;
            best.tangent = perp(u);
            best.distance = std::abs(r - circle_->radius);
            return best;
        }
        best.distance = std::numeric_limits<double>::infinity();
        const std::size_t n = pts_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 a = pts_[i], b = pts_[(i + 1) % n];
            const Vec2 ab = b - a;
            double t = dot(p - a, ab) / norm_sq(ab);
            t = std::clamp(t, 0.0, 1.0);
            const Vec2 q = a + t * ab;
            const double d = norm(p - q);
            if (d < best.distance) {
                best.distance = d;
                best.point = q;
                best.tangent = ab / norm(ab);
                best.edge = i;
            }
        }
        return best;
    }

    [[nodiscard]] double distance(Vec2 p) const { return closest(p).distance; }

    /// Crossing abscissae of the horizontal line y = const with the boundary,
    /// sorted. Half-open rule on the polyline: vertices are counted consistently.
    [[nodiscard]] std::vector<double> row_crossings(double y) const {
        std::vector<double> xs;
        if (circle_) {
            const double dy = y - circle_->center.y;
            const double s = circle_->radius * circle_->radius - dy * dy;
            if (s > 0.0) {
                const double h = std::sqrt(s);
                xs = {circle_->center.x - h, circle_->center.x + h};
            }
            return xs;
        }
        const std::size_t n = pts_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 a = pts_[i], b = pts_[(i + 1) % n];
            if ((a.y > y) != (b.y > y))
                xs.push_back(std::clamp(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y), std::min(a.x, b.x), std::max(a.x, b.x)));
        }
        std::sort(xs.begin(), xs.end());
        return xs;
    }

    /// Same for the vertical line x = const (returns ordinates).
    [[nodiscard]] std::vector<double> column_crossings(double x) const {
        std::vector<double> ys;
        if (circle_) {
            const double dx = x - circle_->center.x;
            const double s = circle_->radius * circle_->radius - dx * dx;
            if (s > 0.0) {
                const double h = std::sqrt(s);
                ys = {circle_->center.y - h, circle_->center.y + h};
            }
            return ys;
        }
        const std::size_t n = pts_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 a = pts_[i], b = pts_[(i + 1) % n];
            if ((a.x > x) != (b.x > x))
                ys.push_back(std::clamp(a.y + (x - a.x) * (b.y - a.y) / (b.x - a.x), std::min(a.y, b.y), std::max(a.y, b.y)));
        }
        std::sort(ys.begin(), ys.end());
        return ys;
    }

    /// Is p (within tol) a polyline vertex or on the exact circle?
    [[nodiscard]] bool on_vertex(Vec2 p, double tol) const {
        if (circle_) return std::abs(norm(p - circle_->center) - circle_->radius) <= tol;
        for (const Vec2& v : pts_)
            if (norm(v - p) <= tol) return true;
        return false;
    }

    struct Box {
        Vec2 lo, hi;
    };

    [[nodiscard]] Box bounding_box() const {
        Box b{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
              {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
        if (circle_) {
            b.lo = circle_->center - Vec2{circle_->radius, circle_->radius};
            b.hi = circle_->center + Vec2{circle_->radius, circle_->radius};
            return b;
        }
        for (const Vec2& p : pts_) {
            b.lo.x = std::min(b.lo.x, p.x);
            b.lo.y = std::min(b.lo.y, p.y);
            b.hi.x = std::max(b.hi.x, p.x);
            b.hi.y = std::max(b.hi.y, p.y);
        }
        return b;
    }

    [[nodiscard]] double diameter() const {
        const Box b = bounding_box();
        return norm(b.hi - b.lo);
    }

    /// Arc-length parametrized export rows (s, x, y, is_corner).
    struct PolylineRow {
        double s, x, y;
        bool is_corner;
    };

    [[nodiscard]] std::vector<PolylineRow> export_rows() const {
        std::vector<PolylineRow> rows;
        double s = 0.0;
        for (std::size_t i = 0; i <= pts_.size(); ++i) {
            const std::size_t k = i % pts_.size();
            if (i > 0) s += norm(pts_[k] - pts_[i - 1]);
            const bool corner = std::binary_search(corner_vertices_.begin(), corner_vertices_.end(), k);
            rows.push_back({s, pts_[k].x, pts_[k].y, corner});
        }
        return rows;
    }

    friend std::vector<CornerRecord> classify_corners(const BodyGeometry& body);

private:
    std::vector<CornerRecord> compute_corners() const;

    std::vector<Vec2> pts_;
    std::vector<std::size_t> corner_vertices_;
    std::vector<std::pair<double, double>> exact_tangents_;
    std::vector<CornerRecord> corners_;
    std::vector<BoundarySegment> segments_;
    std::optional<ExactCircle> circle_;
};

namespace detail {

// Does the closed segment [a,b] (coordinates relative to the corner) reach into the
// open sector {0 < r < R, theta0 < theta < theta1}?
inline bool segment_meets_sector(Vec2 a, Vec2 b, double R, double theta0, double theta1) {
    constexpr double ang_tol = 1e-9;
    auto inside_arc = [&](double phi) {
        const double d = wrap_2pi(phi - theta0);
        return d > ang_tol && d < (theta1 - theta0) - ang_tol;
    };
    const Vec2 ab = b - a;
    const double len2 = norm_sq(ab);
    // clip to the disk |p| < R
    const double A = len2, B = 2.0 * dot(a, ab), C = norm_sq(a) - R * R;
    const double disc = B * B - 4.0 * A * C;
    if (disc <= 0.0) return false;
    const double sq = std::sqrt(disc);
    double t_lo = std::max(0.0, (-B - sq) / (2.0 * A));
    double t_hi = std::min(1.0, (-B + sq) / (2.0 * A));
    if (t_lo >= t_hi) return false;
    const Vec2 p = a + t_lo * ab, q = a + t_hi * ab;
    // the line through the corner: points have at most two directions
    const double dline = std::abs(cross(a, ab)) / std::sqrt(len2);
    if (dline < 1e-13 * std::max(1.0, R)) {
        bool hit = false;
        for (const Vec2& e : {p, q})
            if (norm(e) > 1e-13 * R) hit = hit || inside_arc(angle_of(e));
        // the piece may straddle the corner
        const double t0 = -dot(a, ab) / len2;
        if (t0 > t_lo && t0 < t_hi) {
            hit = hit || inside_arc(angle_of(ab)) || inside_arc(angle_of(-ab));
        }
        return hit;
    }
    // directions sweep a short arc monotonically from p to q
    const double phi_p = angle_of(p);
    const double span = std::remainder(angle_of(q) - phi_p, two_pi);
    const double lo = span >= 0 ? phi_p : phi_p + span;
    const double width = std::abs(span);
    if (inside_arc(lo) || inside_arc(lo + width)) return true;
    // the open sector arc may start strictly inside [lo, lo+width]
    const double d0 = wrap_2pi(theta0 - lo);
    return d0 < width - ang_tol;
}

}  // namespace detail

/// Does the open sector (theta0, theta1) x (0, radius) at the corner avoid the body?
inline bool pacman_test(const BodyGeometry& body, const CornerRecord& corner, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("pacman_test: radius must be positive");
    if (!corner.protruding) return false;
    const auto& p = body.polyline();
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = p[i] - corner.location, b = p[(i + 1) % n] - corner.location;
        if (detail::segment_meets_sector(a, b, radius, corner.theta0, corner.theta1)) return false;
    }
    if (auto c = body.exact_circle()) {
        // polyline chords of a circle lie inside it; check the arc itself
        for (int k = 0; k < 720; ++k) {
            const Vec2 q = c->center + c->radius * unit_from_angle(two_pi * k / 720.0) - corner.location;
            const double r = norm(q);
            if (r > 0.0 && r < radius) {
                const double d = wrap_2pi(angle_of(q) - corner.theta0);
                if (d > 1e-9 && d < corner.fluid_angle - 1e-9) return false;
            }
        }
    }
    return true;
}

inline std::vector<CornerRecord> BodyGeometry::compute_corners() const {
    std::vector<CornerRecord> out;
    const std::size_t n = pts_.size();
    for (std::size_t c = 0; c < corner_vertices_.size(); ++c) {
        const std::size_t i = corner_vertices_[c];
        CornerRecord r;
        r.vertex = i;
        r.location = pts_[i];
        if (!exact_tangents_.empty()) {
            r.theta0 = exact_tangents_[c].first;
            r.fluid_angle = exact_tangents_[c].second;
        } else {
            const Vec2 prev = pts_[(i + n - 1) % n] - pts_[i];
            const Vec2 next = pts_[(i + 1) % n] - pts_[i];
            if (norm(prev) == 0.0 || norm(next) == 0.0)
                throw DegenerateGeometry("corner tangent undefined");
            r.theta0 = angle_of(prev);
            double Theta = wrap_2pi(angle_of(next) - r.theta0);
            if (Theta < 1e-12) Theta = two_pi;  // slit tip: both rays coincide
            r.fluid_angle = Theta;
        }
        if (!(r.fluid_angle > 0.0)) throw DegenerateGeometry("corner with zero fluid angle");
        r.theta1 = r.theta0 + r.fluid_angle;
        r.protruding = r.fluid_angle > pi + 1e-12;
        out.push_back(r);
    }
    // pacman radius: half the distance to boundary edges not incident to the corner
    for (CornerRecord& r : out) {
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            if (k == r.vertex || (k + 1) % n == r.vertex) continue;
            const Vec2 a = pts_[k], b = pts_[(k + 1) % n];
            const Vec2 ab = b - a;
            const double t = std::clamp(dot(r.location - a, ab) / norm_sq(ab), 0.0, 1.0);
            dmin = std::min(dmin, norm(r.location - (a + t * ab)));
        }
        if (!std::isfinite(dmin)) dmin = norm(pts_[(r.vertex + 1) % n] - r.location);
        r.pacman_radius = 0.5 * dmin;
    }
    for (CornerRecord& r : out)
        r.pacman_verified = r.protruding && r.pacman_radius > 0.0 &&
                            pacman_test(*this, r, 0.25 * r.pacman_radius) &&
                            pacman_test(*this, r, 0.5 * r.pacman_radius);
    return out;
}

/// Corner records with protruding labels and sampled pacman verification.
inline std::vector<CornerRecord> classify_corners(const BodyGeometry& body) { return body.compute_corners(); }

// ---------------------------------------------------------------------------
// Karman-Trefftz profiles
// ---------------------------------------------------------------------------

struct KarmanTrefftzProfile {
    double nu = 1.5;
    complex center_mu{0.0, 0.0};
    double alpha = 0.0;
    double vinf = 1.0;
    std::optional<double> radius;  // must equal |1 - mu| when given

    [[nodiscard]] double circle_radius() const { return std::abs(1.0 - center_mu); }
    [[nodiscard]] double branch_center() const { return std::arg(1.0 - center_mu); }
    [[nodiscard]] bool has_leading_corner() const {
        return std::abs(std::abs(-1.0 - center_mu) - circle_radius()) < 1e-12;
    }
    [[nodiscard]] bool is_identity() const { return std::abs(nu - 1.0) < 1e-12; }

    void validate() const {
        if (!(nu >= 1.0 - 1e-12 && nu <= 2.0 + 1e-12))
            throw InvalidProfile("corner exponent must lie in (1, 2]");
        if (!(vinf > 0.0)) throw InvalidProfile("free-stream speed must be positive");
        if (radius && std::abs(*radius - circle_radius()) > 1e-9 * std::max(1.0, *radius))
            throw InvalidProfile("generating circle does not pass through zeta = 1");
    }
};

/// z = nu (1 + W) / (1 - W), W = ((zeta - 1)/(zeta + 1))^nu. `branch` is the
/// direction of the fluid side at zeta = 1; the cut of the power points opposite.
inline complex karman_trefftz_map(complex zeta, double nu, double branch = 0.0) {
    if (std::abs(nu - 1.0) < 1e-15) return zeta;
    if (zeta == complex(1.0, 0.0)) return {nu, 0.0};
    if (zeta == complex(-1.0, 0.0)) throw MapSingularity("zeta = -1 maps to the leading corner at infinity of W");
    const complex w = (zeta - 1.0) / (zeta + 1.0);
    const double a = wrap_around(std::arg(w), branch);
    const complex W = std::polar(std::pow(std::abs(w), nu), nu * a);
    if (std::abs(1.0 - W) < 1e-300) throw MapSingularity("map denominator vanishes");
    return nu * (1.0 + W) / (1.0 - W);
}

/// dz/dzeta = 4 nu^2 W / ((1 - W)^2 (zeta - 1)(zeta + 1)).
inline complex karman_trefftz_derivative(complex zeta, double nu, double branch = 0.0) {
    if (std::abs(nu - 1.0) < 1e-15) return {1.0, 0.0};
    const complex w = (zeta - 1.0) / (zeta + 1.0);
    const double a = wrap_around(std::arg(w), branch);
    const complex W = std::polar(std::pow(std::abs(w), nu), nu * a);
    return 4.0 * nu * nu * W / ((1.0 - W) * (1.0 - W) * (zeta - 1.0) * (zeta + 1.0));
}

/// Inverse of karman_trefftz_map on the exterior branch.
inline complex karman_trefftz_inverse(complex z, double nu, double branch = 0.0) {
    if (std::abs(nu - 1.0) < 1e-15) return z;
    if (z == complex(-nu, 0.0)) throw MapSingularity("leading corner pre-image");
    const complex W = (z - nu) / (z + nu);
    const double a = wrap_around(std::arg(W), nu * branch);
    const complex w = std::polar(std::pow(std::abs(W), 1.0 / nu), a / nu);
    return (1.0 + w) / (1.0 - w);
}

inline complex profile_map(const KarmanTrefftzProfile& p, complex zeta) {
    return karman_trefftz_map(zeta, p.nu, p.branch_center());
}

inline complex profile_inverse(const KarmanTrefftzProfile& p, complex z) {
    return karman_trefftz_inverse(z, p.nu, p.branch_center());
}

/// Sampled body for a profile; circle parameter phi measured about the center mu,
/// starting at the trailing pre-image zeta = 1.
inline BodyGeometry profile_to_body(const KarmanTrefftzProfile& p, std::size_t n_samples = 2048) {
    p.validate();
    if (n_samples < 16) throw std::invalid_argument("profile_to_body: too few samples");
    const complex mu = p.center_mu;
    const double R = p.circle_radius();
    const double phi_te = std::arg(1.0 - mu);
    const bool identity = p.is_identity();
    const bool two = p.has_leading_corner() && !identity;
    const double phi_le = two ? phi_te + wrap_2pi(std::arg(-1.0 - mu) - phi_te) : 0.0;

    auto zeta_at = [mu, R](double phi) { return mu + std::polar(R, phi); };
    auto z_at = [&](double phi) -> Vec2 {
        const complex zeta = zeta_at(phi);
        if (std::abs(zeta - 1.0) < 1e-14) return Vec2{p.nu, 0.0};
        if (two && std::abs(zeta + 1.0) < 1e-14) return Vec2{-p.nu, 0.0};
        return Vec2(profile_map(p, zeta));
    };

    std::vector<Vec2> pts;
    std::vector<double> phis;
    std::size_t le_index = 0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double phi = phi_te + two_pi * double(k) / double(n_samples);
        if (two && le_index == 0 && phi >= phi_le - 1e-12) {
            le_index = pts.size();
            phis.push_back(phi_le);
            pts.push_back(Vec2{-p.nu, 0.0});
            if (std::abs(phi - phi_le) < 1e-12) continue;
        }
        phis.push_back(phi);
        pts.push_back(z_at(phi));
    }

    std::vector<std::size_t> corner_idx;
    std::vector<std::pair<double, double>> tangents;
    if (!identity) {
        auto corner_tangent = [&](double phi_c, Vec2 loc) {
            const double eta = 1e-7;
            const Vec2 before = z_at(phi_c - eta) - loc;
            return std::pair<double, double>{angle_of(before), p.nu * pi};
        };
        corner_idx.push_back(0);
        tangents.push_back(corner_tangent(phi_te, pts[0]));
        if (two) {
            corner_idx.push_back(le_index);
            tangents.push_back(corner_tangent(phi_le, pts[le_index]));
        }
    }
    BodyGeometry b = BodyGeometry::from_polyline(std::move(pts), corner_idx, tangents);
    // attach analytic parametrizations
    auto& segs = b.segments();
    if (segs.size() == 1) {
        segs[0].t0 = phi_te;
        segs[0].t1 = phi_te + two_pi;
    } else if (segs.size() == 2) {
        segs[0].t0 = phi_te;
        segs[0].t1 = phi_le;
        segs[1].t0 = phi_le;
        segs[1].t1 = phi_te + two_pi;
    } else {
        segs[0].t0 = phi_te;
        segs[0].t1 = phi_te + two_pi;
    }
    for (auto& s : segs) s.curve = z_at;
    return b;
}

}  // namespace cornerlab

#endif  // CORNERLAB_GEOMETRY_HPP
