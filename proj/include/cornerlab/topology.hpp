#ifndef CORNERLAB_TOPOLOGY_HPP
#define CORNERLAB_TOPOLOGY_HPP

// The body streamline {psi = 0}: marching-squares extraction on sampled
// fields, vertex classification by probe circles, and a predictor-corrector
// follower that traces the two curves coming in from infinity.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "conformal.hpp"
#include "core.hpp"
#include "geometry.hpp"
#include "solver.hpp"

namespace cornerlab {

// ---------------------------------------------------------------------------
// Evaluators and samples
// ---------------------------------------------------------------------------

/// A stream function that can be evaluated anywhere in the fluid.
struct ScalarEvaluator {
    std::function<double(Vec2)> psi;
    std::function<Vec2(Vec2)> grad;
    std::function<bool(Vec2)> in_fluid;
    std::function<BoundaryPoint(Vec2)> closest_body;
    std::vector<CornerRecord> corners;
    double flow_angle = 0.0;
    Vec2 center;
    double scale = 1.0;  // size of psi variations (v_inf times body size)
};

inline ScalarEvaluator conformal_evaluator(const ConformalFlow& flow, const BodyGeometry& body) {
    ScalarEvaluator e;
    e.psi = [flow](Vec2 p) { return flow.psi(p); };
    e.grad = [flow](Vec2 p) { return flow.grad(p); };
    e.in_fluid = [flow](Vec2 p) { return flow.in_fluid(p); };
    e.closest_body = [body](Vec2 p) { return body.closest(p); };
    e.corners = body.corners();
    e.flow_angle = flow.circle_flow().alpha;
    const auto box = body.bounding_box();
    e.center = 0.5 * (box.lo + box.hi);
    e.scale = std::abs(flow.circle_flow().vinf) * std::max(1.0, body.diameter());
    return e;
}

/// Node samples on a tensor grid; NaN marks nodes outside the fluid.
struct GridSamples {
    std::vector<double> xs, ys, v;
    [[nodiscard]] std::size_t nx() const { return xs.size(); }
    [[nodiscard]] std::size_t ny() const { return ys.size(); }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return v[j * nx() + i]; }
    [[nodiscard]] Vec2 pos(std::size_t i, std::size_t j) const { return {xs[i], ys[j]}; }
};

inline GridSamples sample_evaluator(const ScalarEvaluator& e, Vec2 lo, Vec2 hi, double h) {
    GridSamples s;
    const auto nx = std::size_t(std::ceil((hi.x - lo.x) / h)) + 1, ny = std::size_t(std::ceil((hi.y - lo.y) / h)) + 1;
    for (std::size_t i = 0; i < nx; ++i) s.xs.push_back(lo.x + double(i) * h);
    for (std::size_t j = 0; j < ny; ++j) s.ys.push_back(lo.y + double(j) * h);
    s.v.resize(nx * ny);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            const Vec2 p{s.xs[i], s.ys[j]};
            s.v[j * nx + i] = e.in_fluid(p) ? e.psi(p) : std::numeric_limits<double>::quiet_NaN();
        }
    return s;
}

/// Nodal values of a solved field. Boundary nodes of the bodies are masked so
/// that the body contour itself is not reported as part of the zero set.
inline GridSamples sample_field(const DiscreteField& f) {
    const Discretization& d = *f.disc;
    GridSamples s;
    s.xs = d.xs();
    s.ys = d.ys();
    s.v.resize(d.nx() * d.ny());
    for (std::size_t n = 0; n < s.v.size(); ++n) {
        double val = f.node_value(n);
        if (d.kind(n) == NodeKind::Dirichlet) {
            const int owner = d.slots()[std::size_t(d.slot_of_node(n))].owner;
            if (!d.pieces()[std::size_t(owner)].exterior) val = std::numeric_limits<double>::quiet_NaN();
        }
        s.v[n] = val;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Marching squares
// ---------------------------------------------------------------------------

struct ZeroSet {
    std::vector<std::vector<Vec2>> curves;
    std::vector<bool> closed;
    std::vector<std::size_t> degenerate_cells;  // all four corners zero
    double scale = 0.0;
};

namespace detail {

inline double polish_root(const std::function<double(Vec2)>& f, Vec2 a, Vec2 b, double fa, double fb, double tol) {
    // fa >= 0 > fb (or the reverse); bisection on the segment parameter
    double lo = 0.0, hi = 1.0;
    const bool a_pos = fa >= 0.0;
    const double len = norm(b - a);
    while ((hi - lo) * len > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(a + mid * (b - a));
        if ((fm >= 0.0) == a_pos) lo = mid;
        else hi = mid;
    }
    (void)fb;
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Zero contours of the samples with linear interpolation on cell edges;
/// crossings are polished by bisection on `exact` when it is given. Zero
/// values count as positive; values below 1e-10 of the sample scale are zero.
inline ZeroSet extract_zero_set(const GridSamples& s, const std::function<double(Vec2)>& exact = {},
                                double polish_tol = 1e-10) {
    ZeroSet z;
    const std::size_t nx = s.nx(), ny = s.ny();
    for (double v : s.v)
        if (std::isfinite(v)) z.scale = std::max(z.scale, std::abs(v));
    const double snap = 1e-10 * z.scale;
    auto val = [&](std::size_t i, std::size_t j) {
        const double v = s.at(i, j);
        return std::abs(v) <= snap ? 0.0 : v;
    };
    // edge ids: horizontal (i,j)-(i+1,j) -> 2(j nx + i), vertical (i,j)-(i,j+1) -> 2(j nx + i) + 1
    std::unordered_map<std::size_t, Vec2> point;
    std::unordered_map<std::size_t, std::vector<std::size_t>> adj;
    auto crossing = [&](std::size_t id, Vec2 a, Vec2 b, double fa, double fb) {
        if (point.count(id)) return;
        double t = fa / (fa - fb);
        if (exact) t = detail::polish_root(exact, a, b, fa, fb, polish_tol);
        point[id] = a + t * (b - a);
    };
    for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const double f00 = val(i, j), f10 = val(i + 1, j), f01 = val(i, j + 1), f11 = val(i + 1, j + 1);
            if (!(std::isfinite(f00) && std::isfinite(f10) && std::isfinite(f01) && std::isfinite(f11))) continue;
            if (f00 == 0.0 && f10 == 0.0 && f01 == 0.0 && f11 == 0.0) {
                z.degenerate_cells.push_back(j * nx + i);
                continue;
            }
            const bool p00 = f00 >= 0, p10 = f10 >= 0, p01 = f01 >= 0, p11 = f11 >= 0;
            const std::size_t eb = 2 * (j * nx + i), et = 2 * ((j + 1) * nx + i), el = 2 * (j * nx + i) + 1,
                              er = 2 * (j * nx + i + 1) + 1;
            std::vector<std::size_t> ids;
            if (p00 != p10) { crossing(eb, s.pos(i, j), s.pos(i + 1, j), f00, f10); ids.push_back(eb); }
            if (p10 != p11) { crossing(er, s.pos(i + 1, j), s.pos(i + 1, j + 1), f10, f11); ids.push_back(er); }
            if (p11 != p01) { crossing(et, s.pos(i + 1, j + 1), s.pos(i, j + 1), f11, f01); ids.push_back(et); }
            if (p01 != p00) { crossing(el, s.pos(i, j + 1), s.pos(i, j), f01, f00); ids.push_back(el); }
            auto link = [&](std::size_t a, std::size_t b) {
                adj[a].push_back(b);
                adj[b].push_back(a);
            };
            if (ids.size() == 2) {
                link(ids[0], ids[1]);
            } else if (ids.size() == 4) {
                // saddle: the centre value decides which corners connect
                const Vec2 c = 0.5 * (s.pos(i, j) + s.pos(i + 1, j + 1));
                const double fc = exact ? exact(c) : 0.25 * (f00 + f10 + f01 + f11);
                if ((fc >= 0) == p00) {
                    link(ids[0], ids[1]);  // bottom-right, top-left
                    link(ids[2], ids[3]);
                } else {
                    link(ids[3], ids[0]);
                    link(ids[1], ids[2]);
                }
            }
        }
    // walk components: open curves from degree-1 points first, then loops
    std::vector<std::size_t> keys;
    keys.reserve(point.size());
    for (const auto& kv : point) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    std::unordered_map<std::size_t, bool> used;
    auto walk = [&](std::size_t start) {
        std::vector<Vec2> pts;
        std::size_t prev = std::numeric_limits<std::size_t>::max(), cur = start;
        bool closed = false;
        while (true) {
            used[cur] = true;
            const Vec2 p = point[cur];
            if (pts.empty() || norm(pts.back() - p) > 0.0) pts.push_back(p);
            std::size_t next = std::numeric_limits<std::size_t>::max();
            for (std::size_t nb : adj[cur])
                if (nb != prev && !used[nb]) {
                    next = nb;
                    break;
                }
            if (next == std::numeric_limits<std::size_t>::max()) {
                for (std::size_t nb : adj[cur])
                    if (nb == start && nb != prev && pts.size() > 2) closed = true;
                break;
            }
            prev = cur;
            cur = next;
        }
        if (closed) pts.push_back(pts.front());
        z.curves.push_back(std::move(pts));
        z.closed.push_back(closed);
    };
    for (std::size_t k : keys)
        if (!used[k] && adj[k].size() == 1) walk(k);
    for (std::size_t k : keys)
        if (!used[k] && !adj[k].empty()) walk(k);
    return z;
}

// ---------------------------------------------------------------------------
// Vertices
// ---------------------------------------------------------------------------

struct VertexInfo {
    Vec2 location;
    int m = 0;                        // 2m zero rays in a full neighbourhood
    std::vector<double> ray_angles;   // fluid rays, radians
    std::vector<double> spacings;     // consecutive ray angles, radians
    bool boundary = false;            // probe circle cut by the body
    bool resolved = true;             // same m at both probe radii
};

namespace detail {

inline std::vector<double> probe_zero_rays(const std::function<double(Vec2)>& psi,
                                           const std::function<bool(Vec2)>& in_fluid, Vec2 c, double r,
                                           int samples, bool& cut) {
    std::vector<double> rays;
    cut = false;
    std::vector<double> ang(std::size_t(samples) + 1), val(std::size_t(samples) + 1);
    std::vector<bool> fluid(std::size_t(samples) + 1);
    for (int k = 0; k <= samples; ++k) {
        const double t = two_pi * (double(k % samples) + 0.37) / double(samples);
        const Vec2 p = c + r * unit_from_angle(t);
        ang[std::size_t(k)] = t;
        fluid[std::size_t(k)] = !in_fluid || in_fluid(p);
        val[std::size_t(k)] = fluid[std::size_t(k)] ? psi(p) : 0.0;
        if (!fluid[std::size_t(k)]) cut = true;
    }
    for (int k = 0; k < samples; ++k) {
        const auto a = std::size_t(k), b = std::size_t(k + 1);
        if (!fluid[a] || !fluid[b]) continue;
        if ((val[a] >= 0) == (val[b] >= 0)) continue;
        double lo = ang[a], hi = k + 1 == samples ? ang[b] + two_pi : ang[b];
        const bool lo_pos = val[a] >= 0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((psi(c + r * unit_from_angle(mid)) >= 0) == lo_pos) lo = mid;
            else hi = mid;
        }
        rays.push_back(wrap_2pi(0.5 * (lo + hi)));
    }
    std::sort(rays.begin(), rays.end());
    return rays;
}

}  // namespace detail

/// Counts zero rays of psi on probe circles of radius r and r/2 about p.
/// In the interior m is half the ray count; on a boundary point the boundary
/// supplies two more rays (m = fluid rays + 1).
inline VertexInfo classify_vertex(const std::function<double(Vec2)>& psi, Vec2 p, double probe_radius,
                                  const std::function<bool(Vec2)>& in_fluid = {}, int samples = 7200) {
    VertexInfo v;
    v.location = p;
    bool cut1 = false, cut2 = false;
    const auto r1 = detail::probe_zero_rays(psi, in_fluid, p, probe_radius, samples, cut1);
    const auto r2 = detail::probe_zero_rays(psi, in_fluid, p, 0.5 * probe_radius, samples, cut2);
    v.boundary = cut1 || cut2;
    auto m_of = [&](std::size_t n, bool cut) { return cut ? int(n) + 1 : int(n / 2); };
    v.m = m_of(r2.size(), cut2);
    v.resolved = m_of(r1.size(), cut1) == v.m && (cut2 || r2.size() % 2 == 0);
    v.ray_angles = r2;
    for (std::size_t k = 0; k + 1 < r2.size(); ++k) v.spacings.push_back(r2[k + 1] - r2[k]);
    if (!v.boundary && r2.size() >= 2) v.spacings.push_back(r2.front() + two_pi - r2.back());
    return v;
}

/// Grid nodes where |psi| is below 1e-10 of the scale and both the 8-node and
/// the 16-node rings around it change sign more than twice. Within two cells
/// only the node with the most sign changes is kept.
inline std::vector<Vec2> vertex_candidates(const GridSamples& s) {
    struct Cand {
        std::size_t i, j;
        int changes;
    };
    std::vector<Cand> cand;
    double scale = 0.0;
    for (double v : s.v)
        if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
    const double snap = 1e-10 * scale;
    auto ring_changes = [&](std::size_t i, std::size_t j, int r) {
        std::vector<std::pair<int, int>> ring;
        for (int a = -r; a < r; ++a) ring.emplace_back(a, -r);
        for (int a = -r; a < r; ++a) ring.emplace_back(r, a);
        for (int a = r; a > -r; --a) ring.emplace_back(a, r);
        for (int a = r; a > -r; --a) ring.emplace_back(-r, a);
        int changes = 0;
        bool prev = false;
        for (std::size_t k = 0; k <= ring.size(); ++k) {
            const auto [di, dj] = ring[k % ring.size()];
            const double v = s.at(std::size_t(int(i) + di), std::size_t(int(j) + dj));
            if (!std::isfinite(v)) return -1;
            const bool pos = !(v < -snap);
            if (k > 0 && pos != prev) ++changes;
            prev = pos;
        }
        return changes;
    };
    for (std::size_t j = 2; j + 2 < s.ny(); ++j)
        for (std::size_t i = 2; i + 2 < s.nx(); ++i) {
            const double c = s.at(i, j);
            if (!std::isfinite(c) || std::abs(c) > snap) continue;
            const int c1 = ring_changes(i, j, 1), c2 = ring_changes(i, j, 2);
            if (c1 > 2 && c2 > 2) cand.push_back({i, j, c1 + c2});
        }
    std::vector<Vec2> out;
    for (const auto& a : cand) {
        bool best = true;
        for (const auto& b : cand) {
            const auto di = std::max(a.i, b.i) - std::min(a.i, b.i), dj = std::max(a.j, b.j) - std::min(a.j, b.j);
            if (di <= 2 && dj <= 2 && (b.changes > a.changes || (b.changes == a.changes && (b.j < a.j || (b.j == a.j && b.i < a.i)))))
                best = false;
        }
        if (best) out.push_back(s.pos(a.i, a.j));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Streamline graph
// ---------------------------------------------------------------------------

enum class EndKind { NegInfinity, PosInfinity, BodyPoint, Vertex, Open };

inline const char* end_kind_name(EndKind k) {
    switch (k) {
        case EndKind::NegInfinity: return "neg_infinity";
        case EndKind::PosInfinity: return "pos_infinity";
        case EndKind::BodyPoint: return "body_point";
        case EndKind::Vertex: return "vertex";
        default: return "open";
    }
}

struct CurveEnd {
    EndKind kind = EndKind::Open;
    Vec2 point;
    int corner = -1;  // index into the body's corner list for corner attachments
};

struct StreamCurve {
    std::vector<Vec2> points;
    CurveEnd start, end;
    bool closed = false;
};

struct Attachment {
    Vec2 body_point;
    double angle_deg = 0.0;  // to the boundary tangent, or to the bisector at a corner
    bool is_corner = false;
    int corner = -1;
    int curve = -1;
};

struct StreamlineGraph {
    std::vector<StreamCurve> curves;
    std::vector<VertexInfo> vertices;
    std::vector<Attachment> attachments;
    std::string outcome;  // through_curve | two_attachments | double_attachment | inconclusive
    bool inconclusive = false;
    std::vector<std::string> notes;
};

/// Builds a graph from extracted contours; `classify` labels open ends.
inline StreamlineGraph graph_from_zero_set(const ZeroSet& z, const std::function<CurveEnd(Vec2)>& classify) {
    StreamlineGraph g;
    for (std::size_t k = 0; k < z.curves.size(); ++k) {
        StreamCurve c;
        c.points = z.curves[k];
        c.closed = z.closed[k];
        if (!c.closed && !c.points.empty()) {
            c.start = classify(c.points.front());
            c.end = classify(c.points.back());
        }
        g.curves.push_back(std::move(c));
    }
    return g;
}

/// End classifier for solved external flows: body proximity first, then the
/// far-field ring (upstream or downstream by the flow direction).
inline std::function<CurveEnd(Vec2)> field_end_classifier(const DiscreteField& f, double r_far) {
    return [&f, r_far](Vec2 p) {
        CurveEnd e;
        e.point = p;
        const Discretization& d = *f.disc;
        const std::size_t i = std::min(locate_cell(d.xs(), p.x), d.nx() - 2);
        const std::size_t j = std::min(locate_cell(d.ys(), p.y), d.ny() - 2);
        const double cell = std::max(d.xs()[i + 1] - d.xs()[i], d.ys()[j + 1] - d.ys()[j]);
        const BoundaryPoint b = d.closest_body_point(p);
        if (b.distance <= 3.0 * cell) {
            e.kind = EndKind::BodyPoint;
            e.point = b.point;
            return e;
        }
        if (norm(p) >= r_far - 3.0 * cell) {
            const double along = std::cos(f.ff.alpha) * p.x + std::sin(f.ff.alpha) * p.y;
            e.kind = along < 0 ? EndKind::NegInfinity : EndKind::PosInfinity;
        }
        return e;
    };
}

// ---------------------------------------------------------------------------
// Follower
// ---------------------------------------------------------------------------

struct TraceOptions {
    double h = 1.0 / 8.0;          // maximal step
    double attach_tol = 1.0 / 16;  // attachment when closer to the body
    double extent = 8.0;           // seeds at distance `extent` up- and downstream
    double noise_floor = 1e-12;    // |grad psi| / scale below this stops the trace
    double same_point_tol = 0.125; // two attachments closer than this are one point
    int max_steps = 200000;
};

struct TraceResult {
    std::vector<Vec2> points;
    CurveEnd end;
    bool ok = true;
};

namespace detail {

/// Root of psi on the line through c + s n, |s| <= L, closest to s = 0.
inline std::optional<Vec2> seed_on_line(const ScalarEvaluator& e, Vec2 c, Vec2 n, double L) {
    const int m = 4000;
    std::optional<Vec2> best;
    double best_s = std::numeric_limits<double>::infinity();
    double s_prev = -L, f_prev = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k <= m; ++k) {
        const double s = -L + 2.0 * L * double(k) / double(m);
        const Vec2 p = c + s * n;
        const double f = e.in_fluid(p) ? e.psi(p) : std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(f) && std::isfinite(f_prev) && (f >= 0) != (f_prev >= 0)) {
            double lo = s_prev, hi = s;
            const bool lo_pos = f_prev >= 0;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((e.psi(c + mid * n) >= 0) == lo_pos) lo = mid;
                else hi = mid;
            }
            const double r = 0.5 * (lo + hi);
            if (std::abs(r) < std::abs(best_s)) {
                best_s = r;
                best = c + r * n;
            }
        }
        s_prev = s;
        f_prev = f;
    }
    return best;
}

inline Vec2 correct(const ScalarEvaluator& e, Vec2 p, bool& ok) {
    ok = true;
    for (int it = 0; it < 8; ++it) {
        const double f = e.psi(p);
        const Vec2 g = e.grad(p);
        const double g2 = norm_sq(g);
        if (!(g2 > 0.0) || !std::isfinite(g2)) {
            ok = false;
            return p;
        }
        const Vec2 dp = (f / g2) * g;
        p = p - dp;
        if (norm(dp) < 1e-14 * (1.0 + norm(p))) break;
    }
    return p;
}

}  // namespace detail

/// Follows psi = 0 from `seed`, moving along `dir_sign` times the velocity.
inline TraceResult follow_zero_curve(const ScalarEvaluator& e, Vec2 seed, double dir_sign, const TraceOptions& o,
                                     const std::function<bool(Vec2)>& reached_far_end) {
    TraceResult r;
    Vec2 p = seed;
    r.points.push_back(p);
    auto tangent = [&](Vec2 q) {
        const Vec2 g = e.grad(q);
        return dir_sign * Vec2{g.y, -g.x};  // velocity direction for rho v = -perp(grad psi)
    };
    Vec2 t_prev = tangent(p);
    if (norm(t_prev) < o.noise_floor * e.scale) {
        r.ok = false;
        return r;
    }
    t_prev = t_prev / norm(t_prev);
    double step = o.h;
    for (int it = 0; it < o.max_steps; ++it) {
        const BoundaryPoint b = e.closest_body(p);
        if (b.distance < o.attach_tol) {
            r.end.kind = EndKind::BodyPoint;
            r.end.point = b.point;
            return r;
        }
        if (reached_far_end(p)) {
            r.end.kind = EndKind::PosInfinity;
            r.end.point = p;
            return r;
        }
        step = std::min({o.h, 0.2 * b.distance, 2.0 * step});
        bool accepted = false;
        for (int tries = 0; tries < 40; ++tries) {
            // midpoint predictor, Newton corrector onto psi = 0
            Vec2 q = p + 0.5 * step * t_prev;
            Vec2 tm = tangent(q);
            const double ntm = norm(tm);
            if (!(ntm > o.noise_floor * e.scale)) {
                step *= 0.5;
                continue;
            }
            q = p + step * (tm / ntm);
            bool ok = false;
            q = detail::correct(e, q, ok);
            if (!ok || !e.in_fluid(q)) {
                step *= 0.5;
                continue;
            }
            Vec2 tq = tangent(q);
            const double ntq = norm(tq);
            if (!(ntq > o.noise_floor * e.scale)) {
                step *= 0.5;
                continue;
            }
            tq = tq / ntq;
            const double moved = norm(q - p);
            if (dot(tq, t_prev) < std::cos(rad(10.0)) || moved > 1.5 * step || moved < 0.5 * step) {
                step *= 0.5;
                continue;
            }
            p = q;
            t_prev = tq;
            r.points.push_back(p);
            accepted = true;
            break;
        }
        if (!accepted) {
            const Vec2 g = e.grad(p);
            r.end.kind = norm(g) < 1e3 * o.noise_floor * e.scale ? EndKind::Vertex : EndKind::Open;
            r.end.point = p;
            r.ok = false;
            return r;
        }
    }
    r.ok = false;
    r.end.point = p;
    return r;
}

namespace detail {

/// Direction of the last points of a trace, extrapolated to the end point from
/// fits over the last 10 and last 5 points.
inline Vec2 end_direction(const std::vector<Vec2>& pts) {
    auto fit = [&](std::size_t n) {
        n = std::min(n, pts.size());
        Vec2 mean;
        for (std::size_t k = pts.size() - n; k < pts.size(); ++k) mean = mean + pts[k];
        mean = mean / double(n);
        double sxx = 0, sxy = 0, syy = 0;
        for (std::size_t k = pts.size() - n; k < pts.size(); ++k) {
            const Vec2 d = pts[k] - mean;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        const double ang = 0.5 * std::atan2(2 * sxy, sxx - syy);
        Vec2 dir = unit_from_angle(ang);
        if (dot(dir, pts.back() - pts[pts.size() - n]) < 0) dir = -1.0 * dir;
        const double span = norm(pts.back() - pts[pts.size() - n]);
        return std::pair<Vec2, double>{dir, span};
    };
    if (pts.size() < 3) return pts.size() == 2 ? (pts[1] - pts[0]) / norm(pts[1] - pts[0]) : Vec2{1, 0};
    const auto [d10, s10] = fit(10);
    const auto [d5, s5] = fit(5);
    if (!(s10 > s5 * 1.01)) return d5;
    // the angle error of a chord fit is proportional to its span
    const double a10 = angle_of(d10), a5 = a10 + std::remainder(angle_of(d5) - a10, two_pi);
    const double a0 = (a5 * s10 - a10 * s5) / (s10 - s5);
    return unit_from_angle(a0);
}

}  // namespace detail

/// Angle (degrees, in [0, 90]) between the end direction of a curve and the
/// boundary tangent at its attachment point; for corners the angle to the
/// bisector is reported instead.
inline Attachment make_attachment(const ScalarEvaluator& e, const std::vector<Vec2>& pts, Vec2 body_point,
                                  double corner_tol) {
    Attachment a;
    a.body_point = body_point;
    const Vec2 dir = detail::end_direction(pts);
    for (std::size_t k = 0; k < e.corners.size(); ++k)
        if (e.corners[k].protruding && norm(e.corners[k].location - body_point) < corner_tol) {
            a.is_corner = true;
            a.corner = int(k);
            a.body_point = e.corners[k].location;
            const Vec2 bis = unit_from_angle(e.corners[k].bisector());
            a.angle_deg = deg(std::acos(std::clamp(dot(-1.0 * dir, bis), -1.0, 1.0)));
            return a;
        }
    const Vec2 t = e.closest_body(body_point).tangent;
    a.angle_deg = deg(std::acos(std::clamp(std::abs(dot(dir, t)), 0.0, 1.0)));
    return a;
}

/// Traces the two curves of {psi = 0} arriving from upstream and downstream
/// infinity and classifies the outcome.
inline StreamlineGraph trace_body_streamline(const ScalarEvaluator& e, const TraceOptions& o) {
    StreamlineGraph g;
    const Vec2 fwd = unit_from_angle(e.flow_angle), nrm = perp(fwd);
    const double X = o.extent;
    const auto up = detail::seed_on_line(e, e.center - X * fwd, nrm, X);
    const auto down = detail::seed_on_line(e, e.center + X * fwd, nrm, X);
    if (!up || !down) {
        g.inconclusive = true;
        g.outcome = "inconclusive";
        g.notes.push_back("no zero of psi on a seed line");
        return g;
    }
    auto along = [&](Vec2 p) { return dot(p - e.center, fwd); };
    const double corner_tol = std::max(4.0 * o.attach_tol, 1e-3);
    std::array<TraceResult, 2> tr;
    tr[0] = follow_zero_curve(e, *up, +1.0, o, [&](Vec2 p) { return along(p) > X; });
    tr[1] = follow_zero_curve(e, *down, -1.0, o, [&](Vec2 p) { return along(p) < -X; });
    // upstream trace reaching downstream: a single through-curve
    if (tr[0].end.kind == EndKind::PosInfinity) {
        StreamCurve c;
        c.points = tr[0].points;
        c.start = {EndKind::NegInfinity, *up, -1};
        c.end = {EndKind::PosInfinity, tr[0].points.back(), -1};
        g.curves.push_back(std::move(c));
        g.outcome = "through_curve";
        return g;
    }
    for (int k = 0; k < 2; ++k) {
        StreamCurve c;
        c.points = tr[std::size_t(k)].points;
        c.start = {k == 0 ? EndKind::NegInfinity : EndKind::PosInfinity, c.points.front(), -1};
        c.end = tr[std::size_t(k)].end;
        if (k == 1 && c.end.kind == EndKind::PosInfinity) c.end.kind = EndKind::NegInfinity;
        if (c.end.kind == EndKind::BodyPoint) {
            Attachment a = make_attachment(e, c.points, c.end.point, corner_tol);
            a.curve = k;
            c.end.corner = a.corner;
            if (a.is_corner) c.end.point = a.body_point;
            g.attachments.push_back(a);
        } else {
            g.inconclusive = true;
            g.notes.push_back(std::string("trace from ") + (k == 0 ? "upstream" : "downstream") + " ended " +
                              end_kind_name(c.end.kind));
        }
        g.curves.push_back(std::move(c));
    }
    if (g.inconclusive) {
        g.outcome = "inconclusive";
    } else if (norm(g.attachments[0].body_point - g.attachments[1].body_point) < o.same_point_tol) {
        g.outcome = "double_attachment";
    } else {
        g.outcome = "two_attachments";
    }
    return g;
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

struct StructureReport {
    bool cycle_free = true;
    std::size_t cycles = 0;
    std::size_t curve_count = 0;
    bool curve_count_ok = true;        // 1 or 2 curves from infinity
    std::size_t unbounded_ends = 0;
    std::size_t attachments = 0;
    std::vector<int> protruding_corners;
    std::vector<bool> corner_attached;
    std::size_t protruding_unattached = 0;
    bool theorem_flag = false;         // protruding corners without attachment
    bool inconclusive = false;
    std::vector<std::string> notes;
};

inline StructureReport check_structure(const StreamlineGraph& g, const BodyGeometry& body) {
    StructureReport r;
    r.inconclusive = g.inconclusive;
    for (const auto& c : g.curves) {
        if (c.closed) {
            ++r.cycles;
            continue;
        }
        ++r.curve_count;
        for (const CurveEnd* e : {&c.start, &c.end}) {
            if (e->kind == EndKind::NegInfinity || e->kind == EndKind::PosInfinity) ++r.unbounded_ends;
            if (e->kind == EndKind::BodyPoint) ++r.attachments;
            if (e->kind == EndKind::Open) r.inconclusive = true;
        }
    }
    r.cycle_free = r.cycles == 0;
    r.curve_count_ok = r.curve_count == 1 || r.curve_count == 2;
    const auto& corners = body.corners();
    for (std::size_t k = 0; k < corners.size(); ++k) {
        if (!corners[k].protruding) continue;
        r.protruding_corners.push_back(int(k));
        bool att = false;
        for (const auto& a : g.attachments)
            if (a.corner == int(k)) att = true;
        for (const auto& c : g.curves)
            for (const CurveEnd* e : {&c.start, &c.end})
                if (e->kind == EndKind::BodyPoint && e->corner == int(k)) att = true;
        r.corner_attached.push_back(att);
        if (!att) ++r.protruding_unattached;
    }
    r.theorem_flag = r.protruding_unattached > 0;
    if (!r.cycle_free) r.notes.push_back("closed zero curve in the fluid");
    return r;
}

/// Zero set of a solved external flow as a graph. Curves are oriented so that
/// a body end comes last; body ends become attachments, labelled with a
/// protruding corner when they lie within two local cells of it.
/// Streamline graph of a solved field. A curve through infinity that passes
/// within attach_tol of the body is split there into two attaching curves, the
/// same rule the analytic follower applies.
inline StreamlineGraph field_streamline_graph(const DiscreteField& f, const BodyGeometry& body, double r_far,
                                              double attach_tol = 0.0) {
    const GridSamples s = sample_field(f);
    const ZeroSet z = extract_zero_set(s);
    StreamlineGraph g = graph_from_zero_set(z, field_end_classifier(f, r_far));
    const Discretization& d = *f.disc;
    if (attach_tol > 0.0) {
        std::vector<StreamCurve> split;
        for (auto& c : g.curves) {
            const bool through = !c.closed && c.start.kind != EndKind::BodyPoint && c.end.kind != EndKind::BodyPoint &&
                                 c.start.kind != EndKind::Open && c.end.kind != EndKind::Open;
            std::size_t best = 0;
            double dmin = std::numeric_limits<double>::infinity();
            Vec2 touch;
            if (through)
                for (std::size_t k = 0; k < c.points.size(); ++k) {
                    const Vec2 b = body.closest(c.points[k]).point;
                    if (norm(c.points[k] - b) < dmin) {
                        dmin = norm(c.points[k] - b);
                        best = k;
                        touch = b;
                    }
                }
            if (!through || dmin >= attach_tol || best == 0 || best + 1 == c.points.size()) {
                split.push_back(std::move(c));
                continue;
            }
            StreamCurve a, b;
            a.points.assign(c.points.begin(), c.points.begin() + std::ptrdiff_t(best) + 1);
            a.points.push_back(touch);
            a.start = c.start;
            a.end = {EndKind::BodyPoint, touch, -1};
            b.points.assign(c.points.begin() + std::ptrdiff_t(best), c.points.end());
            b.points.insert(b.points.begin(), touch);
            b.start = {EndKind::BodyPoint, touch, -1};
            b.end = c.end;
            split.push_back(std::move(a));
            split.push_back(std::move(b));
        }
        g.curves = std::move(split);
    }
    ScalarEvaluator e;
    e.corners = body.corners();
    e.closest_body = [&body](Vec2 p) { return body.closest(p); };
    for (std::size_t k = 0; k < g.curves.size(); ++k) {
        auto& c = g.curves[k];
        if (c.closed) continue;
        if (c.start.kind == EndKind::BodyPoint && c.end.kind != EndKind::BodyPoint) {
            std::reverse(c.points.begin(), c.points.end());
            std::swap(c.start, c.end);
        }
        for (CurveEnd* end : {&c.start, &c.end}) {
            if (end->kind != EndKind::BodyPoint) continue;
            const std::size_t i = std::min(locate_cell(d.xs(), end->point.x), d.nx() - 2);
            const std::size_t j = std::min(locate_cell(d.ys(), end->point.y), d.ny() - 2);
            const double cell = std::max(d.xs()[i + 1] - d.xs()[i], d.ys()[j + 1] - d.ys()[j]);
            std::vector<Vec2> pts = c.points;
            if (end == &c.start) std::reverse(pts.begin(), pts.end());
            Attachment a = make_attachment(e, pts, end->point, 2.0 * cell);
            a.curve = int(k);
            end->corner = a.corner;
            if (a.is_corner) end->point = a.body_point;
            g.attachments.push_back(a);
        }
        if (c.start.kind == EndKind::Open || c.end.kind == EndKind::Open) g.inconclusive = true;
    }
    for (const Vec2& v : vertex_candidates(s)) {
        VertexInfo info;
        info.location = v;
        g.vertices.push_back(info);
    }
    std::size_t open = 0, bodies = 0;
    for (const auto& c : g.curves) {
        if (c.closed) continue;
        ++open;
        if (c.end.kind == EndKind::BodyPoint) ++bodies;
    }
    if (g.inconclusive) g.outcome = "inconclusive";
    else if (open == 1 && bodies == 0) g.outcome = "through_curve";
    else if (g.attachments.size() == 2 && norm(g.attachments[0].body_point - g.attachments[1].body_point) < 1e-9)
        g.outcome = "double_attachment";
    else if (g.attachments.size() == 2) g.outcome = "two_attachments";
    else g.outcome = "inconclusive";
    if (!z.degenerate_cells.empty()) g.notes.push_back("degenerate cells flagged for refinement");
    return g;
}

/// Structure of a solved external flow from its nodal zero set.
inline StructureReport field_structure(const DiscreteField& f, const BodyGeometry& body, double r_far) {
    const StreamlineGraph g = field_streamline_graph(f, body, r_far);
    StructureReport r = check_structure(g, body);
    for (const auto& n : g.notes) r.notes.push_back(n);
    return r;
}

}  // namespace cornerlab

#endif  // CORNERLAB_TOPOLOGY_HPP
