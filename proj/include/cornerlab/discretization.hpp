#ifndef CORNERLAB_DISCRETIZATION_HPP
#define CORNERLAB_DISCRETIZATION_HPP

// Embedded-boundary discretization on a tensor grid. Every cell is split into
// two right triangles T1 = (00,10,11), T2 = (00,01,11); the discrete energy is
// sum_t a_t T(mu_t) with mu_t = 1/2 sum_k w_k (val_p - val_q)^2 over the two
// legs of t. A leg cut by the boundary at fraction theta from a fluid node
// contributes the arm (val_node - g)^2 / (theta l^2) instead, which is the
// symmetric cut-cell Laplacian in the linear case.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "grid.hpp"

namespace cornerlab {

/// A boundary component carrying Dirichlet data. `exterior` marks an outer
/// boundary whose outside is excluded (far-field ring, box).
struct BoundaryPiece {
    BodyGeometry geom;
    bool exterior = false;
    std::function<double(Vec2)> value;
    std::string name;
};

enum class NodeKind : std::uint8_t { Excluded, Dirichlet, Unknown };

class Discretization {
public:
    struct Slot {
        Vec2 pos;
        int owner = 0;
    };
    struct Arm {
        int slot = -1;
        double theta = 1.0;
    };
    /// Endpoint code: >= 0 unknown index, < 0 slot (-1 - code).
    struct Term {
        int p = 0, q = 0;
        double w = 0.0;   // energy weight 1/(theta l^2) or 1/l^2
        double wg = 0.0;  // weight giving the squared directional derivative
    };
    struct Triangle {
        double area = 0.0;
        int n = 0;
        Term t[4];
        Vec2 centroid;
    };

    Discretization(std::vector<double> xs, std::vector<double> ys, std::vector<BoundaryPiece> pieces,
                   double snap_theta = 1e-6)
        : xs_(std::move(xs)), ys_(std::move(ys)), pieces_(std::move(pieces)), snap_theta_(snap_theta) {
        if (xs_.size() < 2 || ys_.size() < 2) throw GridError("grid needs at least 2x2 nodes");
        build();
    }

    [[nodiscard]] const std::vector<double>& xs() const { return xs_; }
    [[nodiscard]] const std::vector<double>& ys() const { return ys_; }
    [[nodiscard]] std::size_t nx() const { return xs_.size(); }
    [[nodiscard]] std::size_t ny() const { return ys_.size(); }
    [[nodiscard]] std::size_t node(std::size_t i, std::size_t j) const { return j * nx() + i; }
    [[nodiscard]] Vec2 position(std::size_t n) const { return {xs_[n % nx()], ys_[n / nx()]}; }
    [[nodiscard]] NodeKind kind(std::size_t n) const { return kind_[n]; }
    [[nodiscard]] int unknown_of(std::size_t n) const { return unknown_of_[n]; }
    [[nodiscard]] int slot_of_node(std::size_t n) const { return slot_of_node_[n]; }
    [[nodiscard]] std::size_t unknown_count() const { return node_of_unknown_.size(); }
    [[nodiscard]] std::size_t node_of_unknown(std::size_t u) const { return node_of_unknown_[u]; }
    [[nodiscard]] const std::vector<Slot>& slots() const { return slots_; }
    [[nodiscard]] const std::vector<BoundaryPiece>& pieces() const { return pieces_; }
    [[nodiscard]] std::size_t inconsistent_edges() const { return inconsistent_; }

    // arms on horizontal edge (i,j)-(i+1,j): from the left node and from the right node
    [[nodiscard]] const Arm* h_arm(std::size_t i, std::size_t j, bool from_left) const {
        const int a = (from_left ? h_left_ : h_right_)[j * (nx() - 1) + i];
        return a < 0 ? nullptr : &arms_[std::size_t(a)];
    }
    [[nodiscard]] const Arm* v_arm(std::size_t i, std::size_t j, bool from_low) const {
        const int a = (from_low ? v_low_ : v_high_)[j * nx() + i];
        return a < 0 ? nullptr : &arms_[std::size_t(a)];
    }
    [[nodiscard]] bool h_cut(std::size_t i, std::size_t j) const { return h_cut_[j * (nx() - 1) + i] != 0; }
    [[nodiscard]] bool v_cut(std::size_t i, std::size_t j) const { return v_cut_[j * nx() + i] != 0; }

    /// Slot values from a per-piece evaluator.
    [[nodiscard]] std::vector<double> slot_values(const std::function<double(int, Vec2)>& f) const {
        std::vector<double> v(slots_.size());
        for (std::size_t s = 0; s < slots_.size(); ++s) v[s] = f(slots_[s].owner, slots_[s].pos);
        return v;
    }

    [[nodiscard]] std::vector<double> default_slot_values() const {
        return slot_values([this](int owner, Vec2 p) { return pieces_[std::size_t(owner)].value(p); });
    }

    /// Calls f(Triangle) for every triangle with at least one unknown, in a fixed order.
    template <class F>
    void for_each_triangle(F&& f) const {
        Triangle t;
        for (std::size_t j = 0; j + 1 < ny(); ++j)
            for (std::size_t i = 0; i + 1 < nx(); ++i) {
                const double hx = xs_[i + 1] - xs_[i], hy = ys_[j + 1] - ys_[j];
                const std::size_t n00 = node(i, j), n10 = node(i + 1, j), n01 = node(i, j + 1), n11 = node(i + 1, j + 1);
                const int live = int(kind_[n00] != NodeKind::Excluded) + int(kind_[n10] != NodeKind::Excluded) +
                                 int(kind_[n01] != NodeKind::Excluded) + int(kind_[n11] != NodeKind::Excluded);
                if (live == 0) continue;
                // T1: bottom leg + right leg
                t.area = 0.5 * hx * hy;
                t.n = 0;
                t.centroid = {xs_[i] + 2.0 * hx / 3.0, ys_[j] + hy / 3.0};
                add_h_leg(t, i, j, hx);
                add_v_leg(t, i + 1, j, hy);
                if (has_unknown(t)) f(t);
                // T2: left leg + top leg
                t.n = 0;
                t.centroid = {xs_[i] + hx / 3.0, ys_[j] + 2.0 * hy / 3.0};
                add_v_leg(t, i, j, hy);
                add_h_leg(t, i, j + 1, hx);
                if (has_unknown(t)) f(t);
            }
    }

    [[nodiscard]] int code_of_node(std::size_t n) const {
        if (kind_[n] == NodeKind::Unknown) return unknown_of_[n];
        if (kind_[n] == NodeKind::Dirichlet) return -1 - slot_of_node_[n];
        return std::numeric_limits<int>::min();
    }

    /// Is the point inside an excluded region (solid or beyond the outer boundary)?
    [[nodiscard]] bool excluded_point(Vec2 p) const {
        for (const auto& pc : pieces_) {
            const bool in = pc.geom.inside(p);
            if (pc.exterior ? !in : in) return true;
        }
        return false;
    }

    /// Distance to the nearest non-exterior piece (the bodies).
    [[nodiscard]] BoundaryPoint closest_body_point(Vec2 p) const {
        BoundaryPoint best;
        best.distance = std::numeric_limits<double>::infinity();
        for (const auto& pc : pieces_) {
            if (pc.exterior) continue;
            const BoundaryPoint b = pc.geom.closest(p);
            if (b.distance < best.distance) best = b;
        }
        return best;
    }

private:
    static bool has_unknown(const Triangle& t) {
        for (int k = 0; k < t.n; ++k)
            if (t.t[k].p >= 0 || t.t[k].q >= 0) return true;
        return false;
    }

    void push_term(Triangle& t, int p, int q, double w, double wg) const {
        if (t.n < 4) t.t[t.n++] = Term{p, q, w, wg};
    }

    void add_leg(Triangle& t, std::size_t na, std::size_t nb, bool cut, const Arm* arm_a, const Arm* arm_b,
                 double len) const {
        const bool la = kind_[na] != NodeKind::Excluded, lb = kind_[nb] != NodeKind::Excluded;
        if (!la && !lb) return;
        if (la && lb && !cut) {
            const double w = 1.0 / (len * len);
            push_term(t, code_of_node(na), code_of_node(nb), w, w);
            return;
        }
        auto arm_term = [&](std::size_t n, const Arm* a) {
            if (kind_[n] == NodeKind::Excluded || a == nullptr) return;
            const double w = 1.0 / (a->theta * len * len);
            push_term(t, code_of_node(n), -1 - a->slot, w, w / a->theta);
        };
        arm_term(na, arm_a);
        arm_term(nb, arm_b);
    }

    void add_h_leg(Triangle& t, std::size_t i, std::size_t j, double len) const {
        add_leg(t, node(i, j), node(i + 1, j), h_cut(i, j), h_arm(i, j, true), h_arm(i, j, false), len);
    }
    void add_v_leg(Triangle& t, std::size_t i, std::size_t j, double len) const {
        add_leg(t, node(i, j), node(i, j + 1), v_cut(i, j), v_arm(i, j, true), v_arm(i, j, false), len);
    }

    int new_slot(Vec2 p, int owner) {
        slots_.push_back(Slot{p, owner});
        return int(slots_.size() - 1);
    }

    void mark_dirichlet(std::size_t n, int owner) {
        if (pending_owner_[n] < 0) pending_owner_[n] = owner;
        kind_[n] = NodeKind::Dirichlet;
    }

    struct Crossing {
        double at;
        int owner;
    };

    void scan_line(bool rows, std::size_t line) {
        const std::vector<double>& along = rows ? xs_ : ys_;
        const double c = rows ? ys_[line] : xs_[line];
        std::vector<Crossing> cr;
        for (std::size_t o = 0; o < pieces_.size(); ++o) {
            const auto v = rows ? pieces_[o].geom.row_crossings(c) : pieces_[o].geom.column_crossings(c);
            for (double a : v) cr.push_back({a, int(o)});
        }
        std::sort(cr.begin(), cr.end(), [](const Crossing& a, const Crossing& b) { return a.at < b.at; });
        std::vector<int> parity(pieces_.size(), 0);
        std::size_t k = 0;
        const std::size_t m = along.size();
        for (std::size_t i = 0; i < m; ++i) {
            const double x = along[i];
            const double gap = std::min(i > 0 ? x - along[i - 1] : 1e300, i + 1 < m ? along[i + 1] - x : 1e300);
            const double tol = 1e-9 * gap;
            int on = -1;
            while (k < cr.size() && cr[k].at < x - tol) {
                parity[std::size_t(cr[k].owner)] ^= 1;
                ++k;
            }
            std::size_t kk = k;
            while (kk < cr.size() && cr[kk].at <= x + tol) {
                on = cr[kk].owner;
                ++kk;
            }
            const std::size_t n = rows ? node(i, line) : node(line, i);
            if (on >= 0) {
                mark_dirichlet(n, on);
            } else if (rows) {
                bool excl = false;
                for (std::size_t o = 0; o < pieces_.size(); ++o)
                    if (pieces_[o].exterior ? parity[o] == 0 : parity[o] == 1) excl = true;
                if (excl && kind_[n] != NodeKind::Dirichlet) kind_[n] = NodeKind::Excluded;
            }
            // edge (i, i+1): crossings strictly inside
            if (i + 1 < m) {
                const double x1 = along[i + 1];
                const double tol1 = 1e-9 * (x1 - x);
                std::size_t a = kk;
                while (a < cr.size() && cr[a].at <= x + tol1) ++a;
                std::size_t b = a;
                while (b < cr.size() && cr[b].at < x1 - tol1) ++b;
                if (b > a) {
                    const double len = x1 - x;
                    const Crossing& first = cr[a];
                    const Crossing& last = cr[b - 1];
                    Vec2 pf = rows ? Vec2{first.at, c} : Vec2{c, first.at};
                    Vec2 pl = rows ? Vec2{last.at, c} : Vec2{c, last.at};
                    const int s0 = new_slot(pf, first.owner);
                    const int s1 = (b - 1 == a) ? s0 : new_slot(pl, last.owner);
                    arms_.push_back(Arm{s0, (first.at - x) / len});
                    arms_.push_back(Arm{s1, (x1 - last.at) / len});
                    const int ia = int(arms_.size() - 2), ib = int(arms_.size() - 1);
                    if (rows) {
                        const std::size_t e = line * (nx() - 1) + i;
                        h_cut_[e] = 1;
                        h_left_[e] = ia;
                        h_right_[e] = ib;
                    } else {
                        const std::size_t e = i * nx() + line;
                        v_cut_[e] = 1;
                        v_low_[e] = ia;
                        v_high_[e] = ib;
                    }
                }
            }
        }
    }

    void mark_aligned_edges() {
        auto near_line = [](const std::vector<double>& v, double x, std::size_t& idx) {
            idx = nearest_line(v, x);
            const double gap = v.size() > 1 ? std::abs(v[std::min(idx + 1, v.size() - 1)] - v[idx == 0 ? 0 : idx - 1]) : 1.0;
            return std::abs(v[idx] - x) <= 1e-9 * gap;
        };
        for (std::size_t o = 0; o < pieces_.size(); ++o) {
            const auto& pts = pieces_[o].geom.polyline();
            const std::size_t n = pts.size();
            for (std::size_t k = 0; k < n; ++k) {
                const Vec2 a = pts[k], b = pts[(k + 1) % n];
                std::size_t li;
                if (a.y == b.y && near_line(ys_, a.y, li)) {
                    const double lo = std::min(a.x, b.x), hi = std::max(a.x, b.x);
                    auto it = std::lower_bound(xs_.begin(), xs_.end(), lo - 1e-12 * (1 + std::abs(lo)));
                    for (; it != xs_.end() && *it <= hi + 1e-12 * (1 + std::abs(hi)); ++it)
                        mark_dirichlet(node(std::size_t(it - xs_.begin()), li), int(o));
                }
                if (a.x == b.x && near_line(xs_, a.x, li)) {
                    const double lo = std::min(a.y, b.y), hi = std::max(a.y, b.y);
                    auto it = std::lower_bound(ys_.begin(), ys_.end(), lo - 1e-12 * (1 + std::abs(lo)));
                    for (; it != ys_.end() && *it <= hi + 1e-12 * (1 + std::abs(hi)); ++it)
                        mark_dirichlet(node(li, std::size_t(it - ys_.begin())), int(o));
                }
            }
            if (pieces_[o].geom.exact_circle()) continue;
            for (const Vec2& v : pts) {
                std::size_t i, j;
                if (near_line(xs_, v.x, i) && near_line(ys_, v.y, j)) mark_dirichlet(node(i, j), int(o));
            }
        }
    }

    void snap_short_arms() {
        auto check = [&](std::size_t n, const Arm* a) {
            if (a && a->theta < snap_theta_ && kind_[n] == NodeKind::Unknown)
                mark_dirichlet(n, slots_[std::size_t(a->slot)].owner);
        };
        for (std::size_t j = 0; j < ny(); ++j)
            for (std::size_t i = 0; i + 1 < nx(); ++i) {
                check(node(i, j), h_arm(i, j, true));
                check(node(i + 1, j), h_arm(i, j, false));
            }
        for (std::size_t j = 0; j + 1 < ny(); ++j)
            for (std::size_t i = 0; i < nx(); ++i) {
                check(node(i, j), v_arm(i, j, true));
                check(node(i, j + 1), v_arm(i, j, false));
            }
    }

    void build() {
        const std::size_t N = nx() * ny();
        kind_.assign(N, NodeKind::Unknown);
        pending_owner_.assign(N, -1);
        h_left_.assign((nx() - 1) * ny(), -1);
        h_right_.assign((nx() - 1) * ny(), -1);
        h_cut_.assign((nx() - 1) * ny(), 0);
        v_low_.assign(nx() * (ny() - 1), -1);
        v_high_.assign(nx() * (ny() - 1), -1);
        v_cut_.assign(nx() * (ny() - 1), 0);
        for (std::size_t j = 0; j < ny(); ++j) scan_line(true, j);
        for (std::size_t i = 0; i < nx(); ++i) scan_line(false, i);
        mark_aligned_edges();
        snap_short_arms();
        // excluded nodes that were marked on-boundary stay Dirichlet; isolated
        // unknowns (no live neighbour) are impossible on a connected fluid
        unknown_of_.assign(N, -1);
        slot_of_node_.assign(N, -1);
        for (std::size_t n = 0; n < N; ++n) {
            if (kind_[n] == NodeKind::Unknown) {
                unknown_of_[n] = int(node_of_unknown_.size());
                node_of_unknown_.push_back(n);
            } else if (kind_[n] == NodeKind::Dirichlet) {
                slot_of_node_[n] = new_slot(position(n), std::max(pending_owner_[n], 0));
            }
        }
        // legs between a live node and an excluded node without an arm
        for (std::size_t j = 0; j < ny(); ++j)
            for (std::size_t i = 0; i + 1 < nx(); ++i) {
                const auto a = kind_[node(i, j)], b = kind_[node(i + 1, j)];
                if ((a == NodeKind::Unknown && b == NodeKind::Excluded && !h_arm(i, j, true)) ||
                    (b == NodeKind::Unknown && a == NodeKind::Excluded && !h_arm(i, j, false)))
                    ++inconsistent_;
            }
        for (std::size_t j = 0; j + 1 < ny(); ++j)
            for (std::size_t i = 0; i < nx(); ++i) {
                const auto a = kind_[node(i, j)], b = kind_[node(i, j + 1)];
                if ((a == NodeKind::Unknown && b == NodeKind::Excluded && !v_arm(i, j, true)) ||
                    (b == NodeKind::Unknown && a == NodeKind::Excluded && !v_arm(i, j, false)))
                    ++inconsistent_;
            }
        if (node_of_unknown_.empty()) throw GridError("no fluid unknowns on the grid");
    }

    std::vector<double> xs_, ys_;
    std::vector<BoundaryPiece> pieces_;
    double snap_theta_;
    std::vector<NodeKind> kind_;
    std::vector<int> pending_owner_;
    std::vector<int> unknown_of_, slot_of_node_;
    std::vector<std::size_t> node_of_unknown_;
    std::vector<Slot> slots_;
    std::vector<Arm> arms_;
    std::vector<int> h_left_, h_right_, v_low_, v_high_;
    std::vector<std::uint8_t> h_cut_, v_cut_;
    std::size_t inconsistent_ = 0;
};

}  // namespace cornerlab

#endif  // CORNERLAB_DISCRETIZATION_HPP
