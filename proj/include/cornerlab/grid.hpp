#ifndef CORNERLAB_GRID_HPP
#define CORNERLAB_GRID_HPP

// Tensor-product grids: uniform core, exponential stretching toward the outer
// boundary, dyadic grading around selected coordinates (corners).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace cornerlab {

struct AxisSpec {
    double lo = -1.0, hi = 1.0;      // full extent
    double core_lo = -1.0, core_hi = 1.0;
    double h = 0.1;                  // core spacing
    double anchor = 0.0;             // core nodes sit at anchor + i h
    double stretch = 1.0;            // k in x = c + (exp(k s) - 1)/k outside the core
    std::vector<double> forced;      // coordinates that must be grid lines
    std::vector<double> refine_at;   // centers of dyadic grading
    int refine_levels = 0;
    double refine_width = 8.0;       // W: level k covers |x - c| <= W h 2^(1-k)
};

namespace detail {

struct AxisCandidate {
    double x;
    double spacing;  // 0 for forced lines
    int priority;    // higher wins when two candidates collide
};

}  // namespace detail

inline std::vector<double> make_axis(const AxisSpec& s) {
    if (!(s.h > 0.0)) throw GridError("grid spacing must be positive");
    if (!(s.lo < s.hi)) throw GridError("empty grid extent");
    const double core_lo = std::max(s.lo, s.core_lo), core_hi = std::min(s.hi, s.core_hi);
    std::vector<detail::AxisCandidate> cand;

    // core
    const long i0 = long(std::ceil((core_lo - s.anchor) / s.h - 1e-9));
    const long i1 = long(std::floor((core_hi - s.anchor) / s.h + 1e-9));
    double first = s.lo, last = s.hi;
    if (i0 <= i1) {
        first = s.anchor + double(i0) * s.h;
        last = s.anchor + double(i1) * s.h;
        for (long i = i0; i <= i1; ++i) cand.push_back({s.anchor + double(i) * s.h, s.h, 1});
    } else {
        cand.push_back({s.lo, s.h, 1});
        first = last = s.lo;
    }
    // stretched tails
    auto tail = [&](double start, double end, double dir) {
        const double k = s.stretch;
        for (int m = 1;; ++m) {
            const double t = double(m) * s.h;
            const double off = k > 0.0 ? (std::exp(k * t) - 1.0) / k : t;
            const double local = k > 0.0 ? s.h * std::exp(k * t) : s.h;
            const double x = start + dir * off;
            if ((dir > 0 && x >= end - 0.5 * local) || (dir < 0 && x <= end + 0.5 * local)) break;
            cand.push_back({x, local, 1});
        }
        cand.push_back({end, 0.0, 3});
    };
    if (last < s.hi) tail(last, s.hi, +1.0);
    if (first > s.lo) tail(first, s.lo, -1.0);

    // dyadic grading: drop base points inside the first zone, add levels
    for (double c : s.refine_at) {
        if (c < s.lo || c > s.hi || s.refine_levels <= 0) continue;
        const double zone1 = s.refine_width * s.h;
        std::erase_if(cand, [&](const detail::AxisCandidate& a) {
            return a.priority == 1 && std::abs(a.x - c) < zone1 - 1e-12 * s.h;
        });
        for (int k = 1; k <= s.refine_levels; ++k) {
            const double hk = s.h * std::ldexp(1.0, -k);
            const double width = s.refine_width * s.h * std::ldexp(1.0, 1 - k);
            const long m = long(std::floor(width / hk + 1e-9));
            for (long j = -m; j <= m; ++j) {
                const double x = c + double(j) * hk;
                if (k == 1 && (j == m || j == -m)) {
                    // keep the jump to the base lattice within a factor of two
                    const double b = s.anchor + s.h * (j > 0 ? std::ceil((x - s.anchor) / s.h - 1e-9)
                                                             : std::floor((x - s.anchor) / s.h + 1e-9));
                    const double d = std::abs(b - x);
                    if (d > 1e-9 * s.h && d < hk * (1.0 - 1e-9)) continue;
                }
                if (x > s.lo && x < s.hi) cand.push_back({x, hk, 2});
            }
        }
        cand.push_back({c, 0.0, 3});
    }
    for (double f : s.forced)
        if (f >= s.lo && f <= s.hi) cand.push_back({f, 0.0, 3});
    cand.push_back({s.lo, 0.0, 3});

    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    std::vector<detail::AxisCandidate> kept;
    for (const auto& a : cand) {
        if (!kept.empty()) {
            auto& b = kept.back();
            double sp = std::min(a.spacing > 0 ? a.spacing : 1e300, b.spacing > 0 ? b.spacing : 1e300);
            if (sp == 1e300) sp = 0.0;
            if (a.x - b.x <= 0.25 * sp || a.x - b.x <= 1e-9 * s.h) {
                const bool replace = a.priority > b.priority || (a.priority == b.priority && a.spacing < b.spacing);
                if (replace) b = a;
                continue;
            }
        }
        kept.push_back(a);
    }
    std::vector<double> xs;
    xs.reserve(kept.size());
    for (const auto& a : kept) xs.push_back(a.x);
    if (xs.size() < 2) throw GridError("grid axis has fewer than two lines");
    return xs;
}

/// Index i with xs[i] <= x < xs[i+1], clamped to valid cells.
inline std::size_t locate_cell(const std::vector<double>& xs, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return 0;
    std::size_t i = std::size_t(it - xs.begin()) - 1;
    return std::min(i, xs.size() - 2);
}

inline std::size_t nearest_line(const std::vector<double>& xs, double x) {
    auto it = std::lower_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return xs.size() - 1;
    std::size_t i = std::size_t(it - xs.begin());
    if (i > 0 && std::abs(xs[i - 1] - x) < std::abs(xs[i] - x)) --i;
    return i;
}

}  // namespace cornerlab

#endif  // CORNERLAB_GRID_HPP
