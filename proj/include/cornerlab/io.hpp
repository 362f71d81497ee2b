#ifndef CORNERLAB_IO_HPP
#define CORNERLAB_IO_HPP

// Artifact emission: node CSV, sweep CSV, SVG figures, hashed manifests.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diagnostics.hpp"
#include "geometry.hpp"
#include "solver.hpp"
#include "topology.hpp"

namespace cornerlab {

inline constexpr int schema_version = 1;

struct Artifact {
    std::string name;
    std::string content;
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Shortest round-trip text for a double; "nan", "inf", "-inf" otherwise.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

inline const char* node_class_name(NodeKind k) {
    switch (k) {
        case NodeKind::Unknown: return "fluid";
        case NodeKind::Dirichlet: return "boundary";
        default: return "solid";
    }
}

/// Columns: x, y, psi, vx, vy, mach, node_class.
inline std::string field_csv(const DiscreteField& f) {
    const Discretization& d = *f.disc;
    const auto vel = velocity_field(f);
    std::string out = "x,y,psi,vx,vy,mach,node_class\n";
    out.reserve(d.nx() * d.ny() * 64);
    for (std::size_t j = 0; j < d.ny(); ++j)
        for (std::size_t i = 0; i < d.nx(); ++i) {
            const std::size_t n = d.node(i, j);
            const auto& v = vel[n];
            out += num(d.xs()[i]) + ',' + num(d.ys()[j]) + ',' + num(f.node_value(n)) + ',' + num(v.vx) + ',' +
                   num(v.vy) + ',' + num(v.mach) + ',' + node_class_name(d.kind(n)) + '\n';
        }
    return out;
}

/// Columns: gamma_circ, corner_id, exponent, r2, verdict.
inline std::string sweep_csv(const SweepTable& t) {
    std::string out = "gamma_circ,corner_id,exponent,r2,verdict\n";
    for (const auto& row : t.rows) {
        if (row.status != "ok") {
            out += num(row.gamma_circ) + ",-1,nan,nan," + row.status + '\n';
            continue;
        }
        for (const auto& c : row.corners) {
            const char* v = !c.conclusive ? "inconclusive" : c.bounded ? "bounded" : "unbounded";
            out += num(row.gamma_circ) + ',' + std::to_string(c.corner) + ',' + num(c.exponent) + ',' + num(c.r2) +
                   ',' + v + '\n';
        }
    }
    return out;
}

inline nlohmann::ordered_json point_json(Vec2 p) { return nlohmann::ordered_json::array({p.x, p.y}); }

inline nlohmann::ordered_json graph_json(const StreamlineGraph& g) {
    using J = nlohmann::ordered_json;
    J curves = J::array();
    for (const auto& c : g.curves) {
        J pts = J::array();
        for (const Vec2& p : c.points) pts.push_back(point_json(p));
        auto end = [](const CurveEnd& e) {
            J j{{"kind", end_kind_name(e.kind)}, {"point", point_json(e.point)}};
            if (e.corner >= 0) j["corner"] = e.corner;
            return j;
        };
        curves.push_back(J{{"closed", c.closed}, {"start", end(c.start)}, {"end", end(c.end)}, {"points", pts}});
    }
    J verts = J::array();
    for (const auto& v : g.vertices)
        verts.push_back(J{{"location", point_json(v.location)}, {"m", v.m}, {"branch_angles", v.ray_angles},
                          {"resolved", v.resolved}});
    J atts = J::array();
    for (const auto& a : g.attachments)
        atts.push_back(J{{"body_point", point_json(a.body_point)},
                         {"approach_angle_to_boundary", a.angle_deg},
                         {"is_corner", a.is_corner},
                         {"corner", a.corner},
                         {"curve", a.curve}});
    return J{{"outcome", g.outcome}, {"inconclusive", g.inconclusive}, {"notes", g.notes},
             {"curves", curves},     {"vertices", verts},               {"attachments", atts}};
}

inline nlohmann::ordered_json structure_json(const StructureReport& r) {
    return nlohmann::ordered_json{{"cycle_free", r.cycle_free},
                                  {"cycles", r.cycles},
                                  {"curve_count", r.curve_count},
                                  {"curve_count_ok", r.curve_count_ok},
                                  {"unbounded_ends", r.unbounded_ends},
                                  {"attachments", r.attachments},
                                  {"protruding_corners", r.protruding_corners},
                                  {"corner_attached", r.corner_attached},
                                  {"theorem_flag", r.theorem_flag},
                                  {"inconclusive", r.inconclusive},
                                  {"notes", r.notes}};
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

struct SvgFigure {
    Vec2 lo{-3, -3}, hi{3, 3};
    double width_px = 600.0;
    std::vector<std::vector<Vec2>> bodies;      // filled
    std::vector<std::vector<Vec2>> walls;       // solid lines
    std::vector<std::vector<Vec2>> streamlines; // dashed
    std::vector<Vec2> attachments;
    std::vector<Vec2> vertices;
    std::string title;
};

inline std::string svg(const SvgFigure& f) {
    const double sx = f.width_px / (f.hi.x - f.lo.x);
    const double hpx = sx * (f.hi.y - f.lo.y);
    auto X = [&](Vec2 p) { return num(std::round((p.x - f.lo.x) * sx * 100) / 100); };
    auto Y = [&](Vec2 p) { return num(std::round((f.hi.y - p.y) * sx * 100) / 100); };
    auto path = [&](const std::vector<Vec2>& pts, bool close) {
        std::string d;
        for (std::size_t k = 0; k < pts.size(); ++k) d += (k ? " L" : "M") + X(pts[k]) + ',' + Y(pts[k]);
        if (close) d += " Z";
        return d;
    };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width_px) << "\" height=\"" << num(hpx)
      << "\" viewBox=\"0 0 " << num(f.width_px) << ' ' << num(hpx) << "\">\n";
    if (!f.title.empty()) o << "<title>" << f.title << "</title>\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& b : f.bodies) o << "<path d=\"" << path(b, true) << "\" fill=\"#999\" stroke=\"black\"/>\n";
    for (const auto& w : f.walls)
        o << "<path d=\"" << path(w, false) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    for (const auto& s : f.streamlines)
        o << "<path d=\"" << path(s, false) << "\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
    for (const Vec2& a : f.attachments)
        o << "<circle cx=\"" << X(a) << "\" cy=\"" << Y(a) << "\" r=\"4\" fill=\"none\" stroke=\"red\"/>\n";
    for (const Vec2& v : f.vertices)
        o << "<rect x=\"" << num(std::stod(X(v)) - 3) << "\" y=\"" << num(std::stod(Y(v)) - 3)
          << "\" width=\"6\" height=\"6\" fill=\"blue\"/>\n";
    o << "</svg>\n";
    return o.str();
}

/// Clips polylines to the figure window, splitting where they leave it.
inline std::vector<std::vector<Vec2>> clip_to_window(const std::vector<Vec2>& pts, Vec2 lo, Vec2 hi) {
    std::vector<std::vector<Vec2>> out;
    std::vector<Vec2> cur;
    for (const Vec2& p : pts) {
        if (p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y) {
            cur.push_back(p);
        } else if (!cur.empty()) {
            cur.push_back(p);
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (cur.size() > 1) out.push_back(std::move(cur));
    return out;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json manifest_json(const std::string& command, const std::string& scenario,
                                            const std::vector<Artifact>& files, const std::string& status) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& a : files)
        list.push_back({{"file", a.name}, {"bytes", a.content.size()}, {"fnv1a64", hex64(fnv1a64(a.content))}});
    return {{"schema_version", schema_version},
            {"command", command},
            {"scenario", scenario},
            {"status", status},
            {"files", list}};
}

inline void write_artifacts(const std::filesystem::path& dir, const std::vector<Artifact>& files) {
    std::filesystem::create_directories(dir);
    for (const auto& a : files) {
        std::ofstream os(dir / a.name, std::ios::binary);
        os << a.content;
        if (!os) throw Error("cannot write " + (dir / a.name).string());
    }
}

}  // namespace cornerlab

#endif  // CORNERLAB_IO_HPP
