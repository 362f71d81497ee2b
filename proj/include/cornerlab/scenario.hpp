#ifndef CORNERLAB_SCENARIO_HPP
#define CORNERLAB_SCENARIO_HPP

// Scenario files (JSON, schema_version 1) and the analyses behind each CLI
// subcommand. Every runner returns its artifacts in memory; writing them and
// the manifest is left to the caller.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "conformal.hpp"
#include "diagnostics.hpp"
#include "gas.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "solver.hpp"
#include "topology.hpp"

namespace cornerlab {

struct BodySpec {
    std::string type = "circle";  // circle | polygon | karman_trefftz | channel
    Vec2 center;
    double radius = 1.0;
    std::vector<Vec2> vertices;
    KarmanTrefftzProfile profile;
    std::size_t samples = 2048;
    ChannelParams channel;
};

struct FarFieldSpec {
    double vinf = 1.0;
    double alpha = 0.0;  // radians
    double mach_inf = 0.0;
    double gamma_circ = 0.0;
    bool kutta = false;
};

struct TraceSpec {
    double step = 0.0;            // 0: grid h
    double attach_tol = 0.0;      // 0: h/2
    double same_point_tol = 0.0;  // 0: h
    double extent = 8.0;
    std::string mode = "auto";    // auto | analytic | numeric
};

struct SweepSpec {
    int count = 41;
    std::optional<std::pair<double, double>> range;  // default: +-2 max Kutta value or +-8 pi
    std::vector<double> values;                       // explicit list overrides count/range
};

struct Scenario {
    std::string name;
    BodySpec body;
    std::optional<GasModel> gas;
    FarFieldSpec far_field;
    GridParams grid;
    FlowSolver::Continuation continuation;
    TraceSpec trace;
    SweepSpec sweep;
    Vec2 window_lo{-3, -3}, window_hi{3, 3};
    std::vector<std::string> analyses;
    std::string source;  // text the scenario was parsed from
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

using json = nlohmann::json;

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw SchemaError(where + ": unknown key '" + k + "'");
}

inline double number(const json& j, const std::string& where, const char* key, double def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number()) throw SchemaError(where + "." + key + ": expected a number");
    return j[key].get<double>();
}

inline double positive(const json& j, const std::string& where, const char* key, double def) {
    const double v = number(j, where, key, def);
    if (!(v > 0.0)) throw SchemaError(where + "." + key + ": must be positive");
    return v;
}

inline int integer(const json& j, const std::string& where, const char* key, int def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number_integer()) throw SchemaError(where + "." + key + ": expected an integer");
    return j[key].get<int>();
}

inline Vec2 point(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw SchemaError(where + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline BodySpec parse_body(const json& j) {
    BodySpec b;
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw SchemaError("body.type: expected a string");
    b.type = j["type"].get<std::string>();
    if (b.type == "circle") {
        allow_keys(j, "body", {"type", "center", "radius"});
        if (j.contains("center")) b.center = point(j["center"], "body.center");
        b.radius = positive(j, "body", "radius", 1.0);
    } else if (b.type == "polygon") {
        allow_keys(j, "body", {"type", "vertices"});
        if (!j.contains("vertices") || !j["vertices"].is_array() || j["vertices"].size() < 3)
            throw SchemaError("body.vertices: expected at least three points");
        for (std::size_t k = 0; k < j["vertices"].size(); ++k)
            b.vertices.push_back(point(j["vertices"][k], "body.vertices[" + std::to_string(k) + "]"));
    } else if (b.type == "karman_trefftz") {
        allow_keys(j, "body", {"type", "nu", "mu", "samples"});
        b.profile.nu = positive(j, "body", "nu", 1.5);
        if (b.profile.nu > 2.0) throw SchemaError("body.nu: must lie in (0, 2]");
        if (j.contains("mu")) {
            const Vec2 m = point(j["mu"], "body.mu");
            b.profile.center_mu = {m.x, m.y};
        }
        b.samples = std::size_t(integer(j, "body", "samples", 2048));
    } else if (b.type == "channel") {
        allow_keys(j, "body", {"type", "diamond", "wall", "fillet", "box", "fillet_samples"});
        b.channel.diamond = positive(j, "body", "diamond", 1.0);
        b.channel.wall = positive(j, "body", "wall", 2.0);
        b.channel.fillet = number(j, "body", "fillet", 0.5);
        b.channel.box = positive(j, "body", "box", 8.0);
        b.channel.fillet_samples = std::size_t(integer(j, "body", "fillet_samples", 256));
        if (b.channel.wall <= b.channel.diamond || b.channel.box <= b.channel.wall + b.channel.fillet)
            throw SchemaError("body: channel needs diamond < wall < wall + fillet < box");
    } else {
        throw SchemaError("body.type: unknown body type '" + b.type + "'");
    }
    return b;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
    using detail::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
    detail::allow_keys(j, "scenario",
                       {"schema_version", "name", "body", "gas", "far_field", "grid", "solver", "trace", "sweep",
                        "figure", "analyses", "description"});
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
        j["schema_version"].get<int>() != schema_version)
        throw SchemaError("schema_version: expected 1");
    Scenario s;
    s.source = text;
    s.name = j.value("name", std::string("scenario"));
    if (!j.contains("body")) throw SchemaError("body: missing");
    s.body = detail::parse_body(j["body"]);

    if (j.contains("gas")) {
        const json& g = j["gas"];
        if (g.is_string()) {
            if (g.get<std::string>() != "incompressible") throw SchemaError("gas: expected \"incompressible\" or an object");
        } else {
            detail::allow_keys(g, "gas", {"gamma", "bernoulli"});
            const double gamma = detail::number(g, "gas", "gamma", 1.4);
            if (!(gamma > 1.0)) throw SchemaError("gas.gamma: must exceed 1");
            s.gas = g.contains("bernoulli") ? GasModel(gamma, detail::positive(g, "gas", "bernoulli", 3.5))
                                            : GasModel::normalized(gamma);
        }
    }
    if (j.contains("far_field")) {
        const json& f = j["far_field"];
        detail::allow_keys(f, "far_field", {"vinf", "alpha_deg", "mach_inf", "gamma_circ"});
        s.far_field.vinf = detail::positive(f, "far_field", "vinf", 1.0);
        s.far_field.alpha = rad(detail::number(f, "far_field", "alpha_deg", 0.0));
        s.far_field.mach_inf = detail::number(f, "far_field", "mach_inf", 0.0);
        if (f.contains("gamma_circ") && f["gamma_circ"].is_string()) {
            if (f["gamma_circ"].get<std::string>() != "kutta") throw SchemaError("far_field.gamma_circ: expected a number or \"kutta\"");
            s.far_field.kutta = true;
        } else {
            s.far_field.gamma_circ = detail::number(f, "far_field", "gamma_circ", 0.0);
        }
    }
    if (s.far_field.mach_inf < 0.0 || s.far_field.mach_inf >= 1.0)
        throw SchemaError("far_field.mach_inf: must lie in [0, 1)");
    if (s.far_field.mach_inf > 0.0 && !s.gas) throw SchemaError("far_field.mach_inf: needs a gas");
    if (s.far_field.kutta && s.body.type != "karman_trefftz")
        throw SchemaError("far_field.gamma_circ: the Kutta value needs a karman_trefftz body");
    if (s.far_field.kutta && s.gas) throw SchemaError("far_field.gamma_circ: the Kutta value needs incompressible flow");
    s.body.profile.alpha = s.far_field.alpha;
    s.body.profile.vinf = s.far_field.vinf;

    if (j.contains("grid")) {
        const json& g = j["grid"];
        detail::allow_keys(g, "grid", {"h", "resolution", "r_far", "core_margin", "stretch", "refine_levels", "refine_width"});
        if (g.contains("resolution")) s.grid.h = 1.0 / detail::positive(g, "grid", "resolution", 32.0);
        s.grid.h = detail::positive(g, "grid", "h", s.grid.h);
        s.grid.r_far = detail::positive(g, "grid", "r_far", s.grid.r_far);
        s.grid.core_margin = detail::number(g, "grid", "core_margin", s.grid.core_margin);
        s.grid.stretch = detail::number(g, "grid", "stretch", s.grid.stretch);
        s.grid.refine_levels = detail::integer(g, "grid", "refine_levels", s.grid.refine_levels);
        s.grid.refine_width = detail::positive(g, "grid", "refine_width", s.grid.refine_width);
        if (s.grid.refine_levels < 0 || s.grid.refine_levels > 16) throw SchemaError("grid.refine_levels: must lie in [0, 16]");
    }
    if (j.contains("solver")) {
        const json& c = j["solver"];
        detail::allow_keys(c, "solver", {"max_step", "min_step", "tol", "max_newton", "max_pcg"});
        s.continuation.max_step = detail::positive(c, "solver", "max_step", s.continuation.max_step);
        s.continuation.min_step = detail::positive(c, "solver", "min_step", s.continuation.min_step);
        s.continuation.tol = detail::positive(c, "solver", "tol", s.continuation.tol);
        s.continuation.max_newton = detail::integer(c, "solver", "max_newton", s.continuation.max_newton);
        s.continuation.max_pcg = detail::integer(c, "solver", "max_pcg", s.continuation.max_pcg);
    }
    if (j.contains("trace")) {
        const json& t = j["trace"];
        detail::allow_keys(t, "trace", {"step", "attach_tol", "same_point_tol", "extent", "mode"});
        s.trace.step = detail::number(t, "trace", "step", 0.0);
        s.trace.attach_tol = detail::number(t, "trace", "attach_tol", 0.0);
        s.trace.same_point_tol = detail::number(t, "trace", "same_point_tol", 0.0);
        s.trace.extent = detail::positive(t, "trace", "extent", 8.0);
        s.trace.mode = t.value("mode", std::string("auto"));
        if (s.trace.mode != "auto" && s.trace.mode != "analytic" && s.trace.mode != "numeric")
            throw SchemaError("trace.mode: expected auto, analytic or numeric");
    }
    if (j.contains("sweep")) {
        const json& w = j["sweep"];
        detail::allow_keys(w, "sweep", {"count", "range", "values"});
        s.sweep.count = detail::integer(w, "sweep", "count", 41);
        if (s.sweep.count < 2) throw SchemaError("sweep.count: must be at least 2");
        if (w.contains("range")) {
            const Vec2 r = detail::point(w["range"], "sweep.range");
            if (!(r.x < r.y)) throw SchemaError("sweep.range: expected [lo, hi] with lo < hi");
            s.sweep.range = std::pair{r.x, r.y};
        }
        if (w.contains("values")) {
            if (!w["values"].is_array()) throw SchemaError("sweep.values: expected an array");
            for (const auto& v : w["values"]) {
                if (!v.is_number()) throw SchemaError("sweep.values: expected numbers");
                s.sweep.values.push_back(v.get<double>());
            }
        }
    }
    if (j.contains("figure")) {
        const json& f = j["figure"];
        detail::allow_keys(f, "figure", {"window"});
        if (f.contains("window")) {
            const json& w = f["window"];
            if (!w.is_array() || w.size() != 4) throw SchemaError("figure.window: expected [xmin, ymin, xmax, ymax]");
            for (const auto& v : w)
                if (!v.is_number()) throw SchemaError("figure.window: expected numbers");
            s.window_lo = {w[0].get<double>(), w[1].get<double>()};
            s.window_hi = {w[2].get<double>(), w[3].get<double>()};
            if (!(s.window_lo.x < s.window_hi.x && s.window_lo.y < s.window_hi.y))
                throw SchemaError("figure.window: empty window");
        }
    }
    if (j.contains("analyses")) {
        if (!j["analyses"].is_array()) throw SchemaError("analyses: expected an array");
        for (const auto& a : j["analyses"]) {
            if (!a.is_string()) throw SchemaError("analyses: expected strings");
            const std::string v = a.get<std::string>();
            if (v != "trace" && v != "sweep" && v != "theorem" && v != "figure")
                throw SchemaError("analyses: unknown analysis '" + v + "'");
            s.analyses.push_back(v);
        }
    }
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SchemaError("cannot read scenario " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str());
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

inline BodyGeometry build_body(const Scenario& s) {
    const BodySpec& b = s.body;
    if (b.type == "circle") return BodyGeometry::circle(b.center, b.radius);
    if (b.type == "polygon") return BodyGeometry::polygon(b.vertices);
    if (b.type == "karman_trefftz") return profile_to_body(b.profile, b.samples);
    throw NotApplicable("channel scenarios have no single body");
}

inline double resolve_gamma(const Scenario& s) {
    return s.far_field.kutta ? kutta_circulation(s.body.profile) : s.far_field.gamma_circ;
}

/// Exact incompressible flow where a conformal description exists.
inline std::optional<ConformalFlow> conformal_flow(const Scenario& s, double gamma) {
    if (s.gas && s.far_field.mach_inf > 0.0) return std::nullopt;
    if (s.body.type == "circle")
        return ConformalFlow(CirclePlaneFlow{s.far_field.vinf, s.far_field.alpha, s.body.radius, s.body.center.to_complex(), gamma});
    if (s.body.type == "karman_trefftz") return ConformalFlow::profile(s.body.profile, gamma);
    return std::nullopt;
}

inline bool compressible(const Scenario& s) { return s.gas && s.far_field.mach_inf > 0.0; }

inline FarField far_field_of(const Scenario& s, double gamma) {
    if (compressible(s)) return FarField::compressible(*s.gas, s.far_field.mach_inf, gamma, s.far_field.alpha);
    return FarField::incompressible(s.far_field.vinf, gamma, s.far_field.alpha);
}

inline FlowSolver make_solver(const Scenario& s, const BodyGeometry& body) {
    return FlowSolver(external_flow_discretization(body, s.grid));
}

inline ProbeSettings probe_settings(const Scenario& s) { return {s.grid.h, s.grid.refine_levels, s.grid.refine_width}; }

/// "kutta" on a discrete field: the discrete Kutta condition at the corner
/// nearest the trailing pre-image, falling back to the closed form when the
/// grid has no refinement rings there.
inline double discrete_kutta(const Scenario& s, const BodyGeometry& body, const FlowSolver& solver,
                             const FlowSolver::IncompressiblePair& pair) {
    const Vec2 te(profile_map(s.body.profile, complex(1.0, 0.0)));
    const auto& corners = body.corners();
    const auto it = std::min_element(corners.begin(), corners.end(), [&](const CornerRecord& a, const CornerRecord& b) {
        return norm(a.location - te) < norm(b.location - te);
    });
    const ProbeSettings ps = probe_settings(s);
    if (it == corners.end() || ps.levels < 1) return kutta_circulation(s.body.profile);
    const auto probe = make_corner_probe(solver.disc(), *it, ps.h, ps.levels, ps.width);
    if (probe.rings.back().empty()) return kutta_circulation(s.body.profile);
    return discrete_kutta_circulation(pair, probe);
}

inline DiscreteField solve_field(const Scenario& s, const BodyGeometry& body, const FlowSolver& solver) {
    if (compressible(s)) {
        FlowSolver::Continuation c = s.continuation;
        c.mach_target = s.far_field.mach_inf;
        return solver.solve_compressible(*s.gas, s.far_field.gamma_circ, c, s.far_field.alpha);
    }
    const auto pair = solver.solve_incompressible(far_field_of(s, 0.0));
    return pair.at(s.far_field.kutta ? discrete_kutta(s, body, solver, pair) : s.far_field.gamma_circ);
}

inline TraceOptions trace_options(const Scenario& s) {
    TraceOptions o;
    o.h = s.trace.step > 0 ? s.trace.step : s.grid.h;
    o.attach_tol = s.trace.attach_tol > 0 ? s.trace.attach_tol : 0.5 * s.grid.h;
    o.same_point_tol = s.trace.same_point_tol > 0 ? s.trace.same_point_tol : s.grid.h;
    o.extent = s.trace.extent;
    return o;
}

/// The nodal zero set does not resolve approaches closer than half the base
/// spacing, whatever the follower tolerance.
inline double nodal_attach_tol(const Scenario& s) { return std::max(trace_options(s).attach_tol, 0.5 * s.grid.h); }

inline std::vector<double> sweep_gammas(const Scenario& s) {
    if (!s.sweep.values.empty()) return s.sweep.values;
    if (s.sweep.range) {
        std::vector<double> g;
        const auto [lo, hi] = *s.sweep.range;
        for (int i = 0; i < s.sweep.count; ++i) g.push_back(lo + (hi - lo) * double(i) / double(s.sweep.count - 1));
        return g;
    }
    std::vector<double> kutta;
    if (s.body.type == "karman_trefftz" && !s.body.profile.is_identity()) kutta.push_back(kutta_circulation(s.body.profile));
    return default_gamma_grid(kutta, s.sweep.count);
}

// ---------------------------------------------------------------------------
// Channel scenario
// ---------------------------------------------------------------------------

struct ChannelReport {
    MaxPrincipleReport dmp;
    double reflected_min = 0.0, reflected_max = 0.0;
    std::vector<CornerReport> corners;  // (a, 0) and (0, a)
    DiscreteField field;
};

/// The diamond corners seen from the quadrant: fluid sectors of 135 degrees
/// that become 270 degree protruding corners after the odd reflections.
inline std::vector<CornerRecord> channel_quadrant_corners(const ChannelParams& p) {
    CornerRecord a, b;
    a.location = {p.diamond, 0.0};
    a.theta0 = 0.0;
    a.theta1 = 0.75 * pi;
    b.location = {0.0, p.diamond};
    b.theta0 = -0.25 * pi;
    b.theta1 = 0.5 * pi;
    for (CornerRecord* c : {&a, &b}) {
        c->fluid_angle = 1.5 * pi;  // after reflection
        c->protruding = true;
    }
    return {a, b};
}

inline ChannelReport channel_analysis(const ChannelParams& p) {
    ChannelReport r;
    r.field = channel_quadrant_flow(p);
    r.dmp = check_max_principle(r.field);
    // psi(+-x, +-y) = sign(x) sign(y) psi(|x|, |y|)
    r.reflected_min = std::min(r.dmp.field_min, -r.dmp.field_max);
    r.reflected_max = std::max(r.dmp.field_max, -r.dmp.field_min);
    r.reflected_min = std::min({r.reflected_min, r.dmp.boundary_min, -r.dmp.boundary_max});
    r.reflected_max = std::max({r.reflected_max, r.dmp.boundary_max, -r.dmp.boundary_min});
    const auto corners = channel_quadrant_corners(p);
    for (std::size_t k = 0; k < corners.size(); ++k) {
        const auto probe = make_corner_probe(*r.field.disc, corners[k], p.h, p.refine_levels, p.refine_width);
        r.corners.push_back(corner_report(probe, int(k), r.field));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

struct RunOptions {
    std::uint64_t seed = 1;
    bool deterministic = true;
};

struct RunOutput {
    std::vector<Artifact> files;
    std::string status = "ok";  // ok | supersonic_encounter | not_subsonic
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

inline ojson corner_reports_json(const std::vector<CornerReport>& cs) {
    ojson a = ojson::array();
    for (const auto& c : cs)
        a.push_back({{"corner", c.corner},
                     {"protruding", c.protruding},
                     {"exponent", c.exponent},
                     {"r2", c.r2},
                     {"bounded", c.bounded},
                     {"conclusive", c.conclusive},
                     {"levels", c.levels}});
    return a;
}

inline ojson sweep_json(const SweepTable& t) {
    ojson rows = ojson::array();
    for (const auto& r : t.rows)
        rows.push_back({{"gamma_circ", r.gamma_circ},
                        {"status", r.status},
                        {"message", r.message},
                        {"bounded_protruding", r.bounded_protruding()},
                        {"corners", corner_reports_json(r.corners)}});
    return {{"schema_version", schema_version},
            {"max_simultaneously_bounded", t.max_simultaneously_bounded},
            {"bounded_threshold", bounded_threshold},
            {"rows", rows}};
}

inline ojson nonexistence_json(const std::string& status, const std::string& what) {
    return {{"schema_version", schema_version},
            {"status", status},
            {"message", what},
            {"interpretation", "evidence that no subsonic solution exists at these parameters, not a proof"}};
}

}  // namespace detail

/// Body streamline of the scenario: the analytic follower where a conformal
/// flow exists (and the mode allows it), the nodal zero set otherwise.
inline StreamlineGraph scenario_graph(const Scenario& s, const BodyGeometry& body,
                                      const DiscreteField* solved = nullptr) {
    const double gamma = resolve_gamma(s);
    const auto flow = s.trace.mode == "numeric" ? std::nullopt : conformal_flow(s, gamma);
    if (flow) return trace_body_streamline(conformal_evaluator(*flow, body), trace_options(s));
    if (s.trace.mode == "analytic") throw NotApplicable("no analytic flow for this scenario");
    if (solved) return field_streamline_graph(*solved, body, s.grid.r_far, nodal_attach_tol(s));
    const FlowSolver solver = make_solver(s, body);
    return field_streamline_graph(solve_field(s, body, solver), body, s.grid.r_far, nodal_attach_tol(s));
}

inline std::string scenario_svg(const Scenario& s, const std::optional<BodyGeometry>& body, const StreamlineGraph* g) {
    SvgFigure fig;
    fig.lo = s.window_lo;
    fig.hi = s.window_hi;
    fig.title = s.name;
    if (body) fig.bodies.push_back(body->polyline());
    if (g) {
        for (const auto& c : g->curves)
            for (auto& piece : clip_to_window(c.points, fig.lo, fig.hi)) fig.streamlines.push_back(std::move(piece));
        for (const auto& a : g->attachments) fig.attachments.push_back(a.body_point);
        for (const auto& v : g->vertices) fig.vertices.push_back(v.location);
    }
    return svg(fig);
}

inline std::string channel_svg(const Scenario& s) {
    const ChannelParams& p = s.body.channel;
    SvgFigure fig;
    fig.lo = s.window_lo;
    fig.hi = s.window_hi;
    fig.title = s.name;
    const double a = p.diamond, H = p.wall, L = p.box;
    fig.bodies.push_back({{a, 0}, {0, a}, {-a, 0}, {0, -a}});
    // walls: x = H for y >= H (and the mirrored copies), joined by a fillet-free corner
    for (int sx : {-1, 1})
        for (int sy : {-1, 1}) {
            fig.walls.push_back({{sx * H, sy * L}, {sx * H, sy * H}, {sx * L, sy * H}});
        }
    fig.streamlines.push_back({{a, 0}, {L, 0}});
    fig.streamlines.push_back({{-a, 0}, {-L, 0}});
    fig.streamlines.push_back({{0, a}, {0, L}});
    fig.streamlines.push_back({{0, -a}, {0, -L}});
    fig.attachments = {{a, 0}, {-a, 0}, {0, a}, {0, -a}};
    return svg(fig);
}

inline RunOutput run_solve(const Scenario& s, const RunOptions& opt);
inline RunOutput run_trace(const Scenario& s, bool render_only, const DiscreteField* solved = nullptr);
inline RunOutput run_sweep(const Scenario& s, bool theorem, const RunOptions& opt);

inline RunOutput run_channel(const Scenario& s) {
    RunOutput out;
    const ChannelParams p = [&] {
        ChannelParams c = s.body.channel;
        c.h = s.grid.h;
        c.refine_levels = s.grid.refine_levels;
        c.refine_width = s.grid.refine_width;
        return c;
    }();
    const ChannelReport r = channel_analysis(p);
    bool bounded = true;
    for (const auto& c : r.corners) bounded = bounded && c.bounded && c.conclusive;
    detail::ojson j{{"schema_version", schema_version},
                    {"scenario", s.name},
                    {"quadrant_residual", r.field.residual},
                    {"max_principle", {{"holds", r.dmp.holds},
                                       {"boundary_min", r.dmp.boundary_min},
                                       {"boundary_max", r.dmp.boundary_max},
                                       {"field_min", r.dmp.field_min},
                                       {"field_max", r.dmp.field_max}}},
                    {"reflected_range", {r.reflected_min, r.reflected_max}},
                    {"diamond_corners", detail::corner_reports_json(r.corners)},
                    {"all_diamond_corners_bounded", bounded},
                    {"theorem", {{"verdict", "NOT_APPLICABLE"},
                                 {"notes", {"not a counterexample: infinity is restricted to four channels"}}}}};
    out.files.push_back({"channel.json", detail::dump(j)});
    out.files.push_back({"field.csv", field_csv(r.field)});
    out.files.push_back({"figure.svg", channel_svg(s)});
    return out;
}

inline RunOutput run_solve(const Scenario& s, const RunOptions& opt) {
    if (s.body.type == "channel") return run_channel(s);
    RunOutput out;
    const BodyGeometry body = build_body(s);
    const FlowSolver solver = make_solver(s, body);
    DiscreteField f;
    try {
        f = solve_field(s, body, solver);
    } catch (const SupersonicEncounter& e) {
        out.status = "supersonic_encounter";
        out.files.push_back({"verdict.json", detail::dump(detail::nonexistence_json(out.status, e.what()))});
        return out;
    } catch (const NotSubsonic& e) {
        out.status = "not_subsonic";
        out.files.push_back({"verdict.json", detail::dump(detail::nonexistence_json(out.status, e.what()))});
        return out;
    }
    const auto dmp = check_max_principle(f);
    const StreamlineGraph g = field_streamline_graph(f, body, s.grid.r_far, nodal_attach_tol(s));
    const StructureReport st = check_structure(g, body);
    detail::ojson j{{"schema_version", schema_version},
                    {"scenario", s.name},
                    {"gamma_circ", f.ff.gamma_circ},
                    {"gamma_circ_closed_form", s.far_field.kutta ? detail::ojson(resolve_gamma(s)) : detail::ojson(nullptr)},
                    {"mach_inf", f.ff.mach_inf},
                    {"unknowns", solver.disc().unknown_count()},
                    {"residual", f.residual},
                    {"residual_history", f.residual_history},
                    {"energy_history", f.energy_history},
                    {"max_mach", f.max_mach},
                    {"max_mu_location", point_json(f.max_mu_location)},
                    {"max_principle", {{"holds", dmp.holds}, {"field_min", dmp.field_min}, {"field_max", dmp.field_max}}},
                    {"structure", structure_json(st)}};
    out.files.push_back({"solve.json", detail::dump(j)});
    out.files.push_back({"field.csv", field_csv(f)});
    for (const auto& a : s.analyses) {
        if (a == "trace" || a == "figure") {
            const RunOutput t = run_trace(s, a == "figure", &f);
            out.files.insert(out.files.end(), t.files.begin(), t.files.end());
        } else {
            const RunOutput w = run_sweep(s, a == "theorem", opt);
            for (const auto& file : w.files)
                if (std::none_of(out.files.begin(), out.files.end(), [&](const Artifact& x) { return x.name == file.name; }))
                    out.files.push_back(file);
        }
    }
    return out;
}

inline RunOutput run_trace(const Scenario& s, bool render_only, const DiscreteField* solved) {
    RunOutput out;
    if (s.body.type == "channel") {
        out.files.push_back({"figure.svg", channel_svg(s)});
        return out;
    }
    const BodyGeometry body = build_body(s);
    StreamlineGraph g;
    try {
        g = scenario_graph(s, body, solved);
    } catch (const SupersonicEncounter& e) {
        out.status = "supersonic_encounter";
        out.files.push_back({"verdict.json", detail::dump(detail::nonexistence_json(out.status, e.what()))});
        return out;
    }
    if (render_only) {
        out.files.push_back({"figure.svg", scenario_svg(s, body, &g)});
        return out;
    }
    const StructureReport st = check_structure(g, body);
    detail::ojson j{{"schema_version", schema_version},
                    {"scenario", s.name},
                    {"gamma_circ", resolve_gamma(s)},
                    {"graph", graph_json(g)},
                    {"structure", structure_json(st)}};
    out.files.push_back({"graph.json", detail::dump(j)});
    return out;
}

inline RunOutput run_sweep(const Scenario& s, bool theorem, const RunOptions& opt) {
    RunOutput out;
    if (s.body.type == "channel") {
        detail::ojson j{{"schema_version", schema_version},
                        {"verdict", "NOT_APPLICABLE"},
                        {"notes", {"not a counterexample: infinity is restricted to four channels"}}};
        out.files.push_back({theorem ? "theorem.json" : "sweep.json", detail::dump(j)});
        return out;
    }
    const BodyGeometry body = build_body(s);
    const FlowSolver solver = make_solver(s, body);
    const auto probes = corner_probes(solver.disc(), body, probe_settings(s));
    const auto gammas = sweep_gammas(s);
    SweepTable t;
    if (compressible(s)) {
        FlowSolver::Continuation c = s.continuation;
        c.mach_target = s.far_field.mach_inf;
        t = circulation_sweep(solver, *s.gas, c, s.far_field.alpha, probes, gammas);
    } else {
        t = circulation_sweep(solver.solve_incompressible(far_field_of(s, 0.0)), probes, gammas);
    }
    out.files.push_back({"sweep.csv", sweep_csv(t)});
    out.files.push_back({"sweep.json", detail::dump(detail::sweep_json(t))});
    if (theorem) {
        const TheoremVerdict v = theorem_check(body, t);
        detail::ojson subs = detail::ojson::array();
        for (std::size_t k = 0; k < body.corners().size(); ++k) {
            const auto& c = body.corners()[k];
            if (!c.protruding || c.theta1 - c.theta0 <= pi) continue;
            const auto p = subsolution_params(c.theta0, c.theta1, 1.0);
            const auto chk = verify_subsolution(p, [](Vec2) { return Coefficients{}; }, 10000, opt.seed + k, false);
            subs.push_back({{"corner", k},
                            {"a", p.a},
                            {"eps", p.eps},
                            {"max_residual", chk.max_residual},
                            {"holds", chk.max_residual <= 0.0}});
        }
        detail::ojson j{{"schema_version", schema_version},
                        {"scenario", s.name},
                        {"verdict", v.verdict},
                        {"notes", v.notes},
                        {"unbounded_per_gamma", v.unbounded_per_row},
                        {"evidence_rows", v.evidence_rows},
                        {"gammas", gammas},
                        {"subsolution_checks", subs}};
        out.files.push_back({"theorem.json", detail::dump(j)});
    }
    return out;
}

/// Gas quantities against the speed: q, rho, c, mach, mu, tau.
inline RunOutput run_gas_table(const GasModel& gas, int rows = 101) {
    RunOutput out;
    std::string csv = "q,rho,sound_speed,mach,mu,tau\n";
    const double qs = std::sqrt(sonic_speed_sq(gas));
    for (int k = 0; k < rows; ++k) {
        const double q = qs * double(k) / double(rows - 1);
        const FlowSample smp = sample_from_speed(q, gas);
        csv += num(q) + ',' + num(smp.density) + ',' + num(smp.sound_speed) + ',' + num(smp.mach) + ',' +
               num(smp.momentum_half_sq) + ',' + num(tau(std::min(smp.momentum_half_sq, sonic_mu(gas)), gas)) + '\n';
    }
    detail::ojson j{{"schema_version", schema_version},
                    {"gamma", gas.gamma},
                    {"bernoulli", gas.bernoulli},
                    {"sonic_mu", sonic_mu(gas)},
                    {"sonic_speed", qs},
                    {"limit_speed", limit_speed(gas)}};
    out.files.push_back({"gas.csv", csv});
    out.files.push_back({"gas.json", detail::dump(j)});
    return out;
}

}  // namespace cornerlab

#endif  // CORNERLAB_SCENARIO_HPP
