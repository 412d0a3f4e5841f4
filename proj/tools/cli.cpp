#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "excepta/lattice.hpp"
#include "excepta/retrieval.hpp"
#include "excepta/symmetry.hpp"
#include "excepta/tracer.hpp"

namespace excepta::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---- config access ---------------------------------------------------------

class Section {
public:
    Section(const json& j, std::string ctx, const std::set<std::string>& allowed) : j_(j), ctx_(std::move(ctx)) {
        if (!j.is_object()) throw ValidationError(ctx_ + " must be a JSON object");
        for (const auto& [k, v] : j.items())
            if (!allowed.count(k)) throw ValidationError("unknown key '" + k + "' in " + ctx_);
    }

    bool has(const std::string& k) const { return j_.contains(k); }
    const json& at(const std::string& k) const {
        if (!has(k)) throw ValidationError("missing required field '" + k + "' in " + ctx_);
        return j_.at(k);
    }
    std::string where(const std::string& k) const { return "'" + k + "' in " + ctx_; }

    double num(const std::string& k) const {
        const json& v = at(k);
        if (!v.is_number()) throw ValidationError(where(k) + " must be a number");
        return v.get<double>();
    }
    double num(const std::string& k, double def) const { return has(k) ? num(k) : def; }
    int integer(const std::string& k, int def) const {
        if (!has(k)) return def;
        const json& v = at(k);
        if (!v.is_number_integer()) throw ValidationError(where(k) + " must be an integer");
        return v.get<int>();
    }
    bool flag(const std::string& k, bool def) const {
        if (!has(k)) return def;
        if (!at(k).is_boolean()) throw ValidationError(where(k) + " must be true or false");
        return at(k).get<bool>();
    }
    std::string str(const std::string& k) const {
        if (!at(k).is_string()) throw ValidationError(where(k) + " must be a string");
        return at(k).get<std::string>();
    }
    std::string str(const std::string& k, const std::string& def) const { return has(k) ? str(k) : def; }
    Vec3 vec3(const std::string& k) const { return to_vec3(at(k), where(k)); }
    Vec3 vec3(const std::string& k, const Vec3& def) const { return has(k) ? vec3(k) : def; }

    static Vec3 to_vec3(const json& v, const std::string& what) {
        if (!v.is_array() || v.size() != 3) throw ValidationError(what + " must be an array of 3 numbers");
        Vec3 out;
        for (int i = 0; i < 3; ++i) {
            if (!v[i].is_number()) throw ValidationError(what + " must be an array of 3 numbers");
            out[i] = v[i].get<double>();
        }
        return out;
    }

private:
    const json& j_;
    std::string ctx_;
};

std::pair<double, double> range2(const Section& s, const std::string& k) {
    const json& v = s.at(k);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ValidationError(s.where(k) + " must be [lo, hi]");
    return {v[0].get<double>(), v[1].get<double>()};
}

std::pair<int, int> int2(const Section& s, const std::string& k, std::pair<int, int> def) {
    if (!s.has(k)) return def;
    const json& v = s.at(k);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw ValidationError(s.where(k) + " must be a pair of integers");
    return {v[0].get<int>(), v[1].get<int>()};
}

cplx to_complex(const json& v, const std::string& what) {
    if (v.is_number()) return v.get<double>();
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ValidationError(what + ": entries must be numbers or [re, im]");
}

ComplexMatrix to_matrix(const json& v, const std::string& what) {
    if (!v.is_array() || v.empty()) throw ValidationError(what + " must be a non-empty array of rows");
    const size_t n = v.size();
    ComplexMatrix m(static_cast<int>(n), static_cast<int>(v[0].size()));
    for (size_t i = 0; i < n; ++i) {
        if (!v[i].is_array() || v[i].size() != v[0].size()) throw ValidationError(what + " rows must have equal length");
        for (size_t j = 0; j < v[i].size(); ++j) m(i, j) = to_complex(v[i][j], what);
    }
    return m;
}

// ---- output ----------------------------------------------------------------

void dump(const json& j, std::ostream& os, int indent) {
    const std::string pad(indent + 2, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(it.key()).dump() << ": ";
                dump(it.value(), os, indent + 2);
            }
            os << "\n" << std::string(indent, ' ') << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
            if (flat) {
                os << "[";
                for (size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    dump(j[i], os, indent);
                }
                os << "]";
                return;
            }
            os << "[\n";
            for (size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                dump(j[i], os, indent + 2);
            }
            os << "\n" << std::string(indent, ' ') << "]";
            return;
        }
        case json::value_t::number_float: {
            const double x = j.get<double>();
            os << (std::isfinite(x) ? format_number(x) : "null");
            return;
        }
        default:
            os << j.dump();
    }
}

std::string to_text(const json& j) {
    std::ostringstream os;
    dump(j, os, 0);
    os << "\n";
    return os.str();
}

json cnum(cplx z) { return json::array({z.real(), z.imag()}); }
json vnum(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json cvec(const ComplexVector& v) {
    json a = json::array();
    for (const auto& z : v) a.push_back(cnum(z));
    return a;
}
json cmat(const ComplexMatrix& m) {
    json a = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(cnum(m(i, j)));
        a.push_back(row);
    }
    return a;
}

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) { line(header); }
    void row(const std::vector<double>& v) {
        if (v.size() != cols_) throw std::logic_error("csv row width");
        std::vector<std::string> s;
        for (double x : v) s.push_back(format_number(x));
        line(s);
    }
    std::string text() const { return os_.str(); }

private:
    void line(const std::vector<std::string>& v) {
        for (size_t i = 0; i < v.size(); ++i) os_ << (i ? "," : "") << v[i];
        os_ << "\n";
    }
    size_t cols_;
    std::ostringstream os_;
};

// ---- models ----------------------------------------------------------------

struct Model {
    std::string name;
    QmpBuilder build;
    Vec3 point{0, 0, 0};
    double gamma0_over_m0 = 0.0;
    TheoreticalParams th;
    ExperimentalParams ex;
    LatticeParams la;
};

Perturbation parse_perturbation(const json& j) {
    const Section s(j, "'perturbation'", {"dM", "dK", "dG"});
    Perturbation p;
    if (s.has("dM")) p.dM = to_matrix(s.at("dM"), "perturbation dM");
    if (s.has("dK")) p.dK = to_matrix(s.at("dK"), "perturbation dK");
    if (s.has("dG")) p.dG = to_matrix(s.at("dG"), "perturbation dG");
    return p;
}

Model parse_model(const Section& top) {
    Model m;
    m.name = top.str("model");
    const Perturbation pert = top.has("perturbation") ? parse_perturbation(top.at("perturbation")) : Perturbation{};
    const json empty = json::object();
    const json& pj = top.has("params") ? top.at("params") : empty;
    if (m.name == "theoretical") {
        const Section p(pj, "'params'", {"m0", "kbar", "dchi", "gamma", "chi", "kappa"});
        auto& t = m.th;
        t.m0 = p.num("m0", 1.0);
        t.kbar = p.num("kbar", 1.0);
        t.dchi = p.num("dchi", 0.0);
        t.gamma = p.num("gamma", 0.0);
        t.chi = p.num("chi", 0.0);
        t.kappa = p.num("kappa", 0.0);
        m.build = theoretical_builder(t, pert);
        m.point = t.point();
    } else if (m.name == "experimental") {
        const Section p(pj, "'params'", {"m0", "kappa0", "gamma0", "dchi", "gamma", "chi", "kappa"});
        auto& e = m.ex;
        e.m0 = p.num("m0", 1.0);
        e.kappa0 = p.num("kappa0", 1.0);
        e.gamma0 = p.num("gamma0", 0.0);
        e.dchi = p.num("dchi", 0.0);
        e.gamma = p.num("gamma", 0.0);
        e.chi = p.num("chi", 0.0);
        e.kappa = p.num("kappa", 0.0);
        m.build = experimental_builder(e, pert);
        m.point = e.point();
        m.gamma0_over_m0 = e.gamma0 / e.m0;
    } else if (m.name == "lattice") {
        const Section p(pj, "'params'", {"m", "kappa0", "kappa1", "kappa2", "chi", "dchi", "gamma", "k"});
        auto& l = m.la;
        l.m = p.num("m", 1.0);
        l.kappa0 = p.num("kappa0", 1.0);
        l.kappa1 = p.num("kappa1", 0.0);
        l.kappa2 = p.num("kappa2", 0.0);
        l.chi = p.num("chi", 0.0);
        l.dchi = p.num("dchi", 0.0);
        l.gamma = p.num("gamma", 0.0);
        l.k = p.vec3("k", {0, 0, 0});
        m.build = lattice_builder(l, pert);
        m.point = l.k;
    } else if (m.name == "qmp") {
        const Section p(pj, "'params'", {"M", "K", "G"});
        QMP q(to_matrix(p.at("M"), "params M"), to_matrix(p.at("K"), "params K"), to_matrix(p.at("G"), "params G"));
        if (!pert.empty()) q = q.perturbed(pert.dM, pert.dK, pert.dG);
        m.build = [q](const Vec3&) { return q; };
    } else {
        throw ValidationError("unknown model '" + m.name + "' (expected theoretical, experimental, lattice or qmp)");
    }
    if (top.has("point")) m.point = top.vec3("point");
    return m;
}

void require_model(const Model& m, const std::string& name, const std::string& command) {
    if (m.name != name) throw ValidationError("command '" + command + "' needs model '" + name + "'");
}

// ---- geometry specs ----------------------------------------------------------

ParameterPath parse_loop(const json& j, const std::string& ctx) {
    const std::string type = Section(j, ctx, {"type", "center", "normal", "radius", "n", "u", "v", "half_u", "half_v",
                                             "n_per_side", "points"})
                                 .str("type");
    if (type == "circle") {
        const Section s(j, ctx, {"type", "center", "normal", "radius", "n"});
        return ParameterPath::circle(s.vec3("center"), s.vec3("normal"), s.num("radius"), s.integer("n", 64));
    }
    if (type == "rect") {
        const Section s(j, ctx, {"type", "center", "u", "v", "half_u", "half_v", "n_per_side"});
        return ParameterPath::rect(s.vec3("center"), s.vec3("u"), s.vec3("v"), s.num("half_u"), s.num("half_v"),
                                   s.integer("n_per_side", 16));
    }
    if (type == "polygon") {
        const Section s(j, ctx, {"type", "points"});
        ParameterPath p;
        p.closed = true;
        for (const auto& v : s.at("points")) p.points.push_back(Section::to_vec3(v, ctx + " points"));
        return p;
    }
    throw ValidationError(ctx + ": unknown loop type '" + type + "' (circle, rect, polygon)");
}

ParameterPath parse_arc(const json& j, const std::string& ctx) {
    const std::string type =
        Section(j, ctx, {"type", "center", "axis", "dir", "radius", "n", "points"}).str("type");
    if (type == "half_circle") {
        const Section s(j, ctx, {"type", "center", "axis", "dir", "radius", "n"});
        return ParameterPath::half_circle(s.vec3("center"), s.vec3("axis"), s.vec3("dir"), s.num("radius"),
                                          s.integer("n", 200));
    }
    if (type == "polyline") {
        const Section s(j, ctx, {"type", "points"});
        ParameterPath p;
        for (const auto& v : s.at("points")) p.points.push_back(Section::to_vec3(v, ctx + " points"));
        return p;
    }
    throw ValidationError(ctx + ": unknown arc type '" + type + "' (half_circle, polyline)");
}

PlaneSpec parse_plane(const json& j) {
    const Section s(j, "'plane'", {"origin", "u", "v", "axis", "value", "tag"});
    if (s.has("axis")) return PlaneSpec::coordinate(s.integer("axis", 0), s.num("value", 0.0), s.str("tag", "plane"));
    PlaneSpec p;
    p.origin = s.vec3("origin", {0, 0, 0});
    p.u = unit(s.vec3("u"));
    p.v = unit(s.vec3("v"));
    if (std::abs(dot(p.u, p.v)) > 1e-12) throw ValidationError("'plane': u and v must be orthogonal");
    p.tag = s.str("tag", "plane");
    return p;
}

TraceOptions parse_trace_options(const Section& top) {
    TraceOptions o;
    const Section w(top.at("window"), "'window'", {"lo", "hi"});
    o.window.lo = w.vec3("lo");
    o.window.hi = w.vec3("hi");
    for (int i = 0; i < 3; ++i)
        if (!(o.window.hi[i] > o.window.lo[i])) throw ValidationError("'window': hi must exceed lo on every axis");
    o.step = top.num("step", 0.0);
    if (top.has("plane")) o.plane = parse_plane(top.at("plane"));
    if (top.has("junction_lines")) {
        for (const auto& l : top.at("junction_lines")) {
            const Section s(l, "'junction_lines' entry", {"point", "dir"});
            o.junction_lines.push_back({s.vec3("point"), s.vec3("dir")});
        }
    }
    return o;
}

SurfaceMesh parse_mesh(const json& j) {
    const std::string type =
        Section(j, "'mesh'", {"type", "lo", "hi", "n", "center", "radius", "n_lat", "n_lon"}).str("type");
    if (type == "box") {
        const Section s(j, "'mesh'", {"type", "lo", "hi", "n"});
        return SurfaceMesh::box(s.vec3("lo"), s.vec3("hi"), s.integer("n", 9));
    }
    if (type == "sphere") {
        const Section s(j, "'mesh'", {"type", "center", "radius", "n_lat", "n_lon"});
        return SurfaceMesh::sphere(s.vec3("center"), s.num("radius"), s.integer("n_lat", 12), s.integer("n_lon", 24));
    }
    throw ValidationError("'mesh': unknown type '" + type + "' (box, sphere)");
}

json line_json(const ExceptionalLine& e) {
    json pts = json::array();
    for (const auto& p : e.polyline) pts.push_back(vnum(p));
    return {{"polyline", pts},         {"orientation", e.orientation}, {"plane", e.plane_tag},
            {"closed", e.closed},      {"start", edge_end_name(e.start_end)}, {"end", edge_end_name(e.end_end)},
            {"max_disc", e.max_disc},  {"vertices", e.polyline.size()}};
}

json graph_json(const ChainGraph& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes) nodes.push_back({{"point", vnum(n.point)}, {"in", n.in}, {"out", n.out}});
    json edges = json::array();
    for (size_t i = 0; i < g.edges.size(); ++i) {
        json e = line_json(g.edges[i]);
        e["nodes"] = json::array({g.edge_nodes[i].first, g.edge_nodes[i].second});
        e["probe"] = g.edges[i].probe;
        edges.push_back(e);
    }
    return {{"nodes", nodes}, {"edges", edges}, {"unbalanced", g.unbalanced}, {"valid", g.valid}};
}

// ---- commands ----------------------------------------------------------------

struct Context {
    const json& config;
    unsigned long long seed = 0;
    int jobs = 1;
    fs::path config_dir;
};

struct Artifact {
    std::string ext;  // "json" or "csv"
    std::string text;
};

Artifact as_json(const json& j) { return {"json", to_text(j)}; }

const std::set<std::string> kCommon = {"command", "model", "params", "perturbation"};

Section section(const Context& c, std::initializer_list<std::string> extra) {
    std::set<std::string> allowed = kCommon;
    allowed.insert(extra.begin(), extra.end());
    return Section(c.config, "config", allowed);
}

Artifact cmd_solve(const Context& c) {
    const Section s = section(c, {"point"});
    const Model m = parse_model(s);
    const QMP q = m.build(m.point);
    const Spectrum sp = solve(q);
    json ex = json::array(), di = json::array();
    for (auto [a, b] : sp.exceptional) ex.push_back(json::array({a, b}));
    for (auto [a, b] : sp.diabolic) di.push_back(json::array({a, b}));
    json out = {{"omegas", cvec(sp.omegas())}, {"pf_gap", sp.pf_gap_ok}, {"exceptional", ex}, {"diabolic", di},
                {"point", vnum(m.point)}};
    if (q.is_real()) out["particle_hole_residual"] = particle_hole_residual(sp);
    return as_json(out);
}

Artifact cmd_sweep(const Context& c) {
    const Section s = section(c, {"ramp", "pf_only"});
    const Model m = parse_model(s);
    const Section r(s.at("ramp"), "'ramp'", {"from", "to", "n"});
    const Vec3 a = r.vec3("from"), b = r.vec3("to");
    int n = r.integer("n", 101);
    if (n < 1) throw ValidationError("'ramp': n must be ≥ 1");
    if (distance(a, b) == 0.0) n = 1;
    const ParameterPath path = ParameterPath::line(a, b, n);
    const TrackedBands tb = track_bands(m.build, path, s.flag("pf_only", true));
    // The varying coordinate labels each row.
    int axis = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(b[i] - a[i]) > std::abs(b[axis] - a[axis])) axis = i;
    std::vector<std::string> header{"param"};
    for (int k = 1; k <= tb.bands(); ++k) {
        header.push_back("re_w" + std::to_string(k));
        header.push_back("im_w" + std::to_string(k));
    }
    Csv csv(header);
    size_t next = 0;
    for (int k = 0; k < tb.samples() && next < path.points.size(); ++k) {
        if (tb.points[k] != path.points[next]) continue;
        std::vector<double> row{path.points[next][axis]};
        for (const cplx& w : tb.omegas[k]) {
            row.push_back(w.real());
            row.push_back(w.imag());
        }
        csv.row(row);
        ++next;
    }
    return {"csv", csv.text()};
}

Artifact cmd_vorticity(const Context& c) {
    const Section s = section(c, {"loop", "bands", "pf_only"});
    const Model m = parse_model(s);
    const ParameterPath loop = parse_loop(s.at("loop"), "'loop'");
    loop.validate();
    const auto [b1, b2] = int2(s, "bands", {1, 2});
    const TrackedBands tb = track_bands(m.build, loop, s.flag("pf_only", true));
    return as_json({{"nu", energy_vorticity(tb, b1 - 1, b2 - 1)}, {"bands", json::array({b1, b2})}});
}

Artifact cmd_arc(const Context& c) {
    const Section s = section(c, {"arc"});
    const Model m = parse_model(s);
    const ParameterPath arc = parse_arc(s.at("arc"), "'arc'");
    return as_json({{"d_plus", arc_invariant(m.build, arc)}});
}

Artifact cmd_trace(const Context& c) {
    const Section s = section(c, {"seed", "plane", "window", "step", "junction_lines", "orient"});
    const Model m = parse_model(s);
    const TraceOptions o = parse_trace_options(s);
    // Seeds only need to be near the line; they are refined onto it first.
    const Vec3 seed = s.vec3("seed");
    RefineOptions ro;
    ro.check_exceptional = false;
    const Subspace sub = o.plane ? Subspace::in_plane(*o.plane, o.plane->origin) : Subspace::full(seed);
    ExceptionalLine line = trace_el(m.build, refine_ep(m.build, seed, sub, ro).point, o);
    if (s.flag("orient", true) && line.polyline.size() >= 3) {
        const double h0 = o.step > 0.0 ? o.step : o.window.diagonal() / 200.0;
        orient_line(m.build, line, 3.0 * h0);
    }
    return as_json({{"line", line_json(line)}});
}

Artifact cmd_chain(const Context& c) {
    const Section s = section(c, {"seeds", "window", "step", "junction_lines"});
    const Model m = parse_model(s);
    const TraceOptions o = parse_trace_options(s);
    std::vector<NetworkSeed> seeds;
    for (const auto& j : s.at("seeds")) {
        const Section e(j, "'seeds' entry", {"point", "plane"});
        NetworkSeed ns{e.vec3("point"), std::nullopt};
        if (e.has("plane")) ns.plane = parse_plane(e.at("plane"));
        seeds.push_back(ns);
    }
    return as_json(graph_json(trace_network(m.build, seeds, o)));
}

Artifact cmd_surface_audit(const Context& c) {
    const Section s = section(c, {"mesh", "punctures", "loop_radius", "samples_per_edge"});
    const Model m = parse_model(s);
    const SurfaceMesh mesh = parse_mesh(s.at("mesh"));
    std::vector<Vec3> punct;
    if (s.has("punctures")) {
        for (const auto& p : s.at("punctures")) punct.push_back(Section::to_vec3(p, "'punctures' entry"));
    } else {
        punct = find_punctures(m.build, mesh, s.integer("samples_per_edge", 8));
    }
    const AuditResult a = surface_audit(m.build, mesh, punct, s.num("loop_radius", 0.0));
    json pts = json::array();
    for (const auto& p : a.punctures) pts.push_back(vnum(p));
    return as_json({{"punctures", pts}, {"pfdn", a.pfdn}, {"raw", a.raw}, {"sum", a.sum}, {"loop_radius", a.loop_radius}});
}

Artifact cmd_symmetry_check(const Context& c) {
    const Section s = section(c, {"relations", "samples", "omega_scale", "box"});
    const Model m = parse_model(s);
    std::vector<std::string> names;
    if (s.has("relations")) {
        for (const auto& r : s.at("relations")) {
            if (!r.is_string()) throw ValidationError("'relations' must list relation names");
            names.push_back(r.get<std::string>());
        }
    } else {
        names = relation_names();
    }
    Vec3 lo{-0.1, -0.1, -0.1}, hi{0.1, 0.1, 0.1};
    if (s.has("box")) {
        const Section b(s.at("box"), "'box'", {"lo", "hi"});
        lo = b.vec3("lo");
        hi = b.vec3("hi");
    }
    const int count = s.integer("samples", 100);
    if (count < 1) throw ValidationError("'samples' must be ≥ 1");
    const auto samples = random_relation_samples(count, s.num("omega_scale", 2.0), lo, hi, c.seed);
    json res = json::object();
    for (const auto& n : names)
        res[n] = relation_residual(m.build, named_relation(n, m.gamma0_over_m0), samples);
    return as_json({{"residuals", res}, {"samples", count}});
}

Artifact cmd_latent_check(const Context& c) {
    const Section s = section(c, {"point", "relation", "shift", "n_max", "tol"});
    const Model m = parse_model(s);
    const SymmetryRelation rel = named_relation(s.str("relation", "kappa"), m.gamma0_over_m0);
    const Vec3 g = rel.has_projector ? rel.project(m.point) : m.point;
    QMP qa = m.build(g), qb = m.build(rel.param_map(g));
    double wi = 0.0;
    if (s.flag("shift", false)) {
        wi = -0.5 * m.gamma0_over_m0;
        qa = shift_frequency(qa, wi);
        qb = shift_frequency(qb, wi);
    }
    const int n = qa.dim();
    const ComplexMatrix Ha = linearize(qa), Hb = linearize(qb);
    ComplexMatrix L = ComplexMatrix::zeros(n, n);
    for (int i = 0; i < n; ++i) L(i, n - 1 - i) = 1.0;
    const ContributingSet S = ContributingSet::bottom_right(n);
    const double tol = s.num("tol", 1e-12);
    LatentCheck lc = latent_crosscheck(Ha, Hb, L, S, tol);
    lc.latent = latent_residual(Ha, Hb, L, S, s.integer("n_max", 0));
    lc.latent_pass = lc.latent < tol;
    return as_json({{"latent", lc.latent},
                    {"reduction", lc.reduction},
                    {"latent_pass", lc.latent_pass},
                    {"reduction_pass", lc.reduction_pass},
                    {"point", vnum(g)},
                    {"frequency_shift", wi}});
}

Artifact cmd_effective(const Context& c) {
    const Section s = section(c, {"point", "omega0"});
    const Model m = parse_model(s);
    const QMP q = m.build(m.point);
    const EffectiveTwoBand e = effective_two_band(q, s.num("omega0", 0.0));
    const ComplexVector pf = pf_frequencies(q);
    json out = {{"H_eff", cmat(e.H_eff)}, {"omega0", e.omega0}, {"valid_radius", e.valid_radius},
                {"shifts", cvec(e.shifts)}, {"exact_pf", cvec(pf)}};
    if (e.shifts.size() == 2) out["splitting"] = 0.5 * std::abs(e.shifts[1] - e.shifts[0]);
    if (pf.size() == 2) out["exact_splitting"] = 0.5 * std::abs(pf[1] - pf[0]);
    return as_json(out);
}

Artifact cmd_lattice_bands(const Context& c) {
    const Section s = section(c, {"ky", "window", "grid"});
    const Model m = parse_model(s);
    require_model(m, "lattice", "lattice-bands");
    double ky = 0.0;
    if (s.has("ky") && s.at("ky").is_string()) {
        if (s.str("ky") != "cp") throw ValidationError("'ky' must be a number or \"cp\"");
        ky = chain_point_coords(m.la)[1];
    } else {
        ky = s.num("ky", chain_point_coords(m.la)[1]);
    }
    Window2 w{-0.5, 0.5, -0.5, 0.5};
    if (s.has("window")) {
        const Section ws(s.at("window"), "'window'", {"kx", "kz"});
        std::tie(w.a_lo, w.a_hi) = range2(ws, "kx");
        std::tie(w.b_lo, w.b_hi) = range2(ws, "kz");
    }
    const auto [nx, nz] = int2(s, "grid", {33, 33});
    const BandField bf = band_slice(m.la, ky, w, nx, nz);
    Csv csv({"kx", "kz", "re_w1", "im_w1", "re_w2", "im_w2", "flagged"});
    for (int i = 0; i < bf.nx(); ++i)
        for (int j = 0; j < bf.nz(); ++j) {
            const auto& o = bf.omegas[i][j];
            const double nan = std::nan("");
            if (o.size() == 2)
                csv.row({bf.kx[i], bf.kz[j], o[0].real(), o[0].imag(), o[1].real(), o[1].imag(),
                         double(bf.flagged[i][j])});
            else
                csv.row({bf.kx[i], bf.kz[j], nan, nan, nan, nan, 1.0});
        }
    return {"csv", csv.text()};
}

Artifact cmd_chain_point(const Context& c) {
    const Section s = section(c, {"refine"});
    const Model m = parse_model(s);
    require_model(m, "lattice", "chain-point");
    const Vec3 k = chain_point_coords(m.la);
    json out = {{"kx", k[0]}, {"ky", k[1]}, {"kz", k[2]}, {"dky_dgamma", chain_point_dgamma(m.la)}};
    if (s.flag("refine", true)) out["ky_refined"] = refine_chain_point(m.la, k[1]);
    return as_json(out);
}

Artifact cmd_wavepacket(const Context& c, std::ostream& err) {
    const Section s = section(c, {"q", "kmax", "grid", "slab", "times"});
    const Model m = parse_model(s);
    require_model(m, "lattice", "wavepacket");
    WavepacketSpec spec;
    spec.q = s.num("q", spec.q);
    spec.kmax = s.num("kmax", spec.kmax);
    std::tie(spec.nx, spec.nz) = int2(s, "grid", {64, 64});
    const auto [lx, lz] = int2(s, "slab", {256, 256});
    std::vector<double> times{0, 60, 120, 180, 240, 300};
    if (s.has("times")) {
        times.clear();
        for (const auto& t : s.at("times")) {
            if (!t.is_number()) throw ValidationError("'times' must be numbers");
            times.push_back(t.get<double>());
        }
    }
    const WavepacketResult r = evolve_wavepacket(m.la, spec, times, lx, lz, c.jobs);
    if (r.boundary_warning) {
        err << to_text({{"warning", "field reaches the slab boundary"}, {"boundary_ratio", r.boundary_ratio}});
    }
    const double a_ref = max_amplitude(r.fields.front());
    Csv csv({"t", "band", "centroid_z", "log_amplitude", "width_x", "width_z", "aspect"});
    for (const auto& f : r.fields)
        for (int b = 1; b <= 2; ++b) {
            const PulseMetrics pm = pulse_metrics(f, b, a_ref);
            csv.row({f.t, double(b), pm.centroid_z, pm.log_amplitude, pm.width_x, pm.width_z, pm.aspect});
        }
    return {"csv", csv.text()};
}

std::vector<double> parse_freqs(const Section& s) {
    if (!s.has("freqs")) return uniform_freqs();
    const Section f(s.at("freqs"), "'freqs'", {"lo", "hi", "n"});
    return uniform_freqs(f.num("lo", 2.0), f.num("hi", 22.0), f.integer("n", 400));
}

std::string spectra_csv(const ResponseSpectra& d) {
    Csv csv({"f", "theta11", "theta12", "theta21", "theta22"});
    for (int k = 0; k < d.samples(); ++k)
        csv.row({d.freqs[k], d.curves[0][0][k], d.curves[0][1][k], d.curves[1][0][k], d.curves[1][1][k]});
    return csv.text();
}

ResponseSpectra read_spectra(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ValidationError("cannot read spectra file '" + p.string() + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("f,", 0) != 0) throw ValidationError("spectra file needs header f,theta11,theta12,theta21,theta22");
    ResponseSpectra d;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ValidationError("spectra file: bad number '" + cell + "'");
            }
        }
        if (v.size() != 5) throw ValidationError("spectra file rows need 5 columns");
        d.freqs.push_back(v[0]);
        d.curves[0][0].push_back(v[1]);
        d.curves[0][1].push_back(v[2]);
        d.curves[1][0].push_back(v[3]);
        d.curves[1][1].push_back(v[4]);
    }
    d.validate();
    return d;
}

Artifact cmd_synth(const Context& c) {
    const Section s = section(c, {"scale", "freqs", "noise"});
    const Model m = parse_model(s);
    require_model(m, "experimental", "synth");
    const ResponseSpectra d =
        synth_response(m.build, m.point, s.num("scale", 1.0), parse_freqs(s), s.num("noise", 0.0), c.seed);
    return {"csv", spectra_csv(d)};
}

Artifact cmd_fit(const Context& c) {
    const Section s = section(c, {"data", "synth", "free", "starts"});
    const Model m = parse_model(s);
    require_model(m, "experimental", "fit");
    ResponseSpectra data;
    if (s.has("data") == s.has("synth")) throw ValidationError("config needs exactly one of 'data' or 'synth'");
    if (s.has("data")) {
        fs::path p = s.str("data");
        if (p.is_relative()) p = c.config_dir / p;
        data = read_spectra(p);
    } else {
        const Section y(s.at("synth"), "'synth'", {"params", "scale", "freqs", "noise"});
        const Section tp(y.at("params"), "'synth' params", {"m0", "kappa0", "gamma0", "dchi", "gamma", "chi", "kappa"});
        ExperimentalParams t = m.ex;
        t.m0 = tp.num("m0", t.m0);
        t.kappa0 = tp.num("kappa0", t.kappa0);
        t.gamma0 = tp.num("gamma0", t.gamma0);
        t.dchi = tp.num("dchi", t.dchi);
        t.gamma = tp.num("gamma", t.gamma);
        t.chi = tp.num("chi", t.chi);
        t.kappa = tp.num("kappa", t.kappa);
        data = synth_response(t, y.num("scale", 1.0), parse_freqs(y), y.num("noise", 0.0), c.seed);
    }
    FitModel fm = FitModel::experimental(m.ex, 1.0);
    const json& free = s.at("free");
    if (!free.is_object() || free.empty()) throw ValidationError("'free' must map parameter names to [lo, hi] or [lo, hi, start]");
    for (const auto& [name, v] : free.items()) {
        if (!v.is_array() || (v.size() != 2 && v.size() != 3))
            throw ValidationError("'free' entry '" + name + "' must be [lo, hi] or [lo, hi, start]");
        for (const auto& x : v)
            if (!x.is_number()) throw ValidationError("'free' entry '" + name + "' must hold numbers");
        if (name == "c") throw ValidationError("'c' is always free and profiled; do not list it");
        if (v.size() == 3)
            fm.free(name, v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
        else
            fm.free(name, v[0].get<double>(), v[1].get<double>());
    }
    FitOptions fo;
    fo.starts = s.integer("starts", 16);
    fo.seed = c.seed;
    fo.jobs = c.jobs;
    const FitResult r = fit_parameters(data, fm, fo);
    json params = json::object(), curv = json::object();
    for (int i = 0; i < kFitParams; ++i) params[fm.params[i].name] = r.values[i];
    const auto idx = fm.free_indices();
    for (size_t i = 0; i < idx.size(); ++i) curv[fm.params[idx[i]].name] = r.curvature[i];
    return as_json({{"params", params}, {"rms", r.rms}, {"initial_rms", r.initial_rms}, {"curvature", curv},
                    {"best_start", r.best_start}});
}

json diagnostics_json(const NumericalError& e) {
    json d = json::object();
    for (const auto& [k, v] : e.diagnostics()) d[k] = v;
    return d;
}

}  // namespace

std::string format_number(double x) {
    if (x == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::vector<std::string> commands() {
    return {"solve",          "sweep",        "vorticity", "arc",           "trace",       "chain",
            "surface-audit",  "symmetry-check", "latent-check", "effective", "lattice-bands", "chain-point",
            "wavepacket",     "synth",        "fit"};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"excepta: quadratic eigenproblems, exceptional lines and chains"};
    std::string command, config_path, out_dir;
    unsigned long long seed = 0;
    int jobs = 1;
    app.add_option("command", command, "Command to run")->required();
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "Directory for the artifact file");
    app.add_option("--seed", seed, "Seed for random sampling, noise and fit starts");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto fail = [&](int code, const json& j) {
        err << to_text(j);
        return code;
    };

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        return fail(kValidation, {{"error", std::string(e.what())}});
    }

    const auto cmds = commands();
    if (std::find(cmds.begin(), cmds.end(), command) == cmds.end())
        return fail(kValidation, {{"error", "unknown command '" + command + "'"}});

    try {
        std::ifstream in(config_path);
        if (!in) throw ValidationError("cannot read config file '" + config_path + "'");
        json config;
        try {
            config = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ValidationError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!config.is_object()) throw ValidationError("config must be a JSON object");
        if (!config.contains("model")) throw ValidationError("missing required field 'model' in config");
        if (config.contains("command") && config["command"] != command)
            throw ValidationError("config is for command '" + config["command"].dump() + "', not '" + command + "'");

        Context ctx{config, seed, jobs, fs::path(config_path).parent_path()};
        static const std::map<std::string, std::function<Artifact(const Context&)>> table = {
            {"solve", cmd_solve},
            {"sweep", cmd_sweep},
            {"vorticity", cmd_vorticity},
            {"arc", cmd_arc},
            {"trace", cmd_trace},
            {"chain", cmd_chain},
            {"surface-audit", cmd_surface_audit},
            {"symmetry-check", cmd_symmetry_check},
            {"latent-check", cmd_latent_check},
            {"effective", cmd_effective},
            {"lattice-bands", cmd_lattice_bands},
            {"chain-point", cmd_chain_point},
            {"synth", cmd_synth},
            {"fit", cmd_fit},
        };
        const Artifact a = command == "wavepacket" ? cmd_wavepacket(ctx, err) : table.at(command)(ctx);
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            const fs::path p = fs::path(out_dir) / (command + "." + a.ext);
            std::ofstream f(p, std::ios::binary);
            if (!f) throw ValidationError("cannot write '" + p.string() + "'");
            f << a.text;
        }
        out << a.text;
        return kOk;
    } catch (const ValidationError& e) {
        return fail(kValidation, {{"error", e.what()}});
    } catch (const ConvergenceError& e) {
        json best = json::array();
        for (const auto& z : e.best_iterate()) best.push_back(z.imag() == 0.0 ? json(z.real()) : cnum(z));
        return fail(kNumerical, {{"error", e.what()}, {"diagnostics", diagnostics_json(e)}, {"best", best}});
    } catch (const NumericalError& e) {
        return fail(kNumerical, {{"error", e.what()}, {"diagnostics", diagnostics_json(e)}});
    } catch (const json::exception& e) {
        return fail(kValidation, {{"error", std::string("config: ") + e.what()}});
    } catch (const Error& e) {
        return fail(kNumerical, {{"error", e.what()}});
    }
}

}  // namespace excepta::cli
