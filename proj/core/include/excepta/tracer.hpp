#pragma once

// Locating exceptional points, following exceptional lines, and assembling
// the chain graph where lines meet.

#include <optional>
#include <string>
#include <vector>

#include "excepta/topology.hpp"

namespace excepta {

// origin + a·u + b·v with unit(u) ⟂ unit(v).
struct PlaneSpec {
    Vec3 origin{0, 0, 0};
    Vec3 u{1, 0, 0};
    Vec3 v{0, 1, 0};
    std::string tag = "free";

    Vec3 at(double a, double b) const { return origin + a * u + b * v; }
    Vec3 normal() const { return unit(cross(u, v)); }
    double offset(const Vec3& p) const { return dot(p - origin, normal()); }

    // Coordinate plane g[axis] = value, spanned by the next two axes in cyclic order.
    static PlaneSpec coordinate(int axis, double value, std::string tag);
    // Oblique plane κ = slope·γ in (γ, χ, κ) space.
    static PlaneSpec oblique_kappa(double slope, std::string tag);
};

struct Window2 {
    double a_lo = -1, a_hi = 1, b_lo = -1, b_hi = 1;
};

struct Box {
    Vec3 lo{-1, -1, -1};
    Vec3 hi{1, 1, 1};
    bool contains(const Vec3& p, double slack = 0.0) const;
    double diagonal() const { return distance(lo, hi); }
};

struct Candidate {
    Vec3 point;    // cell center
    double a = 0, b = 0;
    double score = 0;  // min |Δ₊| over the corners
    std::string reason;  // "sign", "winding", "minimum"
};

// Cells of an n_a × n_b grid over the window that may contain an EP: Re Δ₊
// changes sign over a cell with real corner values, arg Δ₊ winds around it,
// or |Δ₊| has a local minimum below 1e−3·median. Cells with a closed real
// line gap at any corner are skipped.
std::vector<Candidate> scan_plane(const QmpBuilder& build, const PlaneSpec& plane, const Window2& window, int n_a,
                                  int n_b);

// Affine search space origin + span(dirs), 1 to 3 directions.
struct Subspace {
    Vec3 origin{0, 0, 0};
    std::vector<Vec3> dirs;

    static Subspace full(const Vec3& origin);
    static Subspace in_plane(const PlaneSpec& plane, const Vec3& origin);
    static Subspace along(const Vec3& origin, const Vec3& dir);
};

struct RefineOptions {
    double tol_disc = 1e-12;  // on |Δ₊| / max(1, max|ω|)²
    double tol_step = 1e-10;
    int max_iter = 80;
    double fd_step = 1e-7;
    bool check_exceptional = true;
};

struct RefinedEP {
    Vec3 point;
    cplx disc = 0.0;
    double overlap = 0.0;      // |⟨v₁, v₂⟩| of the two coalescing right vectors
    double rank_gap = 0.0;     // second-smallest singular value of Q(ω̄), relative
    bool exceptional = false;
    int iterations = 0;
};

// Gauss–Newton on (Re Δ₊, Im Δ₊) = 0 within the subspace, pseudo-inverse steps
// with backtracking. Throws NumericalError on stagnation and, when
// check_exceptional is set, "not exceptional" at diabolic degeneracies.
RefinedEP refine_ep(const QmpBuilder& build, const Vec3& seed, const Subspace& sub, const RefineOptions& opts = {});

cplx pf_discriminant_at(const QmpBuilder& build, const Vec3& g);

// ∇Re Δ₊ × ∇Im Δ₊ at g by central differences. Its direction orients the EL
// through g (a small loop with this normal has PF discriminant number +1).
Vec3 orientation_field(const QmpBuilder& build, const Vec3& g, double h = 1e-6);

struct Line3 {
    Vec3 point;
    Vec3 dir;
};

enum class EdgeEnd { Open, Window, Junction, Closed };
const char* edge_end_name(EdgeEnd e);

struct ExceptionalLine {
    std::vector<Vec3> polyline;
    int orientation = 0;  // +1: directed along polyline order, −1: against
    std::string plane_tag = "free";
    bool closed = false;
    EdgeEnd start_end = EdgeEnd::Open;
    EdgeEnd end_end = EdgeEnd::Open;
    double max_disc = 0.0;  // max relative |Δ₊| over vertices
    double probe = 0.0;     // raw probe-loop PF discriminant number

    const Vec3& front() const { return polyline.front(); }
    const Vec3& back() const { return polyline.back(); }
};

struct TraceOptions {
    Box window;
    double step = 0.0;  // ≤ 0: window diagonal / 200
    std::optional<PlaneSpec> plane;
    std::vector<Line3> junction_lines;  // nodes found near these lines are polished onto them
    int max_steps = 20000;
    int max_halvings = 6;
    RefineOptions refine;
};

// One direction from an EP until window exit, loop closure or a junction.
ExceptionalLine trace_half(const QmpBuilder& build, const Vec3& start, const Vec3& direction,
                           const TraceOptions& opts);

// Both directions from `start`, joined into one line.
ExceptionalLine trace_el(const QmpBuilder& build, const Vec3& start, const TraceOptions& opts);

// PF discriminant number of a probe loop (radius, 64 samples) whose normal is
// the local tangent, at a vertex away from the line's ends; sets orientation.
int orient_line(const QmpBuilder& build, ExceptionalLine& line, double probe_radius);

struct ChainNode {
    Vec3 point;
    int in = 0;
    int out = 0;
    bool balanced() const { return in == out; }
};

struct ChainGraph {
    std::vector<ChainNode> nodes;
    std::vector<ExceptionalLine> edges;
    std::vector<std::pair<int, int>> edge_nodes;  // (start node, end node), −1 when none
    std::vector<int> unbalanced;
    bool valid = true;
};

// Endpoints within junction_tol are merged into nodes; window exits never
// become nodes. Edges are sorted canonically first.
ChainGraph assemble_chain(std::vector<ExceptionalLine> edges, double junction_tol);

struct NetworkSeed {
    Vec3 point;
    std::optional<PlaneSpec> plane;
};

// Traces every seed not already covered, continues straight through each
// junction, orients all edges, and assembles the graph.
ChainGraph trace_network(const QmpBuilder& build, const std::vector<NetworkSeed>& seeds, const TraceOptions& opts);

// EL crossings of a closed surface: faces whose corner loop (sub-sampled per
// edge) carries a nonzero PF discriminant winding, refined in the face plane.
std::vector<Vec3> find_punctures(const QmpBuilder& build, const SurfaceMesh& mesh, int samples_per_edge = 8);

}  // namespace excepta
