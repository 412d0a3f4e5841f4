#include "excepta/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace excepta {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

ComplexVector spectrum_at(const QmpBuilder& build, const Vec3& g, bool pf_only) {
    const ComplexVector w = eigenfrequencies(build(g));
    if (!pf_only) return w;
    if (!pf_gap_open(w))
        throw NumericalError("no real line gap on the path", {{"g0", g[0]}, {"g1", g[1]}, {"g2", g[2]}});
    return pf_frequencies(w);
}

double min_separation(const ComplexVector& w) {
    double s = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < w.size(); ++i)
        for (size_t j = i + 1; j < w.size(); ++j) s = std::min(s, std::abs(w[i] - w[j]));
    return s;
}

// Reorders `next` so that next[i] continues prev[i].
ComplexVector match_to(const ComplexVector& prev, const ComplexVector& next) {
    const int n = static_cast<int>(prev.size());
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost[i][j] = std::norm(prev[i] - next[j]);
    const auto col = min_cost_assignment(cost);
    ComplexVector out(n);
    for (int i = 0; i < n; ++i) out[i] = next[col[i]];
    return out;
}

double max_jump(const ComplexVector& a, const ComplexVector& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

struct Tracker {
    const QmpBuilder& build;
    const TrackOptions& opts;
    TrackedBands& out;

    void check_separation(const Vec3& g, const ComplexVector& w) const {
        if (w.size() > 1 && min_separation(w) < opts.min_separation)
            throw NumericalError("exceptional point on the path; perturb the path",
                                 {{"g0", g[0]}, {"g1", g[1]}, {"g2", g[2]}, {"separation", min_separation(w)}});
    }

    // Appends samples in (a, b]; wa is already matched.
    void segment(const Vec3& a, const ComplexVector& wa, const Vec3& b, int depth) {
        ComplexVector wb = match_to(wa, spectrum_at(build, b, opts.pf_only));
        check_separation(b, wb);
        const double sep = std::min(min_separation(wa), min_separation(wb));
        const bool small = wa.size() < 2 || max_jump(wa, wb) < opts.jump_fraction * sep;
        if (small || distance(a, b) == 0.0) {
            out.points.push_back(b);
            out.omegas.push_back(std::move(wb));
            return;
        }
        if (depth >= opts.max_depth)
            throw NumericalError("band tracking did not resolve; the path passes too close to an exceptional point",
                                 {{"g0", b[0]}, {"g1", b[1]}, {"g2", b[2]}, {"separation", sep}});
        const Vec3 mid = 0.5 * (a + b);
        segment(a, wa, mid, depth + 1);
        const ComplexVector wm = out.omegas.back();
        segment(mid, wm, b, depth + 1);
    }
};

double phase_increment(cplx from, cplx to) { return std::arg(to / from); }

// (1/2π)·Σ over the pairs in `cols` of the unwrapped arg of (ω_m − ω_n)².
double pair_winding(const TrackedBands& tb, const std::vector<int>& cols) {
    double total = 0.0;
    for (size_t a = 0; a < cols.size(); ++a)
        for (size_t b = a + 1; b < cols.size(); ++b) {
            for (int k = 0; k + 1 < tb.samples(); ++k) {
                const cplx d0 = tb.omegas[k][cols[a]] - tb.omegas[k][cols[b]];
                const cplx d1 = tb.omegas[k + 1][cols[a]] - tb.omegas[k + 1][cols[b]];
                const double inc = phase_increment(d0, d1);
                if (std::abs(inc) >= M_PI)
                    throw NumericalError("phase increment too large after refinement", {{"sample", double(k)}});
                total += 2.0 * inc;
            }
        }
    return total / kTwoPi;
}

std::vector<int> columns_with_sign(const TrackedBands& tb, int sign) {
    std::vector<int> cols;
    for (int j = 0; j < tb.bands(); ++j)
        if ((tb.omegas.front()[j].real() > 0.0) == (sign > 0)) cols.push_back(j);
    return cols;
}

void require_gap_along(const TrackedBands& tb) {
    for (int k = 0; k < tb.samples(); ++k)
        if (!pf_gap_open(tb.omegas[k]))
            throw NumericalError("no real line gap on the path",
                                 {{"g0", tb.points[k][0]}, {"g1", tb.points[k][1]}, {"g2", tb.points[k][2]}});
}

}  // namespace

void ParameterPath::validate() const {
    if (points.size() < 16) throw ValidationError("parameter path needs at least 16 points");
    for (size_t i = 0; i + 1 < points.size(); ++i)
        if (points[i] == points[i + 1]) throw ValidationError("parameter path has repeated consecutive points");
    if (closed && points.front() == points.back())
        throw ValidationError("closed path must not repeat its first point at the end");
}

ParameterPath ParameterPath::reversed() const {
    ParameterPath p = *this;
    std::reverse(p.points.begin(), p.points.end());
    return p;
}

ParameterPath ParameterPath::mapped(const std::array<Vec3, 3>& A, const Vec3& b) const {
    ParameterPath p = *this;
    for (auto& x : p.points) x = Vec3{dot(A[0], x) + b[0], dot(A[1], x) + b[1], dot(A[2], x) + b[2]};
    return p;
}

ParameterPath ParameterPath::circle(const Vec3& center, const Vec3& normal, double radius, int n) {
    if (!(radius > 0.0) || n < 3) throw ValidationError("circle needs radius > 0 and n ≥ 3");
    if (norm(normal) == 0.0) throw ValidationError("circle normal must be nonzero");
    Vec3 e1, e2;
    orthonormal_frame(normal, e1, e2);
    ParameterPath p;
    p.closed = true;
    for (int i = 0; i < n; ++i) {
        const double t = kTwoPi * i / n;
        p.points.push_back(center + radius * (std::cos(t) * e1 + std::sin(t) * e2));
    }
    return p;
}

ParameterPath ParameterPath::half_circle(const Vec3& center, const Vec3& axis, const Vec3& dir, double radius,
                                         int n) {
    if (!(radius > 0.0) || n < 2) throw ValidationError("half circle needs radius > 0 and n ≥ 2");
    const Vec3 a = unit(axis);
    const Vec3 d = unit(dir - dot(dir, a) * a);
    if (norm(d) == 0.0) throw ValidationError("half circle direction must not be parallel to its axis");
    ParameterPath p;
    for (int i = 0; i < n; ++i) {
        const double t = M_PI * i / (n - 1);
        p.points.push_back(center + radius * (-std::cos(t) * a + std::sin(t) * d));
    }
    return p;
}

ParameterPath ParameterPath::rect(const Vec3& center, const Vec3& u, const Vec3& v, double hu, double hv,
                                  int n_per_side) {
    if (!(hu > 0.0 && hv > 0.0) || n_per_side < 1) throw ValidationError("rect needs positive half-widths");
    const Vec3 eu = unit(u), ev = unit(v);
    const std::array<Vec3, 4> c{center - hu * eu - hv * ev, center + hu * eu - hv * ev,
                                center + hu * eu + hv * ev, center - hu * eu + hv * ev};
    ParameterPath p;
    p.closed = true;
    for (int s = 0; s < 4; ++s)
        for (int i = 0; i < n_per_side; ++i) {
            const double t = static_cast<double>(i) / n_per_side;
            p.points.push_back((1.0 - t) * c[s] + t * c[(s + 1) % 4]);
        }
    return p;
}

ParameterPath ParameterPath::line(const Vec3& a, const Vec3& b, int n) {
    if (n < 1) throw ValidationError("line needs at least one point");
    ParameterPath p;
    for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        p.points.push_back((1.0 - t) * a + t * b);
    }
    return p;
}

TrackedBands track_bands(const QmpBuilder& build, const ParameterPath& path, const TrackOptions& opts) {
    if (path.points.empty()) throw ValidationError("cannot track bands on an empty path");
    TrackedBands tb;
    tb.closed = path.closed;
    Tracker tr{build, opts, tb};
    const ComplexVector w0 = spectrum_at(build, path.points.front(), opts.pf_only);
    tr.check_separation(path.points.front(), w0);
    tb.points.push_back(path.points.front());
    tb.omegas.push_back(w0);
    const size_t n = path.points.size();
    const size_t segments = path.closed ? n : n - 1;
    for (size_t i = 0; i < segments; ++i) {
        const ComplexVector wa = tb.omegas.back();
        tr.segment(path.points[i], wa, path.points[(i + 1) % n], 0);
    }
    if (path.closed) {
        const ComplexVector& last = tb.omegas.back();
        const int m = static_cast<int>(w0.size());
        std::vector<std::vector<double>> cost(m, std::vector<double>(m));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) cost[i][j] = std::norm(last[i] - w0[j]);
        tb.permutation = min_cost_assignment(cost);
    }
    return tb;
}

TrackedBands track_bands(const QmpBuilder& build, const ParameterPath& path, bool pf_only) {
    TrackOptions o;
    o.pf_only = pf_only;
    return track_bands(build, path, o);
}

double energy_vorticity(const TrackedBands& tb, int m, int n) {
    if (!tb.closed) throw ValidationError("energy vorticity needs a closed loop");
    if (m == n || m < 0 || n < 0 || m >= tb.bands() || n >= tb.bands())
        throw ValidationError("energy vorticity needs two distinct band indices");
    double total = 0.0;
    for (int k = 0; k + 1 < tb.samples(); ++k) {
        const double inc =
            phase_increment(tb.omegas[k][m] - tb.omegas[k][n], tb.omegas[k + 1][m] - tb.omegas[k + 1][n]);
        if (std::abs(inc) >= M_PI) throw NumericalError("phase increment ≥ π after refinement");
        total += inc;
    }
    return total / kTwoPi;
}

cplx discriminant(const ComplexVector& w) {
    cplx d = 1.0;
    for (size_t i = 0; i < w.size(); ++i)
        for (size_t j = i + 1; j < w.size(); ++j) d *= (w[i] - w[j]) * (w[i] - w[j]);
    return d;
}

cplx pf_discriminant(const ComplexVector& omegas) { return discriminant(pf_frequencies(omegas)); }
cplx pf_discriminant(const Spectrum& s) { return pf_discriminant(s.omegas()); }
cplx pf_discriminant(const QMP& q) { return pf_discriminant(eigenfrequencies(q)); }

double discriminant_number(const QmpBuilder& build, const ParameterPath& loop, DiscriminantKind which) {
    loop.validate();
    if (!loop.closed) throw ValidationError("discriminant number needs a closed loop");
    const TrackedBands tb = track_bands(build, loop, false);
    std::vector<int> cols;
    switch (which) {
        case DiscriminantKind::PF:
            require_gap_along(tb);
            cols = columns_with_sign(tb, +1);
            break;
        case DiscriminantKind::NF:
            require_gap_along(tb);
            cols = columns_with_sign(tb, -1);
            break;
        case DiscriminantKind::ALL:
            for (int j = 0; j < tb.bands(); ++j) cols.push_back(j);
            break;
    }
    return pair_winding(tb, cols);
}

double arc_invariant(const QmpBuilder& build, const ParameterPath& arc) {
    arc.validate();
    if (arc.closed) throw ValidationError("arc invariant needs an open path");
    for (const Vec3* end : {&arc.points.front(), &arc.points.back()}) {
        const cplx d = pf_discriminant(build(*end));
        if (std::abs(d) < 1e-10)
            throw NumericalError("arc endpoint is degenerate (|PF discriminant| < 1e-10)",
                                 {{"g0", (*end)[0]}, {"g1", (*end)[1]}, {"g2", (*end)[2]}, {"abs", std::abs(d)}});
    }
    const TrackedBands tb = track_bands(build, arc, false);
    require_gap_along(tb);
    return pair_winding(tb, columns_with_sign(tb, +1));
}

SurfaceMesh SurfaceMesh::box(const Vec3& lo, const Vec3& hi, int n) {
    if (n < 1) throw ValidationError("box mesh needs n_per_edge ≥ 1");
    for (int a = 0; a < 3; ++a)
        if (!(hi[a] > lo[a])) throw ValidationError("box mesh needs hi > lo on every axis");
    SurfaceMesh m;
    std::map<std::array<int, 3>, int> ids;
    auto vid = [&](std::array<int, 3> ijk) {
        auto it = ids.find(ijk);
        if (it != ids.end()) return it->second;
        Vec3 p;
        for (int a = 0; a < 3; ++a) p[a] = lo[a] + (hi[a] - lo[a]) * ijk[a] / n;
        m.vertices.push_back(p);
        const int id = static_cast<int>(m.vertices.size()) - 1;
        ids.emplace(ijk, id);
        return id;
    };
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3, c = (a + 2) % 3;
        for (int side : {0, n}) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    std::array<std::array<int, 3>, 4> q;
                    const int di[4] = {0, 1, 1, 0}, dj[4] = {0, 0, 1, 1};
                    for (int k = 0; k < 4; ++k) {
                        q[k][a] = side;
                        q[k][b] = i + di[k];
                        q[k][c] = j + dj[k];
                    }
                    std::array<int, 4> f{vid(q[0]), vid(q[1]), vid(q[2]), vid(q[3])};
                    // (b, c) order is counterclockwise about +e_a.
                    if (side == 0) std::swap(f[1], f[3]);
                    m.quads.push_back(f);
                }
        }
    }
    return m;
}

SurfaceMesh SurfaceMesh::sphere(const Vec3& center, double radius, int n_lat, int n_lon) {
    if (!(radius > 0.0) || n_lat < 2 || n_lon < 3) throw ValidationError("sphere mesh needs radius > 0, n_lat ≥ 2, n_lon ≥ 3");
    SurfaceMesh m;
    m.vertices.push_back(center + Vec3{0, 0, radius});
    for (int i = 1; i < n_lat; ++i) {
        const double th = M_PI * i / n_lat;
        for (int j = 0; j < n_lon; ++j) {
            const double ph = kTwoPi * j / n_lon;
            m.vertices.push_back(center + radius * Vec3{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                                                        std::cos(th)});
        }
    }
    m.vertices.push_back(center - Vec3{0, 0, radius});
    const int south = static_cast<int>(m.vertices.size()) - 1;
    auto ring = [&](int i, int j) { return 1 + (i - 1) * n_lon + (j % n_lon); };
    for (int j = 0; j < n_lon; ++j) m.quads.push_back({0, ring(1, j), ring(1, j + 1), ring(1, j + 1)});
    for (int i = 1; i + 1 < n_lat; ++i)
        for (int j = 0; j < n_lon; ++j)
            m.quads.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1)});
    for (int j = 0; j < n_lon; ++j)
        m.quads.push_back({south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j), ring(n_lat - 1, j)});
    // Orient every face outward against the radial direction.
    for (size_t f = 0; f < m.quads.size(); ++f)
        if (dot(m.face_normal(static_cast<int>(f)), m.face_centroid(static_cast<int>(f)) - center) < 0.0)
            std::reverse(m.quads[f].begin(), m.quads[f].end());
    return m;
}

int SurfaceMesh::euler_characteristic() const {
    std::set<std::pair<int, int>> edges;
    for (const auto& q : quads)
        for (int k = 0; k < 4; ++k) {
            const int a = q[k], b = q[(k + 1) % 4];
            if (a != b) edges.emplace(std::min(a, b), std::max(a, b));
        }
    return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) + static_cast<int>(quads.size());
}

std::array<Vec3, 4> SurfaceMesh::corners(int f) const {
    const auto& q = quads.at(f);
    return {vertices[q[0]], vertices[q[1]], vertices[q[2]], vertices[q[3]]};
}

Vec3 SurfaceMesh::face_normal(int f) const {
    const auto c = corners(f);
    return unit(cross(c[2] - c[0], c[3] - c[1]));
}

Vec3 SurfaceMesh::face_centroid(int f) const {
    const auto c = corners(f);
    return 0.25 * (c[0] + c[1] + c[2] + c[3]);
}

int SurfaceMesh::nearest_face(const Vec3& p) const {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int f = 0; f < static_cast<int>(quads.size()); ++f) {
        const double d = distance(face_centroid(f), p);
        if (d < bd) {
            bd = d;
            best = f;
        }
    }
    return best;
}

AuditResult surface_audit(const QmpBuilder& build, const SurfaceMesh& mesh, const std::vector<Vec3>& punctures,
                          double loop_radius) {
    AuditResult r;
    r.punctures = punctures;
    if (punctures.empty()) return r;
    if (mesh.quads.empty()) throw ValidationError("surface audit needs a non-empty mesh");

    double spacing = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < punctures.size(); ++i)
        for (size_t j = i + 1; j < punctures.size(); ++j) spacing = std::min(spacing, distance(punctures[i], punctures[j]));
    Vec3 lo = mesh.vertices.front(), hi = lo;
    for (const auto& v : mesh.vertices)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], v[a]);
            hi[a] = std::max(hi[a], v[a]);
        }
    const double size = distance(lo, hi);
    double radius = loop_radius > 0.0 ? loop_radius : std::min(0.25 * spacing, 1e-2 * size);
    if (std::isfinite(spacing) && radius > 0.4 * spacing) radius = 0.4 * spacing;
    if (!(radius > 1e-9 * std::max(size, 1e-300)))
        throw NumericalError("punctures too close to isolate with a loop; refine the mesh", {{"spacing", spacing}});
    r.loop_radius = radius;

    for (const auto& p : punctures) {
        const Vec3 normal = mesh.face_normal(mesh.nearest_face(p));
        const double d = discriminant_number(build, ParameterPath::circle(p, normal, radius, 64), DiscriminantKind::PF);
        r.raw.push_back(d);
        const int k = static_cast<int>(std::lround(d));
        r.pfdn.push_back(k);
        r.sum += k;
    }
    return r;
}

}  // namespace excepta
