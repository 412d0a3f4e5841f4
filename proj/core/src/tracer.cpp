#include "excepta/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace excepta {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double disc_scale(const ComplexVector& w) {
    double s = 1.0;
    for (const auto& x : w) s = std::max(s, std::abs(x));
    return s * s;
}

// Δ₊ and its natural scale, or nullopt when the gap is closed.
struct DiscSample {
    cplx d = 0.0;
    double scale = 1.0;
    bool ok = false;
};

DiscSample sample_disc(const QmpBuilder& build, const Vec3& g) {
    DiscSample s;
    const ComplexVector w = eigenfrequencies(build(g));
    if (!pf_gap_open(w)) return s;
    const ComplexVector pf = pf_frequencies(w);
    s.d = discriminant(pf);
    s.scale = disc_scale(pf);
    s.ok = true;
    return s;
}

std::vector<Vec3> orthonormalize(const std::vector<Vec3>& dirs) {
    std::vector<Vec3> out;
    for (Vec3 d : dirs) {
        for (const auto& e : out) d = d - dot(d, e) * e;
        const double n = norm(d);
        if (n > 1e-12) out.push_back((1.0 / n) * d);
    }
    return out;
}

// Minimum-norm solution of J x = r for a 2×d real J.
std::vector<double> pinv_solve(const std::vector<std::array<double, 2>>& Jt, const std::array<double, 2>& r) {
    const int d = static_cast<int>(Jt.size());
    double a = 0, b = 0, c = 0;  // JJᵀ = [[a, b], [b, c]]
    for (const auto& col : Jt) {
        a += col[0] * col[0];
        b += col[0] * col[1];
        c += col[1] * col[1];
    }
    const double tr = a + c;
    const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
    const double l1 = 0.5 * tr + disc, l2 = 0.5 * tr - disc;
    std::vector<double> x(d, 0.0);
    if (!(l1 > 0.0)) return x;
    // Eigenvectors of the symmetric 2×2.
    std::array<double, 2> e1, e2;
    if (std::abs(b) > 1e-300) {
        e1 = {l1 - c, b};
    } else {
        e1 = a >= c ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
    }
    const double n1 = std::hypot(e1[0], e1[1]);
    e1 = {e1[0] / n1, e1[1] / n1};
    e2 = {-e1[1], e1[0]};
    std::array<double, 2> y{0.0, 0.0};  // (JJᵀ)⁺ r
    const double p1 = (e1[0] * r[0] + e1[1] * r[1]) / l1;
    y = {p1 * e1[0], p1 * e1[1]};
    if (l2 > 1e-14 * l1) {
        const double p2 = (e2[0] * r[0] + e2[1] * r[1]) / l2;
        y = {y[0] + p2 * e2[0], y[1] + p2 * e2[1]};
    }
    for (int i = 0; i < d; ++i) x[i] = Jt[i][0] * y[0] + Jt[i][1] * y[1];
    return x;
}

ComplexVector smallest_right_vector(const ComplexMatrix& a) {
    const SVD s = svd(a);
    ComplexVector v(a.cols());
    const int k = a.cols() - 1;
    for (int i = 0; i < a.cols(); ++i) v[i] = s.v(i, k);
    return v;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double l2 = dot(ab, ab);
    const double t = l2 > 0.0 ? std::clamp(dot(p - a, ab) / l2, 0.0, 1.0) : 0.0;
    return distance(p, a + t * ab);
}

double polyline_distance(const Vec3& p, const std::vector<Vec3>& poly) {
    if (poly.size() == 1) return distance(p, poly.front());
    double d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < poly.size(); ++i) d = std::min(d, point_segment_distance(p, poly[i], poly[i + 1]));
    return d;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

bool lex_less(const Vec3& a, const Vec3& b) {
    const double tol = 1e-12;
    for (int i = 0; i < 3; ++i)
        if (std::abs(a[i] - b[i]) > tol) return a[i] < b[i];
    return false;
}

}  // namespace

PlaneSpec PlaneSpec::coordinate(int axis, double value, std::string tag) {
    if (axis < 0 || axis > 2) throw ValidationError("plane axis must be 0, 1 or 2");
    PlaneSpec p;
    p.origin = {0, 0, 0};
    p.origin[axis] = value;
    p.u = {0, 0, 0};
    p.v = {0, 0, 0};
    p.u[(axis + 1) % 3] = 1.0;
    p.v[(axis + 2) % 3] = 1.0;
    p.tag = std::move(tag);
    return p;
}

PlaneSpec PlaneSpec::oblique_kappa(double slope, std::string tag) {
    PlaneSpec p;
    p.origin = {0, 0, 0};
    p.u = unit(Vec3{1.0, 0.0, slope});
    p.v = {0, 1, 0};
    p.tag = std::move(tag);
    return p;
}

bool Box::contains(const Vec3& p, double slack) const {
    for (int i = 0; i < 3; ++i)
        if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
    return true;
}

Subspace Subspace::full(const Vec3& origin) { return {origin, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }
Subspace Subspace::in_plane(const PlaneSpec& plane, const Vec3& origin) { return {origin, {plane.u, plane.v}}; }
Subspace Subspace::along(const Vec3& origin, const Vec3& dir) { return {origin, {dir}}; }

cplx pf_discriminant_at(const QmpBuilder& build, const Vec3& g) { return pf_discriminant(build(g)); }

std::vector<Candidate> scan_plane(const QmpBuilder& build, const PlaneSpec& plane, const Window2& w, int na, int nb) {
    if (na < 16 || nb < 16) throw ValidationError("scan grid must be at least 16×16");
    if (!(w.a_hi > w.a_lo && w.b_hi > w.b_lo)) throw ValidationError("scan window is empty");
    std::vector<std::vector<DiscSample>> g(na + 1, std::vector<DiscSample>(nb + 1));
    std::vector<double> mags;
    for (int i = 0; i <= na; ++i)
        for (int j = 0; j <= nb; ++j) {
            const double a = w.a_lo + (w.a_hi - w.a_lo) * i / na;
            const double b = w.b_lo + (w.b_hi - w.b_lo) * j / nb;
            g[i][j] = sample_disc(build, plane.at(a, b));
            if (g[i][j].ok) mags.push_back(std::abs(g[i][j].d));
        }
    double median = 0.0;
    if (!mags.empty()) {
        std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
        median = mags[mags.size() / 2];
    }

    // Per-cell minimum corner magnitude; +inf marks skipped cells.
    std::vector<std::vector<double>> score(na, std::vector<double>(nb, std::numeric_limits<double>::infinity()));
    std::vector<Candidate> out;
    std::vector<std::vector<char>> flagged(na, std::vector<char>(nb, 0));
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            const DiscSample* c[4] = {&g[i][j], &g[i + 1][j], &g[i + 1][j + 1], &g[i][j + 1]};
            bool ok = true;
            for (auto* s : c) ok = ok && s->ok;
            if (!ok) continue;
            double smin = std::numeric_limits<double>::infinity();
            bool real = true;
            int pos = 0, neg = 0;
            double wind = 0.0;
            for (int k = 0; k < 4; ++k) {
                const cplx d = c[k]->d;
                smin = std::min(smin, std::abs(d));
                if (std::abs(d.imag()) > 1e-8 * std::abs(d) + 1e-14 * c[k]->scale) real = false;
                if (d.real() > 0.0) ++pos;
                if (d.real() < 0.0) ++neg;
                const cplx dn = c[(k + 1) % 4]->d;
                if (d != 0.0 && dn != 0.0) wind += std::arg(dn / d);
            }
            score[i][j] = smin;
            const double a = w.a_lo + (w.a_hi - w.a_lo) * (i + 0.5) / na;
            const double b = w.b_lo + (w.b_hi - w.b_lo) * (j + 0.5) / nb;
            Candidate cand{plane.at(a, b), a, b, smin, ""};
            if (real && pos > 0 && neg > 0) {
                cand.reason = "sign";
            } else if (std::lround(wind / kTwoPi) != 0) {
                cand.reason = "winding";
            }
            if (!cand.reason.empty()) {
                flagged[i][j] = 1;
                out.push_back(cand);
            }
        }
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            if (flagged[i][j] || !std::isfinite(score[i][j])) continue;
            if (!(score[i][j] < 1e-3 * median)) continue;
            bool is_min = true;
            for (int di = -1; di <= 1 && is_min; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ii = i + di, jj = j + dj;
                    if ((di || dj) && ii >= 0 && jj >= 0 && ii < na && jj < nb && score[ii][jj] < score[i][j]) {
                        is_min = false;
                        break;
                    }
                }
            if (!is_min) continue;
            const double a = w.a_lo + (w.a_hi - w.a_lo) * (i + 0.5) / na;
            const double b = w.b_lo + (w.b_hi - w.b_lo) * (j + 0.5) / nb;
            out.push_back({plane.at(a, b), a, b, score[i][j], "minimum"});
        }
    return out;
}

RefinedEP refine_ep(const QmpBuilder& build, const Vec3& seed, const Subspace& sub, const RefineOptions& opts) {
    const std::vector<Vec3> e = orthonormalize(sub.dirs);
    if (e.empty() || e.size() > 3) throw ValidationError("refine_ep needs 1 to 3 independent directions");
    const int d = static_cast<int>(e.size());
    Vec3 x = sub.origin;
    for (const auto& ei : e) x = x + dot(seed - sub.origin, ei) * ei;

    auto eval = [&](const Vec3& p) {
        const DiscSample s = sample_disc(build, p);
        if (!s.ok) throw NumericalError("no real line gap during EP refinement", {{"g0", p[0]}, {"g1", p[1]}, {"g2", p[2]}});
        return s;
    };

    RefinedEP r;
    DiscSample f = eval(x);
    double last_step = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        const double rel = std::abs(f.d) / f.scale;
        if (rel < opts.tol_disc && last_step < opts.tol_step) break;
        const double h = opts.fd_step * std::max(1.0, norm(x));
        std::vector<std::array<double, 2>> Jt(d);
        for (int i = 0; i < d; ++i) {
            const cplx dp = eval(x + h * e[i]).d;
            const cplx dm = eval(x - h * e[i]).d;
            const cplx g = (dp - dm) / (2.0 * h);
            Jt[i] = {g.real(), g.imag()};
        }
        const std::vector<double> sol = pinv_solve(Jt, {-f.d.real(), -f.d.imag()});
        Vec3 step{0, 0, 0};
        for (int i = 0; i < d; ++i) step = step + sol[i] * e[i];

        auto try_direction = [&](Vec3 dir) {
            double lam = 1.0;
            for (int k = 0; k < 40; ++k, lam *= 0.5) {
                const Vec3 xn = x + lam * dir;
                const DiscSample fn = sample_disc(build, xn);
                if (fn.ok && std::abs(fn.d) < std::abs(f.d)) {
                    last_step = norm(lam * dir);
                    x = xn;
                    f = fn;
                    return true;
                }
            }
            return false;
        };
        if (norm(step) > 0.0 && try_direction(step)) continue;
        // Steepest descent on |Δ|² as the fallback.
        Vec3 grad{0, 0, 0};
        for (int i = 0; i < d; ++i) grad = grad + (Jt[i][0] * f.d.real() + Jt[i][1] * f.d.imag()) * e[i];
        const double gn = norm(grad);
        if (gn > 0.0) {
            const Vec3 dir = (-std::abs(f.d) * std::abs(f.d) / (gn * gn)) * grad;
            if (try_direction(dir)) continue;
        }
        if (rel < opts.tol_disc) {
            last_step = 0.0;
            break;
        }
        throw NumericalError("EP refinement stagnated",
                             {{"g0", x[0]}, {"g1", x[1]}, {"g2", x[2]}, {"rel_disc", rel}, {"iterations", double(it)}});
    }
    const double rel = std::abs(f.d) / f.scale;
    if (!(rel < opts.tol_disc))
        throw NumericalError("EP refinement did not converge",
                             {{"g0", x[0]}, {"g1", x[1]}, {"g2", x[2]}, {"rel_disc", rel}, {"iterations", double(it)}});
    r.point = x;
    r.disc = f.d;
    r.iterations = it;

    // Coalescence test on the closest PF pair.
    const QMP q = build(x);
    const ComplexVector pf = pf_frequencies(q);
    size_t ia = 0, ib = 1;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pf.size(); ++i)
        for (size_t j = i + 1; j < pf.size(); ++j)
            if (std::abs(pf[i] - pf[j]) < best) {
                best = std::abs(pf[i] - pf[j]);
                ia = i;
                ib = j;
            }
    if (pf.size() >= 2) {
        const cplx wbar = 0.5 * (pf[ia] + pf[ib]);
        const double ref = q.M().norm_fro() * std::norm(wbar) + q.K().norm_fro() + q.G().norm_fro() * std::abs(wbar);
        const SVD s = svd(q.evaluate(wbar));
        r.rank_gap = q.dim() >= 2 ? s.s[q.dim() - 2] / ref : 0.0;
        r.overlap = std::abs(dot(normalized(smallest_right_vector(q.evaluate(pf[ia]))),
                                 normalized(smallest_right_vector(q.evaluate(pf[ib])))));
        r.exceptional = r.overlap > 1.0 - 1e-6 && r.rank_gap > 1e-4;
    }
    if (opts.check_exceptional && !r.exceptional)
        throw NumericalError("not exceptional: degenerate eigenvectors stay independent (diabolic point)",
                             {{"g0", x[0]}, {"g1", x[1]}, {"g2", x[2]}, {"overlap", r.overlap}, {"rank_gap", r.rank_gap}});
    return r;
}

Vec3 orientation_field(const QmpBuilder& build, const Vec3& g, double h) {
    Vec3 gre{0, 0, 0}, gim{0, 0, 0};
    for (int i = 0; i < 3; ++i) {
        Vec3 e{0, 0, 0};
        e[i] = h;
        const cplx dd = (pf_discriminant_at(build, g + e) - pf_discriminant_at(build, g - e)) / (2.0 * h);
        gre[i] = dd.real();
        gim[i] = dd.imag();
    }
    return cross(gre, gim);
}

const char* edge_end_name(EdgeEnd e) {
    switch (e) {
        case EdgeEnd::Open: return "open";
        case EdgeEnd::Window: return "window";
        case EdgeEnd::Junction: return "junction";
        case EdgeEnd::Closed: return "closed";
    }
    return "open";
}

namespace {

struct TraceContext {
    const QmpBuilder& build;
    const TraceOptions& opts;
    double h0;

    Vec3 project_in_plane(const Vec3& v) const {
        if (!opts.plane) return v;
        const Vec3 n = opts.plane->normal();
        return v - dot(v, n) * n;
    }

    Vec3 tangent(const Vec3& x) const { return project_in_plane(orientation_field(build, x, 1e-6 * std::max(1.0, h0 * 100))); }

    RefinedEP correct(const Vec3& xp, const Vec3& dir) const {
        RefineOptions ro = opts.refine;
        ro.check_exceptional = false;
        Subspace sub;
        sub.origin = xp;
        if (opts.plane) {
            sub.dirs = {unit(cross(opts.plane->normal(), dir))};
        } else {
            Vec3 e1, e2;
            orthonormal_frame(dir, e1, e2);
            sub.dirs = {e1, e2};
        }
        return refine_ep(build, xp, sub, ro);
    }

    double rel_disc(const Vec3& x) const {
        const DiscSample s = sample_disc(build, x);
        return s.ok ? std::abs(s.d) / s.scale : std::numeric_limits<double>::infinity();
    }

    // Locates the orientation reversal between a (sign sa) and b by bisection,
    // then polishes onto a nearby junction line.
    Vec3 locate_junction(Vec3 a, Vec3 b, int sa, const Vec3& dir) const {
        for (int it = 0; it < 60 && distance(a, b) > 1e-11 * std::max(1.0, norm(a)); ++it) {
            Vec3 m = 0.5 * (a + b);
            try {
                m = correct(m, dir).point;
            } catch (const NumericalError&) {
            }
            const int sm = sign_of(dot(tangent(m), dir));
            if (sm == sa)
                a = m;
            else
                b = m;
        }
        Vec3 node = 0.5 * (a + b);
        double best = 3.0 * h0;
        const Line3* line = nullptr;
        for (const auto& l : opts.junction_lines) {
            const Vec3 u = unit(l.dir);
            const Vec3 foot = l.point + dot(node - l.point, u) * u;
            const double dd = distance(foot, node);
            if (dd < best) {
                best = dd;
                line = &l;
            }
        }
        if (line) {
            const Vec3 u = unit(line->dir);
            const Vec3 foot = line->point + dot(node - line->point, u) * u;
            RefineOptions ro = opts.refine;
            ro.check_exceptional = false;
            try {
                node = refine_ep(build, foot, Subspace::along(line->point, u), ro).point;
            } catch (const NumericalError&) {
            }
        }
        return node;
    }

    // Point where segment a→b leaves the window, refined on the exit face.
    std::optional<Vec3> exit_point(const Vec3& a, const Vec3& b) const {
        double lam = 1.0;
        int axis = -1;
        double value = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double d = b[i] - a[i];
            if (d == 0.0) continue;
            for (double bound : {opts.window.lo[i], opts.window.hi[i]}) {
                const double t = (bound - a[i]) / d;
                if (t >= 0.0 && t < lam) {
                    lam = t;
                    axis = i;
                    value = bound;
                }
            }
        }
        if (axis < 0) return std::nullopt;
        Vec3 p = a + lam * (b - a);
        p[axis] = value;
        Vec3 n{0, 0, 0};
        n[axis] = 1.0;
        Subspace sub;
        sub.origin = p;
        if (opts.plane) {
            const Vec3 dir = cross(n, opts.plane->normal());
            if (norm(dir) < 1e-12) return p;
            sub.dirs = {unit(dir)};
        } else {
            Vec3 e1, e2;
            orthonormal_frame(n, e1, e2);
            sub.dirs = {e1, e2};
        }
        RefineOptions ro = opts.refine;
        ro.check_exceptional = false;
        try {
            const Vec3 q = refine_ep(build, p, sub, ro).point;
            if (distance(q, p) < 2.0 * h0) return q;
        } catch (const NumericalError&) {
        }
        return p;
    }
};

}  // namespace

ExceptionalLine trace_half(const QmpBuilder& build, const Vec3& start, const Vec3& direction,
                           const TraceOptions& opts) {
    const double h0 = opts.step > 0.0 ? opts.step : opts.window.diagonal() / 200.0;
    TraceContext ctx{build, opts, h0};
    ExceptionalLine line;
    if (opts.plane) line.plane_tag = opts.plane->tag;
    line.polyline.push_back(start);
    line.start_end = EdgeEnd::Open;

    Vec3 x = start;
    Vec3 t = unit(ctx.project_in_plane(direction));
    if (norm(t) == 0.0) throw ValidationError("trace direction has no component in the plane");
    int sigma = 0;
    double tau_scale = 0.0;
    double max_away = 0.0;
    for (int k = 0; k < opts.max_steps; ++k) {
        const Vec3 tau = ctx.tangent(x);
        tau_scale = std::max(tau_scale, norm(tau));
        Vec3 dir = t;
        if (norm(tau) > 1e-3 * tau_scale && norm(tau) > 0.0) {
            dir = unit(tau);
            if (dot(dir, t) < 0.0) dir = -dir;
        }
        if (sigma == 0 && norm(tau) > 1e-3 * tau_scale) sigma = sign_of(dot(tau, dir));

        double h = h0;
        bool accepted = false;
        Vec3 xc{0, 0, 0};
        for (int halv = 0; halv <= opts.max_halvings; ++halv, h *= 0.5) {
            const Vec3 xp = x + h * dir;
            try {
                xc = ctx.correct(xp, dir).point;
            } catch (const NumericalError&) {
                continue;
            }
            if (distance(xc, xp) > 0.5 * h || dot(xc - x, dir) <= 0.0) continue;
            accepted = true;
            break;
        }
        if (!accepted) {
            line.end_end = EdgeEnd::Open;
            break;
        }
        if (!opts.window.contains(xc)) {
            if (auto p = ctx.exit_point(x, xc)) line.polyline.push_back(*p);
            line.end_end = EdgeEnd::Window;
            break;
        }
        const Vec3 tau_new = ctx.tangent(xc);
        const int s_new = sign_of(dot(tau_new, dir));
        if (sigma != 0 && s_new != 0 && s_new != sigma) {
            line.polyline.push_back(ctx.locate_junction(x, xc, sigma, dir));
            line.end_end = EdgeEnd::Junction;
            break;
        }
        if (sigma == 0 && norm(tau_new) > 1e-3 * std::max(tau_scale, norm(tau_new))) sigma = s_new;
        max_away = std::max(max_away, distance(xc, start));
        if (max_away > 3.0 * h0 && point_segment_distance(start, x, xc) < 0.5 * h0) {
            line.closed = true;
            line.start_end = line.end_end = EdgeEnd::Closed;
            break;
        }
        line.polyline.push_back(xc);
        t = unit(xc - x);
        x = xc;
        if (k + 1 == opts.max_steps) line.end_end = EdgeEnd::Open;
    }
    for (const auto& p : line.polyline) line.max_disc = std::max(line.max_disc, ctx.rel_disc(p));
    return line;
}

ExceptionalLine trace_el(const QmpBuilder& build, const Vec3& start, const TraceOptions& opts) {
    const double h0 = opts.step > 0.0 ? opts.step : opts.window.diagonal() / 200.0;
    TraceContext ctx{build, opts, h0};
    Vec3 tau = ctx.tangent(start);
    // Compare with the field one step away: at a junction τ vanishes.
    double ref = 0.0;
    {
        Vec3 e1, e2;
        orthonormal_frame(opts.plane ? opts.plane->normal() : Vec3{0, 0, 1}, e1, e2);
        for (const Vec3& e : {e1, e2}) {
            try {
                const Vec3 p = ctx.correct(start + h0 * e, e).point;
                ref = std::max(ref, norm(ctx.tangent(p)));
            } catch (const NumericalError&) {
            }
        }
    }
    if (!(norm(tau) > 1e-3 * ref) || norm(tau) == 0.0)
        throw NumericalError("seed sits on a junction; reseed one step away",
                             {{"g0", start[0]}, {"g1", start[1]}, {"g2", start[2]}});
    const Vec3 t0 = unit(tau);
    ExceptionalLine fwd = trace_half(build, start, t0, opts);
    if (fwd.closed) return fwd;
    ExceptionalLine bwd = trace_half(build, start, -t0, opts);
    ExceptionalLine line = fwd;
    line.polyline.assign(bwd.polyline.rbegin(), bwd.polyline.rend());
    line.polyline.insert(line.polyline.end(), fwd.polyline.begin() + 1, fwd.polyline.end());
    line.start_end = bwd.end_end;
    line.end_end = fwd.end_end;
    line.max_disc = std::max(fwd.max_disc, bwd.max_disc);
    return line;
}

int orient_line(const QmpBuilder& build, ExceptionalLine& line, double probe_radius) {
    const auto& p = line.polyline;
    if (p.size() < 2) throw ValidationError("cannot orient a line with fewer than two vertices");
    const size_t i = p.size() / 2;
    const size_t i0 = i > 0 ? i - 1 : 0;
    const size_t i1 = std::min(i + 1, p.size() - 1);
    const Vec3 t = unit(p[i1] - p[i0]);
    double r = probe_radius;
    if (!line.closed) r = std::min(r, 0.3 * std::min(distance(p[i], p.front()), distance(p[i], p.back())));
    if (!(r > 0.0)) throw NumericalError("line too short to place a probe loop");
    const double dn = discriminant_number(build, ParameterPath::circle(p[i], t, r, 64), DiscriminantKind::PF);
    line.probe = dn;
    const long k = std::lround(dn);
    if (std::abs(k) == 1) {
        line.orientation = static_cast<int>(k);
    } else {
        line.orientation = sign_of(dot(orientation_field(build, p[i]), t));
    }
    return line.orientation;
}

ChainGraph assemble_chain(std::vector<ExceptionalLine> edges, double tol) {
    for (auto& e : edges) {
        if (!e.closed && lex_less(e.back(), e.front())) {
            std::reverse(e.polyline.begin(), e.polyline.end());
            std::swap(e.start_end, e.end_end);
            e.orientation = -e.orientation;
        }
    }
    std::stable_sort(edges.begin(), edges.end(), [](const ExceptionalLine& a, const ExceptionalLine& b) {
        if (lex_less(a.front(), b.front())) return true;
        if (lex_less(b.front(), a.front())) return false;
        return lex_less(a.back(), b.back());
    });

    ChainGraph g;
    g.edges = edges;
    auto node_for = [&](const Vec3& p) {
        for (size_t n = 0; n < g.nodes.size(); ++n)
            if (distance(g.nodes[n].point, p) < tol) return static_cast<int>(n);
        g.nodes.push_back({p, 0, 0});
        return static_cast<int>(g.nodes.size()) - 1;
    };
    // Open ends become nodes only when they meet another edge's end.
    auto meets_other = [&](size_t self, const Vec3& p) {
        for (size_t j = 0; j < edges.size(); ++j) {
            if (j == self || edges[j].closed) continue;
            if (distance(edges[j].front(), p) < tol || distance(edges[j].back(), p) < tol) return true;
        }
        return false;
    };
    for (size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        int a = -1, b = -1;
        if (!e.closed) {
            if (e.start_end == EdgeEnd::Junction || (e.start_end == EdgeEnd::Open && meets_other(k, e.front())))
                a = node_for(e.front());
            if (e.end_end == EdgeEnd::Junction || (e.end_end == EdgeEnd::Open && meets_other(k, e.back())))
                b = node_for(e.back());
        }
        g.edge_nodes.emplace_back(a, b);
        const int from = e.orientation >= 0 ? a : b;
        const int to = e.orientation >= 0 ? b : a;
        if (e.orientation == 0) continue;
        if (from >= 0) ++g.nodes[from].out;
        if (to >= 0) ++g.nodes[to].in;
    }
    for (size_t n = 0; n < g.nodes.size(); ++n)
        if (!g.nodes[n].balanced()) g.unbalanced.push_back(static_cast<int>(n));
    g.valid = g.unbalanced.empty();
    return g;
}

ChainGraph trace_network(const QmpBuilder& build, const std::vector<NetworkSeed>& seeds, const TraceOptions& opts) {
    const double h0 = opts.step > 0.0 ? opts.step : opts.window.diagonal() / 200.0;
    const double tol = 2.0 * h0;
    std::vector<ExceptionalLine> edges;
    struct Pass {
        Vec3 node;
        Vec3 dir;
        std::optional<PlaneSpec> plane;
    };
    std::deque<Pass> queue;

    auto covered = [&](const Vec3& p) {
        for (const auto& e : edges)
            if (polyline_distance(p, e.polyline) < tol) return true;
        return false;
    };
    auto enqueue_ends = [&](const ExceptionalLine& e, const std::optional<PlaneSpec>& plane) {
        const auto& p = e.polyline;
        if (p.size() < 2) return;
        if (e.end_end == EdgeEnd::Junction) queue.push_back({p.back(), unit(p.back() - p[p.size() - 2]), plane});
        if (e.start_end == EdgeEnd::Junction) queue.push_back({p.front(), unit(p.front() - p[1]), plane});
    };

    for (const auto& seed : seeds) {
        // Seeds only need to be near a line; they are refined onto it first.
        NetworkSeed s = seed;
        try {
            RefineOptions ro = opts.refine;
            ro.check_exceptional = false;
            const Subspace sub = s.plane ? Subspace::in_plane(*s.plane, s.plane->origin) : Subspace::full(s.point);
            s.point = refine_ep(build, s.point, sub, ro).point;
        } catch (const NumericalError&) {
            continue;
        }
        if (covered(s.point)) continue;
        TraceOptions o = opts;
        o.plane = s.plane;
        ExceptionalLine line;
        try {
            line = trace_el(build, s.point, o);
        } catch (const NumericalError&) {
            // Junction seeds: move one step within the plane and refine.
            bool ok = false;
            Vec3 e1, e2;
            orthonormal_frame(s.plane ? s.plane->normal() : Vec3{0, 0, 1}, e1, e2);
            for (const Vec3& e : {e1, e2, -e1, -e2}) {
                try {
                    Subspace sub = s.plane ? Subspace::in_plane(*s.plane, s.point) : Subspace::full(s.point);
                    if (sub.dirs.size() == 3) sub.dirs = {e1, e2};
                    RefineOptions ro = opts.refine;
                    ro.check_exceptional = false;
                    const Vec3 p = refine_ep(build, s.point + h0 * e, sub, ro).point;
                    if (covered(p)) {
                        ok = true;
                        break;
                    }
                    line = trace_el(build, p, o);
                    ok = true;
                    break;
                } catch (const NumericalError&) {
                }
            }
            if (!ok || line.polyline.empty()) continue;
        }
        enqueue_ends(line, s.plane);
        edges.push_back(std::move(line));
    }

    while (!queue.empty()) {
        const Pass ps = queue.front();
        queue.pop_front();
        bool done = false;
        for (const auto& e : edges) {
            const auto& p = e.polyline;
            if (p.size() < 2) continue;
            if (distance(p.front(), ps.node) < tol && dot(unit(p[1] - p.front()), ps.dir) > 0.7) done = true;
            if (distance(p.back(), ps.node) < tol && dot(unit(p[p.size() - 2] - p.back()), ps.dir) > 0.7) done = true;
            if (done) break;
        }
        if (done) continue;
        TraceOptions o = opts;
        o.plane = ps.plane;
        ExceptionalLine line = trace_half(build, ps.node, ps.dir, o);
        line.start_end = EdgeEnd::Junction;
        if (line.polyline.size() < 2) continue;
        enqueue_ends(line, ps.plane);
        edges.push_back(std::move(line));
    }

    for (auto& e : edges) {
        if (e.polyline.size() >= 3) orient_line(build, e, 3.0 * h0);
    }
    return assemble_chain(std::move(edges), tol);
}

std::vector<Vec3> find_punctures(const QmpBuilder& build, const SurfaceMesh& mesh, int samples_per_edge) {
    std::vector<Vec3> out;
    Vec3 lo = mesh.vertices.front(), hi = lo;
    for (const auto& v : mesh.vertices)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], v[a]);
            hi[a] = std::max(hi[a], v[a]);
        }
    const double size = distance(lo, hi);

    // Unwrapped winding of Δ₊ along a→b, bisecting large phase jumps.
    struct Walker {
        const QmpBuilder& build;
        bool ok = true;
        double wind(const Vec3& a, cplx da, const Vec3& b, cplx db, int depth) {
            const double inc = std::arg(db / da);
            if (std::abs(inc) < M_PI / 4 || depth > 14) return inc;
            const Vec3 m = 0.5 * (a + b);
            const DiscSample s = sample_disc(build, m);
            if (!s.ok || s.d == 0.0) {
                ok = false;
                return 0.0;
            }
            return wind(a, da, m, s.d, depth + 1) + wind(m, s.d, b, db, depth + 1);
        }
    };

    for (int f = 0; f < static_cast<int>(mesh.quads.size()); ++f) {
        const auto c = mesh.corners(f);
        std::vector<Vec3> loop;
        for (int k = 0; k < 4; ++k) {
            const Vec3& a = c[k];
            const Vec3& b = c[(k + 1) % 4];
            if (a == b) continue;
            for (int s = 0; s < samples_per_edge; ++s) loop.push_back(a + (static_cast<double>(s) / samples_per_edge) * (b - a));
        }
        std::vector<cplx> d(loop.size());
        bool ok = true;
        for (size_t i = 0; i < loop.size() && ok; ++i) {
            const DiscSample s = sample_disc(build, loop[i]);
            ok = s.ok && s.d != 0.0;
            d[i] = s.d;
        }
        if (!ok) continue;
        Walker w{build};
        double total = 0.0;
        for (size_t i = 0; i < loop.size(); ++i) {
            const size_t j = (i + 1) % loop.size();
            total += w.wind(loop[i], d[i], loop[j], d[j], 0);
        }
        if (!w.ok || std::lround(total / kTwoPi) == 0) continue;
        const Vec3 centroid = mesh.face_centroid(f);
        Subspace sub{centroid, {c[1] - c[0], c[3] - c[0]}};
        if (norm(cross(sub.dirs[0], sub.dirs[1])) < 1e-14) sub.dirs = {c[1] - c[0], c[2] - c[0]};
        RefineOptions ro;
        ro.check_exceptional = false;
        try {
            const Vec3 p = refine_ep(build, centroid, sub, ro).point;
            double diam = 0.0;
            for (int k = 0; k < 4; ++k) diam = std::max(diam, distance(c[k], centroid));
            if (distance(p, centroid) > 1.5 * diam) continue;
            bool dup = false;
            for (const auto& q : out) dup = dup || distance(q, p) < 1e-6 * size;
            if (!dup) out.push_back(p);
        } catch (const NumericalError&) {
        }
    }
    return out;
}

}  // namespace excepta
