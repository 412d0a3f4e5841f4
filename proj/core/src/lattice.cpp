#include "excepta/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.hpp"

namespace excepta {

namespace {

struct ChainForm {
    double cos_ky;
    double root;  // √(a − γ²/(4m))
};

ChainForm chain_form(const LatticeParams& p) {
    p.validate();
    if (p.chi == 0.0) throw ValidationError("no chain point on this axis for these parameters");
    const double a = p.kappa0 + p.kappa1 + p.kappa2 + 4.0 * p.chi;
    const double r = a - p.gamma * p.gamma / (4.0 * p.m);
    if (r < 0.0) throw ValidationError("no chain point on this axis for these parameters");
    const double root = std::sqrt(r);
    const double c = (-(p.kappa1 + p.kappa2) + p.gamma / std::sqrt(p.m) * root) / (4.0 * p.chi);
    if (!(c >= -1.0 && c <= 1.0)) throw ValidationError("no chain point on this axis for these parameters");
    return {c, root};
}

ComplexVector pf_at(const QmpBuilder& build, const Vec3& k) {
    const ComplexVector w = eigenfrequencies(build(k));
    if (!pf_gap_open(w)) return {};
    return pf_frequencies(w);
}

double distance_to_symmetry_planes(const Vec3& k) {
    double best = std::numeric_limits<double>::infinity();
    for (double x : k) best = std::min({best, std::abs(x), std::abs(M_PI - std::abs(x))});
    return best;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

}  // namespace

Vec3 chain_point_coords(const LatticeParams& p) { return {0.0, std::acos(chain_form(p).cos_ky), 0.0}; }

double chain_point_dgamma(const LatticeParams& p) {
    const ChainForm f = chain_form(p);
    const double s = std::sqrt(1.0 - f.cos_ky * f.cos_ky);
    if (s == 0.0) throw NumericalError("chain point sits at ky = 0 or π; derivative undefined");
    const double dc = (f.root - p.gamma * p.gamma / (4.0 * p.m * f.root)) / (std::sqrt(p.m) * 4.0 * p.chi);
    return -dc / s;
}

double refine_chain_point(const LatticeParams& p, double ky_start) {
    const QmpBuilder build = lattice_builder(p);
    const RefinedEP r = refine_ep(build, {0.0, ky_start, 0.0}, Subspace::along({0, 0, 0}, {0, 1, 0}));
    return r.point[1];
}

int BandField::flagged_count() const {
    int n = 0;
    for (const auto& row : flagged)
        for (char f : row) n += f;
    return n;
}

double BandField::min_abs_discriminant() const {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nx(); ++i)
        for (int j = 0; j < nz(); ++j)
            if (!flagged[i][j]) best = std::min(best, std::abs(discriminant(omegas[i][j])));
    return best;
}

BandField band_slice(const LatticeParams& p, double ky, const Window2& w, int n_x, int n_z) {
    if (n_x < 32 || n_z < 32) throw ValidationError("band slice grid must be at least 32×32");
    if (!(w.a_hi > w.a_lo && w.b_hi > w.b_lo)) throw ValidationError("band slice window is empty");
    const QmpBuilder build = lattice_builder(p);
    BandField bf;
    bf.ky = ky;
    bf.kx = linspace(w.a_lo, w.a_hi, n_x);
    bf.kz = linspace(w.b_lo, w.b_hi, n_z);
    bf.omegas.assign(n_x, std::vector<ComplexVector>(n_z));
    bf.flagged.assign(n_x, std::vector<char>(n_z, 0));
    for (int i = 0; i < n_x; ++i)
        for (int j = 0; j < n_z; ++j) {
            bf.omegas[i][j] = pf_at(build, {bf.kx[i], ky, bf.kz[j]});
            if (bf.omegas[i][j].size() != 2) bf.flagged[i][j] = 1;
        }

    auto match = [&](int i, int j, int pi, int pj) {
        ComplexVector& cur = bf.omegas[i][j];
        const ComplexVector& prev = bf.omegas[pi][pj];
        if (bf.flagged[i][j] || prev.size() != 2) return;
        const double keep = std::norm(cur[0] - prev[0]) + std::norm(cur[1] - prev[1]);
        const double swap = std::norm(cur[1] - prev[0]) + std::norm(cur[0] - prev[1]);
        if (swap < keep) std::swap(cur[0], cur[1]);
        const double jump = std::sqrt(std::min(keep, swap));
        // Matching is ambiguous when the bands are closer than the step change.
        if (std::abs(cur[0] - cur[1]) < 2.0 * jump) bf.flagged[i][j] = 1;
    };
    for (int i = 0; i < n_x; ++i) {
        if (i > 0) match(i, 0, i - 1, 0);
        for (int j = 1; j < n_z; ++j) match(i, j, i, j - 1);
    }
    return bf;
}

CrossingSlopes crossing_slopes(const LatticeParams& p, const Vec3& k, double h) {
    const QmpBuilder build = lattice_builder(p);
    auto slope = [&](const Vec3& e) {
        const ComplexVector a = pf_at(build, k + h * e);
        const ComplexVector b = pf_at(build, k - h * e);
        if (a.size() != 2 || b.size() != 2) throw NumericalError("no real line gap next to the crossing");
        // Straight branches through k have a(+h) + b(−h) equal for both bands.
        const double keep = std::abs((a[0] + b[0]) - (a[1] + b[1]));
        const double swap = std::abs((a[0] + b[1]) - (a[1] + b[0]));
        const cplx dm = keep <= swap ? b[0] - b[1] : b[1] - b[0];
        return ((a[0] - a[1]) - dm) / (2.0 * h);
    };
    return {slope({1, 0, 0}), slope({0, 0, 1})};
}

LatticeNetwork lattice_network(const LatticeParams& p, const NetworkOptions& opts) {
    LatticeNetwork out;
    out.chain_point = chain_point_coords(p);
    const double ky0 = out.chain_point[1];
    const QmpBuilder build = lattice_builder(p);

    TraceOptions to;
    to.window.lo = {-opts.half_kx, ky0 - opts.half_ky, -opts.half_kz};
    to.window.hi = {opts.half_kx, ky0 + opts.half_ky, opts.half_kz};
    to.step = opts.step;
    to.junction_lines = {{{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}};

    std::vector<NetworkSeed> seeds;
    const PlaneSpec px = PlaneSpec::coordinate(0, 0.0, "kx=0");  // (ky, kz)
    const PlaneSpec pz = PlaneSpec::coordinate(2, 0.0, "kz=0");  // (kx, ky)
    const Window2 wx{ky0 - opts.half_ky, ky0 + opts.half_ky, -opts.half_kz, opts.half_kz};
    const Window2 wz{-opts.half_kx, opts.half_kx, ky0 - opts.half_ky, ky0 + opts.half_ky};
    for (const auto& [plane, win] : {std::pair{px, wx}, std::pair{pz, wz}}) {
        for (const Candidate& c : scan_plane(build, plane, win, opts.scan, opts.scan)) {
            try {
                const RefinedEP r = refine_ep(build, c.point, Subspace::in_plane(plane, plane.origin));
                if (to.window.contains(r.point)) seeds.push_back({r.point, std::nullopt});
            } catch (const NumericalError&) {
            }
        }
    }
    // Seeds far from the node first, so lines are entered away from the junction.
    std::stable_sort(seeds.begin(), seeds.end(), [&](const NetworkSeed& a, const NetworkSeed& b) {
        return distance(a.point, out.chain_point) > distance(b.point, out.chain_point);
    });
    out.graph = trace_network(build, seeds, to);
    for (const auto& e : out.graph.edges)
        for (const auto& v : e.polyline) out.plane_residual = std::max(out.plane_residual, distance_to_symmetry_planes(v));
    return out;
}

void WavepacketSpec::validate() const {
    if (!(q > 0.0)) throw ValidationError("wavepacket: q must be positive");
    if (!(kmax > 0.0 && kmax <= 2.0 * M_PI)) throw ValidationError("wavepacket: kmax must lie in (0, 2π]");
    if (nx < 4 || nz < 4) throw ValidationError("wavepacket: grid must have at least 4 samples per axis");
    if (nx % 2 || nz % 2) throw ValidationError("wavepacket: grid sizes must be even so no sample sits on the chain point");
}

double WavepacketSpec::amplitude(double kx, double kz) const {
    const double half = 0.5 * kmax + 1e-15;
    if (std::abs(kx) > half || std::abs(kz) > half) return 0.0;
    return std::exp(-(kx * kx + kz * kz) / (4.0 * q * q));
}

WavepacketResult evolve_wavepacket(const LatticeParams& p, const WavepacketSpec& spec, const std::vector<double>& times,
                                   int lx, int lz, int jobs, double amplitude_scale) {
    spec.validate();
    if (lx < 8 || lz < 8 || lx % 2 || lz % 2) throw ValidationError("wavepacket: slab sizes must be even and ≥ 8");
    if (times.empty()) throw ValidationError("wavepacket: no output times");
    WavepacketResult res;
    res.chain_point = chain_point_coords(p);
    const double ky = res.chain_point[1];
    const QmpBuilder build = lattice_builder(p);

    const CrossingSlopes cs = crossing_slopes(p, res.chain_point);
    const double alpha = std::abs(cs.d_kz.real());
    const double beta = std::abs(cs.d_kx.imag());

    const auto kx = linspace(-0.5 * spec.kmax, 0.5 * spec.kmax, spec.nx);
    const auto kz = linspace(-0.5 * spec.kmax, 0.5 * spec.kmax, spec.nz);
    auto weights = [](const std::vector<double>& k) {
        std::vector<double> w(k.size(), k[1] - k[0]);
        w.front() *= 0.5;
        w.back() *= 0.5;
        return w;
    };
    const auto wx = weights(kx), wz = weights(kz);

    // Per k: branch-labelled frequencies and unit right vectors.
    const int nk = spec.nx * spec.nz;
    std::vector<std::array<cplx, 2>> om(nk);
    std::vector<std::array<FieldComponents, 2>> vec(nk);
    detail::parallel_for(spec.nx, jobs, [&](int i) {
        for (int j = 0; j < spec.nz; ++j) {
            const Spectrum s = solve(build({kx[i], ky, kz[j]}));
            const auto pf = pf_bands(s);
            if (pf.size() != 2) throw NumericalError("wavepacket: no real line gap inside the k window");
            const cplx d = pf[0].omega - pf[1].omega;
            const cplx ref(alpha * kz[j], beta * kx[i]);
            const bool keep = (d * std::conj(ref)).real() > 0.0;
            for (int b = 0; b < 2; ++b) {
                const EigenPair& e = pf[keep ? b : 1 - b];
                ComplexVector v(4);
                v[0] = e.right[0];
                v[1] = e.right[1];
                v[2] = cplx(0.0, -1.0) * e.omega * e.right[0];
                v[3] = cplx(0.0, -1.0) * e.omega * e.right[1];
                v = gauge_fixed(normalized(v));
                om[i * spec.nz + j][b] = e.omega;
                for (int c = 0; c < 4; ++c) vec[i * spec.nz + j][b][c] = v[c];
            }
        }
    });

    {
        const auto pf = pf_frequencies(build({0.5 * spec.kmax, ky, 0.0}));
        res.omega_max = pf[0].imag() >= pf[1].imag() ? pf[0] : pf[1];
    }

    // Separable sums: Ψ(x, z) = Σ_i e^{i kx_i x} Σ_j F_ij e^{i kz_j z}.
    std::vector<cplx> ex(static_cast<size_t>(lx) * spec.nx), ez(static_cast<size_t>(lz) * spec.nz);
    for (int ix = 0; ix < lx; ++ix)
        for (int i = 0; i < spec.nx; ++i) ex[ix * spec.nx + i] = std::polar(wx[i], kx[i] * (ix - lx / 2));
    for (int iz = 0; iz < lz; ++iz)
        for (int j = 0; j < spec.nz; ++j) ez[iz * spec.nz + j] = std::polar(wz[j], kz[j] * (iz - lz / 2));

    std::vector<double> a0(nk);
    for (int i = 0; i < spec.nx; ++i)
        for (int j = 0; j < spec.nz; ++j) a0[i * spec.nz + j] = amplitude_scale * spec.amplitude(kx[i], kz[j]);

    double global_max = 0.0, edge_max = 0.0;
    for (double t : times) {
        WaveField w;
        w.t = t;
        w.lx = lx;
        w.lz = lz;
        for (int b = 0; b < 2; ++b) {
            auto& out = w.band[b];
            out.assign(static_cast<size_t>(lx) * lz, FieldComponents{});
            std::array<std::vector<cplx>, 4> F;
            for (int c = 0; c < 4; ++c) F[c].resize(nk);
            for (int k = 0; k < nk; ++k) {
                const cplx ph = a0[k] == 0.0 ? cplx(0.0) : a0[k] * std::exp(cplx(0.0, -1.0) * om[k][b] * t);
                for (int c = 0; c < 4; ++c) F[c][k] = ph * vec[k][b][c];
            }
            detail::parallel_for(4, jobs, [&](int c) {
                // G = Ex · F, then Ψ = G · Ezᵀ.
                std::vector<cplx> G(static_cast<size_t>(lx) * spec.nz, 0.0);
                for (int ix = 0; ix < lx; ++ix)
                    for (int i = 0; i < spec.nx; ++i) {
                        const cplx e = ex[ix * spec.nx + i];
                        const cplx* f = &F[c][i * spec.nz];
                        cplx* g = &G[ix * spec.nz];
                        for (int j = 0; j < spec.nz; ++j) g[j] += e * f[j];
                    }
                for (int ix = 0; ix < lx; ++ix)
                    for (int iz = 0; iz < lz; ++iz) {
                        cplx s = 0.0;
                        const cplx* g = &G[ix * spec.nz];
                        const cplx* e = &ez[iz * spec.nz];
                        for (int j = 0; j < spec.nz; ++j) s += g[j] * e[j];
                        out[w.index(ix, iz)][c] = s;
                    }
            });
        }
        w.total.resize(w.band[0].size());
        for (size_t s = 0; s < w.total.size(); ++s)
            for (int c = 0; c < 4; ++c) w.total[s][c] = w.band[0][s][c] + w.band[1][s][c];

        auto mag = [&](int ix, int iz) {
            double acc = 0.0;
            for (const cplx& x : w.total[w.index(ix, iz)]) acc += std::norm(x);
            return std::sqrt(acc);
        };
        for (int ix = 0; ix < lx; ++ix)
            for (int iz = 0; iz < lz; ++iz) {
                const double m = mag(ix, iz);
                global_max = std::max(global_max, m);
                if (ix == 0 || iz == 0 || ix == lx - 1 || iz == lz - 1) edge_max = std::max(edge_max, m);
            }
        res.fields.push_back(std::move(w));
    }
    res.boundary_ratio = global_max > 0.0 ? edge_max / global_max : 0.0;
    res.boundary_warning = res.boundary_ratio >= 1e-6;
    return res;
}

PulseMetrics pulse_metrics(const WaveField& w, int band, double a_ref) {
    if (band < 0 || band > 2) throw ValidationError("pulse metrics: band must be 0 (total), 1 or 2");
    if (!(a_ref > 0.0)) throw ValidationError("pulse metrics: reference amplitude must be positive");
    const auto& f = band == 0 ? w.total : w.band[band - 1];
    if (f.empty()) throw ValidationError("pulse metrics: field not present");
    double tot = 0.0, sx = 0.0, sz = 0.0, imax = 0.0;
    std::vector<double> I(f.size());
    for (int ix = 0; ix < w.lx; ++ix)
        for (int iz = 0; iz < w.lz; ++iz) {
            double v = 0.0;
            for (const cplx& c : f[w.index(ix, iz)]) v += std::norm(c);
            I[w.index(ix, iz)] = v;
            tot += v;
            sx += v * w.x(ix);
            sz += v * w.z(iz);
            imax = std::max(imax, v);
        }
    if (!(tot > 0.0)) throw NumericalError("pulse metrics: zero field");
    PulseMetrics m;
    const double mx = sx / tot;
    m.centroid_z = sz / tot;
    double vx = 0.0, vz = 0.0;
    for (int ix = 0; ix < w.lx; ++ix)
        for (int iz = 0; iz < w.lz; ++iz) {
            const double v = I[w.index(ix, iz)];
            vx += v * (w.x(ix) - mx) * (w.x(ix) - mx);
            vz += v * (w.z(iz) - m.centroid_z) * (w.z(iz) - m.centroid_z);
        }
    m.width_x = std::sqrt(vx / tot);
    m.width_z = std::sqrt(vz / tot);
    m.aspect = m.width_x / m.width_z;
    m.log_amplitude = std::log(std::sqrt(imax) / a_ref);
    return m;
}

double max_amplitude(const WaveField& w) {
    double best = 0.0;
    for (const auto& s : w.total) {
        double v = 0.0;
        for (const cplx& c : s) v += std::norm(c);
        best = std::max(best, v);
    }
    return std::sqrt(best);
}

}  // namespace excepta
