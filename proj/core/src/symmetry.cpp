#include "excepta/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace excepta {

namespace {

bool is_unitary(const ComplexMatrix& u, double tol) {
    if (!u.square()) return false;
    const ComplexMatrix d = u.adjoint() * u - ComplexMatrix::identity(u.rows());
    return d.norm_fro() <= tol;
}

ComplexMatrix apply_transform(const ComplexMatrix& q, bool conj, bool adjoint) {
    if (conj && adjoint) return q.transpose();
    if (conj) return q.conj();
    if (adjoint) return q.adjoint();
    return q;
}

}  // namespace

AffineMap AffineMap::reflect(int axis) {
    AffineMap m;
    m.A[axis][axis] = -1.0;
    return m;
}

void SymmetryRelation::validate(int n) const {
    for (const ComplexMatrix* u : {&U_left, &U_right}) {
        if (u->empty()) continue;
        if (u->rows() != n || u->cols() != n)
            throw ValidationError("symmetry relation '" + name + "': unitary factor has the wrong size");
        if (!is_unitary(*u, 1e-12))
            throw ValidationError("symmetry relation '" + name + "': factor is not unitary");
    }
}

SymmetryRelation named_relation(const std::string& name, double g0m) {
    SymmetryRelation r;
    r.name = name;
    const cplx shift(0.0, -g0m);
    if (name == "gamma") {
        r.conj = true;
        r.param_map = AffineMap::reflect(0);
    } else if (name == "kappa") {
        r.adjoint = true;
        r.U_left = r.U_right = sigma_x();
        r.param_map = AffineMap::reflect(2);
    } else if (name == "gamma-sub") {
        r.conj = true;
        r.omega_map.b = shift;
        r.has_projector = true;
        r.project.A[0] = {0, 0, 0};
    } else if (name == "kappa-sub") {
        r.adjoint = true;
        r.U_left = r.U_right = sigma_x();
        r.omega_map.b = shift;
        r.has_projector = true;
        r.project.A[2] = {g0m / 2.0, 0, 0};
    } else if (name == "C2xT") {
        r.conj = true;
        r.U_left = r.U_right = sigma_x();
        r.param_map = AffineMap::reflect(0);
    } else if (name == "C2yT") {
        r.conj = true;
        r.U_left = r.U_right = sigma_x();
        r.param_map = AffineMap::reflect(1);
    } else if (name == "MzDagger") {
        r.adjoint = true;
        r.U_left = r.U_right = sigma_x();
        r.param_map = AffineMap::reflect(2);
    } else {
        throw ValidationError("unknown symmetry relation '" + name + "'");
    }
    return r;
}

std::vector<std::string> relation_names() {
    return {"gamma", "kappa", "gamma-sub", "kappa-sub", "C2xT", "C2yT", "MzDagger"};
}

double relation_residual(const QmpBuilder& build, const SymmetryRelation& rel,
                         const std::vector<RelationSample>& samples) {
    double worst = 0.0;
    bool checked = false;
    for (const auto& s : samples) {
        const Vec3 g = rel.has_projector ? rel.project(s.g) : s.g;
        const QMP q = build(g);
        if (!checked) {
            rel.validate(q.dim());
            checked = true;
        }
        ComplexMatrix lhs = apply_transform(q.evaluate(s.omega), rel.conj, rel.adjoint);
        if (!rel.U_left.empty()) lhs = rel.U_left * lhs;
        if (!rel.U_right.empty()) lhs = lhs * rel.U_right;
        const ComplexMatrix rhs = build(rel.param_map(g)).evaluate(rel.omega_map(s.omega));
        const double scale = std::max(rhs.norm_fro(), 1e-300);
        worst = std::max(worst, (lhs - rhs).norm_fro() / scale);
    }
    return worst;
}

std::vector<RelationSample> random_relation_samples(int count, double omega_scale, const Vec3& lo,
                                                    const Vec3& hi, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<RelationSample> out(count);
    for (auto& s : out) {
        s.omega = cplx(omega_scale * u(rng), omega_scale * u(rng));
        for (int i = 0; i < 3; ++i) s.g[i] = lo[i] + 0.5 * (u(rng) + 1.0) * (hi[i] - lo[i]);
    }
    return out;
}

void ContributingSet::validate(int dim) const {
    if (indices.empty()) throw ValidationError("contributing set must be non-empty");
    if (static_cast<int>(indices.size()) >= dim) throw ValidationError("contributing set must be a proper subset");
    std::vector<int> s = indices;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end())
        throw ValidationError("contributing set has repeated indices");
    if (s.front() < 0 || s.back() >= dim) throw ValidationError("contributing set index out of range");
}

std::vector<int> ContributingSet::complement(int dim) const {
    std::vector<int> out;
    for (int i = 0; i < dim; ++i)
        if (std::find(indices.begin(), indices.end(), i) == indices.end()) out.push_back(i);
    return out;
}

ContributingSet ContributingSet::bottom_right(int n) {
    ContributingSet s;
    for (int i = n; i < 2 * n; ++i) s.indices.push_back(i);
    return s;
}

ComplexMatrix isospectral_reduction(const ComplexMatrix& H, const ContributingSet& S, cplx omega) {
    if (!H.square()) throw ValidationError("isospectral reduction needs a square matrix");
    S.validate(H.rows());
    const std::vector<int> s = S.indices;
    const std::vector<int> sb = S.complement(H.rows());
    ComplexMatrix inner = H.select(sb, sb) - omega * ComplexMatrix::identity(static_cast<int>(sb.size()));
    ComplexMatrix x;
    try {
        x = solve_linear(inner, H.select(sb, s), 1e-13);
    } catch (const SingularMatrixError&) {
        throw NumericalError("isospectral reduction: omega is a pole (eigenvalue of the complement block)",
                             {{"omega_re", omega.real()}, {"omega_im", omega.imag()}});
    }
    return H.select(s, s) - H.select(s, sb) * x;
}

QMP shift_frequency(const QMP& q, double wi) {
    return QMP(q.M(), q.K() + (wi * wi) * q.M() + cplx(wi) * q.G(), q.G() + (2.0 * wi) * q.M());
}

double latent_residual(const ComplexMatrix& H, const ComplexMatrix& H_map, const ComplexMatrix& L,
                       const ContributingSet& S, int n_max) {
    if (!H.square() || H_map.rows() != H.rows() || H_map.cols() != H.cols())
        throw ValidationError("latent residual: Hamiltonians must be square and of equal size");
    S.validate(H.rows());
    const int ns = static_cast<int>(S.indices.size());
    if (L.rows() != ns || L.cols() != ns) throw ValidationError("latent residual: L must act on the S block");
    const ComplexMatrix Linv = inverse(L);
    const int nmax = n_max > 0 ? n_max : H.rows();
    ComplexMatrix hp = ComplexMatrix::identity(H.rows());
    ComplexMatrix hmp = hp;
    double worst = 0.0;
    for (int n = 1; n <= nmax; ++n) {
        hp = hp * H;
        hmp = hmp * H_map;
        const ComplexMatrix lhs = L * hmp.select(S.indices, S.indices) * Linv;
        const ComplexMatrix rhs = hp.select(S.indices, S.indices).adjoint();
        const double scale = std::max(hp.norm_fro(), 1e-300);
        worst = std::max(worst, (lhs - rhs).norm_fro() / scale);
    }
    return worst;
}

double reduction_residual(const ComplexMatrix& H, const ComplexMatrix& H_map, const ComplexMatrix& L,
                          const ContributingSet& S, const ComplexVector& omega_samples) {
    const ComplexMatrix Linv = inverse(L);
    double worst = 0.0;
    for (const cplx w : omega_samples) {
        const ComplexMatrix lhs = L * isospectral_reduction(H_map, S, w) * Linv;
        const ComplexMatrix rhs = isospectral_reduction(H, S, std::conj(w)).adjoint();
        const double scale = std::max(rhs.norm_fro(), 1e-300);
        worst = std::max(worst, (lhs - rhs).norm_fro() / scale);
    }
    return worst;
}

ComplexVector reduction_samples(const ComplexMatrix& H, const ComplexMatrix& H_map, const ContributingSet& S,
                                int count) {
    const std::vector<int> sb = S.complement(H.rows());
    double rho = std::max(spectral_radius(H), spectral_radius(H_map));
    rho = std::max({rho, spectral_radius(H.select(sb, sb)), spectral_radius(H_map.select(sb, sb))});
    const double radius = rho > 0.0 ? 2.0 * rho : 1.0;
    ComplexVector out(count);
    // Offset by half a step so no sample sits on the real axis.
    for (int i = 0; i < count; ++i) out[i] = std::polar(radius, 2.0 * M_PI * (i + 0.5) / count);
    return out;
}

LatentCheck latent_crosscheck(const ComplexMatrix& H, const ComplexMatrix& H_map, const ComplexMatrix& L,
                                const ContributingSet& S, const ComplexVector& omega_samples, double tol) {
    LatentCheck c;
    c.latent = latent_residual(H, H_map, L, S);
    c.reduction = reduction_residual(H, H_map, L, S, omega_samples);
    c.latent_pass = c.latent < tol;
    c.reduction_pass = c.reduction < tol;
    return c;
}

LatentCheck latent_crosscheck(const ComplexMatrix& H, const ComplexMatrix& H_map, const ComplexMatrix& L,
                                const ContributingSet& S, double tol) {
    return latent_crosscheck(H, H_map, L, S, reduction_samples(H, H_map, S), tol);
}

double spectral_pairing_residual(const ComplexVector& omegas, const OmegaMap& map) {
    const int n = static_cast<int>(omegas.size());
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost[i][j] = std::norm(map(omegas[i]) - omegas[j]);
    const auto col = min_cost_assignment(cost);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::sqrt(cost[i][col[i]]));
    return worst;
}

}  // namespace excepta
