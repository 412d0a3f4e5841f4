#include "excepta/qep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace excepta {

namespace {

bool omega_less(const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

double reference_norm(const QMP& q, cplx w) {
    const double aw = std::abs(w);
    return q.M().norm_fro() * aw * aw + q.K().norm_fro() + q.G().norm_fro() * aw;
}

}  // namespace

QuadraticMatrixPolynomial::QuadraticMatrixPolynomial(ComplexMatrix M, ComplexMatrix K, ComplexMatrix G)
    : M_(std::move(M)), K_(std::move(K)), G_(std::move(G)) {
    const int n = M_.rows();
    if (n == 0 || !M_.square()) throw ValidationError("QMP: M must be square and non-empty");
    if (K_.rows() != n || K_.cols() != n) throw ValidationError("QMP: K must match M");
    if (G_.rows() != n || G_.cols() != n) throw ValidationError("QMP: G must match M");
    if (!M_.all_finite() || !K_.all_finite() || !G_.all_finite())
        throw ValidationError("QMP: entries must be finite");
    const LU f = lu_decompose(M_, 1e-13 * M_.norm_fro());
    if (f.singular) throw ValidationError("QMP: M is singular");
    is_real_ = M_.is_real() && K_.is_real() && G_.is_real();
}

ComplexMatrix QuadraticMatrixPolynomial::evaluate(cplx w) const {
    const int n = dim();
    ComplexMatrix q(n, n);
    const cplx w2 = w * w;
    const cplx iw = cplx(0, 1) * w;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q(i, j) = w2 * M_(i, j) - K_(i, j) + iw * G_(i, j);
    return q;
}

ComplexMatrix QuadraticMatrixPolynomial::derivative(cplx w) const {
    return (2.0 * w) * M_ + cplx(0, 1) * G_;
}

QuadraticMatrixPolynomial QuadraticMatrixPolynomial::perturbed(const ComplexMatrix& dM,
                                                               const ComplexMatrix& dK,
                                                               const ComplexMatrix& dG) const {
    return QMP(dM.empty() ? M_ : M_ + dM, dK.empty() ? K_ : K_ + dK, dG.empty() ? G_ : G_ + dG);
}

ComplexMatrix linearize(const QMP& q) {
    const int n = q.dim();
    const ComplexMatrix minv = inverse(q.M());
    const ComplexMatrix a = minv * q.K();
    const ComplexMatrix b = minv * q.G();
    const cplx I(0, 1);
    ComplexMatrix h(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        h(i, n + i) = I;
        for (int j = 0; j < n; ++j) {
            h(n + i, j) = -I * a(i, j);
            h(n + i, n + j) = -I * b(i, j);
        }
    }
    return h;
}

PolynomialCoeffs det_polynomial(const QMP& q) {
    const int n = q.dim();
    if (n <= 3) {
        std::vector<std::vector<PolynomialCoeffs>> e(n, std::vector<PolynomialCoeffs>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                e[i][j] = PolynomialCoeffs(ComplexVector{-q.K()(i, j), cplx(0, 1) * q.G()(i, j), q.M()(i, j)});
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        PolynomialCoeffs det(ComplexVector(2 * n + 1, 0.0));
        do {
            int inversions = 0;
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b)
                    if (perm[a] > perm[b]) ++inversions;
            PolynomialCoeffs term(ComplexVector{inversions % 2 ? -1.0 : 1.0});
            for (int i = 0; i < n; ++i) term = poly_mul(term, e[i][perm[i]]);
            det = poly_add(det, term);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return det;
    }
    PolynomialCoeffs p = char_poly(linearize(q));
    const cplx dm = determinant(q.M());
    for (auto& c : p.coeffs) c *= dm;
    return p;
}

ComplexVector Spectrum::omegas() const {
    ComplexVector w;
    w.reserve(pairs.size());
    for (const auto& p : pairs) w.push_back(p.omega);
    return w;
}

ComplexVector eigenfrequencies(const QMP& q, double tol) {
    const PolynomialCoeffs p = det_polynomial(q);
    ComplexVector w = poly_roots(p, tol);
    const int m = static_cast<int>(w.size());
    double scale = 0.0;
    for (const auto& x : w) scale = std::max(scale, std::abs(x));
    scale = std::max(scale, 1e-300);
    for (int i = 0; i < m; ++i) {
        double sep = std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j)
            if (j != i) sep = std::min(sep, std::abs(w[i] - w[j]));
        if (!(sep > 1e-6 * scale)) continue;
        // Newton on log det Q: ω ← ω − 1/tr(Q⁻¹Q').
        cplx x = w[i];
        for (int it = 0; it < 3; ++it) {
            ComplexMatrix sol;
            try {
                sol = solve_linear(q.evaluate(x), q.derivative(x), 0.0);
            } catch (const SingularMatrixError&) {
                break;
            }
            const cplx tr = sol.trace();
            if (tr == cplx(0.0)) break;
            const cplx step = 1.0 / tr;
            if (!(std::abs(step) < 0.25 * sep)) break;
            x -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        w[i] = x;
    }
    std::sort(w.begin(), w.end(), omega_less);
    return w;
}

bool pf_gap_open(const ComplexVector& omegas) {
    double scale = 0.0;
    for (const auto& x : omegas) scale = std::max(scale, std::abs(x));
    for (const auto& x : omegas)
        if (!(std::abs(x.real()) > 1e-6 * scale)) return false;
    return !omegas.empty();
}

ComplexVector pf_frequencies(const ComplexVector& omegas) {
    if (!pf_gap_open(omegas)) throw NumericalError("no real line gap");
    ComplexVector pf;
    for (const auto& x : omegas)
        if (x.real() > 0.0) pf.push_back(x);
    if (2 * pf.size() != omegas.size())
        throw NumericalError("no real line gap", {{"positive_count", static_cast<double>(pf.size())}});
    std::sort(pf.begin(), pf.end(), omega_less);
    return pf;
}

ComplexVector pf_frequencies(const QMP& q, double tol) { return pf_frequencies(eigenfrequencies(q, tol)); }

Spectrum solve(const QMP& q, const SolveOptions& opts) {
    Spectrum s;
    const ComplexVector w = eigenfrequencies(q, opts.tol);
    const int m = static_cast<int>(w.size());
    s.pf_gap_ok = pf_gap_open(w);
    s.pairs.resize(m);
    for (int i = 0; i < m; ++i) {
        s.pairs[i].omega = w[i];
        s.pairs[i].band_index = i;
    }
    if (!opts.vectors) return s;

    double scale = 0.0;
    for (const auto& x : w) scale = std::max(scale, std::abs(x));
    const double cluster_tol = 1e-6 * std::max(1.0, scale);

    std::vector<char> used(m, 0);
    for (int i = 0; i < m; ++i) {
        if (used[i]) continue;
        std::vector<int> members{i};
        used[i] = 1;
        for (int j = i + 1; j < m; ++j)
            if (!used[j] && std::abs(w[j] - w[i]) < cluster_tol) {
                members.push_back(j);
                used[j] = 1;
            }
        cplx center = 0.0;
        for (int k : members) center += w[k];
        center /= static_cast<double>(members.size());

        const ComplexMatrix qc = q.evaluate(center);
        const double thresh = 1e-7 * reference_norm(q, center);
        const auto right = nullspace(qc, thresh, true);
        std::vector<ComplexVector> left;
        if (opts.left) left = nullspace(qc.adjoint(), thresh, true);
        for (size_t k = 0; k < members.size(); ++k) {
            EigenPair& ep = s.pairs[members[k]];
            ep.right = gauge_fixed(normalized(right[std::min(k, right.size() - 1)]));
            if (opts.left) ep.left = gauge_fixed(normalized(left[std::min(k, left.size() - 1)]));
        }
        for (size_t a = 0; a < members.size(); ++a)
            for (size_t b = a + 1; b < members.size(); ++b) {
                const double ov = std::abs(dot(s.pairs[members[a]].right, s.pairs[members[b]].right));
                if (ov > 1.0 - 1e-6)
                    s.exceptional.emplace_back(members[a], members[b]);
                else
                    s.diabolic.emplace_back(members[a], members[b]);
            }
    }
    return s;
}

std::vector<EigenPair> pf_bands(const Spectrum& s) {
    if (!s.pf_gap_ok) throw NumericalError("no real line gap");
    std::vector<EigenPair> pf;
    for (const auto& p : s.pairs)
        if (p.omega.real() > 0.0) pf.push_back(p);
    std::stable_sort(pf.begin(), pf.end(),
                     [](const EigenPair& a, const EigenPair& b) { return omega_less(a.omega, b.omega); });
    return pf;
}

ComplexMatrix greens(const QMP& q, cplx omega) {
    const ComplexMatrix qw = q.evaluate(omega);
    try {
        return inverse(qw, 1e-12);
    } catch (const SingularMatrixError&) {
        const ComplexVector w = eigenfrequencies(q);
        cplx nearest = w.front();
        for (const auto& x : w)
            if (std::abs(x - omega) < std::abs(nearest - omega)) nearest = x;
        char buf[160];
        std::snprintf(buf, sizeof buf, "Q(omega) is singular: omega is at eigenfrequency %.12g%+.12gi",
                      nearest.real(), nearest.imag());
        throw NumericalError(buf, {{"nearest_re", nearest.real()},
                                   {"nearest_im", nearest.imag()},
                                   {"distance", std::abs(nearest - omega)}});
    }
}

double particle_hole_residual(const ComplexVector& omegas) {
    const int n = static_cast<int>(omegas.size());
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost[i][j] = std::norm(omegas[i] + std::conj(omegas[j]));
    const auto col = min_cost_assignment(cost);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::sqrt(cost[i][col[i]]));
    return worst;
}

double particle_hole_residual(const Spectrum& s) { return particle_hole_residual(s.omegas()); }

}  // namespace excepta
