#include "excepta/models.hpp"

#include <algorithm>
#include <cmath>

namespace excepta {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw ValidationError(msg);
}

QMP apply(const QMP& q, const Perturbation& p) {
    if (p.empty()) return q;
    return q.perturbed(p.dM, p.dK, p.dG);
}

}  // namespace

TheoreticalParams TheoreticalParams::at(const Vec3& g) const {
    TheoreticalParams p = *this;
    p.gamma = g[0];
    p.chi = g[1];
    p.kappa = g[2];
    return p;
}

void TheoreticalParams::validate() const {
    require(m0 > 0.0, "theoretical: m0 must be positive");
    require(kbar > 0.0, "theoretical: kbar must be positive");
    require(std::isfinite(dchi) && std::isfinite(gamma) && std::isfinite(chi) && std::isfinite(kappa),
            "theoretical: parameters must be finite");
}

ExperimentalParams ExperimentalParams::at(const Vec3& g) const {
    ExperimentalParams p = *this;
    p.gamma = g[0];
    p.chi = g[1];
    p.kappa = g[2];
    return p;
}

void ExperimentalParams::validate() const {
    require(m0 > 0.0, "experimental: m0 must be positive");
    require(kappa0 > 0.0, "experimental: kappa0 must be positive");
    require(gamma0 >= 0.0, "experimental: gamma0 must be non-negative");
    require(std::isfinite(dchi) && std::isfinite(gamma) && std::isfinite(chi) && std::isfinite(kappa),
            "experimental: parameters must be finite");
}

LatticeParams LatticeParams::at(const Vec3& kk) const {
    LatticeParams p = *this;
    p.k = kk;
    return p;
}

void LatticeParams::validate() const {
    require(m > 0.0, "lattice: m must be positive");
    for (double x : {kappa0, kappa1, kappa2, chi, dchi, gamma})
        require(std::isfinite(x), "lattice: parameters must be finite");
    for (double x : k) require(std::abs(x) <= M_PI + 1e-12, "lattice: |k_i| must not exceed pi");
}

void Geometry::validate() const {
    for (double x : {l1, l2, r1, r2, r3, r4, d1, d2})
        require(x > 0.0, "geometry: all lengths must be positive");
    require(std::isfinite(k1) && std::isfinite(k2), "geometry: spring constants must be finite");
}

QMP theoretical_qmp(const TheoreticalParams& p) {
    p.validate();
    const ComplexMatrix M = p.m0 * ComplexMatrix::identity(2);
    const ComplexMatrix K{{p.kbar + p.kappa / 2, -p.chi}, {-p.chi - p.dchi, p.kbar - p.kappa / 2}};
    const ComplexMatrix G{{p.gamma / 2, 0.0}, {0.0, -p.gamma / 2}};
    return QMP(M, K, G);
}

QMP experimental_qmp(const ExperimentalParams& p) {
    p.validate();
    const ComplexMatrix M = p.m0 * ComplexMatrix::identity(2);
    const ComplexMatrix K{{p.kappa0 + p.chi, -p.chi}, {-p.chi - p.dchi, p.kappa0 - p.kappa + p.chi}};
    const ComplexMatrix G{{p.gamma0 + p.gamma / 2, 0.0}, {0.0, p.gamma0 - p.gamma / 2}};
    return QMP(M, K, G);
}

QMP lattice_bloch_qmp(const LatticeParams& p) {
    p.validate();
    const double kx = p.k[0], ky = p.k[1], kz = p.k[2];
    const double diag = p.kappa0 + p.kappa1 + p.kappa2 + 4.0 * p.chi;
    const double ax = p.kappa1 + p.kappa2 * std::cos(kz) + 4.0 * p.chi * std::cos(kx) * std::cos(ky);
    const cplx ay = cplx(p.kappa2 * std::sin(kz), 4.0 * p.dchi * std::sin(kx) * std::sin(ky));
    const ComplexMatrix K = diag * sigma0() - ax * sigma_x() - ay * sigma_y();
    const ComplexMatrix M = p.m * ComplexMatrix::identity(2);
    const ComplexMatrix G = -p.gamma * sigma_z();
    return QMP(M, K, G);
}

QmpBuilder theoretical_builder(const TheoreticalParams& base, const Perturbation& pert) {
    base.validate();
    return [base, pert](const Vec3& g) { return apply(theoretical_qmp(base.at(g)), pert); };
}

QmpBuilder experimental_builder(const ExperimentalParams& base, const Perturbation& pert) {
    base.validate();
    return [base, pert](const Vec3& g) { return apply(experimental_qmp(base.at(g)), pert); };
}

QmpBuilder lattice_builder(const LatticeParams& base, const Perturbation& pert) {
    base.validate();
    // K(k) is 2π-periodic, so points stepped past ±π are folded back.
    return [base, pert](const Vec3& k) {
        Vec3 w = k;
        for (double& x : w) x = std::remainder(x, 2.0 * M_PI);
        return apply(lattice_bloch_qmp(base.at(w)), pert);
    };
}

namespace {

double kappa_bracket(double k1, double l1, double r, double r4, double d1) {
    const double s = d1 * d1 + (r - r4) * (r - r4);
    return 2.0 * k1 * r4 * (r - l1 * r / std::sqrt(s) + d1 * d1 * l1 * r4 / (s * std::sqrt(s)));
}

}  // namespace

StiffnessTriple geometry_to_stiffness(const Geometry& g) {
    g.validate();
    StiffnessTriple t;
    t.chi = 2.0 * g.k2 * g.r3 * g.r3;
    t.kappa0 = kappa_bracket(g.k1, g.l1, g.r1, g.r4, g.d1);
    t.kappa = t.kappa0 - kappa_bracket(g.k1, g.l1, g.r2, g.r4, g.d1);
    return t;
}

double arm_potential_V1(const Geometry& g, double t) {
    const double a = std::hypot(g.r4 * std::cos(t) - g.r1, g.r4 * std::sin(t) - g.d1) - g.l1;
    const double b = std::hypot(-g.r4 * std::cos(t) + g.r1, -g.r4 * std::sin(t) - g.d1) - g.l1;
    return 0.5 * g.k1 * (a * a + b * b);
}

double arm_potential_V2(const Geometry& g, double t) {
    const double a = std::hypot(g.r4 * std::cos(t) - g.r2, g.r4 * std::sin(t) - g.d1) - g.l1;
    const double b = std::hypot(-g.r4 * std::cos(t) + g.r2, -g.r4 * std::sin(t) - g.d1) - g.l1;
    return 0.5 * g.k1 * (a * a + b * b);
}

double arm_potential_V3(const Geometry& g, double t1, double t2) {
    const double dx = g.r3 * (std::cos(t1) - std::cos(t2));
    const double dy = g.r3 * (std::sin(t1) - std::sin(t2));
    const double a = std::hypot(dx, g.d2 + dy) - g.l2;
    const double b = std::hypot(dx, g.d2 - dy) - g.l2;
    return 0.5 * g.k2 * (a * a + b * b);
}

double default_omega0(const QMP& q) {
    if (q.dim() != 2) throw ValidationError("effective two-band model needs N = 2");
    const double m0 = q.M()(0, 0).real();
    const double tr = q.K().trace().real();
    if (!(tr > 0.0)) throw ValidationError("effective two-band model needs tr K > 0");
    return std::sqrt(tr / (2.0 * m0));
}

EffectiveTwoBand effective_two_band(const QMP& q, double omega0) {
    if (q.dim() != 2) throw ValidationError("effective two-band model needs N = 2");
    const ComplexMatrix& M = q.M();
    const cplx m0c = M(0, 0);
    const bool scalar_mass = std::abs(M(0, 1)) == 0.0 && std::abs(M(1, 0)) == 0.0 &&
                             std::abs(M(1, 1) - m0c) <= 1e-14 * std::abs(m0c) && m0c.imag() == 0.0 &&
                             m0c.real() > 0.0;
    if (!scalar_mass) throw ValidationError("effective two-band model needs M = m0*I with m0 > 0");
    const double m0 = m0c.real();
    const double w0 = omega0 > 0.0 ? omega0 : default_omega0(q);

    const ComplexMatrix dK = q.K() - (m0 * w0 * w0) * ComplexMatrix::identity(2);
    EffectiveTwoBand e;
    e.omega0 = w0;
    e.H_eff = (1.0 / (2.0 * w0 * m0)) * (dK - cplx(0, w0) * q.G());
    e.shifts = eigenvalues(e.H_eff);

    const ComplexMatrix& K = q.K();
    const ComplexMatrix& G = q.G();
    const double small = std::max({std::abs(K(0, 0) - K(1, 1)), std::abs(K(0, 1)), std::abs(K(1, 0) - K(0, 1)),
                                   w0 * std::abs(G(0, 0) - G(1, 1)), std::abs(dK.trace()) / 2.0});
    e.valid_radius = small / (m0 * w0 * w0);
    return e;
}

}  // namespace excepta
