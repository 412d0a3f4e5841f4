#pragma once

// Concrete two-oscillator and lattice systems, the quasi-degenerate two-band
// reduction, and the arm geometry → stiffness map.

#include <functional>

#include "excepta/qep.hpp"
#include "excepta/vec3.hpp"

namespace excepta {

// Parameter point → QMP. Parameter spaces are 3D: (γ, χ, κ) or (kx, ky, kz).
using QmpBuilder = std::function<QMP(const Vec3&)>;

// Additive corrections applied after a model is built; used to break
// symmetries on purpose. Empty matrices mean "no change".
struct Perturbation {
    ComplexMatrix dM, dK, dG;
    bool empty() const { return dM.empty() && dK.empty() && dG.empty(); }
};

struct TheoreticalParams {
    double m0 = 1.0;
    double kbar = 1.0;
    double dchi = 0.0;
    double gamma = 0.0;
    double chi = 0.0;
    double kappa = 0.0;

    Vec3 point() const { return {gamma, chi, kappa}; }
    TheoreticalParams at(const Vec3& g) const;
    void validate() const;
};

struct ExperimentalParams {
    double m0 = 1.0;
    double kappa0 = 1.0;
    double gamma0 = 0.0;
    double dchi = 0.0;
    double gamma = 0.0;
    double chi = 0.0;
    double kappa = 0.0;

    Vec3 point() const { return {gamma, chi, kappa}; }
    ExperimentalParams at(const Vec3& g) const;
    void validate() const;
};

struct LatticeParams {
    double m = 1.0;
    double kappa0 = 1.0;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double chi = 0.0;
    double dchi = 0.0;
    double gamma = 0.0;
    Vec3 k{0.0, 0.0, 0.0};

    LatticeParams at(const Vec3& kk) const;
    void validate() const;
};

struct Geometry {
    double k1 = 0, k2 = 0;
    double l1 = 0, l2 = 0;
    double r1 = 0, r2 = 0, r3 = 0, r4 = 0;
    double d1 = 0, d2 = 0;
    void validate() const;
};

struct StiffnessTriple {
    double chi = 0;
    double kappa0 = 0;
    double kappa = 0;
};

struct EffectiveTwoBand {
    ComplexMatrix H_eff;
    double omega0 = 0;
    double valid_radius = 0;
    ComplexVector shifts;  // eigenvalues δω of H_eff, sorted by (Re, Im)
};

// M = m₀I, K = [[κ̄+κ/2, −χ], [−χ−δχ, κ̄−κ/2]], Γ = diag(γ/2, −γ/2).
QMP theoretical_qmp(const TheoreticalParams& p);
// K = [[κ₀+χ, −χ], [−χ−δχ, κ₀−κ+χ]], Γ = diag(γ₀+γ/2, γ₀−γ/2).
QMP experimental_qmp(const ExperimentalParams& p);
// Bloch QMP of the two-sublattice lattice; Γ = −γσ_z (gain on A).
QMP lattice_bloch_qmp(const LatticeParams& p);

QmpBuilder theoretical_builder(const TheoreticalParams& base, const Perturbation& pert = {});
QmpBuilder experimental_builder(const ExperimentalParams& base, const Perturbation& pert = {});
QmpBuilder lattice_builder(const LatticeParams& base, const Perturbation& pert = {});

StiffnessTriple geometry_to_stiffness(const Geometry& g);

// Spring potentials of the arm assembly at small rotation angles; their
// Hessians at θ = 0 reproduce geometry_to_stiffness.
double arm_potential_V1(const Geometry& g, double theta1);
double arm_potential_V2(const Geometry& g, double theta2);
double arm_potential_V3(const Geometry& g, double theta1, double theta2);

// H_eff = (δK − iω₀Γ)/(2ω₀m₀) with δK = K − m₀ω₀²I. omega0 ≤ 0 selects the
// default √(tr K/(2m₀)).
EffectiveTwoBand effective_two_band(const QMP& q, double omega0 = 0.0);

// Default reference frequency √(tr K /(2m₀)) for an N = 2, M = m₀I QMP.
double default_omega0(const QMP& q);

}  // namespace excepta
