#pragma once

// Symmetry relations of QMPs and latent symmetries of linearized Hamiltonians.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "excepta/models.hpp"

namespace excepta {

// ω ↦ a·ω + b, or a·ω* + b when conj is set.
struct OmegaMap {
    bool conj = true;
    cplx a = 1.0;
    cplx b = 0.0;
    cplx operator()(cplx w) const { return a * (conj ? std::conj(w) : w) + b; }
};

// g ↦ A·g + b on the 3D parameter space.
struct AffineMap {
    std::array<Vec3, 3> A{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    Vec3 b{0, 0, 0};

    Vec3 operator()(const Vec3& g) const { return {dot(A[0], g) + b[0], dot(A[1], g) + b[1], dot(A[2], g) + b[2]}; }
    static AffineMap identity() { return {}; }
    // Flip the sign of one coordinate.
    static AffineMap reflect(int axis);
};

// U_left · T(Q(ω, g)) · U_right = Q(ω_map(ω), param_map(g)), with T a complex
// conjugation or an adjoint. Subspace relations restrict g to an invariant
// plane first via `project`.
struct SymmetryRelation {
    std::string name;
    ComplexMatrix U_left, U_right;
    bool conj = false;
    bool adjoint = false;
    OmegaMap omega_map;
    AffineMap param_map;
    bool has_projector = false;
    AffineMap project;

    void validate(int n) const;
};

// Named relations: "gamma", "kappa", "gamma-sub", "kappa-sub", "C2xT",
// "C2yT", "MzDagger". The subspace relations need the common loss rate
// γ₀/m₀; others ignore it.
SymmetryRelation named_relation(const std::string& name, double gamma0_over_m0 = 0.0);
std::vector<std::string> relation_names();

struct RelationSample {
    cplx omega;
    Vec3 g;
};

// Max over samples of ‖U_l·T(Q(ω,g))·U_r − Q(ω', g')‖_F / ‖Q(ω', g')‖_F.
double relation_residual(const QmpBuilder& build, const SymmetryRelation& rel,
                         const std::vector<RelationSample>& samples);

// Deterministic random samples: ω from a complex box of half-width omega_scale,
// g uniformly in the box [lo, hi].
std::vector<RelationSample> random_relation_samples(int count, double omega_scale, const Vec3& lo,
                                                    const Vec3& hi, unsigned long long seed);

// The subset S of {0..dim−1} kept in an isospectral reduction.
struct ContributingSet {
    std::vector<int> indices;

    void validate(int dim) const;
    std::vector<int> complement(int dim) const;
    // Velocity block {N..2N−1} of a linearized N-oscillator Hamiltonian.
    static ContributingSet bottom_right(int n_oscillators);
};

// R_S(H, ω) = H_SS − H_SS̄ (H_S̄S̄ − ω)⁻¹ H_S̄S. Throws NumericalError when ω is
// an eigenvalue of H_S̄S̄.
ComplexMatrix isospectral_reduction(const ComplexMatrix& H, const ContributingSet& S, cplx omega);

// Q(ω̃ + iω_i) rewritten as a QMP in ω̃: K → K + ω_i²M + ω_iΓ, Γ → Γ + 2ω_iM.
QMP shift_frequency(const QMP& q, double omega_i);

// max over n = 1..n_max of ‖L (H_mapⁿ)_SS L⁻¹ − ((Hⁿ)_SS)ᴴ‖_F / ‖Hⁿ‖_F, where
// H_map is the Hamiltonian at the mapped parameter point. n_max ≤ 0 selects
// dim(H).
double latent_residual(const ComplexMatrix& H, const ComplexMatrix& H_map, const ComplexMatrix& L,
                       const ContributingSet& S, int n_max = 0);

// max over ω samples of ‖L R_S(H_map, ω) L⁻¹ − R_S(H, ω*)ᴴ‖_F / ‖R_S(H, ω*)‖_F.
double reduction_residual(const ComplexMatrix& H, const ComplexMatrix& H_map, const ComplexMatrix& L,
                          const ContributingSet& S, const ComplexVector& omega_samples);

// 16 points on |ω| = 2·max spectral radius of H, H_map and their S̄S̄ blocks.
ComplexVector reduction_samples(const ComplexMatrix& H, const ComplexMatrix& H_map, const ContributingSet& S,
                                int count = 16);

struct LatentCheck {
    double latent = 0.0;
    double reduction = 0.0;
    bool latent_pass = false;
    bool reduction_pass = false;
    bool agree() const { return latent_pass == reduction_pass; }
    bool pass() const { return latent_pass && reduction_pass; }
};

// Both sides of the latent-symmetry equivalence, evaluated independently.
LatentCheck latent_crosscheck(const ComplexMatrix& H, const ComplexMatrix& H_map, const ComplexMatrix& L,
                                const ContributingSet& S, const ComplexVector& omega_samples, double tol = 1e-10);
LatentCheck latent_crosscheck(const ComplexMatrix& H, const ComplexMatrix& H_map, const ComplexMatrix& L,
                                const ContributingSet& S, double tol = 1e-10);

// Largest distance in the optimal assignment of ω onto ω_map(ω), e.g. pairing
// (ω, ω* − iγ₀/m₀). Zero when the spectrum is closed under the map.
double spectral_pairing_residual(const ComplexVector& omegas, const OmegaMap& map);

}  // namespace excepta
