#pragma once

// Quadratic matrix polynomials Q(ω) = ω²M − K + iωΓ.

#include <optional>
#include <utility>
#include <vector>

#include "excepta/numkernel.hpp"

namespace excepta {

class QuadraticMatrixPolynomial {
public:
    QuadraticMatrixPolynomial() = default;
    // Throws ValidationError on shape mismatch or singular M.
    QuadraticMatrixPolynomial(ComplexMatrix M, ComplexMatrix K, ComplexMatrix G);

    int dim() const { return M_.rows(); }
    const ComplexMatrix& M() const { return M_; }
    const ComplexMatrix& K() const { return K_; }
    const ComplexMatrix& G() const { return G_; }
    bool is_real() const { return is_real_; }

    ComplexMatrix evaluate(cplx omega) const;
    // dQ/dω = 2ωM + iΓ
    ComplexMatrix derivative(cplx omega) const;

    QuadraticMatrixPolynomial perturbed(const ComplexMatrix& dM, const ComplexMatrix& dK,
                                        const ComplexMatrix& dG) const;

private:
    ComplexMatrix M_, K_, G_;
    bool is_real_ = true;
};

using QMP = QuadraticMatrixPolynomial;

// H = i[[0, I], [−M⁻¹K, −M⁻¹Γ]]; eigenvectors are (ψ, −iωψ).
ComplexMatrix linearize(const QMP& q);

// det Q(ω) as a degree-2N polynomial. Symbolic expansion for N ≤ 3, otherwise
// det(M)·det(ωI − H).
PolynomialCoeffs det_polynomial(const QMP& q);

struct EigenPair {
    cplx omega;
    ComplexVector right;
    std::optional<ComplexVector> left;
    int band_index = 0;
};

struct Spectrum {
    std::vector<EigenPair> pairs;  // sorted by (Re ω, Im ω)
    bool pf_gap_ok = false;
    std::vector<std::pair<int, int>> exceptional;  // coalesced pairs (EP)
    std::vector<std::pair<int, int>> diabolic;     // degenerate, independent vectors

    ComplexVector omegas() const;
    bool has_ep() const { return !exceptional.empty(); }
};

struct SolveOptions {
    double tol = 1e-14;
    bool vectors = true;
    bool left = false;
};

// Eigenfrequencies only, sorted by (Re ω, Im ω). Simple roots are polished by
// Newton on det Q.
ComplexVector eigenfrequencies(const QMP& q, double tol = 1e-14);

Spectrum solve(const QMP& q, const SolveOptions& opts = {});

// True when every |Re ω| > 1e−6·max|ω|.
bool pf_gap_open(const ComplexVector& omegas);

// Positive-frequency eigenfrequencies sorted by Re ω. Throws NumericalError
// ("no real line gap") when the gap condition fails.
ComplexVector pf_frequencies(const QMP& q, double tol = 1e-14);
ComplexVector pf_frequencies(const ComplexVector& omegas);

std::vector<EigenPair> pf_bands(const Spectrum& s);

// Q(ω)⁻¹. Throws NumericalError naming the nearest eigenfrequency when Q(ω) is
// numerically singular.
ComplexMatrix greens(const QMP& q, cplx omega);

// Largest matched distance in the optimal assignment of {ωₙ} onto {−ωₙ*}.
double particle_hole_residual(const ComplexVector& omegas);
double particle_hole_residual(const Spectrum& s);

}  // namespace excepta
