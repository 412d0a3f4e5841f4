#pragma once

// Dense complex linear algebra and polynomial roots for desk-scale problems
// (dimension up to a few dozen). Everything here is a pure function.

#include <complex>
#include <initializer_list>
#include <vector>

#include "excepta/errors.hpp"

namespace excepta {

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;

class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(int rows, int cols);
    ComplexMatrix(int rows, int cols, std::vector<cplx> entries);
    ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

    static ComplexMatrix identity(int n);
    static ComplexMatrix zeros(int rows, int cols) { return ComplexMatrix(rows, cols); }
    static ComplexMatrix diagonal(const ComplexVector& d);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    cplx& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    const cplx& operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }
    const std::vector<cplx>& entries() const { return data_; }

    ComplexMatrix conj() const;
    ComplexMatrix transpose() const;
    ComplexMatrix adjoint() const;

    // Rows/cols picked by index lists; used for block extraction.
    ComplexMatrix select(const std::vector<int>& rows, const std::vector<int>& cols) const;
    ComplexMatrix block(int r0, int c0, int nr, int nc) const;
    void set_block(int r0, int c0, const ComplexMatrix& b);

    double norm_fro() const;
    double norm_max() const;
    cplx trace() const;
    bool is_real(double tol = 1e-14) const;
    bool all_finite() const;

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cplx s);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<cplx> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(const ComplexMatrix& a);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx s, ComplexMatrix a);
ComplexMatrix operator*(ComplexMatrix a, cplx s);
ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& x);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix matrix_power(const ComplexMatrix& a, int n);

double norm2(const ComplexVector& v);
cplx dot(const ComplexVector& a, const ComplexVector& b);  // conj(a)·b
ComplexVector normalized(const ComplexVector& v);

// Pauli matrices.
ComplexMatrix sigma0();
ComplexMatrix sigma_x();
ComplexMatrix sigma_y();
ComplexMatrix sigma_z();

struct PolynomialCoeffs {
    ComplexVector coeffs;  // ascending degree

    PolynomialCoeffs() = default;
    explicit PolynomialCoeffs(ComplexVector c);

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    cplx lead() const { return coeffs.back(); }
    cplx operator()(cplx z) const;
    double max_abs_coeff() const;
};

PolynomialCoeffs poly_mul(const PolynomialCoeffs& a, const PolynomialCoeffs& b);
PolynomialCoeffs poly_add(const PolynomialCoeffs& a, const PolynomialCoeffs& b);
PolynomialCoeffs poly_from_roots(const ComplexVector& roots, cplx lead = 1.0);

// Aberth–Ehrlich simultaneous iteration. Returns `degree` roots; order is a
// deterministic function of the input. Throws ConvergenceError on failure.
ComplexVector poly_roots(const PolynomialCoeffs& p, double tol = 1e-14);

// Characteristic polynomial det(λI − A) via Faddeev–LeVerrier.
PolynomialCoeffs char_poly(const ComplexMatrix& a);

struct LU {
    ComplexMatrix lu;
    std::vector<int> perm;
    int sign = 1;
    int rank_estimate = 0;
    bool singular = false;
};

LU lu_decompose(const ComplexMatrix& a, double pivot_tol = 0.0);
cplx determinant(const ComplexMatrix& a);

// Partial-pivot solve. Throws SingularMatrixError when a pivot falls below
// tol·‖A‖.
ComplexVector solve_linear(const ComplexMatrix& a, const ComplexVector& b, double tol = 1e-13);
ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b, double tol = 1e-13);
ComplexMatrix inverse(const ComplexMatrix& a, double tol = 1e-13);

struct SVD {
    std::vector<double> s;  // descending
    ComplexMatrix u;        // rows×k, k = min(rows, cols)
    ComplexMatrix v;        // cols×cols
};

// One-sided Jacobi SVD. Right singular vectors for zero singular values span
// the nullspace.
SVD svd(const ComplexMatrix& a);

// Orthonormal basis of vectors with singular value ≤ thresh. Always returns at
// least one vector (the smallest singular direction) when `at_least_one`.
std::vector<ComplexVector> nullspace(const ComplexMatrix& a, double thresh, bool at_least_one = true);

// Multiply by a phase so that the first component with magnitude above
// 1e-10·‖v‖ is real and positive.
ComplexVector gauge_fixed(const ComplexVector& v);

struct DenseEigenPair {
    cplx value;
    ComplexVector vector;
    bool near_defective = false;
};

// Eigenvalues from roots of the characteristic polynomial (Newton-polished on
// det(A − λI)), eigenvectors from the SVD nullspace of A − λI.
std::vector<DenseEigenPair> eig_dense(const ComplexMatrix& a, double tol = 1e-10);
ComplexVector eigenvalues(const ComplexMatrix& a);
double spectral_radius(const ComplexMatrix& a);

// Minimal-cost perfect matching on a square cost table (Hungarian method).
// Returns col[i] assigned to row i. Ties resolve toward lower indices.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace excepta
