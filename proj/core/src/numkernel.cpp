#include "excepta/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace excepta {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError(std::string("shape mismatch in ") + op);
}

}  // namespace

ComplexMatrix::ComplexMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, cplx(0.0)) {
    if (rows < 0 || cols < 0) throw ValidationError("negative matrix dimension");
}

ComplexMatrix::ComplexMatrix(int rows, int cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows < 0 || cols < 0) throw ValidationError("negative matrix dimension");
    if (data_.size() != static_cast<size_t>(rows) * cols)
        throw ValidationError("matrix entry count does not match rows*cols");
    if (!all_finite()) throw ValidationError("matrix entries must be finite");
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ ? static_cast<int>(rows.begin()->size()) : 0;
    data_.reserve(static_cast<size_t>(rows_) * cols_);
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != cols_) throw ValidationError("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
    if (!all_finite()) throw ValidationError("matrix entries must be finite");
}

ComplexMatrix ComplexMatrix::identity(int n) {
    ComplexMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(const ComplexVector& d) {
    const int n = static_cast<int>(d.size());
    ComplexMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = d[i];
    return m;
}

ComplexMatrix ComplexMatrix::conj() const {
    ComplexMatrix m = *this;
    for (auto& x : m.data_) x = std::conj(x);
    return m;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix m(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix m(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
}

ComplexMatrix ComplexMatrix::select(const std::vector<int>& r, const std::vector<int>& c) const {
    ComplexMatrix m(static_cast<int>(r.size()), static_cast<int>(c.size()));
    for (size_t i = 0; i < r.size(); ++i)
        for (size_t j = 0; j < c.size(); ++j) {
            if (r[i] < 0 || r[i] >= rows_ || c[j] < 0 || c[j] >= cols_)
                throw ValidationError("index out of range in select");
            m(static_cast<int>(i), static_cast<int>(j)) = (*this)(r[i], c[j]);
        }
    return m;
}

ComplexMatrix ComplexMatrix::block(int r0, int c0, int nr, int nc) const {
    if (r0 < 0 || c0 < 0 || r0 + nr > rows_ || c0 + nc > cols_)
        throw ValidationError("block out of range");
    ComplexMatrix m(nr, nc);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j) m(i, j) = (*this)(r0 + i, c0 + j);
    return m;
}

void ComplexMatrix::set_block(int r0, int c0, const ComplexMatrix& b) {
    if (r0 < 0 || c0 < 0 || r0 + b.rows() > rows_ || c0 + b.cols() > cols_)
        throw ValidationError("set_block out of range");
    for (int i = 0; i < b.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

double ComplexMatrix::norm_fro() const {
    double s = 0.0;
    for (const auto& x : data_) s += std::norm(x);
    return std::sqrt(s);
}

double ComplexMatrix::norm_max() const {
    double s = 0.0;
    for (const auto& x : data_) s = std::max(s, std::abs(x));
    return s;
}

cplx ComplexMatrix::trace() const {
    cplx t = 0.0;
    for (int i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

bool ComplexMatrix::is_real(double tol) const {
    return std::all_of(data_.begin(), data_.end(),
                       [tol](const cplx& x) { return std::abs(x.imag()) <= tol; });
}

bool ComplexMatrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& x) {
        return std::isfinite(x.real()) && std::isfinite(x.imag());
    });
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    require_same_shape(*this, o, "+");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    require_same_shape(*this, o, "-");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
    for (auto& x : data_) x *= s;
    return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator-(const ComplexMatrix& a) { return cplx(-1.0) * a; }
ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw ValidationError("shape mismatch in matrix product");
    ComplexMatrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx(0.0)) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& x) {
    if (a.cols() != static_cast<int>(x.size())) throw ValidationError("shape mismatch in matvec");
    ComplexVector y(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            for (int p = 0; p < b.rows(); ++p)
                for (int q = 0; q < b.cols(); ++q)
                    k(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
    return k;
}

ComplexMatrix matrix_power(const ComplexMatrix& a, int n) {
    if (!a.square()) throw ValidationError("matrix_power needs a square matrix");
    if (n < 0) throw ValidationError("matrix_power needs n >= 0");
    ComplexMatrix r = ComplexMatrix::identity(a.rows());
    for (int i = 0; i < n; ++i) r = r * a;
    return r;
}

double norm2(const ComplexVector& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

cplx dot(const ComplexVector& a, const ComplexVector& b) {
    if (a.size() != b.size()) throw ValidationError("dot: length mismatch");
    cplx s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

ComplexVector normalized(const ComplexVector& v) {
    const double n = norm2(v);
    if (n == 0.0) throw NumericalError("cannot normalize a zero vector");
    ComplexVector r = v;
    for (auto& x : r) x /= n;
    return r;
}

ComplexMatrix sigma0() { return ComplexMatrix::identity(2); }
ComplexMatrix sigma_x() { return {{0.0, 1.0}, {1.0, 0.0}}; }
ComplexMatrix sigma_y() { return {{0.0, cplx(0, -1)}, {cplx(0, 1), 0.0}}; }
ComplexMatrix sigma_z() { return {{1.0, 0.0}, {0.0, -1.0}}; }

// ---------------------------------------------------------------- polynomials

PolynomialCoeffs::PolynomialCoeffs(ComplexVector c) : coeffs(std::move(c)) {}

cplx PolynomialCoeffs::operator()(cplx z) const {
    cplx r = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * z + *it;
    return r;
}

double PolynomialCoeffs::max_abs_coeff() const {
    double m = 0.0;
    for (const auto& c : coeffs) m = std::max(m, std::abs(c));
    return m;
}

PolynomialCoeffs poly_mul(const PolynomialCoeffs& a, const PolynomialCoeffs& b) {
    if (a.coeffs.empty() || b.coeffs.empty()) return PolynomialCoeffs{};
    ComplexVector c(a.coeffs.size() + b.coeffs.size() - 1, 0.0);
    for (size_t i = 0; i < a.coeffs.size(); ++i)
        for (size_t j = 0; j < b.coeffs.size(); ++j) c[i + j] += a.coeffs[i] * b.coeffs[j];
    return PolynomialCoeffs(std::move(c));
}

PolynomialCoeffs poly_add(const PolynomialCoeffs& a, const PolynomialCoeffs& b) {
    ComplexVector c(std::max(a.coeffs.size(), b.coeffs.size()), 0.0);
    for (size_t i = 0; i < a.coeffs.size(); ++i) c[i] += a.coeffs[i];
    for (size_t i = 0; i < b.coeffs.size(); ++i) c[i] += b.coeffs[i];
    return PolynomialCoeffs(std::move(c));
}

PolynomialCoeffs poly_from_roots(const ComplexVector& roots, cplx lead) {
    PolynomialCoeffs p(ComplexVector{lead});
    for (const auto& r : roots) p = poly_mul(p, PolynomialCoeffs(ComplexVector{-r, 1.0}));
    return p;
}

ComplexVector poly_roots(const PolynomialCoeffs& p, double tol) {
    const int n = p.degree();
    if (n < 1) throw ValidationError("poly_roots: degree must be >= 1");
    if (!(tol > 0.0)) throw ValidationError("poly_roots: tol must be positive");
    if (std::abs(p.lead()) == 0.0) throw ValidationError("poly_roots: leading coefficient is zero");
    for (const auto& c : p.coeffs)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw ValidationError("poly_roots: non-finite coefficient");

    if (n == 1) return {-p.coeffs[0] / p.coeffs[1]};

    std::vector<double> abs_c(n + 1);
    for (int k = 0; k <= n; ++k) abs_c[k] = std::abs(p.coeffs[k]);

    double radius = 0.0;
    for (int k = 0; k < n; ++k) radius = std::max(radius, abs_c[k] / abs_c[n]);
    radius += 1.0;

    // Fixed irrational offset keeps the start off any symmetry axis.
    const double offset = 0.5772156649015329;
    ComplexVector z(n);
    for (int k = 0; k < n; ++k)
        z[k] = std::polar(radius, 2.0 * M_PI * k / n + offset);

    auto eval = [&](cplx x, cplx& val, cplx& der, double& bound) {
        val = p.coeffs[n];
        der = 0.0;
        double b = abs_c[n];
        const double ax = std::abs(x);
        for (int k = n - 1; k >= 0; --k) {
            der = der * x + val;
            val = val * x + p.coeffs[k];
            b = b * ax + abs_c[k];
        }
        bound = b;
    };

    std::vector<char> done(n, 0);
    constexpr int kMaxIter = 500;
    int iter = 0;
    for (; iter < kMaxIter; ++iter) {
        bool all_done = true;
        for (int i = 0; i < n; ++i) {
            if (done[i]) continue;
            cplx val, der;
            double bound;
            eval(z[i], val, der, bound);
            // Value indistinguishable from rounding noise: z[i] is as good as it gets.
            if (std::abs(val) <= 4.0 * kEps * bound) {
                done[i] = 1;
                continue;
            }
            all_done = false;
            cplx sum = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) {
                    const cplx d = z[i] - z[j];
                    if (d != cplx(0.0)) sum += 1.0 / d;
                }
            cplx step;
            if (der == cplx(0.0)) {
                step = std::polar(tol * (1.0 + std::abs(z[i])) * 16.0, offset * (i + 1));
            } else {
                const cplx ratio = val / der;
                step = ratio / (1.0 - ratio * sum);
            }
            z[i] -= step;
            if (std::abs(step) < tol * (1.0 + std::abs(z[i]))) done[i] = 1;
        }
        if (all_done) break;
    }

    if (iter == kMaxIter) {
        double worst = 0.0;
        const double scale = p.max_abs_coeff();
        for (const auto& r : z) worst = std::max(worst, std::abs(p(r)) / scale);
        throw ConvergenceError("poly_roots: Aberth iteration did not converge", z, worst,
                               {{"iterations", static_cast<double>(iter)}});
    }
    return z;
}

PolynomialCoeffs char_poly(const ComplexMatrix& a) {
    if (!a.square()) throw ValidationError("char_poly needs a square matrix");
    const int n = a.rows();
    ComplexVector c(n + 1, 0.0);
    c[n] = 1.0;
    ComplexMatrix mk = ComplexMatrix::zeros(n, n);
    const ComplexMatrix id = ComplexMatrix::identity(n);
    for (int k = 1; k <= n; ++k) {
        mk = a * mk + c[n - k + 1] * id;
        const ComplexMatrix amk = a * mk;
        c[n - k] = -amk.trace() / static_cast<double>(k);
    }
    return PolynomialCoeffs(std::move(c));
}

// ------------------------------------------------------------------------ LU

LU lu_decompose(const ComplexMatrix& a, double pivot_tol) {
    if (!a.square()) throw ValidationError("LU needs a square matrix");
    const int n = a.rows();
    LU f;
    f.lu = a;
    f.perm.resize(n);
    std::iota(f.perm.begin(), f.perm.end(), 0);
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(f.lu(k, k));
        for (int i = k + 1; i < n; ++i)
            if (std::abs(f.lu(i, k)) > best) {
                best = std::abs(f.lu(i, k));
                piv = i;
            }
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
            f.sign = -f.sign;
        }
        if (best <= pivot_tol || best == 0.0) {
            f.singular = true;
            continue;
        }
        ++f.rank_estimate;
        const cplx d = f.lu(k, k);
        for (int i = k + 1; i < n; ++i) {
            const cplx m = f.lu(i, k) / d;
            f.lu(i, k) = m;
            if (m == cplx(0.0)) continue;
            for (int j = k + 1; j < n; ++j) f.lu(i, j) -= m * f.lu(k, j);
        }
    }
    return f;
}

cplx determinant(const ComplexMatrix& a) {
    const LU f = lu_decompose(a);
    cplx d = static_cast<double>(f.sign);
    for (int i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
    return d;
}

namespace {

ComplexVector lu_solve(const LU& f, const ComplexVector& b) {
    const int n = f.lu.rows();
    ComplexVector x(n);
    for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
        x[i] /= f.lu(i, i);
    }
    return x;
}

LU checked_lu(const ComplexMatrix& a, double tol) {
    if (!a.square()) throw ValidationError("solve_linear needs a square matrix");
    const double scale = a.norm_fro();
    LU f = lu_decompose(a, tol * scale);
    if (f.singular || scale == 0.0)
        throw SingularMatrixError("matrix is singular within pivot tolerance", f.rank_estimate);
    return f;
}

}  // namespace

ComplexVector solve_linear(const ComplexMatrix& a, const ComplexVector& b, double tol) {
    if (static_cast<int>(b.size()) != a.rows()) throw ValidationError("solve_linear: rhs length mismatch");
    return lu_solve(checked_lu(a, tol), b);
}

ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b, double tol) {
    if (b.rows() != a.rows()) throw ValidationError("solve_linear: rhs rows mismatch");
    const LU f = checked_lu(a, tol);
    ComplexMatrix x(b.rows(), b.cols());
    ComplexVector col(b.rows());
    for (int j = 0; j < b.cols(); ++j) {
        for (int i = 0; i < b.rows(); ++i) col[i] = b(i, j);
        const ComplexVector s = lu_solve(f, col);
        for (int i = 0; i < b.rows(); ++i) x(i, j) = s[i];
    }
    return x;
}

ComplexMatrix inverse(const ComplexMatrix& a, double tol) {
    return solve_linear(a, ComplexMatrix::identity(a.rows()), tol);
}

// ----------------------------------------------------------------------- SVD

SVD svd(const ComplexMatrix& a) {
    const int m0 = a.rows();
    const int n = a.cols();
    const int m = std::max(m0, n);
    // Work on a tall copy; padding rows with zeros leaves A^H A unchanged.
    ComplexMatrix u(m, n);
    for (int i = 0; i < m0; ++i)
        for (int j = 0; j < n; ++j) u(i, j) = a(i, j);
    ComplexMatrix v = ComplexMatrix::identity(n);

    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0;
                cplx gamma = 0.0;
                for (int i = 0; i < m; ++i) {
                    alpha += std::norm(u(i, p));
                    beta += std::norm(u(i, q));
                    gamma += std::conj(u(i, p)) * u(i, q);
                }
                const double g = std::abs(gamma);
                if (g <= kEps * std::sqrt(alpha * beta) || g == 0.0) continue;
                rotated = true;
                const cplx phase = std::conj(gamma / g);
                const double zeta = (beta - alpha) / (2.0 * g);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < m; ++i) {
                    const cplx up = u(i, p);
                    const cplx uq = u(i, q) * phase;
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
                for (int i = 0; i < n; ++i) {
                    const cplx vp = v(i, p);
                    const cplx vq = v(i, q) * phase;
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        if (!rotated) break;
    }

    std::vector<double> norms(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += std::norm(u(i, j));
        norms[j] = std::sqrt(s);
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return norms[x] > norms[y]; });

    const int k = std::min(m0, n);
    SVD out;
    out.s.resize(n);
    out.u = ComplexMatrix(m0, k);
    out.v = ComplexMatrix(n, n);
    for (int jj = 0; jj < n; ++jj) {
        const int j = order[jj];
        out.s[jj] = norms[j];
        for (int i = 0; i < n; ++i) out.v(i, jj) = v(i, j);
        if (jj < k && norms[j] > 0.0)
            for (int i = 0; i < m0; ++i) out.u(i, jj) = u(i, j) / norms[j];
    }
    out.s.resize(n);
    return out;
}

std::vector<ComplexVector> nullspace(const ComplexMatrix& a, double thresh, bool at_least_one) {
    const SVD d = svd(a);
    const int n = a.cols();
    std::vector<ComplexVector> basis;
    for (int j = n - 1; j >= 0; --j) {
        const bool small = d.s[j] <= thresh;
        if (!small && !(at_least_one && basis.empty())) break;
        ComplexVector col(n);
        for (int i = 0; i < n; ++i) col[i] = d.v(i, j);
        basis.push_back(std::move(col));
        if (!small) break;
    }
    return basis;
}

ComplexVector gauge_fixed(const ComplexVector& v) {
    const double nrm = norm2(v);
    if (nrm == 0.0) return v;
    for (const auto& x : v) {
        if (std::abs(x) > 1e-10 * nrm) {
            const cplx ph = std::conj(x) / std::abs(x);
            ComplexVector r = v;
            for (auto& y : r) y *= ph;
            return r;
        }
    }
    return v;
}

// ------------------------------------------------------------- eigenproblems

namespace {

bool eig_less(const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

// Newton on log det(A − λI): λ ← λ + 1/tr((A − λI)⁻¹).
cplx polish_eigenvalue(const ComplexMatrix& a, cplx lam, double sep) {
    const int n = a.rows();
    const ComplexMatrix id = ComplexMatrix::identity(n);
    for (int it = 0; it < 4; ++it) {
        const LU f = lu_decompose(a - lam * id);
        if (f.singular) return lam;
        cplx tr = 0.0;
        ComplexVector e(n, 0.0);
        for (int j = 0; j < n; ++j) {
            std::fill(e.begin(), e.end(), cplx(0.0));
            e[j] = 1.0;
            tr += lu_solve(f, e)[j];
        }
        if (tr == cplx(0.0)) return lam;
        const cplx step = 1.0 / tr;
        // A step comparable to the gap to the next eigenvalue means we are
        // not in the quadratic basin; keep the unpolished value.
        if (std::abs(step) > 0.25 * sep) return lam;
        lam += step;
        if (std::abs(step) <= 4.0 * kEps * std::max(1.0, std::abs(lam))) break;
    }
    return lam;
}

}  // namespace

ComplexVector eigenvalues(const ComplexMatrix& a) {
    if (!a.square()) throw ValidationError("eigenvalues need a square matrix");
    const int n = a.rows();
    if (n == 0) return {};
    if (n == 1) return {a(0, 0)};
    ComplexVector lam = poly_roots(char_poly(a), 1e-15);
    const double scale = std::max(a.norm_fro(), 1e-300);
    for (int i = 0; i < n; ++i) {
        double sep = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j)
            if (j != i) sep = std::min(sep, std::abs(lam[i] - lam[j]));
        if (sep > 1e-6 * scale) lam[i] = polish_eigenvalue(a, lam[i], sep);
    }
    std::sort(lam.begin(), lam.end(), eig_less);
    return lam;
}

double spectral_radius(const ComplexMatrix& a) {
    double r = 0.0;
    for (const auto& l : eigenvalues(a)) r = std::max(r, std::abs(l));
    return r;
}

std::vector<DenseEigenPair> eig_dense(const ComplexMatrix& a, double tol) {
    if (!a.square()) throw ValidationError("eig_dense needs a square matrix");
    if (a.rows() > 64) throw ValidationError("eig_dense is limited to dimension 64");
    (void)tol;
    const int n = a.rows();
    const ComplexVector lam = eigenvalues(a);
    const double anorm = std::max(a.norm_fro(), 1e-300);
    const double cluster_tol = 1e-6 * anorm;
    const ComplexMatrix id = ComplexMatrix::identity(n);

    std::vector<DenseEigenPair> out;
    out.reserve(n);
    std::vector<char> used(n, 0);
    for (int i = 0; i < n; ++i) {
        if (used[i]) continue;
        std::vector<int> members{i};
        used[i] = 1;
        for (int j = i + 1; j < n; ++j)
            if (!used[j] && std::abs(lam[j] - lam[i]) < cluster_tol) {
                members.push_back(j);
                used[j] = 1;
            }
        cplx center = 0.0;
        for (int m : members) center += lam[m];
        center /= static_cast<double>(members.size());

        const int mult = static_cast<int>(members.size());
        auto basis = nullspace(a - center * id, 1e-7 * anorm, true);
        const bool defective = static_cast<int>(basis.size()) < mult;
        for (int k = 0; k < mult; ++k) {
            const ComplexVector& v = basis[std::min<size_t>(k, basis.size() - 1)];
            out.push_back({lam[members[k]], gauge_fixed(normalized(v)), defective});
        }
    }
    return out;
}

std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    for (const auto& row : cost)
        if (static_cast<int>(row.size()) != n) throw ValidationError("assignment cost table must be square");
    if (n == 0) return {};
    // Potentials formulation, 1-based internally.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> col(n);
    for (int j = 1; j <= n; ++j) col[p[j] - 1] = j - 1;
    return col;
}

}  // namespace excepta
