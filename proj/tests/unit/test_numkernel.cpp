#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "excepta/numkernel.hpp"
#include "oracles.hpp"

using namespace excepta;

TEST(PolyRoots, MatchesEigenCompanionEigenvalues) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> d(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int deg = 2 + trial % 9;
        ComplexVector c(deg + 1);
        for (auto& x : c) x = cplx(d(rng), d(rng));
        c.back() = 1.0;
        // Companion matrix of the monic polynomial.
        ComplexMatrix comp(deg, deg);
        for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
        for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i];
        const ComplexVector ours = poly_roots(PolynomialCoeffs(c));
        ASSERT_EQ(static_cast<int>(ours.size()), deg);
        EXPECT_LT(oracle::set_distance(ours, oracle::eigenvalues(comp)), 1e-9) << "degree " << deg;
    }
}

TEST(PolyRoots, RecoversKnownRootsAndMultiplicity) {
    const ComplexVector r = {cplx(1, 2), cplx(-0.5, 0), cplx(3, -1), cplx(0, 0.25)};
    const ComplexVector found = poly_roots(poly_from_roots(r, cplx(2, 1)));
    EXPECT_LT(oracle::set_distance(found, r), 1e-12);

    // Double root: accuracy degrades to ~sqrt(eps).
    const ComplexVector dbl = poly_roots(poly_from_roots({1.0, 1.0, -2.0}));
    EXPECT_LT(oracle::set_distance(dbl, {1.0, 1.0, -2.0}), 1e-6);
}

TEST(PolyRoots, DeterministicOrder) {
    const PolynomialCoeffs p({cplx(1, 1), 2.0, cplx(0, -3), 1.0});
    EXPECT_EQ(poly_roots(p), poly_roots(p));
}

TEST(Dense, DeterminantAndInverseMatchEigen) {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 8; ++n) {
        const ComplexMatrix a = oracle::random_complex(rng, n);
        const Eigen::MatrixXcd e = oracle::to_eigen(a);
        EXPECT_LT(std::abs(determinant(a) - e.determinant()), 1e-10 * std::max(1.0, std::abs(e.determinant())));
        const ComplexMatrix inv = inverse(a);
        EXPECT_LT((oracle::to_eigen(inv) - e.inverse()).norm(), 1e-9 * e.inverse().norm());
    }
}

TEST(Dense, SolveThrowsOnSingular) {
    const ComplexMatrix a{{1.0, 2.0}, {2.0, 4.0}};
    EXPECT_THROW(solve_linear(a, ComplexVector{1.0, 0.0}), SingularMatrixError);
}

TEST(Dense, SvdMatchesEigenAndReconstructs) {
    std::mt19937_64 rng(7);
    for (int n = 2; n <= 6; ++n) {
        const ComplexMatrix a = oracle::random_complex(rng, n);
        const SVD s = svd(a);
        Eigen::JacobiSVD<Eigen::MatrixXcd> es(oracle::to_eigen(a));
        for (int i = 0; i < n; ++i) EXPECT_NEAR(s.s[i], es.singularValues()(i), 1e-10);
        ComplexMatrix us = s.u;
        for (int i = 0; i < us.rows(); ++i)
            for (int j = 0; j < us.cols(); ++j) us(i, j) *= s.s[j];
        EXPECT_LT((us * s.v.adjoint() - a).norm_fro(), 1e-10 * a.norm_fro());
    }
}

TEST(Dense, NullspaceOfRankDeficient) {
    const ComplexMatrix a{{1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}, {1.0, 0.0, 1.0}};
    const auto ns = nullspace(a, 1e-10);
    ASSERT_EQ(ns.size(), 1u);
    EXPECT_LT(norm2(a * ns[0]), 1e-12);
}

TEST(Dense, EigDenseMatchesEigen) {
    std::mt19937_64 rng(3);
    for (int n = 2; n <= 8; ++n) {
        const ComplexMatrix a = oracle::random_complex(rng, n);
        const auto pairs = eig_dense(a);
        ComplexVector vals;
        for (const auto& p : pairs) {
            vals.push_back(p.value);
            ComplexVector r = a * p.vector;
            for (int i = 0; i < n; ++i) r[i] -= p.value * p.vector[i];
            EXPECT_LT(norm2(r), 1e-9 * a.norm_fro());
        }
        EXPECT_LT(oracle::set_distance(vals, oracle::eigenvalues(a)), 1e-9);
    }
}

TEST(Dense, EigDenseFlagsJordanBlock) {
    const ComplexMatrix j{{2.0, 1.0}, {0.0, 2.0}};
    const auto pairs = eig_dense(j);
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_TRUE(pairs[0].near_defective || pairs[1].near_defective);
}

TEST(CharPoly, CoefficientsMatchEigenvalues) {
    std::mt19937_64 rng(19);
    const ComplexMatrix a = oracle::random_complex(rng, 5);
    const PolynomialCoeffs p = char_poly(a);
    ASSERT_EQ(p.degree(), 5);
    EXPECT_LT(std::abs(p.lead() - 1.0), 1e-14);
    for (const cplx& lam : oracle::eigenvalues(a)) EXPECT_LT(std::abs(p(lam)), 1e-8);
    // Constant term is (−1)^n det A.
    EXPECT_LT(std::abs(p.coeffs[0] + determinant(a)), 1e-10);
}

TEST(Assignment, MatchesBruteForce) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 6;
        std::vector<std::vector<double>> cost(n, std::vector<double>(n));
        for (auto& row : cost)
            for (auto& x : row) x = u(rng);
        const std::vector<int> col = min_cost_assignment(cost);
        double ours = 0.0;
        for (int i = 0; i < n; ++i) ours += cost[i][col[i]];

        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
        do {
            double c = 0.0;
            for (int i = 0; i < n; ++i) c += cost[i][perm[i]];
            best = std::min(best, c);
        } while (std::next_permutation(perm.begin(), perm.end()));
        EXPECT_NEAR(ours, best, 1e-12);
    }
}

TEST(Assignment, TiesPreferLowerIndices) {
    const std::vector<std::vector<double>> cost(3, std::vector<double>(3, 1.0));
    EXPECT_EQ(min_cost_assignment(cost), (std::vector<int>{0, 1, 2}));
}

TEST(Matrix, PauliAlgebra) {
    const ComplexMatrix i2 = ComplexMatrix::identity(2);
    EXPECT_LT((sigma_x() * sigma_x() - i2).norm_fro(), 1e-15);
    EXPECT_LT((sigma_x() * sigma_y() - cplx(0, 1) * sigma_z()).norm_fro(), 1e-15);
    EXPECT_EQ(kron(sigma_z(), i2).rows(), 4);
    EXPECT_LT((matrix_power(sigma_y(), 4) - i2).norm_fro(), 1e-15);
}

TEST(Matrix, GaugeFixedFirstComponentRealPositive) {
    const ComplexVector v = gauge_fixed({cplx(0, 1e-14), cplx(-1, 1), 2.0});
    EXPECT_GT(v[1].real(), 0.0);
    EXPECT_NEAR(v[1].imag(), 0.0, 1e-15);
}
