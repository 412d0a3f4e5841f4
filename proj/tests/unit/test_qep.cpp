#include <gtest/gtest.h>

#include <random>

#include "excepta/models.hpp"
#include "excepta/qep.hpp"
#include "oracles.hpp"

using namespace excepta;

TEST(Qep, EigenfrequenciesMatchEigenLinearization) {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + trial % 5;
        const QMP q(ComplexMatrix::identity(n) + oracle::random_complex(rng, n, 0.1),
                    oracle::random_complex(rng, n), oracle::random_complex(rng, n, 0.5));
        const ComplexVector ours = eigenfrequencies(q);
        ASSERT_EQ(static_cast<int>(ours.size()), 2 * n);
        EXPECT_LT(oracle::set_distance(ours, oracle::qep_eigenvalues(q)), 1e-9) << "n = " << n;
        for (size_t i = 1; i < ours.size(); ++i)
            EXPECT_TRUE(ours[i - 1].real() < ours[i].real() ||
                        (ours[i - 1].real() == ours[i].real() && ours[i - 1].imag() <= ours[i].imag()));
    }
}

TEST(Qep, LinearizationEigenvectorsHaveCompanionShape) {
    std::mt19937_64 rng(7);
    const QMP q = oracle::random_real_qmp(rng, 3);
    const ComplexMatrix H = linearize(q);
    const Spectrum s = solve(q);
    for (const auto& p : s.pairs) {
        ComplexVector x(6);
        for (int i = 0; i < 3; ++i) {
            x[i] = p.right[i];
            x[i + 3] = cplx(0, -1) * p.omega * p.right[i];
        }
        ComplexVector r = H * x;
        for (int i = 0; i < 6; ++i) r[i] -= p.omega * x[i];
        EXPECT_LT(norm2(r), 1e-8 * std::max(1.0, std::abs(p.omega)));
        EXPECT_LT(norm2(q.evaluate(p.omega) * p.right), 1e-8);
    }
}

TEST(Qep, DetPolynomialMatchesDeterminant) {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> d(0.0, 1.0);
    for (int n = 1; n <= 5; ++n) {
        const QMP q(ComplexMatrix::identity(n) + oracle::random_complex(rng, n, 0.2),
                    oracle::random_complex(rng, n), oracle::random_complex(rng, n));
        const PolynomialCoeffs p = det_polynomial(q);
        EXPECT_EQ(p.degree(), 2 * n);
        for (int k = 0; k < 5; ++k) {
            const cplx w(d(rng), d(rng));
            const cplx ref = oracle::to_eigen(q.evaluate(w)).determinant();
            EXPECT_LT(std::abs(p(w) - ref), 1e-10 * std::max(1.0, std::abs(ref))) << "n = " << n;
        }
    }
}

TEST(Qep, RandomRealQmpsAreParticleHoleSymmetric) {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const QMP q = oracle::random_real_qmp(rng, 2 + trial % 3);
        ASSERT_TRUE(q.is_real());
        worst = std::max(worst, particle_hole_residual(eigenfrequencies(q)));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Qep, ComplexQmpBreaksParticleHole) {
    const QMP q(ComplexMatrix::identity(2), ComplexMatrix{{1.0, cplx(0, 0.3)}, {0.2, 2.0}},
                ComplexMatrix::diagonal({0.1, -0.2}));
    EXPECT_GT(particle_hole_residual(eigenfrequencies(q)), 1e-3);
}

TEST(Qep, GreensInvertsQ) {
    std::mt19937_64 rng(31);
    const QMP q = oracle::random_real_qmp(rng, 3);
    const cplx w(0.7, 0.3);
    const ComplexMatrix prod = greens(q, w) * q.evaluate(w);
    EXPECT_LT((prod - ComplexMatrix::identity(3)).norm_fro(), 1e-12);
}

TEST(Qep, GreensAtEigenfrequencyNamesIt) {
    const QMP q(ComplexMatrix::identity(2), ComplexMatrix::diagonal({1.0, 4.0}), ComplexMatrix::zeros(2, 2));
    try {
        greens(q, 2.0);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("eigenfrequency"), std::string::npos);
        EXPECT_NEAR(e.diagnostics().at("nearest_re"), 2.0, 1e-9);
    }
}

TEST(Qep, DetectsExceptionalPointOnRing) {
    // γ = 0, κ²/4 + χ(χ + δχ) = 0 on the ring; K − I is nilpotent here.
    const TheoreticalParams p{1.0, 1.0, -0.05, 0.0, 0.025, 0.05};
    const Spectrum s = solve(theoretical_qmp(p));
    EXPECT_TRUE(s.has_ep());
    EXPECT_TRUE(s.diabolic.empty());
}

TEST(Qep, DistinguishesDiabolicDegeneracy) {
    const QMP q(ComplexMatrix::identity(2), ComplexMatrix::identity(2), ComplexMatrix::zeros(2, 2));
    const Spectrum s = solve(q);
    EXPECT_FALSE(s.has_ep());
    EXPECT_EQ(s.diabolic.size(), 2u);
}

TEST(Qep, PfGapAndBands) {
    const QMP q(ComplexMatrix::identity(2), ComplexMatrix::diagonal({1.0, 4.0}), ComplexMatrix::diagonal({0.1, 0.1}));
    const ComplexVector pf = pf_frequencies(q);
    ASSERT_EQ(pf.size(), 2u);
    EXPECT_LT(pf[0].real(), pf[1].real());
    EXPECT_GT(pf[0].real(), 0.0);

    // K with a negative eigenvalue puts a root on the imaginary axis.
    const QMP unstable(ComplexMatrix::identity(1), ComplexMatrix::diagonal({-1.0}), ComplexMatrix::zeros(1, 1));
    EXPECT_FALSE(pf_gap_open(eigenfrequencies(unstable)));
    EXPECT_THROW(pf_frequencies(unstable), NumericalError);
}

TEST(Qep, RejectsSingularMassAndBadShapes) {
    EXPECT_THROW(QMP(ComplexMatrix::zeros(2, 2), ComplexMatrix::identity(2), ComplexMatrix::zeros(2, 2)),
                 ValidationError);
    EXPECT_THROW(QMP(ComplexMatrix::identity(2), ComplexMatrix::identity(3), ComplexMatrix::zeros(2, 2)),
                 ValidationError);
}
