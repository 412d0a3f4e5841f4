#include <gtest/gtest.h>

#include <random>

#include "excepta/symmetry.hpp"
#include "oracles.hpp"

using namespace excepta;

namespace {

const TheoreticalParams kTheory{1.0, 1.0, -0.05, 0.0, 0.0, 0.0};

ExperimentalParams experimental_base() {
    ExperimentalParams p;
    p.kappa0 = 1.0;
    p.gamma0 = 0.085;
    p.dchi = -0.073;
    return p;
}

const LatticeParams kLattice{1.0, 1.0, 1.3, -0.7, 0.5, 0.4, 0.7, {0, 0, 0}};

double residual(const QmpBuilder& b, const std::string& name, double g0m, const Vec3& lo, const Vec3& hi) {
    return relation_residual(b, named_relation(name, g0m), random_relation_samples(60, 2.0, lo, hi, 17));
}

}  // namespace

TEST(Symmetry, TheoreticalRelationsHold) {
    const QmpBuilder b = theoretical_builder(kTheory);
    for (const char* name : {"gamma", "kappa"})
        EXPECT_LT(residual(b, name, 0.0, {-0.2, -0.2, -0.2}, {0.2, 0.2, 0.2}), 1e-14) << name;
}

TEST(Symmetry, ExperimentalSubspaceRelationsHold) {
    const ExperimentalParams p = experimental_base();
    const QmpBuilder b = experimental_builder(p);
    const double g0m = p.gamma0 / p.m0;
    for (const char* name : {"gamma-sub", "kappa-sub"})
        EXPECT_LT(residual(b, name, g0m, {-0.1, 0, -0.1}, {0.1, 0.1, 0.1}), 1e-14) << name;
    // The common loss γ₀ breaks the full-space relations.
    for (const char* name : {"gamma", "kappa"})
        EXPECT_GT(residual(b, name, g0m, {-0.1, 0, -0.1}, {0.1, 0.1, 0.1}), 1e-3) << name;
}

TEST(Symmetry, LatticeCrystallineRelationsHold) {
    const QmpBuilder b = lattice_builder(kLattice);
    for (const char* name : {"C2xT", "C2yT", "MzDagger"})
        EXPECT_LT(residual(b, name, 0.0, {-3.1, -3.1, -3.1}, {3.1, 3.1, 3.1}), 1e-12) << name;
}

TEST(Symmetry, UnknownRelationRejected) { EXPECT_THROW(named_relation("C3"), ValidationError); }

TEST(Symmetry, IsospectralReductionOfLinearization) {
    std::mt19937_64 rng(41);
    const QMP q = oracle::random_real_qmp(rng, 2);
    const ComplexMatrix H = linearize(q);
    const ContributingSet S = ContributingSet::bottom_right(2);
    const ComplexMatrix Mi = inverse(q.M());
    const cplx w(0.4, 0.9);
    const ComplexMatrix expected = cplx(0, -1) * (Mi * q.G()) + (1.0 / w) * (Mi * q.K());
    EXPECT_LT((isospectral_reduction(H, S, w) - expected).norm_fro(), 1e-12);

    // det(R(ωₙ) − ωₙ) vanishes on the spectrum.
    for (const cplx wn : eigenfrequencies(q)) {
        const ComplexMatrix r = isospectral_reduction(H, S, wn) - wn * ComplexMatrix::identity(2);
        EXPECT_LT(std::abs(determinant(r)), 1e-9 * std::max(1.0, std::norm(wn)));
    }
}

TEST(Symmetry, ReductionAtPoleThrows) {
    const ComplexMatrix H = linearize(theoretical_qmp({1.0, 1.0, 0, 0, 0.1, 0}));
    EXPECT_THROW(isospectral_reduction(H, ContributingSet::bottom_right(2), 0.0), NumericalError);
}

TEST(Symmetry, ContributingSetValidation) {
    EXPECT_THROW(ContributingSet{{}}.validate(4), ValidationError);
    EXPECT_THROW((ContributingSet{{0, 1, 2, 3}}.validate(4)), ValidationError);
    EXPECT_THROW((ContributingSet{{1, 1}}.validate(4)), ValidationError);
    EXPECT_EQ(ContributingSet::bottom_right(2).complement(4), (std::vector<int>{0, 1}));
}

TEST(Symmetry, TheoreticalLatentResidual) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const Vec3 g{0.05, 0.03, 0.02};
    const ComplexMatrix H = linearize(b(g));
    const ComplexMatrix Hm = linearize(b(AffineMap::reflect(2)(g)));
    const double r = latent_residual(H, Hm, sigma_x(), ContributingSet::bottom_right(2), 4);
    EXPECT_LT(r, 1e-12);
    // Without the κ flip the relation fails.
    EXPECT_GT(latent_residual(H, H, sigma_x(), ContributingSet::bottom_right(2), 4), 1e-4);
}

TEST(Symmetry, ExperimentalLatentOnObliquePlaneAfterShift) {
    const ExperimentalParams p = experimental_base();
    const QmpBuilder b = experimental_builder(p);
    const double g0m = p.gamma0 / p.m0;
    const double gamma = 0.04;
    const Vec3 g{gamma, 0.05, g0m * gamma / 2.0};
    const QMP q = shift_frequency(b(g), -g0m / 2.0);
    const ComplexMatrix H = linearize(q);
    const LatentCheck c = latent_crosscheck(H, H, sigma_x(), ContributingSet::bottom_right(2), 1e-12);
    EXPECT_TRUE(c.pass()) << c.latent << " " << c.reduction;
    EXPECT_LT(latent_residual(H, H, sigma_x(), ContributingSet::bottom_right(2), 4), 1e-12);
}

TEST(Symmetry, ShiftFrequencyMovesSpectrum) {
    std::mt19937_64 rng(5);
    const QMP q = oracle::random_real_qmp(rng, 2);
    const double wi = -0.3;
    ComplexVector shifted = eigenfrequencies(shift_frequency(q, wi));
    for (auto& w : shifted) w += cplx(0, wi);
    EXPECT_LT(oracle::set_distance(shifted, eigenfrequencies(q)), 1e-10);
}

TEST(Symmetry, CrosscheckAgreesOnRandomHamiltonians) {
    std::mt19937_64 rng(2718);
    const ContributingSet S{{2, 3}};
    int one_sided = 0, passes = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const ComplexMatrix Ha = oracle::random_complex(rng, 4);
        ComplexMatrix Hb, L;
        if (trial % 2 == 0) {
            // H_b = P H_aᴴ P⁻¹ with block-diagonal P carries the latent symmetry with L = P_S⁻¹.
            ComplexMatrix P = ComplexMatrix::zeros(4, 4);
            P.set_block(0, 0, ComplexMatrix::identity(2) + oracle::random_complex(rng, 2, 0.3));
            P.set_block(2, 2, ComplexMatrix::identity(2) + oracle::random_complex(rng, 2, 0.3));
            Hb = P * Ha.adjoint() * inverse(P);
            L = inverse(P.block(2, 2, 2, 2));
        } else {
            Hb = oracle::random_complex(rng, 4);
            L = ComplexMatrix::identity(2) + oracle::random_complex(rng, 2, 0.3);
        }
        const LatentCheck c = latent_crosscheck(Ha, Hb, L, S, 1e-9);
        if (!c.agree()) ++one_sided;
        if (c.pass()) ++passes;
        EXPECT_EQ(c.pass(), trial % 2 == 0) << "trial " << trial << ": " << c.latent << " " << c.reduction;
    }
    EXPECT_EQ(one_sided, 0);
    EXPECT_EQ(passes, 100);
}

TEST(Symmetry, ExperimentalSubspaceSpectralPairing) {
    const ExperimentalParams p = experimental_base();
    const QmpBuilder b = experimental_builder(p);
    const double g0m = p.gamma0 / p.m0;
    const OmegaMap pair{true, 1.0, cplx(0, -g0m)};
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double gamma = u(rng), chi = u(rng), kappa = u(rng);
        worst = std::max(worst, spectral_pairing_residual(eigenfrequencies(b({0.0, chi, kappa})), pair));
        worst = std::max(worst, spectral_pairing_residual(eigenfrequencies(b({gamma, chi, g0m * gamma / 2})), pair));
    }
    EXPECT_LT(worst, 1e-9);
    // Off both planes the pairing is broken.
    EXPECT_GT(spectral_pairing_residual(eigenfrequencies(b({0.05, 0.02, 0.08})), pair), 1e-4);
}
