#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "excepta/models.hpp"
#include "oracles.hpp"

using namespace excepta;

namespace {

double matrix_distance(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).norm_max(); }

Geometry sample_geometry() {
    Geometry g;
    g.k1 = 1200.0;
    g.k2 = 450.0;
    g.l1 = 0.05;
    g.l2 = 0.04;
    g.r1 = 0.03;
    g.r2 = 0.025;
    g.r3 = 0.02;
    g.r4 = 0.04;
    g.d1 = 0.03;
    g.d2 = 0.035;
    return g;
}

// Max eigenfrequency error of ω₀ + δω against the exact PF pair.
double effective_error(const TheoreticalParams& p) {
    const QMP q = theoretical_qmp(p);
    const EffectiveTwoBand e = effective_two_band(q, 1.0);
    ComplexVector approx = {e.omega0 + e.shifts[0], e.omega0 + e.shifts[1]};
    return oracle::set_distance(approx, pf_frequencies(q));
}

}  // namespace

TEST(Models, TheoreticalMatrices) {
    const QMP q = theoretical_qmp({2.0, 1.5, -0.05, 0.3, 0.1, 0.2});
    EXPECT_LT(matrix_distance(q.M(), 2.0 * ComplexMatrix::identity(2)), 1e-15);
    EXPECT_LT(matrix_distance(q.K(), ComplexMatrix{{1.6, -0.1}, {-0.05, 1.4}}), 1e-15);
    EXPECT_LT(matrix_distance(q.G(), ComplexMatrix::diagonal({0.15, -0.15})), 1e-15);
}

TEST(Models, ExperimentalMatrices) {
    ExperimentalParams p;
    p.m0 = 1.0;
    p.kappa0 = 4.0;
    p.gamma0 = 0.5;
    p.dchi = -0.2;
    p.gamma = 0.4;
    p.chi = 0.3;
    p.kappa = 0.1;
    const QMP q = experimental_qmp(p);
    EXPECT_LT(matrix_distance(q.K(), ComplexMatrix{{4.3, -0.3}, {-0.1, 4.2}}), 1e-15);
    EXPECT_LT(matrix_distance(q.G(), ComplexMatrix::diagonal({0.7, 0.3})), 1e-15);
}

TEST(Models, LatticeMatricesAtGammaPoint) {
    LatticeParams p{1.0, 1.0, 1.3, -0.7, 0.5, 0.4, 0.7, {0, 0, 0}};
    const QMP q = lattice_bloch_qmp(p);
    const double diag = 1.0 + 1.3 - 0.7 + 2.0;
    const double ax = 1.3 - 0.7 + 2.0;
    EXPECT_LT(matrix_distance(q.K(), ComplexMatrix{{diag, -ax}, {-ax, diag}}), 1e-14);
    EXPECT_LT(matrix_distance(q.G(), ComplexMatrix::diagonal({-0.7, 0.7})), 1e-15);
}

TEST(Models, LatticePairsMinusK) {
    const LatticeParams base{1.0, 1.0, 1.3, -0.7, 0.5, 0.4, 0.7, {0, 0, 0}};
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-M_PI, M_PI);
    for (int i = 0; i < 50; ++i) {
        const Vec3 k{u(rng), u(rng), u(rng)};
        ComplexVector w = eigenfrequencies(lattice_bloch_qmp(base.at(k)));
        ComplexVector mirrored = eigenfrequencies(lattice_bloch_qmp(base.at(-k)));
        for (auto& x : mirrored) x = -std::conj(x);
        EXPECT_LT(oracle::set_distance(w, mirrored), 1e-9);
    }
    // Time-reversal-invariant momenta pair within themselves.
    EXPECT_LT(particle_hole_residual(eigenfrequencies(lattice_bloch_qmp(base.at({M_PI, 0, M_PI})))), 1e-9);
}

TEST(Models, BuilderFoldsMomentum) {
    const LatticeParams base{1.0, 1.0, 1.3, -0.7, 0.5, 0.4, 0.7, {0, 0, 0}};
    const QmpBuilder b = lattice_builder(base);
    const Vec3 k{0.3, 1.0, -0.4};
    EXPECT_LT((b(k).K() - b(k + Vec3{2 * M_PI, 0, 0}).K()).norm_max(), 1e-12);
}

TEST(Models, PerturbationIsAdded) {
    Perturbation pert;
    pert.dK = ComplexMatrix{{0.0, cplx(0, 0.01)}, {0.0, 0.0}};
    const QmpBuilder b = theoretical_builder({1.0, 1.0, -0.05, 0, 0, 0}, pert);
    EXPECT_EQ(b({0, 0.1, 0}).K()(0, 1), cplx(-0.1, 0.01));
}

TEST(Models, ValidationRejectsBadParams) {
    EXPECT_THROW(theoretical_qmp({-1.0, 1.0, 0, 0, 0, 0}), ValidationError);
    ExperimentalParams e;
    e.gamma0 = -1.0;
    EXPECT_THROW(experimental_qmp(e), ValidationError);
    LatticeParams l;
    l.k = {4.0, 0, 0};
    EXPECT_THROW(lattice_bloch_qmp(l), ValidationError);
    Geometry g = sample_geometry();
    g.r3 = 0.0;
    EXPECT_THROW(geometry_to_stiffness(g), ValidationError);
}

TEST(Models, GeometryMatchesPotentialHessian) {
    const Geometry g = sample_geometry();
    const StiffnessTriple s = geometry_to_stiffness(g);
    const double h = 1e-4;
    const double v1 = (arm_potential_V1(g, h) - 2 * arm_potential_V1(g, 0) + arm_potential_V1(g, -h)) / (h * h);
    const double v2 = (arm_potential_V2(g, h) - 2 * arm_potential_V2(g, 0) + arm_potential_V2(g, -h)) / (h * h);
    const double v3_11 = (arm_potential_V3(g, h, 0) - 2 * arm_potential_V3(g, 0, 0) + arm_potential_V3(g, -h, 0)) / (h * h);
    const double v3_12 = (arm_potential_V3(g, h, h) - arm_potential_V3(g, h, -h) - arm_potential_V3(g, -h, h) +
                          arm_potential_V3(g, -h, -h)) /
                         (4 * h * h);
    EXPECT_NEAR(v1, s.kappa0, 1e-5 * std::abs(s.kappa0));
    EXPECT_NEAR(v2, s.kappa0 - s.kappa, 1e-5 * std::abs(s.kappa0));
    EXPECT_NEAR(v3_11, s.chi, 1e-5 * s.chi);
    EXPECT_NEAR(v3_12, -s.chi, 1e-5 * s.chi);
}

TEST(Models, EffectiveSplittingAtReferencePoint) {
    const QMP q = theoretical_qmp({1.0, 1.0, -0.05, 0.0, 0.1, 0.0});
    const EffectiveTwoBand e = effective_two_band(q);
    EXPECT_NEAR(e.omega0, 1.0, 1e-15);
    const double eff = 0.5 * std::abs(e.shifts[1] - e.shifts[0]);
    EXPECT_NEAR(eff, std::sqrt(0.1 * 0.05) / 2.0, 1e-12);
    const ComplexVector pf = pf_frequencies(q);
    const double exact = 0.5 * std::abs(pf[1] - pf[0]);
    const double oracle_exact = (std::sqrt(1 + std::sqrt(0.005)) - std::sqrt(1 - std::sqrt(0.005))) / 2;
    EXPECT_NEAR(exact, oracle_exact, 1e-12);
    EXPECT_LT(std::abs(eff - exact) / exact, 1e-3);
}

TEST(Models, EffectiveReductionIsSecondOrder) {
    std::vector<double> eps = {0.1, 0.05, 0.025}, err;
    for (double e : eps) err.push_back(effective_error({1.0, 1.0, -0.05 * e, 0.3 * e, 0.1 * e, 0.2 * e}));
    // Least-squares slope of log err against log ε.
    double mx = 0, my = 0;
    for (int i = 0; i < 3; ++i) {
        mx += std::log(eps[i]) / 3;
        my += std::log(err[i]) / 3;
    }
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) {
        sxy += (std::log(eps[i]) - mx) * (std::log(err[i]) - my);
        sxx += (std::log(eps[i]) - mx) * (std::log(eps[i]) - mx);
    }
    EXPECT_GE(sxy / sxx, 1.9);
}

TEST(Models, EffectiveRejectsNonScalarMass) {
    const QMP q(ComplexMatrix::diagonal({1.0, 2.0}), ComplexMatrix::identity(2), ComplexMatrix::zeros(2, 2));
    EXPECT_THROW(effective_two_band(q), ValidationError);
}
