#include <gtest/gtest.h>

#include <algorithm>

#include "excepta/topology.hpp"
#include "excepta/tracer.hpp"

using namespace excepta;

namespace {

const TheoreticalParams kTheory{1.0, 1.0, -0.05, 0.0, 0.0, 0.0};

double vorticity(const QmpBuilder& b, const ParameterPath& loop) {
    return energy_vorticity(track_bands(b, loop), 0, 1);
}

}  // namespace

TEST(Topology, RingVorticityIsOne) {
    const QmpBuilder b = theoretical_builder(kTheory);
    EXPECT_NEAR(vorticity(b, ParameterPath::circle({0, 0.025, 0}, {0, -1, 0}, 0.1)), 1.0, 1e-3);
}

TEST(Topology, KappaPlaneLinesCarryHalfVorticity) {
    const QmpBuilder b = theoretical_builder(kTheory);
    EXPECT_NEAR(vorticity(b, ParameterPath::circle({0.0748, -0.02, 0}, {0, -1, 0}, 0.02)), 0.5, 1e-3);
    EXPECT_NEAR(vorticity(b, ParameterPath::circle({-0.0748, -0.02, 0}, {0, 1, 0}, 0.02)), -0.5, 1e-3);
}

TEST(Topology, ChainPointLoopBraidsTwice) {
    const QmpBuilder b = theoretical_builder(kTheory);
    EXPECT_NEAR(std::abs(vorticity(b, ParameterPath::circle({0, 0, 0}, {0, 1, 0}, 0.01))), 1.0, 1e-3);
}

TEST(Topology, ReversedLoopFlipsSign) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const ParameterPath loop = ParameterPath::circle({0.0748, -0.02, 0}, {0, -1, 0}, 0.02);
    EXPECT_NEAR(vorticity(b, loop) + vorticity(b, loop.reversed()), 0.0, 1e-9);
}

TEST(Topology, EmptyLoopHasZeroVorticity) {
    const QmpBuilder b = theoretical_builder(kTheory);
    EXPECT_NEAR(vorticity(b, ParameterPath::circle({0.3, 0.15, 0}, {1, 0, 0}, 0.02)), 0.0, 1e-9);
}

TEST(Topology, DiscriminantNumbers) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const ParameterPath loop = ParameterPath::circle({0.0748, -0.02, 0}, {0, -1, 0}, 0.02);
    EXPECT_NEAR(discriminant_number(b, loop, DiscriminantKind::PF), 1.0, 1e-3);
    EXPECT_NEAR(discriminant_number(b, loop, DiscriminantKind::NF), -1.0, 1e-3);
    EXPECT_LT(std::abs(discriminant_number(b, loop, DiscriminantKind::ALL)), 1e-9);
}

TEST(Topology, DiscriminantFormula) {
    const ComplexVector w = {1.0, cplx(2, 1), cplx(0, -1)};
    const cplx expected = std::pow(w[0] - w[1], 2) * std::pow(w[0] - w[2], 2) * std::pow(w[1] - w[2], 2);
    EXPECT_LT(std::abs(discriminant(w) - expected), 1e-13);
}

TEST(Topology, BoxAuditAroundChainPointIsSourceFree) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const SurfaceMesh box = SurfaceMesh::box({-0.03, -0.02, -0.015}, {0.03, 0.02, 0.015}, 9);
    const AuditResult a = surface_audit(b, box, find_punctures(b, box));
    std::vector<int> pf = a.pfdn;
    std::sort(pf.begin(), pf.end());
    EXPECT_EQ(pf, (std::vector<int>{-1, -1, 1, 1}));
    EXPECT_EQ(a.sum, 0);
    for (double r : a.raw) EXPECT_NEAR(r, std::round(r), 1e-3);
}

TEST(Topology, SphereAwayFromLinesIsEmpty) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const SurfaceMesh s = SurfaceMesh::sphere({0.3, 0.15, 0.0}, 0.02, 10, 20);
    const auto punct = find_punctures(b, s);
    EXPECT_TRUE(punct.empty());
    const AuditResult a = surface_audit(b, s, punct);
    EXPECT_EQ(a.sum, 0);
    EXPECT_TRUE(a.pfdn.empty());
}

TEST(Topology, MeshesAreClosedSpheres) {
    EXPECT_EQ(SurfaceMesh::box({0, 0, 0}, {1, 2, 3}, 4).euler_characteristic(), 2);
    EXPECT_EQ(SurfaceMesh::sphere({0, 0, 0}, 1.0, 8, 12).euler_characteristic(), 2);
    // Outward normals.
    const SurfaceMesh s = SurfaceMesh::sphere({1, 1, 1}, 0.5, 6, 10);
    for (int f = 0; f < static_cast<int>(s.quads.size()); ++f)
        EXPECT_GT(dot(s.face_normal(f), s.face_centroid(f) - Vec3{1, 1, 1}), 0.0);
}

TEST(Topology, ArcInvariantIsHalfQuantized) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const ParameterPath arc = ParameterPath::half_circle({0, 0, 0}, {0, 1, 0}, {1, 0, 1}, 0.02);
    EXPECT_NEAR(arc_invariant(b, arc), -0.5, 1e-3);
}

TEST(Topology, SymmetryBreakingDequantizesArc) {
    Perturbation pert;
    pert.dK = ComplexMatrix{{0.0, cplx(0, 0.01)}, {0.0, 0.0}};
    const QmpBuilder b = theoretical_builder(kTheory, pert);
    const ParameterPath arc = ParameterPath::half_circle({0, 0, 0}, {0, 1, 0}, {1, 0, 1}, 0.02);
    const double d = arc_invariant(b, arc);
    EXPECT_GT(std::abs(d + 0.5), 1e-2);
    EXPECT_GT(std::abs(d - 0.5), 1e-2);
}

TEST(Topology, PathValidation) {
    EXPECT_THROW(ParameterPath::circle({0, 0, 0}, {0, 0, 1}, 0.1, 8).validate(), ValidationError);
    ParameterPath p = ParameterPath::circle({0, 0, 0}, {0, 0, 1}, 0.1, 32);
    p.points[5] = p.points[4];
    EXPECT_THROW(p.validate(), ValidationError);
    ParameterPath q = ParameterPath::circle({0, 0, 0}, {0, 0, 1}, 0.1, 32);
    q.points.push_back(q.points.front());
    EXPECT_THROW(q.validate(), ValidationError);
    EXPECT_THROW(ParameterPath::circle({0, 0, 0}, {0, 0, 0}, 0.1), ValidationError);
    EXPECT_THROW(ParameterPath::half_circle({0, 0, 0}, {0, 1, 0}, {0, 2, 0}, 0.1), ValidationError);
}

TEST(Topology, CircleIsCounterclockwiseAboutNormal) {
    const ParameterPath c = ParameterPath::circle({0, 0, 0}, {0, 0, 1}, 1.0, 16);
    EXPECT_GT(cross(c.points[0], c.points[1])[2], 0.0);
    EXPECT_TRUE(c.closed);
}

TEST(Topology, PathThroughRingThrows) {
    const QmpBuilder b = theoretical_builder(kTheory);
    // The line crosses the ring κ²/4 + χ(χ + δχ) = 0 inside γ = 0.
    EXPECT_THROW(track_bands(b, ParameterPath::line({0, -0.02, 0.02}, {0, 0.08, 0.02}, 40)), NumericalError);
}

TEST(Topology, ClosedGapThrowsWithPfOnly) {
    const TheoreticalParams soft{1.0, 0.01, 0.0, 0.0, 0.0, 0.0};
    const QmpBuilder b = theoretical_builder(soft);
    EXPECT_THROW(track_bands(b, ParameterPath::line({0, 0, 0}, {0, 0, 0.1}, 20), true), NumericalError);
}

TEST(Topology, TrackedColumnsAreContinuous) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const TrackedBands tb = track_bands(b, ParameterPath::circle({0.0748, -0.02, 0}, {0, -1, 0}, 0.02));
    ASSERT_EQ(tb.bands(), 2);
    // Half vorticity exchanges the two bands around the loop.
    EXPECT_EQ(tb.permutation, (std::vector<int>{1, 0}));
}
