#include <gtest/gtest.h>

#include <algorithm>

#include "excepta/tracer.hpp"

using namespace excepta;

namespace {

const TheoreticalParams kTheory{1.0, 1.0, -0.05, 0.0, 0.0, 0.0};

TraceOptions chain_options() {
    TraceOptions o;
    o.window = Box{{-0.5, -0.1, -0.1}, {0.5, 0.2, 0.1}};
    o.step = 0.005;
    o.junction_lines = {Line3{{0, 0, 0}, {0, 1, 0}}};
    return o;
}

}  // namespace

TEST(Tracer, ChainPointsOnChiAxis) {
    const QmpBuilder b = theoretical_builder(kTheory);
    // Δ₊ ∝ χ(χ + δχ) on γ = κ = 0.
    for (const double start : {0.004, -0.003, 0.046, 0.055}) {
        const RefinedEP ep = refine_ep(b, {0, start, 0}, Subspace::along({0, start, 0}, {0, 1, 0}));
        const double expected = start < 0.025 ? 0.0 : 0.05;
        EXPECT_NEAR(ep.point[1], expected, 1e-8) << "start " << start;
        EXPECT_TRUE(ep.exceptional);
        EXPECT_GT(ep.overlap, 1.0 - 1e-6);
    }
}

TEST(Tracer, FreeRefinementLandsOnLine) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const RefinedEP ep = refine_ep(b, {0.07, -0.018, 0.002}, Subspace::full({0.07, -0.018, 0.002}));
    EXPECT_LT(std::abs(pf_discriminant_at(b, ep.point)), 1e-10);
    EXPECT_TRUE(ep.exceptional);
}

TEST(Tracer, DiabolicDegeneracyIsRejected) {
    const QmpBuilder b = [](const Vec3& g) {
        return QMP(ComplexMatrix::identity(2), ComplexMatrix::diagonal({1.0 + g[0], 1.0 + g[1]}),
                   ComplexMatrix::zeros(2, 2));
    };
    try {
        refine_ep(b, {0.01, 0, 0}, Subspace::along({0.01, 0, 0}, {1, 0, 0}));
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("not exceptional"), std::string::npos) << e.what();
    }
}

TEST(Tracer, ScanFindsKappaPlaneLine) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const PlaneSpec plane = PlaneSpec::coordinate(2, 0.0, "kappa=0");
    // κ = 0: a = γ, b = χ.
    const auto cands = scan_plane(b, plane, Window2{0.05, 0.1, -0.04, 0.0}, 20, 20);
    ASSERT_FALSE(cands.empty());
    const RefinedEP ep = refine_ep(b, cands.front().point, Subspace::in_plane(plane, cands.front().point));
    EXPECT_NEAR(ep.point[2], 0.0, 1e-14);
    EXPECT_LT(std::abs(ep.disc), 1e-10);
}

TEST(Tracer, ScanOfEmptyWindowIsEmpty) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const PlaneSpec plane = PlaneSpec::coordinate(1, 0.15, "chi=0.15");
    EXPECT_TRUE(scan_plane(b, plane, Window2{-0.05, 0.05, 0.25, 0.35}, 16, 16).empty());
}

TEST(Tracer, PlaneSpecGeometry) {
    const PlaneSpec p = PlaneSpec::coordinate(2, 0.3, "k");
    EXPECT_EQ(p.at(1.0, 2.0), (Vec3{1.0, 2.0, 0.3}));
    EXPECT_NEAR(p.offset({5, 5, 1.3}), 1.0, 1e-15);
    const PlaneSpec o = PlaneSpec::oblique_kappa(0.5, "o");
    EXPECT_NEAR(dot(o.normal(), {1, 0, 0.5}), 0.0, 1e-15);
}

TEST(Tracer, TraceUpperLineInKappaPlane) {
    const QmpBuilder b = theoretical_builder(kTheory);
    TraceOptions o = chain_options();
    o.plane = PlaneSpec::coordinate(2, 0.0, "kappa=0");
    const Vec3 seed = refine_ep(b, {0.0748, -0.02, 0}, Subspace::in_plane(*o.plane, {0.0748, -0.02, 0})).point;
    const ExceptionalLine line = trace_el(b, seed, o);
    ASSERT_GT(line.polyline.size(), 20u);
    EXPECT_LT(line.max_disc, 1e-9);
    for (const Vec3& v : line.polyline) EXPECT_NEAR(v[2], 0.0, 1e-12);
    // One end at the chain point on the χ axis, the other at the window.
    const bool front_junction = line.start_end == EdgeEnd::Junction;
    const Vec3 junction = front_junction ? line.front() : line.back();
    EXPECT_TRUE(front_junction || line.end_end == EdgeEnd::Junction);
    EXPECT_LT(norm(junction), 1e-8);
    EXPECT_TRUE(line.start_end == EdgeEnd::Window || line.end_end == EdgeEnd::Window);
}

TEST(Tracer, OrientationFieldMatchesProbeLoop) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const Vec3 p = refine_ep(b, {0.0748, -0.02, 0}, Subspace::in_plane(PlaneSpec::coordinate(2, 0.0, "k"),
                                                                        {0.0748, -0.02, 0}))
                       .point;
    const Vec3 n = orientation_field(b, p);
    ASSERT_GT(norm(n), 0.0);
    EXPECT_NEAR(discriminant_number(b, ParameterPath::circle(p, n, 0.005), DiscriminantKind::PF), 1.0, 1e-3);
    EXPECT_NEAR(discriminant_number(b, ParameterPath::circle(p, -n, 0.005), DiscriminantKind::PF), -1.0, 1e-3);
}

TEST(Tracer, TheoreticalChainIsBalanced) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const PlaneSpec kplane = PlaneSpec::coordinate(2, 0.0, "kappa=0");
    const PlaneSpec gplane = PlaneSpec::coordinate(0, 0.0, "gamma=0");
    const std::vector<NetworkSeed> seeds = {
        {{0.0748, -0.02, 0}, kplane}, {{0.1, 0.07, 0}, kplane}, {{0, 0.025, 0.05}, gplane}};
    const ChainGraph g = trace_network(b, seeds, chain_options());
    EXPECT_TRUE(g.valid);
    ASSERT_EQ(g.nodes.size(), 2u);
    std::vector<double> chis;
    for (const auto& n : g.nodes) {
        EXPECT_EQ(n.in, 2);
        EXPECT_EQ(n.out, 2);
        EXPECT_NEAR(n.point[0], 0.0, 1e-8);
        EXPECT_NEAR(n.point[2], 0.0, 1e-8);
        chis.push_back(n.point[1]);
    }
    std::sort(chis.begin(), chis.end());
    EXPECT_NEAR(chis[0], 0.0, 1e-8);
    EXPECT_NEAR(chis[1], 0.05, 1e-8);
    for (const auto& e : g.edges) EXPECT_NE(e.orientation, 0);
}

TEST(Tracer, AssembleChainFlagsImbalance) {
    ExceptionalLine a, c;
    a.polyline = {{0, 0, 0}, {1, 0, 0}};
    a.orientation = 1;
    a.start_end = EdgeEnd::Junction;
    a.end_end = EdgeEnd::Window;
    c = a;
    c.polyline = {{0, 0, 0}, {0, 1, 0}};
    const ChainGraph g = assemble_chain({a, c}, 1e-6);
    ASSERT_EQ(g.nodes.size(), 1u);
    EXPECT_EQ(g.nodes[0].out, 2);
    EXPECT_FALSE(g.valid);
    EXPECT_EQ(g.unbalanced.size(), 1u);
}

TEST(Tracer, PuncturesOfChainPointBox) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const SurfaceMesh box = SurfaceMesh::box({-0.03, -0.02, -0.015}, {0.03, 0.02, 0.015}, 9);
    const auto punct = find_punctures(b, box);
    EXPECT_EQ(punct.size(), 4u);
    for (const Vec3& p : punct) EXPECT_LT(std::abs(pf_discriminant_at(b, p)), 1e-9);
}
