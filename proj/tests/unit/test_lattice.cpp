#include <gtest/gtest.h>

#include <cmath>

#include "excepta/lattice.hpp"

using namespace excepta;

namespace {

const LatticeParams kLattice{1.0, 1.0, 1.3, -0.7, 0.5, 0.4, 0.7, {0, 0, 0}};

WavepacketSpec small_spec() {
    WavepacketSpec s;
    s.nx = 32;
    s.nz = 32;
    return s;
}

}  // namespace

TEST(Lattice, ClosedFormMatchesRefinement) {
    const Vec3 k = chain_point_coords(kLattice);
    EXPECT_NEAR(k[1], 1.21036063011564, 1e-12);
    EXPECT_EQ(k[0], 0.0);
    EXPECT_EQ(k[2], 0.0);
    EXPECT_NEAR(refine_chain_point(kLattice, k[1] + 0.02), k[1], 1e-10);
    EXPECT_LT(std::abs(pf_discriminant(lattice_bloch_qmp(kLattice.at(k)))), 1e-10);
}

TEST(Lattice, ClosedFormAtGeneralMass) {
    LatticeParams p = kLattice;
    p.m = 1.7;
    const double ky = chain_point_coords(p)[1];
    EXPECT_NEAR(refine_chain_point(p, ky + 0.01), ky, 1e-9);
}

TEST(Lattice, BalancedCouplingWithoutGainSitsAtQuarterZone) {
    LatticeParams p = kLattice;
    p.gamma = 1e-9;
    p.kappa2 = -p.kappa1;
    EXPECT_NEAR(chain_point_coords(p)[1], M_PI / 2, 1e-8);
}

TEST(Lattice, GammaDerivativeMatchesFiniteDifference) {
    const double h = 1e-6;
    LatticeParams lo = kLattice, hi = kLattice;
    lo.gamma -= h;
    hi.gamma += h;
    const double fd = (chain_point_coords(hi)[1] - chain_point_coords(lo)[1]) / (2 * h);
    EXPECT_NEAR(chain_point_dgamma(kLattice), fd, 1e-7);
    EXPECT_NEAR(chain_point_dgamma(kLattice), -0.961329470937, 1e-9);
}

TEST(Lattice, NoChainPointThrows) {
    LatticeParams p = kLattice;
    p.chi = 0.01;
    EXPECT_THROW(chain_point_coords(p), ValidationError);
}

TEST(Lattice, CrossingIsRealAlongKzImaginaryAlongKx) {
    const CrossingSlopes s = crossing_slopes(kLattice, chain_point_coords(kLattice));
    EXPECT_LT(std::abs(s.d_kx.real()), 1e-6);
    EXPECT_GT(std::abs(s.d_kx.imag()), 0.5);
    EXPECT_LT(std::abs(s.d_kz.imag()), 1e-6);
    EXPECT_GT(std::abs(s.d_kz.real()), 0.5);
}

TEST(Lattice, BandSliceThroughChainPoint) {
    const double ky = chain_point_coords(kLattice)[1];
    const BandField f = band_slice(kLattice, ky, Window2{-0.4, 0.4, -0.4, 0.4}, 33, 33);
    EXPECT_EQ(f.nx(), 33);
    EXPECT_EQ(f.nz(), 33);
    // k = 0 is the crossing itself; matching is ambiguous there.
    EXPECT_TRUE(f.flagged[16][16]);
    EXPECT_LT(std::abs(pf_discriminant(lattice_bloch_qmp(kLattice.at({f.kx[16], ky, f.kz[16]})))), 1e-8);
    EXPECT_GT(f.min_abs_discriminant(), 0.0);
    EXPECT_THROW(band_slice(kLattice, ky, Window2{-0.4, 0.4, -0.4, 0.4}, 16, 33), ValidationError);
}

TEST(Lattice, BandSliceFlagsOnlyCrossingLines) {
    const double ky = chain_point_coords(kLattice)[1];
    const BandField f = band_slice(kLattice, ky, Window2{-0.4, 0.4, -0.4, 0.4}, 33, 33);
    // Re and Im crossings run along kz = 0 and kx = 0 through the chain point.
    const double step = f.kx[1] - f.kx[0];
    ASSERT_GT(f.flagged_count(), 0);
    EXPECT_LT(f.flagged_count(), 33 * 33 / 10);
    for (int i = 0; i < f.nx(); ++i)
        for (int j = 0; j < f.nz(); ++j)
            if (f.flagged[i][j]) EXPECT_TRUE(std::min(std::abs(f.kx[i]), std::abs(f.kz[j])) < 3 * step) << i << "," << j;
}

TEST(Lattice, LoopAroundChainPointBraidsTwice) {
    const QmpBuilder b = lattice_builder(kLattice);
    const Vec3 cp = chain_point_coords(kLattice);
    const TrackedBands tb = track_bands(b, ParameterPath::circle(cp, {0, 1, 0}, 0.05));
    EXPECT_NEAR(std::abs(energy_vorticity(tb, 0, 1)), 1.0, 1e-3);
}

TEST(Lattice, NetworkIsConfinedAndBalanced) {
    const LatticeNetwork net = lattice_network(kLattice);
    EXPECT_NEAR(net.chain_point[1], chain_point_coords(kLattice)[1], 1e-8);
    EXPECT_LT(net.plane_residual, 1e-8);
    EXPECT_TRUE(net.graph.valid);
    ASSERT_EQ(net.graph.nodes.size(), 1u);
    EXPECT_EQ(net.graph.nodes[0].in, 2);
    EXPECT_EQ(net.graph.nodes[0].out, 2);
    EXPECT_EQ(net.graph.edges.size(), 4u);
}

TEST(Lattice, AmplitudeWindow) {
    const WavepacketSpec s;
    EXPECT_GT(s.amplitude(0.0, 0.0), 0.0);
    EXPECT_EQ(s.amplitude(0.21 * M_PI, 0.0), 0.0);
    EXPECT_EQ(s.amplitude(0.0, -0.21 * M_PI), 0.0);
    EXPECT_NEAR(s.amplitude(0.1, 0.2), s.amplitude(-0.1, -0.2), 1e-15);
    WavepacketSpec odd;
    odd.nx = 31;
    EXPECT_THROW(odd.validate(), ValidationError);
}

TEST(Lattice, WavepacketIsLinearInAmplitude) {
    const WavepacketResult a = evolve_wavepacket(kLattice, small_spec(), {0.0, 20.0}, 64, 64);
    const WavepacketResult b = evolve_wavepacket(kLattice, small_spec(), {0.0, 20.0}, 64, 64, 2, 2.5);
    ASSERT_EQ(a.fields.size(), 2u);
    double worst = 0.0, scale = 0.0;
    for (size_t t = 0; t < 2; ++t)
        for (size_t i = 0; i < a.fields[t].total.size(); ++i)
            for (int c = 0; c < 4; ++c) {
                worst = std::max(worst, std::abs(b.fields[t].total[i][c] - 2.5 * a.fields[t].total[i][c]));
                scale = std::max(scale, std::abs(b.fields[t].total[i][c]));
            }
    EXPECT_LT(worst, 1e-12 * scale);
}

TEST(Lattice, WavepacketBandsSumToTotal) {
    const WavepacketResult r = evolve_wavepacket(kLattice, small_spec(), {10.0}, 64, 64);
    const WaveField& w = r.fields[0];
    double worst = 0.0;
    for (size_t i = 0; i < w.total.size(); ++i)
        for (int c = 0; c < 4; ++c) worst = std::max(worst, std::abs(w.band[0][i][c] + w.band[1][i][c] - w.total[i][c]));
    EXPECT_LT(worst, 1e-12 * max_amplitude(w));
}

TEST(Lattice, PulseStartsRoundAndSplits) {
    const WavepacketResult r = evolve_wavepacket(kLattice, small_spec(), {0.0, 40.0}, 128, 128);
    const double a0 = max_amplitude(r.fields[0]);
    const PulseMetrics m0 = pulse_metrics(r.fields[0], 0, a0);
    EXPECT_NEAR(m0.log_amplitude, 0.0, 1e-12);
    EXPECT_GT(m0.aspect, 0.8);
    EXPECT_LT(m0.aspect, 1.25);
    EXPECT_LT(std::abs(m0.centroid_z), 0.5);
    const PulseMetrics b1 = pulse_metrics(r.fields[1], 1, a0);
    const PulseMetrics b2 = pulse_metrics(r.fields[1], 2, a0);
    EXPECT_LT(b1.centroid_z * b2.centroid_z, 0.0);
    EXPECT_GT(std::abs(b1.centroid_z), 2.0);
    EXPECT_GT(r.omega_max.imag(), 0.0);
}

TEST(Lattice, ZeroFieldMetricsThrow) {
    WaveField w;
    w.lx = w.lz = 4;
    w.total.assign(16, FieldComponents{});
    w.band[0] = w.band[1] = w.total;
    EXPECT_THROW(pulse_metrics(w, 0, 1.0), NumericalError);
}
