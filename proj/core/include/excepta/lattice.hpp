#pragma once

// Two-sublattice 3D lattice: chain-point location, band slices at fixed ky,
// the local exceptional-line network, and spectral wavepacket evolution.

#include <array>
#include <vector>

#include "excepta/tracer.hpp"

namespace excepta {

// k^CP = (0, k_y, 0) with
// cos k_y = (−(κ₁+κ₂) + (γ/√m)·√(a − γ²/(4m))) / (4χ), a = κ₀+κ₁+κ₂+4χ.
// Throws ValidationError("no chain point on this axis for these parameters")
// when the square root or the arccos argument is out of range.
Vec3 chain_point_coords(const LatticeParams& p);

// d k_y^CP / dγ from the closed form.
double chain_point_dgamma(const LatticeParams& p);

// Refines Δ₊ = 0 on the ky axis (kx = kz = 0) from a starting ky.
double refine_chain_point(const LatticeParams& p, double ky_start);

struct BandField {
    double ky = 0.0;
    std::vector<double> kx, kz;
    // omegas[i][j]: PF bands at (kx[i], kz[j]), columns continuous between
    // neighbours.
    std::vector<std::vector<ComplexVector>> omegas;
    // Samples where the gap closed or the bands came too close to match.
    std::vector<std::vector<char>> flagged;

    int nx() const { return static_cast<int>(kx.size()); }
    int nz() const { return static_cast<int>(kz.size()); }
    int flagged_count() const;
    // min |Δ₊| over unflagged samples.
    double min_abs_discriminant() const;
};

// PF bands over kx ∈ [kx_lo, kx_hi] × kz ∈ [kz_lo, kz_hi] at fixed ky, grid
// n_x × n_z (≥ 32 each). Rows are matched along kz, row starts along kx.
BandField band_slice(const LatticeParams& p, double ky, const Window2& window, int n_x, int n_z);

// Central-difference slopes of ω₁ − ω₂ at k along kx and kz, with the two
// PF bands labelled so they cross continuously through k.
struct CrossingSlopes {
    cplx d_kx = 0.0;
    cplx d_kz = 0.0;
};
CrossingSlopes crossing_slopes(const LatticeParams& p, const Vec3& k, double h = 1e-5);

struct NetworkOptions {
    double half_kx = 1.0;
    double half_ky = 0.5;
    double half_kz = 1.0;
    double step = 0.0;  // ≤ 0: window diagonal / 200
    int scan = 41;      // scan grid per symmetry plane
};

struct LatticeNetwork {
    Vec3 chain_point;
    ChainGraph graph;
    // max over all vertices of the distance to the nearest plane kᵢ ∈ {0, ±π}
    double plane_residual = 0.0;
};

// ELs near the chain point. Seeds come from scans of the kx = 0 and kz = 0
// planes; lines are traced freely in 3D with the ky axis as junction line.
LatticeNetwork lattice_network(const LatticeParams& p, const NetworkOptions& opts = {});

struct WavepacketSpec {
    double q = 0.05 * M_PI;    // Gaussian width of A₀
    double kmax = 0.4 * M_PI;  // A₀ vanishes outside |kx|, |kz| ≤ kmax/2
    int nx = 64;               // k samples per axis, even
    int nz = 64;
    void validate() const;
    double amplitude(double kx, double kz) const;
};

using FieldComponents = std::array<cplx, 4>;  // (u_A, u_B, du_A/dt, du_B/dt)

struct WaveField {
    double t = 0.0;
    int lx = 0, lz = 0;  // sites x ∈ [−lx/2, lx/2), z ∈ [−lz/2, lz/2)
    std::vector<FieldComponents> total;
    std::array<std::vector<FieldComponents>, 2> band;

    int index(int ix, int iz) const { return ix * lz + iz; }
    double x(int ix) const { return ix - lx / 2; }
    double z(int iz) const { return iz - lz / 2; }
};

struct WavepacketResult {
    std::vector<WaveField> fields;
    Vec3 chain_point;
    cplx omega_max = 0.0;  // PF eigenfrequency with largest Im at (kmax/2, k_y^CP, 0)
    double boundary_ratio = 0.0;  // max edge |Ψ| / max |Ψ| over all outputs
    bool boundary_warning = false;  // boundary_ratio ≥ 1e−6
};

// Ψ(t; x, z) = Σₙ Σ_k w_k e^{−iωₙt} A₀(k) |Ψ^R_n(k)⟩ e^{i(k_x x + k_z z)} at
// k_y = k_y^CP with trapezoid weights w_k. Band n is the branch whose
// ω₁ − ω₂ follows the local linear crossing; right vectors are (ψ, −iωψ),
// unit norm, first component real positive.
WavepacketResult evolve_wavepacket(const LatticeParams& p, const WavepacketSpec& spec,
                                   const std::vector<double>& times, int lx = 256, int lz = 256, int jobs = 1,
                                   double amplitude_scale = 1.0);

struct PulseMetrics {
    double centroid_z = 0.0;
    double log_amplitude = 0.0;  // ln(max|Ψₙ| / A_ref)
    double width_x = 0.0;        // RMS
    double width_z = 0.0;
    double aspect = 0.0;         // width_x / width_z
};

// band: 1 or 2; 0 selects the total field. |Ψ|² sums the four components.
// Throws NumericalError on a zero field.
PulseMetrics pulse_metrics(const WaveField& w, int band, double a_ref);

// max |Ψ| of the total field; the usual A_ref is its value at t = 0.
double max_amplitude(const WaveField& w);

}  // namespace excepta
