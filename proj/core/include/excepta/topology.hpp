#pragma once

// Band continuation along parameter paths and the winding invariants built on
// it: energy vorticity, discriminant numbers, surface audits, arc invariants.

#include <array>
#include <vector>

#include "excepta/models.hpp"

namespace excepta {

struct ParameterPath {
    std::vector<Vec3> points;
    bool closed = false;

    // ≥ 16 points, consecutive points distinct (including last → first when
    // closed). Throws ValidationError.
    void validate() const;
    ParameterPath reversed() const;
    ParameterPath mapped(const std::array<Vec3, 3>& A, const Vec3& b = {0, 0, 0}) const;

    // Closed loop, counterclockwise about `normal` (right-hand rule), starting
    // at center + radius·e1 of orthonormal_frame(normal).
    static ParameterPath circle(const Vec3& center, const Vec3& normal, double radius, int n = 64);
    // Open half circle from center − r·axis to center + r·axis through center + r·dir.
    static ParameterPath half_circle(const Vec3& center, const Vec3& axis, const Vec3& dir, double radius,
                                     int n = 200);
    // Closed rectangle in the plane spanned by unit(u), unit(v), n points per side.
    static ParameterPath rect(const Vec3& center, const Vec3& u, const Vec3& v, double half_u, double half_v,
                              int n_per_side = 16);
    // Straight open ramp with n points (n = 1 gives a single point).
    static ParameterPath line(const Vec3& a, const Vec3& b, int n);
};

struct TrackedBands {
    std::vector<Vec3> points;                // refined samples; closed loops repeat the start at the end
    std::vector<ComplexVector> omegas;       // omegas[sample][band], column-continuous
    std::vector<int> permutation;            // closed loops: final column i sits on initial band permutation[i]
    bool closed = false;

    int bands() const { return omegas.empty() ? 0 : static_cast<int>(omegas.front().size()); }
    int samples() const { return static_cast<int>(omegas.size()); }
};

struct TrackOptions {
    bool pf_only = true;
    double jump_fraction = 0.1;   // max |Δω| per step relative to the local band separation
    double min_separation = 1e-8; // below this the path is treated as hitting an EP
    int max_depth = 48;
};

// Follows the spectrum along the path with minimal-cost (Σ|Δω|²) matching,
// bisecting segments until every step is small against the band separation.
// Throws NumericalError when an EP lies on the path or, with pf_only, when the
// real line gap closes.
TrackedBands track_bands(const QmpBuilder& build, const ParameterPath& path, const TrackOptions& opts = {});
TrackedBands track_bands(const QmpBuilder& build, const ParameterPath& path, bool pf_only);

// (1/2π)·Σ arg((ω_m − ω_n)ₖ₊₁ / (ω_m − ω_n)ₖ) over the tracked loop.
double energy_vorticity(const TrackedBands& tb, int m, int n);

// Π_{m<n} (ω_m − ω_n)² over the given frequencies.
cplx discriminant(const ComplexVector& omegas);
// Discriminant over the positive-frequency bands. Throws when the gap is closed.
cplx pf_discriminant(const ComplexVector& omegas);
cplx pf_discriminant(const Spectrum& s);
cplx pf_discriminant(const QMP& q);

enum class DiscriminantKind { PF, NF, ALL };

// (1/2π)·∮ d arg Δ over a closed loop. PF and NF values are integers up to
// rounding; ALL is returned raw (≈ 0 for real QMPs).
double discriminant_number(const QmpBuilder& build, const ParameterPath& loop, DiscriminantKind which);

// Winding of Δ₊ along an open arc whose endpoints carry real, nonzero Δ₊.
// Throws NumericalError when an endpoint is degenerate (|Δ₊| < 1e−10).
double arc_invariant(const QmpBuilder& build, const ParameterPath& arc);

// Closed quad mesh; each quad is listed counterclockwise seen from outside.
// Triangles are quads with a repeated vertex.
struct SurfaceMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> quads;

    static SurfaceMesh box(const Vec3& lo, const Vec3& hi, int n_per_edge);
    static SurfaceMesh sphere(const Vec3& center, double radius, int n_lat, int n_lon);

    int euler_characteristic() const;
    Vec3 face_normal(int f) const;  // outward, unit
    Vec3 face_centroid(int f) const;
    int nearest_face(const Vec3& p) const;
    // One quad's four corners in order.
    std::array<Vec3, 4> corners(int f) const;
};

struct AuditResult {
    std::vector<Vec3> punctures;
    std::vector<double> raw;    // PF discriminant number of each outward loop
    std::vector<int> pfdn;      // rounded
    int sum = 0;
    double loop_radius = 0.0;
};

// Sums the PF discriminant numbers of small outward-oriented loops around each
// puncture. loop_radius ≤ 0 picks a quarter of the smallest puncture spacing
// (capped at 1e−2·mesh size). Throws NumericalError when punctures are too
// close to isolate.
AuditResult surface_audit(const QmpBuilder& build, const SurfaceMesh& mesh, const std::vector<Vec3>& punctures,
                          double loop_radius = 0.0);

}  // namespace excepta
