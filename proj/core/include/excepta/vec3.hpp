#pragma once

#include <array>
#include <cmath>

namespace excepta {

// A point in a 3D parameter space: (γ, χ, κ) for the two-oscillator models,
// (kx, ky, kz) for the lattice.
using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3 operator*(const Vec3& a, double s) { return s * a; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 unit(const Vec3& a) {
    const double n = norm(a);
    return n > 0.0 ? (1.0 / n) * a : a;
}
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Two unit vectors spanning the plane orthogonal to n, with e1 × e2 = n̂.
inline void orthonormal_frame(const Vec3& n, Vec3& e1, Vec3& e2) {
    const Vec3 nn = unit(n);
    const Vec3 trial = std::abs(nn[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    e1 = unit(trial - dot(trial, nn) * nn);
    e2 = cross(nn, e1);
}

}  // namespace excepta
