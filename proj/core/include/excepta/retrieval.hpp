#pragma once

// Synthetic response spectra |θ_mn(f)| = c·|G_mn(2πf)| of the two-oscillator
// experiment and least-squares retrieval of its parameters.

#include <array>
#include <string>
#include <vector>

#include "excepta/models.hpp"

namespace excepta {

struct ResponseSpectra {
    std::vector<double> freqs;                          // Hz, strictly increasing
    std::array<std::array<std::vector<double>, 2>, 2> curves;  // curves[m][n] = |θ_mn|
    double noise_level = 0.0;

    void validate() const;
    int samples() const { return static_cast<int>(freqs.size()); }
};

// Fit parameter order; c is the overall response scale.
enum FitIndex { kKappa0 = 0, kGamma0, kChi, kDchi, kKappa, kGamma, kScale, kFitParams };

struct FitParameter {
    std::string name;
    double value = 0.0;  // fixed value, or the first start when free
    double lo = 0.0, hi = 0.0;
    bool free = false;
};

struct FitModel {
    std::array<FitParameter, kFitParams> params;
    double m0 = 1.0;

    // All parameters fixed at `p` (c = scale), bounds collapsed to the value.
    static FitModel experimental(const ExperimentalParams& p, double scale = 1.0);
    // Frees `name` within [lo, hi]. Throws ValidationError on unknown names.
    FitModel& free(const std::string& name, double lo, double hi);
    FitModel& free(const std::string& name, double lo, double hi, double start);

    int index(const std::string& name) const;
    std::vector<int> free_indices() const;
    void validate() const;
    ExperimentalParams physical(const std::array<double, kFitParams>& values) const;
};

std::vector<double> uniform_freqs(double f_lo = 2.0, double f_hi = 22.0, int n = 400);

// curves[m][n] = c·|G_mn(2πf)|·(1 + noise·u), u ~ U[−1, 1] from mt19937_64(seed).
ResponseSpectra synth_response(const QmpBuilder& build, const Vec3& g, double scale, const std::vector<double>& freqs,
                               double noise = 0.0, unsigned long long seed = 0);
ResponseSpectra synth_response(const ExperimentalParams& p, double scale, const std::vector<double>& freqs,
                               double noise = 0.0, unsigned long long seed = 0);

struct FitOptions {
    int starts = 16;
    unsigned long long seed = 0;
    int jobs = 1;
    int nm_max_iter = 4000;
    int lm_max_iter = 200;
};

struct FitResult {
    std::array<double, kFitParams> values{};
    double rms = 0.0;         // √(Σ residual² / count)
    double initial_rms = 0.0; // at the first start
    std::vector<double> curvature;  // ∂²(Σ r²)/∂pᵢ² per free parameter, free order
    int best_start = 0;

    double get(const FitModel& m, const std::string& name) const { return values[m.index(name)]; }
};

// Multi-start Nelder–Mead over the free physical parameters (c profiled
// analytically), then Levenberg–Marquardt and a coordinate-wise quadratic
// polish from the best start. Throws ConvergenceError when no start improves
// on its starting residual.
FitResult fit_parameters(const ResponseSpectra& data, const FitModel& model, const FitOptions& opts = {});

struct ParabolaFit {
    double a0 = 0.0;
    double a2 = 0.0;
    double residual = 0.0;  // RMS
};

// Least squares χ/κ₀ = a₀ + a₂·r₃² over (r₃, χ/κ₀) pairs; through_origin
// fixes a₀ = 0. Throws ValidationError on degenerate abscissae.
ParabolaFit chi_parabola_fit(const std::vector<std::pair<double, double>>& points, bool through_origin = false);

}  // namespace excepta
