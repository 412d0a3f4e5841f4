#include "excepta/retrieval.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "parallel.hpp"

namespace excepta {

namespace {

const std::array<const char*, kFitParams> kNames = {"kappa0", "gamma0", "chi", "dchi", "kappa", "gamma", "c"};

using Values = std::array<double, kFitParams>;

// |G_mn(2πf)| for every frequency, laid out [m][n][f]; false when Q is singular.
bool response_magnitudes(const QMP& q, const std::vector<double>& freqs, std::array<std::vector<double>, 4>& out) {
    for (auto& v : out) v.resize(freqs.size());
    for (size_t k = 0; k < freqs.size(); ++k) {
        const ComplexMatrix a = q.evaluate(2.0 * M_PI * freqs[k]);
        const cplx det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        const double scale = std::max(a.norm_max() * a.norm_max(), 1e-300);
        if (!(std::abs(det) > 1e-14 * scale)) return false;
        out[0][k] = std::abs(a(1, 1) / det);
        out[1][k] = std::abs(a(0, 1) / det);
        out[2][k] = std::abs(a(1, 0) / det);
        out[3][k] = std::abs(a(0, 0) / det);
    }
    return true;
}

class Objective {
public:
    Objective(const ResponseSpectra& data, const FitModel& model) : data_(data), model_(model), free_(model.free_indices()) {
        for (int i = 0; i < kFitParams; ++i) base_[i] = model.params[i].value;
    }

    int dim() const { return static_cast<int>(free_.size()); }
    int residual_count() const { return 4 * data_.samples(); }
    const std::vector<int>& free() const { return free_; }

    // Normalized coordinates u ∈ [0, 1] per free parameter.
    Values to_values(const std::vector<double>& u) const {
        Values v = base_;
        for (int i = 0; i < dim(); ++i) {
            const FitParameter& p = model_.params[free_[i]];
            v[free_[i]] = p.lo + std::clamp(u[i], 0.0, 1.0) * (p.hi - p.lo);
        }
        return v;
    }
    std::vector<double> to_unit(const Values& v) const {
        std::vector<double> u(dim());
        for (int i = 0; i < dim(); ++i) {
            const FitParameter& p = model_.params[free_[i]];
            u[i] = (v[free_[i]] - p.lo) / (p.hi - p.lo);
        }
        return u;
    }

    // Residuals c·|G| − d with c profiled; returns false when Q is singular.
    // On success v[kScale] holds the profiled c.
    bool residuals(Values& v, std::vector<double>& r) const {
        std::array<std::vector<double>, 4> g;
        QMP q;
        try {
            q = experimental_qmp(model_.physical(v));
        } catch (const ValidationError&) {
            return false;
        }
        if (!response_magnitudes(q, data_.freqs, g)) return false;
        double num = 0.0, den = 0.0;
        for (int c = 0; c < 4; ++c) {
            const auto& d = data_.curves[c / 2][c % 2];
            for (size_t k = 0; k < d.size(); ++k) {
                num += g[c][k] * d[k];
                den += g[c][k] * g[c][k];
            }
        }
        const FitParameter& sp = model_.params[kScale];
        v[kScale] = den > 0.0 ? std::clamp(num / den, sp.lo, sp.hi) : sp.value;
        r.resize(residual_count());
        const int n = data_.samples();
        for (int c = 0; c < 4; ++c) {
            const auto& d = data_.curves[c / 2][c % 2];
            for (int k = 0; k < n; ++k) r[c * n + k] = v[kScale] * g[c][k] - d[k];
        }
        return true;
    }

    double sum_squares(Values& v) const {
        std::vector<double> r;
        if (!residuals(v, r)) return std::numeric_limits<double>::max();
        double s = 0.0;
        for (double x : r) s += x * x;
        return s;
    }

    // Objective in u-space; outside the unit box the clamped value plus a
    // quadratic penalty keeps the simplex inside.
    double unit_objective(const std::vector<double>& u) const {
        Values v = to_values(u);
        double pen = 0.0;
        for (double x : u) {
            const double o = x < 0.0 ? -x : (x > 1.0 ? x - 1.0 : 0.0);
            pen += o * o;
        }
        const double s = sum_squares(v);
        return pen > 0.0 ? s * (1.0 + 1e3 * pen) + pen : s;
    }

private:
    const ResponseSpectra& data_;
    const FitModel& model_;
    std::vector<int> free_;
    Values base_;
};

double nm_f(const gsl_vector* x, void* params) {
    const auto* obj = static_cast<const Objective*>(params);
    std::vector<double> u(x->size);
    for (size_t i = 0; i < x->size; ++i) u[i] = gsl_vector_get(x, i);
    return obj->unit_objective(u);
}

std::vector<double> nelder_mead(const Objective& obj, std::vector<double> u, int max_iter) {
    const int n = obj.dim();
    gsl_multimin_function fn{&nm_f, static_cast<size_t>(n), const_cast<Objective*>(&obj)};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* step = gsl_vector_alloc(n);
    for (int i = 0; i < n; ++i) {
        gsl_vector_set(x, i, u[i]);
        gsl_vector_set(step, i, 0.05);
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    for (int it = 0; it < max_iter; ++it) {
        if (gsl_multimin_fminimizer_iterate(s)) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-11) == GSL_SUCCESS) break;
    }
    for (int i = 0; i < n; ++i) u[i] = std::clamp(gsl_vector_get(s->x, i), 0.0, 1.0);
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return u;
}

int lm_f(const gsl_vector* x, void* params, gsl_vector* f) {
    const auto* obj = static_cast<const Objective*>(params);
    std::vector<double> u(x->size);
    for (size_t i = 0; i < x->size; ++i) u[i] = gsl_vector_get(x, i);
    Values v = obj->to_values(u);
    std::vector<double> r;
    if (!obj->residuals(v, r)) return GSL_EDOM;
    for (size_t i = 0; i < r.size(); ++i) gsl_vector_set(f, i, r[i]);
    return GSL_SUCCESS;
}

std::vector<double> levenberg_marquardt(const Objective& obj, std::vector<double> u, int max_iter) {
    const size_t n = obj.dim(), m = obj.residual_count();
    gsl_multifit_nlinear_parameters fp = gsl_multifit_nlinear_default_parameters();
    fp.trs = gsl_multifit_nlinear_trs_lm;
    fp.fdtype = GSL_MULTIFIT_NLINEAR_CTRDIFF;
    fp.h_df = 1e-7;
    gsl_multifit_nlinear_workspace* w = gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &fp, m, n);
    gsl_multifit_nlinear_fdf fdf{};
    fdf.f = &lm_f;
    fdf.df = nullptr;
    fdf.fvv = nullptr;
    fdf.n = m;
    fdf.p = n;
    fdf.params = const_cast<Objective*>(&obj);
    gsl_vector* x = gsl_vector_alloc(n);
    for (size_t i = 0; i < n; ++i) gsl_vector_set(x, i, u[i]);
    if (gsl_multifit_nlinear_init(x, &fdf, w) == GSL_SUCCESS) {
        int info = 0;
        gsl_multifit_nlinear_driver(max_iter, 1e-15, 1e-15, 0.0, nullptr, nullptr, &info, w);
        const gsl_vector* xr = gsl_multifit_nlinear_position(w);
        std::vector<double> cand(n);
        for (size_t i = 0; i < n; ++i) cand[i] = std::clamp(gsl_vector_get(xr, i), 0.0, 1.0);
        if (obj.unit_objective(cand) <= obj.unit_objective(u)) u = cand;
    }
    gsl_vector_free(x);
    gsl_multifit_nlinear_free(w);
    return u;
}

std::vector<double> quadratic_polish(const Objective& obj, std::vector<double> u) {
    double f0 = obj.unit_objective(u);
    for (double h = 1e-4; h >= 1e-10; h *= 0.1) {
        for (int sweep = 0; sweep < 3; ++sweep) {
            bool moved = false;
            for (int i = 0; i < obj.dim(); ++i) {
                std::vector<double> a = u, b = u;
                a[i] -= h;
                b[i] += h;
                const double fa = obj.unit_objective(a), fb = obj.unit_objective(b);
                const double curv = fa - 2.0 * f0 + fb;
                if (!(curv > 0.0)) continue;
                const double shift = std::clamp(-0.5 * h * (fb - fa) / curv, -2.0 * h, 2.0 * h);
                std::vector<double> c = u;
                c[i] = std::clamp(c[i] + shift, 0.0, 1.0);
                const double fc = obj.unit_objective(c);
                if (fc < f0) {
                    u = c;
                    f0 = fc;
                    moved = true;
                }
            }
            if (!moved) break;
        }
    }
    return u;
}

}  // namespace

void ResponseSpectra::validate() const {
    if (freqs.size() < 2) throw ValidationError("response spectra need at least two frequencies");
    for (size_t i = 1; i < freqs.size(); ++i)
        if (!(freqs[i] > freqs[i - 1])) throw ValidationError("response frequencies must be strictly increasing");
    for (const auto& row : curves)
        for (const auto& c : row) {
            if (c.size() != freqs.size()) throw ValidationError("response curve length differs from frequency count");
            for (double x : c)
                if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("response magnitudes must be finite and ≥ 0");
        }
}

FitModel FitModel::experimental(const ExperimentalParams& p, double scale) {
    FitModel m;
    m.m0 = p.m0;
    const Values v = {p.kappa0, p.gamma0, p.chi, p.dchi, p.kappa, p.gamma, scale};
    for (int i = 0; i < kFitParams; ++i) m.params[i] = {kNames[i], v[i], v[i], v[i], false};
    // c is profiled; its bounds only guard against sign flips.
    m.params[kScale] = {"c", scale, 0.0, std::numeric_limits<double>::max(), true};
    return m;
}

FitModel& FitModel::free(const std::string& name, double lo, double hi) {
    const int i = index(name);
    return free(name, lo, hi, std::clamp(params[i].value, lo, hi));
}

FitModel& FitModel::free(const std::string& name, double lo, double hi, double start) {
    const int i = index(name);
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw ValidationError("fit bounds for '" + name + "' must be finite with lo < hi");
    params[i].lo = lo;
    params[i].hi = hi;
    params[i].value = start;
    params[i].free = true;
    return *this;
}

int FitModel::index(const std::string& name) const {
    for (int i = 0; i < kFitParams; ++i)
        if (params[i].name == name) return i;
    throw ValidationError("unknown fit parameter '" + name + "'");
}

std::vector<int> FitModel::free_indices() const {
    std::vector<int> out;
    for (int i = 0; i < kFitParams; ++i)
        if (i != kScale && params[i].free) out.push_back(i);
    return out;
}

void FitModel::validate() const {
    if (!params[kScale].free) throw ValidationError("the response scale c must be free");
    if (!(m0 > 0.0)) throw ValidationError("m0 must be positive");
    if (free_indices().empty()) throw ValidationError("fit model has no free physical parameters");
    for (int i : free_indices()) {
        const FitParameter& p = params[i];
        if (!(p.value >= p.lo && p.value <= p.hi)) throw ValidationError("start value of '" + p.name + "' is outside its bounds");
    }
}

ExperimentalParams FitModel::physical(const Values& v) const {
    ExperimentalParams p;
    p.m0 = m0;
    p.kappa0 = v[kKappa0];
    p.gamma0 = v[kGamma0];
    p.chi = v[kChi];
    p.dchi = v[kDchi];
    p.kappa = v[kKappa];
    p.gamma = v[kGamma];
    return p;
}

std::vector<double> uniform_freqs(double f_lo, double f_hi, int n) {
    if (n < 2 || !(f_hi > f_lo)) throw ValidationError("frequency range needs n ≥ 2 and f_hi > f_lo");
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = f_lo + (f_hi - f_lo) * i / (n - 1);
    return f;
}

ResponseSpectra synth_response(const QmpBuilder& build, const Vec3& g, double scale, const std::vector<double>& freqs,
                               double noise, unsigned long long seed) {
    if (!(noise >= 0.0)) throw ValidationError("noise level must be ≥ 0");
    ResponseSpectra s;
    s.freqs = freqs;
    s.noise_level = noise;
    const QMP q = build(g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& row : s.curves)
        for (auto& c : row) c.resize(freqs.size());
    for (size_t k = 0; k < freqs.size(); ++k) {
        const ComplexMatrix G = greens(q, 2.0 * M_PI * freqs[k]);
        for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n) s.curves[m][n][k] = scale * std::abs(G(m, n));
    }
    // Noise drawn curve by curve so a given seed is independent of layout.
    if (noise > 0.0)
        for (auto& row : s.curves)
            for (auto& c : row)
                for (double& x : c) x *= 1.0 + noise * u(rng);
    s.validate();
    return s;
}

ResponseSpectra synth_response(const ExperimentalParams& p, double scale, const std::vector<double>& freqs,
                               double noise, unsigned long long seed) {
    return synth_response(experimental_builder(p), p.point(), scale, freqs, noise, seed);
}

FitResult fit_parameters(const ResponseSpectra& data, const FitModel& model, const FitOptions& opts) {
    data.validate();
    model.validate();
    // GSL reports through return codes here; its default handler aborts.
    gsl_set_error_handler_off();
    if (data.samples() < 50) throw ValidationError("fitting needs at least 50 frequency samples");
    if (opts.starts < 1) throw ValidationError("fitting needs at least one start");
    const Objective obj(data, model);
    const int n = obj.dim();

    std::vector<std::vector<double>> starts(opts.starts);
    {
        Values v0;
        for (int i = 0; i < kFitParams; ++i) v0[i] = model.params[i].value;
        starts[0] = obj.to_unit(v0);
        std::mt19937_64 rng(opts.seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int s = 1; s < opts.starts; ++s) {
            starts[s].resize(n);
            for (double& x : starts[s]) x = u(rng);
        }
    }
    std::vector<std::vector<double>> ends(opts.starts);
    std::vector<double> f_start(opts.starts), f_end(opts.starts);
    detail::parallel_for(opts.starts, opts.jobs, [&](int s) {
        f_start[s] = obj.unit_objective(starts[s]);
        ends[s] = nelder_mead(obj, starts[s], opts.nm_max_iter);
        f_end[s] = obj.unit_objective(ends[s]);
    });

    // Winner by residual, then lexicographic parameters.
    int best = -1;
    for (int s = 0; s < opts.starts; ++s) {
        if (!(f_end[s] < f_start[s]) && !(f_end[s] == 0.0)) continue;
        if (best < 0 || f_end[s] < f_end[best] || (f_end[s] == f_end[best] && ends[s] < ends[best])) best = s;
    }
    const double count = 4.0 * data.samples();
    if (best < 0) {
        int s = static_cast<int>(std::min_element(f_end.begin(), f_end.end()) - f_end.begin());
        Values v = obj.to_values(ends[s]);
        throw ConvergenceError("no fit start reduced the residual below its initial value",
                               std::vector<cplx>(v.begin(), v.end()), std::sqrt(f_end[s] / count));
    }

    std::vector<double> u = levenberg_marquardt(obj, ends[best], opts.lm_max_iter);
    u = quadratic_polish(obj, u);

    FitResult r;
    r.best_start = best;
    r.values = obj.to_values(u);
    const double ss = obj.sum_squares(r.values);
    r.rms = std::sqrt(ss / count);
    r.initial_rms = std::sqrt(f_start[0] / count);
    for (int i : obj.free()) {
        const FitParameter& p = model.params[i];
        const double h = 1e-4 * (p.hi - p.lo);
        Values a = r.values, b = r.values, c = r.values;
        a[i] -= h;
        c[i] += h;
        r.curvature.push_back((obj.sum_squares(a) - 2.0 * obj.sum_squares(b) + obj.sum_squares(c)) / (h * h));
    }
    return r;
}

ParabolaFit chi_parabola_fit(const std::vector<std::pair<double, double>>& points, bool through_origin) {
    if (points.empty()) throw ValidationError("parabola fit needs points");
    ParabolaFit f;
    if (through_origin) {
        double num = 0.0, den = 0.0;
        for (const auto& [r, chi] : points) {
            num += r * r * chi;
            den += r * r * r * r;
        }
        if (!(den > 0.0)) throw ValidationError("parabola fit: all abscissae are zero");
        f.a2 = num / den;
    } else {
        // Normal equations in centred s = r² for conditioning.
        double mean = 0.0;
        for (const auto& pt : points) mean += pt.first * pt.first;
        mean /= points.size();
        double sss = 0.0, sy = 0.0, ssy = 0.0;
        for (const auto& [r, chi] : points) {
            const double s = r * r - mean;
            sss += s * s;
            sy += chi;
            ssy += s * chi;
        }
        if (points.size() < 2 || !(sss > 1e-30 * std::max(1.0, mean * mean)))
            throw ValidationError("parabola fit: abscissae r3² are degenerate");
        f.a2 = ssy / sss;
        f.a0 = sy / points.size() - f.a2 * mean;
    }
    double acc = 0.0;
    for (const auto& [r, chi] : points) {
        const double e = f.a0 + f.a2 * r * r - chi;
        acc += e * e;
    }
    f.residual = std::sqrt(acc / points.size());
    return f;
}

}  // namespace excepta
