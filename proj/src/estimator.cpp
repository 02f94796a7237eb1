#include "sdive/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "sdive/optim.hpp"
#include "sdive/smoothing.hpp"

namespace sdive {

namespace {

constexpr double kLogRatioLo = -23.025850929940457;  // log 1e-10
constexpr double kLogRatioHi = 23.025850929940457;   // log 1e10

double clamp_log_ratio(double lg, double lf) {
    double lr = lg - lf;
    if (!(lr > kLogRatioLo)) lr = kLogRatioLo;  // also catches -inf from g = 0
    if (lr > kLogRatioHi) lr = kLogRatioHi;
    return lr;
}

// Shared machinery for the divergence-based fits: evaluates the searchable
// objective (theta-dependent terms), the estimating equation, and the full
// divergence. The model side is smoothed when `kernel` is engaged.
struct DivergenceProblem {
    const ParametricModel& model;
    std::function<double(double)> g_pdf;
    Interval g_iv;  // data-side integration interval
    std::optional<KernelSpec> kernel;
    TuningPair tuning;
    QuadratureSpec quad;
    int panels = 16;
    std::vector<double> hints;  // sample points; panel seeds for spiky KDEs

    double model_logf(const Vector& th, double x) const {
        return kernel ? model.smoothed_log_density(th, *kernel, x, quad)
                      : model.log_density(th, x);
    }
    Vector model_score(const Vector& th, double x) const {
        return kernel ? model.smoothed_score(th, *kernel, x, quad) : model.score(th, x);
    }
    Interval domain(const Vector& th) const {
        const Interval f_iv = kernel
                                  ? model.smoothed_tail_interval(th, *kernel, quad.truncation_mass)
                                  : model.tail_interval(th, quad.truncation_mass);
        return interval_union(g_iv, f_iv);
    }

    // Divergence with theta-free integrals dropped; what the search minimizes.
    double search_value(const Vector& th) const {
        const double ap1 = 1.0 + tuning.alpha;
        const Interval iv = domain(th);
        if (tuning.log_branch_a()) {
            return integrate(
                [&](double x) {
                    const double lf = model_logf(th, x);
                    const double lr = clamp_log_ratio(std::log(g_pdf(x)), lf);
                    return std::exp(ap1 * lf) * (-lr - 1.0 / ap1);
                },
                iv, quad, panels, hints);
        }
        if (tuning.log_branch_b()) {
            return integrate(
                [&](double x) {
                    const double lf = model_logf(th, x);
                    const double g = g_pdf(x);
                    const double gterm = g > 0.0 ? -std::pow(g, ap1) * lf : 0.0;
                    return gterm + std::exp(ap1 * lf) / ap1;
                },
                iv, quad, panels, hints);
        }
        const double A = tuning.A, B = tuning.B;
        return integrate(
            [&](double x) {
                const double lf = model_logf(th, x);
                const double fpow = std::exp(ap1 * lf);
                const double lr = clamp_log_ratio(std::log(g_pdf(x)), lf);
                return fpow / A - ap1 / (A * B) * std::exp(A * lr) * fpow;
            },
            iv, quad, panels, hints);
    }

    // \int K(delta) f^{1+alpha} u; zero at the minimizer.
    Vector equation(const Vector& th) const {
        const int p = model.dim();
        const double ap1 = 1.0 + tuning.alpha;
        const Interval iv = domain(th);
        return integrate_vec(
            [&](double x, double* out) {
                const double lf = model_logf(th, x);
                const double lr = clamp_log_ratio(std::log(g_pdf(x)), lf);
                const double k = tuning.log_branch_a()
                                     ? lr
                                     : (std::exp(tuning.A * lr) - 1.0) / tuning.A;
                const double w = k * std::exp(ap1 * lf);
                const Vector u = model_score(th, x);
                for (int j = 0; j < p; ++j) out[j] = w * u[j];
            },
            iv.lo, iv.hi, p, quad, panels, hints);
    }

    double full_divergence(const Vector& th) const {
        DensityEvaluator g_ev;
        g_ev.pdf = g_pdf;
        g_ev.panel_hints = hints;
        const Interval giv = g_iv;
        g_ev.tail_interval = [giv](double) { return giv; };

        DensityEvaluator f_ev;
        const ParametricModel* m = &model;
        const Vector theta = th;
        if (kernel) {
            const KernelSpec k = *kernel;
            const QuadratureSpec q = quad;
            f_ev.pdf = [m, theta, k, q](double x) { return m->smoothed_density(theta, k, x, q); };
            f_ev.tail_interval = [m, theta, k](double mass) {
                return m->smoothed_tail_interval(theta, k, mass);
            };
        } else {
            f_ev.pdf = [m, theta](double x) { return m->density(theta, x); };
            f_ev.tail_interval = [m, theta](double mass) { return m->tail_interval(theta, mass); };
        }
        return s_divergence(g_ev, f_ev, tuning, quad);
    }
};

Vector resolve_init(const FitConfig& config, const ParametricModel& model,
                    std::span<const double> sample) {
    switch (config.init) {
        case FitConfig::Init::robust:
            return model.init_robust(sample);
        case FitConfig::Init::mle:
            return model.init_mle(sample);
        case FitConfig::Init::explicit_theta:
            model.require_in_space(config.init_theta);
            return config.init_theta;
    }
    throw InvalidInput("unhandled init kind");
}

// Simplex search in unconstrained coordinates followed by a damped Newton
// polish of the estimating equation; fills everything but the objective.
FitResult minimize_problem(const DivergenceProblem& prob, const Vector& theta0,
                           const FitConfig& config) {
    const ParametricModel& model = prob.model;
    const int p = model.dim();

    auto eta_objective = [&](const Vector& eta) {
        const Vector th = model.from_unconstrained(eta);  // throws on scale collapse
        if (!model.in_param_space(th)) return 1e100;
        try {
            return prob.search_value(th);
        } catch (const NumericError&) {
            return 1e100;
        }
    };

    const Vector eta0 = model.to_unconstrained(theta0);
    Vector step(p);
    for (int j = 0; j < p; ++j) step[j] = std::max(0.05, 0.1 * std::abs(eta0[j]));
    const SimplexResult sres =
        nelder_mead(eta_objective, eta0, step, config.max_iter, 1e-12, 1e-7);

    Vector theta_nm = model.from_unconstrained(sres.x);

    NewtonOptions nopts;
    nopts.eq_tol = config.grad_tol;
    nopts.step_tol = config.param_tol;
    nopts.max_iter = std::min(60, config.max_iter);
    auto eq_fn = [&](const Vector& th) { return prob.equation(th); };
    auto feasible = [&](const Vector& th) {
        return model.in_param_space(th) && !model.is_degenerate(th);
    };
    const NewtonResult nres = damped_newton(eq_fn, theta_nm, nopts, feasible);

    if (model.is_degenerate(nres.x)) throw DegenerateFit("fit collapsed to a degenerate scale");

    FitResult res;
    res.theta_hat = nres.x;
    res.estimating_eq_norm = nres.eq_norm;
    res.iterations = sres.iterations + nres.iterations;
    res.converged = nres.converged;
    return res;
}

FitResult fit_divergence_method(std::span<const double> sample, const ParametricModel& model,
                                const FitConfig& config, bool smooth_model_side) {
    if (sample.empty()) throw InvalidInput("fit requires a nonempty sample");
    config.validate();

    const double h = config.bandwidth.resolve(sample);
    const KernelSpec kernel = KernelSpec::gaussian(h);
    const SmoothedData gn = smooth_data(sample, kernel);

    DivergenceProblem prob{model,
                           [gn](double x) { return gn(x); },
                           {gn.min_value() - 8.0 * h, gn.max_value() + 8.0 * h},
                           smooth_model_side ? std::optional<KernelSpec>(kernel) : std::nullopt,
                           config.tuning,
                           config.quad};
    prob.panels = std::clamp(static_cast<int>(prob.g_iv.width() / h), 16, 128);
    // When the kernel bumps are narrower than the panel grid can resolve,
    // seed a panel edge at every data point instead.
    if (prob.g_iv.width() / h > 256.0 && gn.size() <= 2048) prob.hints = gn.sample();

    FitResult best = minimize_problem(prob, resolve_init(config, model, sample), config);
    best.objective = prob.full_divergence(best.theta_hat);

    // Root selection: on non-convergence retry from the other start and keep
    // the root with the smaller full divergence.
    if (!best.converged && config.init == FitConfig::Init::robust) {
        try {
            FitResult alt = minimize_problem(prob, model.init_mle(sample), config);
            alt.objective = prob.full_divergence(alt.theta_hat);
            if ((alt.converged && !best.converged) ||
                (alt.converged == best.converged && alt.objective < best.objective))
                best = alt;
        } catch (const Error&) {
            // keep the primary result
        }
    }
    best.bandwidth_used = h;
    return best;
}

}  // namespace

const char* fit_method_name(FitMethod m) {
    switch (m) {
        case FitMethod::msde_star:
            return "msde-star";
        case FitMethod::msde_beran:
            return "msde-beran";
        case FitMethod::mdpde:
            return "mdpde";
    }
    return "?";
}

FitMethod fit_method_from_name(const std::string& name) {
    if (name == "msde-star") return FitMethod::msde_star;
    if (name == "msde-beran") return FitMethod::msde_beran;
    if (name == "mdpde") return FitMethod::mdpde;
    throw InvalidInput("unknown fit method: '" + name + "'");
}

BandwidthChoice BandwidthChoice::fixed(double h) {
    if (!(h > 0.0)) throw InvalidInput("fixed bandwidth must be positive");
    return {Rule::fixed, h};
}

BandwidthChoice BandwidthChoice::relative(double h0) {
    if (!(h0 > 0.0)) throw InvalidInput("relative bandwidth factor must be positive");
    return {Rule::relative, h0};
}

double BandwidthChoice::resolve(std::span<const double> sample) const {
    switch (rule) {
        case Rule::fixed:
            return value;
        case Rule::normal_reference:
            return normal_reference_bandwidth(sample);
        case Rule::relative:
            return value * robust_scale(sample);
    }
    throw InvalidInput("unhandled bandwidth rule");
}

void FitConfig::validate() const {
    quad.validate();
    if (method == FitMethod::mdpde && tuning.lambda != 0.0)
        throw InvalidInput("mdpde requires lambda = 0");
    if (max_iter < 1 || !(param_tol > 0.0) || !(grad_tol > 0.0))
        throw InvalidInput("invalid fit tolerances");
}

FitResult fit(std::span<const double> sample, const ParametricModel& model,
              const FitConfig& config) {
    switch (config.method) {
        case FitMethod::msde_star:
            return fit_msde_star(sample, model, config);
        case FitMethod::msde_beran:
            return fit_msde_beran(sample, model, config);
        case FitMethod::mdpde:
            return fit_mdpde(sample, model, config);
    }
    throw InvalidInput("unhandled fit method");
}

FitResult fit_msde_star(std::span<const double> sample, const ParametricModel& model,
                        const FitConfig& config) {
    return fit_divergence_method(sample, model, config, /*smooth_model_side=*/true);
}

FitResult fit_msde_beran(std::span<const double> sample, const ParametricModel& model,
                         const FitConfig& config) {
    return fit_divergence_method(sample, model, config, /*smooth_model_side=*/false);
}

FitResult fit_mdpde(std::span<const double> sample, const ParametricModel& model,
                    const FitConfig& config) {
    if (sample.empty()) throw InvalidInput("fit requires a nonempty sample");
    config.validate();
    if (config.tuning.lambda != 0.0) throw InvalidInput("mdpde requires lambda = 0");

    const double alpha = config.tuning.alpha;
    const double ap1 = 1.0 + alpha;
    const double n = static_cast<double>(sample.size());
    const int p = model.dim();
    const QuadratureSpec& quad = config.quad;

    auto expectation_term = [&](const Vector& th) {  // \int f^{1+a} u
        const Interval iv = model.tail_interval(th, quad.truncation_mass);
        return integrate_vec(
            [&](double x, double* out) {
                const double w = std::exp(ap1 * model.log_density(th, x));
                const Vector u = model.score(th, x);
                for (int j = 0; j < p; ++j) out[j] = w * u[j];
            },
            iv.lo, iv.hi, p, quad, 24);
    };
    auto equation = [&](const Vector& th) {  // empirical minus model expectation
        Vector lhs(p, 0.0);
        for (double x : sample) {
            const double w = std::pow(model.density(th, x), alpha);
            const Vector u = model.score(th, x);
            for (int j = 0; j < p; ++j) lhs[j] += w * u[j];
        }
        const Vector ex = expectation_term(th);
        for (int j = 0; j < p; ++j) lhs[j] = lhs[j] / n - ex[j];
        return lhs;
    };
    auto objective = [&](const Vector& th) {
        if (alpha <= kLimitBranchTol) {  // mean negative log-likelihood
            double s = 0.0;
            for (double x : sample) s -= model.log_density(th, x);
            return s / n;
        }
        const Interval iv = model.tail_interval(th, quad.truncation_mass);
        const double ipow = integrate(
            [&](double x) { return std::exp(ap1 * model.log_density(th, x)); }, iv, quad, 24);
        double s = 0.0;
        for (double x : sample) s += std::pow(model.density(th, x), alpha);
        return ipow - ap1 / alpha * s / n;
    };

    FitResult res;
    if (alpha <= kLimitBranchTol) {
        if (auto mle = model.closed_form_mle(sample)) {
            res.theta_hat = *mle;
            res.iterations = 0;
        } else {
            auto eta_obj = [&](const Vector& eta) {
                Vector th = model.from_unconstrained(eta);
                if (!model.in_param_space(th)) return 1e100;
                return objective(th);
            };
            const Vector eta0 = model.to_unconstrained(model.init_robust(sample));
            Vector step(p, 0.1);
            const SimplexResult s = nelder_mead(eta_obj, eta0, step, config.max_iter, 1e-12, 1e-9);
            res.theta_hat = model.from_unconstrained(s.x);
            res.iterations = s.iterations;
        }
        res.estimating_eq_norm = norm2(equation(res.theta_hat));
        res.converged = res.estimating_eq_norm <= config.grad_tol;
        res.objective = objective(res.theta_hat);
        return res;
    }

    auto eta_obj = [&](const Vector& eta) {
        Vector th = model.from_unconstrained(eta);
        if (!model.in_param_space(th)) return 1e100;
        try {
            return objective(th);
        } catch (const NumericError&) {
            return 1e100;
        }
    };
    const Vector theta0 = resolve_init(config, model, sample);
    const Vector eta0 = model.to_unconstrained(theta0);
    Vector step(p);
    for (int j = 0; j < p; ++j) step[j] = std::max(0.05, 0.1 * std::abs(eta0[j]));
    const SimplexResult sres = nelder_mead(eta_obj, eta0, step, config.max_iter, 1e-12, 1e-7);

    NewtonOptions nopts;
    nopts.eq_tol = config.grad_tol;
    nopts.step_tol = config.param_tol;
    const NewtonResult nres = damped_newton(equation, model.from_unconstrained(sres.x), nopts,
                                            [&](const Vector& th) {
                                                return model.in_param_space(th) &&
                                                       !model.is_degenerate(th);
                                            });
    if (model.is_degenerate(nres.x)) throw DegenerateFit("fit collapsed to a degenerate scale");

    res.theta_hat = nres.x;
    res.estimating_eq_norm = nres.eq_norm;
    res.iterations = sres.iterations + nres.iterations;
    res.converged = nres.converged;
    res.objective = objective(res.theta_hat);
    return res;
}

FitResult fit_population(const DensityEvaluator& g_star, const ParametricModel& model,
                         const KernelSpec& kernel, const TuningPair& tuning,
                         const QuadratureSpec& quad, const Vector& theta0, double grad_tol,
                         double param_tol) {
    model.require_in_space(theta0);
    DivergenceProblem prob{model,
                           g_star.pdf,
                           g_star.tail_interval(quad.truncation_mass),
                           kernel,
                           tuning,
                           quad};
    prob.hints = g_star.panel_hints;

    NewtonOptions nopts;
    nopts.eq_tol = grad_tol;
    nopts.step_tol = param_tol;
    auto eq_fn = [&](const Vector& th) { return prob.equation(th); };
    auto feasible = [&](const Vector& th) {
        return model.in_param_space(th) && !model.is_degenerate(th);
    };
    NewtonResult nres = damped_newton(eq_fn, theta0, nopts, feasible);

    if (!nres.converged) {
        FitConfig cfg;
        cfg.tuning = tuning;
        cfg.quad = quad;
        cfg.grad_tol = grad_tol;
        cfg.param_tol = param_tol;
        FitResult nm = minimize_problem(prob, theta0, cfg);
        nres = damped_newton(eq_fn, nm.theta_hat, nopts, feasible);
    }

    FitResult res;
    res.theta_hat = nres.x;
    res.estimating_eq_norm = nres.eq_norm;
    res.iterations = nres.iterations;
    res.converged = nres.converged;
    res.objective = prob.full_divergence(res.theta_hat);
    res.bandwidth_used = kernel.bandwidth_h;
    return res;
}

EquivalenceReport mdpde_star_equivalence(std::span<const double> sample,
                                         const ParametricModel& model, const KernelSpec& kernel,
                                         double alpha, const QuadratureSpec& quad) {
    FitConfig cfg;
    cfg.method = FitMethod::mdpde;
    cfg.tuning = TuningPair::make(alpha, 0.0);
    cfg.quad = quad;

    EquivalenceReport rep;
    rep.mdpde = fit_mdpde(sample, model, cfg);

    // Smoothed counterpart solved through its per-datum convolution form:
    // mean_i \int u~(x) f*(x)^a W(x, X_i, h) dx = \int f*^{1+a} u~.
    const int p = model.dim();
    const double n = static_cast<double>(sample.size());
    const double kern_w = kernel.tail_halfwidth(quad.truncation_mass);

    auto u_alpha_at = [&](const Vector& th, double y) {
        return integrate_vec(
            [&](double x, double* out) {
                const double lf = model.smoothed_log_density(th, kernel, x, quad);
                const double w = std::exp(alpha * lf + kernel.log_weight(x, y));
                const Vector u = model.smoothed_score(th, kernel, x, quad);
                for (int j = 0; j < p; ++j) out[j] = w * u[j];
            },
            y - kern_w, y + kern_w, p, quad, 16);
    };
    auto equation = [&](const Vector& th) {
        Vector lhs(p, 0.0);
        for (double xi : sample) {
            const Vector ua = u_alpha_at(th, xi);
            for (int j = 0; j < p; ++j) lhs[j] += ua[j];
        }
        const Interval iv = model.smoothed_tail_interval(th, kernel, quad.truncation_mass);
        const Vector ex = integrate_vec(
            [&](double x, double* out) {
                const double w =
                    std::exp((1.0 + alpha) * model.smoothed_log_density(th, kernel, x, quad));
                const Vector u = model.smoothed_score(th, kernel, x, quad);
                for (int j = 0; j < p; ++j) out[j] = w * u[j];
            },
            iv.lo, iv.hi, p, quad, 24);
        for (int j = 0; j < p; ++j) lhs[j] = lhs[j] / n - ex[j];
        return lhs;
    };

    NewtonOptions nopts;
    nopts.eq_tol = 1e-8;
    nopts.step_tol = 1e-9;
    const NewtonResult nres =
        damped_newton(equation, rep.mdpde.theta_hat, nopts, [&](const Vector& th) {
            return model.in_param_space(th) && !model.is_degenerate(th);
        });

    rep.mdpde_star.theta_hat = nres.x;
    rep.mdpde_star.estimating_eq_norm = nres.eq_norm;
    rep.mdpde_star.iterations = nres.iterations;
    rep.mdpde_star.converged = nres.converged;
    rep.mdpde_star.bandwidth_used = kernel.bandwidth_h;

    rep.parameter_gap = max_abs(rep.mdpde_star.theta_hat - rep.mdpde.theta_hat);
    return rep;
}

}  // namespace sdive
