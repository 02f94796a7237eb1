#include "sdive/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "sdive/estimator.hpp"

namespace sdive {

namespace {

constexpr double kLogRatioLo = -23.025850929940457;
constexpr double kLogRatioHi = 23.025850929940457;
constexpr double kAsymmetryTol = 1e-9;

double clamp_log_ratio(double lg, double lf) {
    double lr = lg - lf;
    if (!(lr > kLogRatioLo)) lr = kLogRatioLo;
    if (lr > kLogRatioHi) lr = kLogRatioHi;
    return lr;
}

Matrix checked_symmetrize(const Matrix& m, double scale) {
    if (matrix_asymmetry(m) > kAsymmetryTol * std::max(1.0, scale))
        throw NumericError("quadrature produced an asymmetric matrix");
    return symmetrized(m);
}

void check_psd(const Matrix& v) {
    double maxdiag = 0.0;
    for (int i = 0; i < v.rows; ++i) maxdiag = std::max(maxdiag, std::abs(v(i, i)));
    Matrix shifted = v;
    for (int i = 0; i < v.rows; ++i) shifted(i, i) += 1e-10 * (1.0 + maxdiag);
    if (!is_positive_definite(shifted))
        throw AssumptionViolation("equation variance matrix is not positive semidefinite");
}

// Integration window for integrands carrying the kernel factor W(x, y, h):
// the kernel window around y, widened until the weight has decayed. Negative
// model-power exponents fatten the effective kernel, hence the growth guard.
Interval kernel_window(const ParametricModel& model, const Vector& theta,
                       const KernelSpec& kernel, double exponent, double y,
                       const QuadratureSpec& quad) {
    const double w = kernel.tail_halfwidth(quad.truncation_mass);
    Interval iv{y - w, y + w};
    if (exponent >= 0.0) return iv;
    auto weight = [&](double x) {
        return std::exp(exponent * model.smoothed_log_density(theta, kernel, x, quad) +
                        kernel.log_weight(x, y));
    };
    const double ref = weight(y) + 1e-300;
    return widen_until_decayed(weight, iv, 1e-15 * ref);
}

}  // namespace

Vector u_alpha_star(const ParametricModel& model, const Vector& theta, const KernelSpec& kernel,
                    double exponent, double y, const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const Interval iv = kernel_window(model, theta, kernel, exponent, y, quad);
    return integrate_vec(
        [&](double x, double* out) {
            const double w = std::exp(exponent * model.smoothed_log_density(theta, kernel, x, quad) +
                                      kernel.log_weight(x, y));
            const Vector u = model.smoothed_score(theta, kernel, x, quad);
            for (int j = 0; j < p; ++j) out[j] = w * u[j];
        },
        iv.lo, iv.hi, p, quad, 16);
}

Matrix u2_alpha_star(const ParametricModel& model, const Vector& theta, const KernelSpec& kernel,
                     double alpha, double y, const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const Interval iv = kernel_window(model, theta, kernel, alpha, y, quad);
    const Vector flat = integrate_vec(
        [&](double x, double* out) {
            const double w = std::exp(alpha * model.smoothed_log_density(theta, kernel, x, quad) +
                                      kernel.log_weight(x, y));
            const Vector u = model.smoothed_score(theta, kernel, x, quad);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) out[i * p + j] = w * u[i] * u[j];
        },
        iv.lo, iv.hi, p * p, quad, 16);
    Matrix m(p, p);
    m.a = flat;
    return checked_symmetrize(m, max_abs(flat));
}

Matrix u1_alpha_star(const ParametricModel& model, const Vector& theta, const KernelSpec& kernel,
                     double alpha, double y, const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const Interval iv = kernel_window(model, theta, kernel, alpha, y, quad);
    const Vector flat = integrate_vec(
        [&](double x, double* out) {
            const double w = std::exp(alpha * model.smoothed_log_density(theta, kernel, x, quad) +
                                      kernel.log_weight(x, y));
            const Matrix g = model.smoothed_score_gradient(theta, kernel, x, quad);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) out[i * p + j] = w * g(i, j);
        },
        iv.lo, iv.hi, p * p, quad, 16);
    Matrix m(p, p);
    m.a = flat;
    return checked_symmetrize(m, max_abs(flat));
}

Vector expected_u_alpha_star(const ParametricModel& model, const Vector& theta,
                             const KernelSpec& kernel, double alpha,
                             const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const Interval iv = model.smoothed_tail_interval(theta, kernel, quad.truncation_mass);
    return integrate_vec(
        [&](double x, double* out) {
            const double w =
                std::exp((1.0 + alpha) * model.smoothed_log_density(theta, kernel, x, quad));
            const Vector u = model.smoothed_score(theta, kernel, x, quad);
            for (int j = 0; j < p; ++j) out[j] = w * u[j];
        },
        iv.lo, iv.hi, p, quad, 24);
}

Matrix j_matrix_model(const ParametricModel& model, const Vector& theta,
                      const KernelSpec& kernel, double alpha, const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const Interval iv = model.smoothed_tail_interval(theta, kernel, quad.truncation_mass);
    const Vector flat = integrate_vec(
        [&](double x, double* out) {
            const double w =
                std::exp((1.0 + alpha) * model.smoothed_log_density(theta, kernel, x, quad));
            const Vector u = model.smoothed_score(theta, kernel, x, quad);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) out[i * p + j] = w * u[i] * u[j];
        },
        iv.lo, iv.hi, p * p, quad, 24);
    Matrix m(p, p);
    m.a = flat;
    m = checked_symmetrize(m, max_abs(flat));
    if (!is_positive_definite(m))
        throw AssumptionViolation("J matrix is not positive definite");
    return m;
}

Matrix j_matrix_via_expectation(const ParametricModel& model, const Vector& theta,
                                const KernelSpec& kernel, double alpha,
                                const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const Interval iv = model.tail_interval(theta, quad.truncation_mass);
    const QuadratureSpec inner = quad.inner();
    const Vector flat = integrate_vec(
        [&](double y, double* out) {
            const Matrix u2 = u2_alpha_star(model, theta, kernel, alpha, y, inner);
            const double fy = model.density(theta, y);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) out[i * p + j] = fy * u2(i, j);
        },
        iv.lo, iv.hi, p * p, quad, 24);
    Matrix m(p, p);
    m.a = flat;
    return checked_symmetrize(m, max_abs(flat));
}

Matrix j_matrix_via_gradient(const ParametricModel& model, const Vector& theta,
                             const KernelSpec& kernel, double alpha,
                             const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const Interval iv = model.tail_interval(theta, quad.truncation_mass);
    const QuadratureSpec inner = quad.inner();
    const Vector flat = integrate_vec(
        [&](double y, double* out) {
            const double fy = model.density(theta, y);
            for (int j = 0; j < p; ++j) {
                const double st = std::max(1e-5, 1e-5 * std::abs(theta[j]));
                Vector tp = theta, tm = theta;
                tp[j] += st;
                tm[j] -= st;
                const Vector up = u_alpha_star(model, tp, kernel, alpha, y, inner);
                const Vector um = u_alpha_star(model, tm, kernel, alpha, y, inner);
                for (int i = 0; i < p; ++i)
                    out[i * p + j] = -fy * (up[i] - um[i]) / (2.0 * st);
            }
        },
        iv.lo, iv.hi, p * p, quad, 24);
    Matrix m(p, p);
    m.a = flat;
    return symmetrized(m);  // finite differences are noisier; no asymmetry gate
}

Matrix v_matrix_model(const ParametricModel& model, const Vector& theta,
                      const KernelSpec& kernel, double alpha, const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const Interval iv = model.tail_interval(theta, quad.truncation_mass);
    const QuadratureSpec inner = quad.inner();
    // First p components: E[u^{a*}]; remaining p^2: E[u^{a*} u^{a*}^T].
    const Vector acc = integrate_vec(
        [&](double y, double* out) {
            const Vector ua = u_alpha_star(model, theta, kernel, alpha, y, inner);
            const double fy = model.density(theta, y);
            for (int i = 0; i < p; ++i) out[i] = fy * ua[i];
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) out[p + i * p + j] = fy * ua[i] * ua[j];
        },
        iv.lo, iv.hi, p + p * p, quad, 24);
    Matrix v(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) v(i, j) = acc[p + i * p + j] - acc[i] * acc[j];
    v = checked_symmetrize(v, max_abs(v.a));
    check_psd(v);
    return v;
}

Matrix j_matrix_general(const ParametricModel& model, const Vector& theta,
                        const DensityEvaluator& g_star, const KernelSpec& kernel,
                        const TuningPair& tuning, const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const double ap1 = 1.0 + tuning.alpha;
    const double A = tuning.A, B = tuning.B;
    const Interval iv =
        interval_union(g_star.tail_interval(quad.truncation_mass),
                       model.smoothed_tail_interval(theta, kernel, quad.truncation_mass));

    // \int f*^{1+a} u~ u~^T + \int (i~ - B u~ u~^T) K(d_g) f*^{1+a}
    const Vector flat = integrate_vec(
        [&](double x, double* out) {
            const double lf = model.smoothed_log_density(theta, kernel, x, quad);
            const double lr = clamp_log_ratio(std::log(g_star.pdf(x)), lf);
            const double fpow = std::exp(ap1 * lf);
            const double k =
                (std::abs(A) <= kLimitBranchTol) ? lr : (std::exp(A * lr) - 1.0) / A;
            const Vector u = model.smoothed_score(theta, kernel, x, quad);
            const Matrix du = model.smoothed_score_gradient(theta, kernel, x, quad);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) {
                    const double ii = -du(i, j);  // smoothed information
                    out[i * p + j] = fpow * (u[i] * u[j] + (ii - B * u[i] * u[j]) * k);
                }
        },
        iv.lo, iv.hi, p * p, quad, 24);
    Matrix jg(p, p);
    jg.a = flat;
    return symmetrized(jg);
}

Matrix v_matrix_general(const ParametricModel& model, const Vector& theta,
                        const DensityEvaluator& g_star, const DensityEvaluator& g_raw,
                        const KernelSpec& kernel, const TuningPair& tuning,
                        const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const QuadratureSpec inner = quad.inner();
    const double kern_w = kernel.tail_halfwidth(quad.truncation_mass);

    auto summand = [&](double y) {  // Z(y) = \int W(x,y,h) K'(d_g) f*^a u~ dx
        return integrate_vec(
            [&](double x, double* out) {
                const double lf = model.smoothed_log_density(theta, kernel, x, inner);
                const double lr = clamp_log_ratio(std::log(g_star.pdf(x)), lf);
                const double kp = (std::abs(tuning.A) <= kLimitBranchTol)
                                      ? std::exp(-lr)
                                      : std::exp((tuning.A - 1.0) * lr);
                const double w = kp * std::exp(tuning.alpha * lf + kernel.log_weight(x, y));
                const Vector u = model.smoothed_score(theta, kernel, x, inner);
                for (int j = 0; j < p; ++j) out[j] = w * u[j];
            },
            y - kern_w, y + kern_w, p, inner, 16);
    };

    const Interval iv = g_raw.tail_interval(quad.truncation_mass);
    const Vector acc = integrate_vec(
        [&](double y, double* out) {
            const Vector z = summand(y);
            const double gy = g_raw.pdf(y);
            for (int i = 0; i < p; ++i) out[i] = gy * z[i];
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) out[p + i * p + j] = gy * z[i] * z[j];
        },
        iv.lo, iv.hi, p + p * p, quad, 24);

    Matrix v(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) v(i, j) = acc[p + i * p + j] - acc[i] * acc[j];
    return symmetrized(v);
}

AsymptoticCov sandwich_covariance(const ParametricModel& model, const Vector& theta,
                                  const KernelSpec& kernel, double alpha,
                                  const QuadratureSpec& quad) {
    AsymptoticCov out;
    out.j = j_matrix_model(model, theta, kernel, alpha, quad);
    out.v = v_matrix_model(model, theta, kernel, alpha, quad);
    const Matrix jinv = inverse(out.j);
    out.sandwich = symmetrized(matmul(matmul(jinv, out.v), jinv));
    return out;
}

AsymptoticCov mdpde_limit_covariance(const ParametricModel& model, const Vector& theta,
                                     double alpha, const QuadratureSpec& quad) {
    model.require_in_space(theta);
    const int p = model.dim();
    const Interval iv = model.tail_interval(theta, quad.truncation_mass);
    // xi = \int u f^{1+a}; J = \int u u^T f^{1+a}; E2 = \int u u^T f^{1+2a}.
    const Vector acc = integrate_vec(
        [&](double x, double* out) {
            const double lf = model.log_density(theta, x);
            const Vector u = model.score(theta, x);
            const double w1 = std::exp((1.0 + alpha) * lf);
            const double w2 = std::exp((1.0 + 2.0 * alpha) * lf);
            for (int i = 0; i < p; ++i) out[i] = w1 * u[i];
            for (int i = 0; i < p; ++i)
                for (int j = 0; j <= i; ++j) {
                    const int k = p + i * (i + 1) / 2 + j;
                    out[k] = w1 * u[i] * u[j];
                    out[k + p * (p + 1) / 2] = w2 * u[i] * u[j];
                }
        },
        iv.lo, iv.hi, p + p * (p + 1), quad, 24);

    AsymptoticCov out;
    out.j = Matrix(p, p);
    out.v = Matrix(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j <= i; ++j) {
            const int k = p + i * (i + 1) / 2 + j;
            out.j(i, j) = out.j(j, i) = acc[k];
            out.v(i, j) = out.v(j, i) = acc[k + p * (p + 1) / 2] - acc[i] * acc[j];
        }
    if (!is_positive_definite(out.j))
        throw AssumptionViolation("J matrix is not positive definite");
    const Matrix jinv = inverse(out.j);
    out.sandwich = symmetrized(matmul(matmul(jinv, out.v), jinv));
    return out;
}

std::string IFReport::to_csv() const {
    const int p = if_values.empty() ? 0 : static_cast<int>(if_values.front().size());
    std::string s = "y";
    for (int j = 0; j < p; ++j) {
        s += ",tprime_";
        s += (j < static_cast<int>(param_names.size())) ? param_names[j]
                                                        : "p" + std::to_string(j);
    }
    if (has_second_order) s += ",tsecond";
    s += "\n";
    char buf[64];
    for (size_t i = 0; i < y_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6g", y_grid[i]);
        s += buf;
        for (int j = 0; j < p; ++j) {
            std::snprintf(buf, sizeof buf, ",%.6g", if_values[i][j]);
            s += buf;
        }
        if (has_second_order) {
            if (second_order_defined[i]) {
                std::snprintf(buf, sizeof buf, ",%.6g", second_order[i]);
                s += buf;
            } else {
                s += ",";  // pole at this grid point
            }
        }
        s += "\n";
    }
    return s;
}

IFReport influence_function_model(const ParametricModel& model, const Vector& theta,
                                  const KernelSpec& kernel, const TuningPair& tuning,
                                  const Vector& y_grid, const QuadratureSpec& quad) {
    const double alpha = tuning.alpha;  // lambda plays no role at the model
    const Matrix j = j_matrix_model(model, theta, kernel, alpha, quad);
    const Vector ebar = expected_u_alpha_star(model, theta, kernel, alpha, quad);

    IFReport rep;
    rep.y_grid = y_grid;
    rep.at_model = true;
    rep.if_values.reserve(y_grid.size());
    for (double y : y_grid) {
        Vector num = u_alpha_star(model, theta, kernel, alpha, y, quad);
        for (size_t i = 0; i < num.size(); ++i) num[i] -= ebar[i];
        rep.if_values.push_back(solve(j, num));
    }
    return rep;
}

IFReport influence_function_general(const ParametricModel& model, const DensityEvaluator& g,
                                    const KernelSpec& kernel, const TuningPair& tuning,
                                    const Vector& y_grid, const QuadratureSpec& quad,
                                    const Vector& theta0) {
    model.require_in_space(theta0);
    const int p = model.dim();
    const double alpha = tuning.alpha;
    const double A = tuning.A;
    const double ap1 = 1.0 + alpha;

    // smoothed true density g* by numeric convolution of the evaluator
    const KernelSpec kern = kernel;
    const QuadratureSpec conv_quad = quad.inner();
    const DensityEvaluator g_copy = g;
    DensityEvaluator g_star;
    g_star.pdf = [g_copy, kern, conv_quad](double x) {
        const double w = kern.tail_halfwidth(conv_quad.truncation_mass);
        return integrate([&](double y) { return kern.weight(x, y) * g_copy.pdf(y); }, x - w,
                         x + w, conv_quad, 16);
    };
    g_star.tail_interval = [g_copy, kern](double mass) {
        const Interval base = g_copy.tail_interval(0.5 * mass);
        const double w = kern.tail_halfwidth(0.5 * mass);
        return Interval{base.lo - w, base.hi + w};
    };

    const FitResult inner = fit_population(g_star, model, kernel, tuning, quad, theta0);
    if (!inner.converged)
        throw NumericError("inner fit of the smoothed model to g* did not converge");
    const Vector tg = inner.theta_hat;

    const Interval iv = interval_union(g_star.tail_interval(quad.truncation_mass),
                                       model.smoothed_tail_interval(tg, kernel,
                                                                    quad.truncation_mass));

    const Matrix jg = j_matrix_general(model, tg, g_star, kernel, tuning, quad);

    // theta-free part of the numerator: \int ratio^A f*^{1+a} u~
    const Vector tail_term = integrate_vec(
        [&](double x, double* out) {
            const double lf = model.smoothed_log_density(tg, kernel, x, quad);
            const double lr = clamp_log_ratio(std::log(g_star.pdf(x)), lf);
            const double w = std::exp(A * lr + ap1 * lf);
            const Vector u = model.smoothed_score(tg, kernel, x, quad);
            for (int j = 0; j < p; ++j) out[j] = w * u[j];
        },
        iv.lo, iv.hi, p, quad, 24);

    IFReport rep;
    rep.y_grid = y_grid;
    rep.at_model = false;
    for (double y : y_grid) {
        const double w = kernel.tail_halfwidth(quad.truncation_mass);
        Vector num = integrate_vec(
            [&](double x, double* out) {
                const double lf = model.smoothed_log_density(tg, kernel, x, quad);
                const double lr = clamp_log_ratio(std::log(g_star.pdf(x)), lf);
                const double wt = std::exp((A - 1.0) * lr + alpha * lf + kernel.log_weight(x, y));
                const Vector u = model.smoothed_score(tg, kernel, x, quad);
                for (int j = 0; j < p; ++j) out[j] = wt * u[j];
            },
            y - w, y + w, p, quad, 16);
        for (int j = 0; j < p; ++j) num[j] -= tail_term[j];
        rep.if_values.push_back(solve(jg, num));
    }
    return rep;
}

// Second derivative of the contaminated functional at the model, obtained by
// implicit differentiation of the estimating equation
//   F(theta, eps) = \int K(d_eps) f*^{1+a} u~ = 0,  d_eps from
//   g*_eps = (1-eps) f* + eps W(., y, h):
//   T'' = [F_tt T'^2 + 2 F_te T' + F_ee] / J,
//   F_tt = (A - 2 - 2a) D1 - 3 D2,
//   F_te = B (u^{2a*}(y) - J) + u^{1a*}(y) - E[grad u~],
//   F_ee = (A - 1) [ Q(y) - 2 u^{a*}(y) + E[u^{a*}] ],
//   Q(y) = \int W(x,y,h)^2 f*^{a-1} u~ dx.
// lambda enters only through A - 1 = lambda (1 - alpha) and vanishes at
// alpha = 1. Verified against finite-eps refit second differences.
SecondOrderReport second_order_influence(const ParametricModel& model, const Vector& theta,
                                         const KernelSpec& kernel, const TuningPair& tuning,
                                         const Vector& y_grid, const QuadratureSpec& quad) {
    if (model.dim() != 1)
        throw InvalidInput("second-order influence analysis requires a scalar parameter");
    model.require_in_space(theta);
    const double alpha = tuning.alpha;
    const double ap1 = 1.0 + alpha;
    const double A = tuning.A, B = tuning.B;

    const double jv = j_matrix_model(model, theta, kernel, alpha, quad)(0, 0);
    const double ebar = expected_u_alpha_star(model, theta, kernel, alpha, quad)[0];

    const Interval iv = model.smoothed_tail_interval(theta, kernel, quad.truncation_mass);
    const Vector moments = integrate_vec(
        [&](double x, double* out) {
            const double w =
                std::exp(ap1 * model.smoothed_log_density(theta, kernel, x, quad));
            const double u = model.smoothed_score(theta, kernel, x, quad)[0];
            const double du = model.smoothed_score_gradient(theta, kernel, x, quad)(0, 0);
            out[0] = w * u * u * u;  // D1
            out[1] = w * u * du;     // D2
            out[2] = w * du;         // E[grad u~]
        },
        iv.lo, iv.hi, 3, quad, 24);
    const double d1 = moments[0], d2 = moments[1], egrad = moments[2];
    const double f_tt = (A - 2.0 - 2.0 * alpha) * d1 - 3.0 * d2;

    SecondOrderReport rep;
    rep.y_grid = y_grid;
    rep.t_prime.resize(y_grid.size());
    rep.t_second.resize(y_grid.size());
    rep.defined.assign(y_grid.size(), true);

    for (size_t i = 0; i < y_grid.size(); ++i) {
        const double y = y_grid[i];
        const double ua = u_alpha_star(model, theta, kernel, alpha, y, quad)[0];
        const double t1 = (ua - ebar) / jv;
        rep.t_prime[i] = t1;

        const double u2a = u2_alpha_star(model, theta, kernel, alpha, y, quad)(0, 0);
        const double u1a = u1_alpha_star(model, theta, kernel, alpha, y, quad)(0, 0);
        const double f_te = B * (u2a - jv) + u1a - egrad;

        double f_ee = 0.0;
        if (A != 1.0) {
            const Interval qiv = kernel_window(model, theta, kernel, alpha - 1.0, y, quad);
            const double q = integrate(
                [&](double x) {
                    const double w =
                        std::exp((alpha - 1.0) *
                                     model.smoothed_log_density(theta, kernel, x, quad) +
                                 2.0 * kernel.log_weight(x, y));
                    return w * model.smoothed_score(theta, kernel, x, quad)[0];
                },
                qiv, quad, 16);
            f_ee = (A - 1.0) * (q - 2.0 * ua + ebar);
        }
        rep.t_second[i] = (f_tt * t1 * t1 + 2.0 * f_te * t1 + f_ee) / jv;
    }
    return rep;
}

TransparencyReport transparency_residual(const ParametricModel& model, const Vector& theta,
                                         const KernelSpec& kernel, double alpha,
                                         const QuadratureSpec& quad, const Vector& grid) {
    model.require_in_space(theta);
    const int p = model.dim();
    const int q = p + 1;  // regressors: f^a u (p columns) plus intercept
    if (static_cast<int>(grid.size()) < 2 * p + 2)
        throw InvalidInput("transparency grid needs at least 2p+2 points");

    const size_t n = grid.size();
    std::vector<Vector> lhs(n), reg(n);
    for (size_t i = 0; i < n; ++i) {
        lhs[i] = u_alpha_star(model, theta, kernel, alpha, grid[i], quad);
        const double w = std::pow(model.density(theta, grid[i]), alpha);
        const Vector u = model.score(theta, grid[i]);
        reg[i].resize(q);
        for (int j = 0; j < p; ++j) reg[i][j] = w * u[j];
        reg[i][p] = 1.0;
    }

    Matrix xtx(q, q);
    for (size_t i = 0; i < n; ++i)
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b) xtx(a, b) += reg[i][a] * reg[i][b];

    // Relative rank check before solving the normal equations.
    {
        Matrix probe = xtx;
        double scale = 0.0;
        for (int a = 0; a < q; ++a) scale = std::max(scale, std::abs(probe(a, a)));
        for (int col = 0; col < q; ++col) {
            int piv = col;
            for (int r = col + 1; r < q; ++r)
                if (std::abs(probe(r, col)) > std::abs(probe(piv, col))) piv = r;
            if (std::abs(probe(piv, col)) < 1e-10 * std::max(scale, 1e-30))
                throw DegenerateGrid("transparency regression grid is rank deficient");
            if (piv != col)
                for (int j = 0; j < q; ++j) std::swap(probe(col, j), probe(piv, j));
            for (int r = col + 1; r < q; ++r) {
                const double f = probe(r, col) / probe(col, col);
                for (int j = col; j < q; ++j) probe(r, j) -= f * probe(col, j);
            }
        }
    }

    TransparencyReport rep;
    rep.M = Matrix(p, p);
    rep.L = Vector(p, 0.0);
    for (int comp = 0; comp < p; ++comp) {
        Vector xty(q, 0.0);
        for (size_t i = 0; i < n; ++i)
            for (int a = 0; a < q; ++a) xty[a] += reg[i][a] * lhs[i][comp];
        const Vector beta = solve(xtx, xty);
        for (int j = 0; j < p; ++j) rep.M(comp, j) = beta[j];
        rep.L[comp] = beta[p];
    }

    for (size_t i = 0; i < n; ++i)
        for (int comp = 0; comp < p; ++comp) {
            double fitted = rep.L[comp];
            for (int j = 0; j < p; ++j) fitted += rep.M(comp, j) * reg[i][j];
            rep.max_residual = std::max(rep.max_residual, std::abs(lhs[i][comp] - fitted));
        }
    rep.transparent = rep.max_residual <= 1e-6;
    return rep;
}

}  // namespace sdive
