#include "sdive/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdive {

SimplexResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                          const Vector& step, int max_iter, double f_tol, double x_tol) {
    const int n = static_cast<int>(x0.size());
    const double refl = 1.0, expa = 2.0, contr = 0.5, shrink = 0.5;

    std::vector<Vector> xs(n + 1, x0);
    for (int j = 0; j < n; ++j) xs[j + 1][j] += step[j];
    std::vector<double> fx(n + 1);
    for (int v = 0; v <= n; ++v) fx[v] = f(xs[v]);

    std::vector<int> order(n + 1);
    int iter = 0;
    bool converged = false;
    for (; iter < max_iter; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        const int best = order[0], worst = order[n], second = order[n - 1];

        double spread = 0.0;
        for (int j = 0; j < n; ++j)
            spread = std::max(spread, std::abs(xs[worst][j] - xs[best][j]));
        const double fspread = std::abs(fx[worst] - fx[best]);
        if (fspread <= f_tol * (std::abs(fx[best]) + f_tol) && spread <= x_tol) {
            converged = true;
            break;
        }

        Vector centroid(n, 0.0);
        for (int v = 0; v <= n; ++v) {
            if (v == worst) continue;
            for (int j = 0; j < n; ++j) centroid[j] += xs[v][j];
        }
        for (int j = 0; j < n; ++j) centroid[j] /= n;

        auto point_at = [&](double t) {
            Vector p(n);
            for (int j = 0; j < n; ++j) p[j] = centroid[j] + t * (centroid[j] - xs[worst][j]);
            return p;
        };

        const Vector xr = point_at(refl);
        const double fr = f(xr);
        if (fr < fx[best]) {
            const Vector xe = point_at(expa);
            const double fe = f(xe);
            if (fe < fr) {
                xs[worst] = xe;
                fx[worst] = fe;
            } else {
                xs[worst] = xr;
                fx[worst] = fr;
            }
        } else if (fr < fx[second]) {
            xs[worst] = xr;
            fx[worst] = fr;
        } else {
            const bool outside = fr < fx[worst];
            const Vector xc = point_at(outside ? contr : -contr);
            const double fc = f(xc);
            if (fc < std::min(fr, fx[worst])) {
                xs[worst] = xc;
                fx[worst] = fc;
            } else {
                for (int v = 0; v <= n; ++v) {
                    if (v == best) continue;
                    for (int j = 0; j < n; ++j)
                        xs[v][j] = xs[best][j] + shrink * (xs[v][j] - xs[best][j]);
                    fx[v] = f(xs[v]);
                }
            }
        }
    }

    int best = 0;
    for (int v = 1; v <= n; ++v)
        if (fx[v] < fx[best]) best = v;
    return {xs[best], fx[best], iter, converged};
}

NewtonResult damped_newton(const std::function<Vector(const Vector&)>& eq, const Vector& x0,
                           const NewtonOptions& opts,
                           const std::function<bool(const Vector&)>& feasible) {
    const int n = static_cast<int>(x0.size());
    NewtonResult res;
    res.x = x0;
    res.eq = eq(res.x);
    res.eq_norm = norm2(res.eq);
    res.last_step = 0.0;

    for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
        if (res.eq_norm <= opts.eq_tol && res.last_step <= opts.step_tol) {
            res.converged = true;
            return res;
        }

        Matrix jac(n, n);
        for (int j = 0; j < n; ++j) {
            const double st = std::max(opts.fd_step, opts.fd_step * std::abs(res.x[j]));
            Vector xp = res.x, xm = res.x;
            xp[j] += st;
            xm[j] -= st;
            if (!feasible(xp) || !feasible(xm)) {
                res.converged = res.eq_norm <= opts.eq_tol;
                return res;
            }
            const Vector ep = eq(xp), em = eq(xm);
            for (int i = 0; i < n; ++i) jac(i, j) = (ep[i] - em[i]) / (2.0 * st);
        }

        Vector delta;
        try {
            Vector rhs(n);
            for (int i = 0; i < n; ++i) rhs[i] = -res.eq[i];
            delta = solve(jac, rhs);
        } catch (const NumericError&) {
            res.converged = res.eq_norm <= opts.eq_tol;
            return res;
        }

        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 25; ++halving) {
            Vector trial(n);
            for (int i = 0; i < n; ++i) trial[i] = res.x[i] + scale * delta[i];
            if (feasible(trial)) {
                Vector etrial;
                try {
                    etrial = eq(trial);
                } catch (const Error&) {
                    scale *= 0.5;
                    continue;
                }
                const double etn = norm2(etrial);
                if (etn < res.eq_norm || etn <= opts.eq_tol) {
                    res.last_step = scale * norm2(delta);
                    res.x = trial;
                    res.eq = etrial;
                    res.eq_norm = etn;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if (!accepted) {
            res.converged = res.eq_norm <= opts.eq_tol && res.last_step <= opts.step_tol;
            return res;
        }
    }
    res.converged = res.eq_norm <= opts.eq_tol && res.last_step <= opts.step_tol;
    return res;
}

}  // namespace sdive
