#include "sdive/divergence.hpp"

#include <cmath>

namespace sdive {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

}  // namespace

DensityEvaluator normal_evaluator(double mu, double sigma) {
    if (!(sigma > 0.0)) throw InvalidInput("normal evaluator requires sigma > 0");
    DensityEvaluator ev;
    ev.pdf = [mu, sigma](double x) { return normal_pdf(x, mu, sigma); };
    ev.tail_interval = [mu, sigma](double mass) {
        const double z = normal_tail_z(mass);
        return Interval{mu - z * sigma, mu + z * sigma};
    };
    return ev;
}

DensityEvaluator normal_mixture_evaluator(const std::vector<double>& weights,
                                          const std::vector<double>& mus,
                                          const std::vector<double>& sigmas) {
    if (weights.empty() || weights.size() != mus.size() || weights.size() != sigmas.size())
        throw InvalidInput("mixture components must align");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw InvalidInput("mixture weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("mixture weights must sum to 1");
    for (double s : sigmas)
        if (!(s > 0.0)) throw InvalidInput("mixture sigma must be positive");

    DensityEvaluator ev;
    ev.pdf = [weights, mus, sigmas](double x) {
        double v = 0.0;
        for (size_t i = 0; i < weights.size(); ++i)
            v += weights[i] * normal_pdf(x, mus[i], sigmas[i]);
        return v;
    };
    ev.tail_interval = [mus, sigmas](double mass) {
        const double z = normal_tail_z(mass);
        Interval iv{mus[0] - z * sigmas[0], mus[0] + z * sigmas[0]};
        for (size_t i = 1; i < mus.size(); ++i)
            iv = interval_union(iv, {mus[i] - z * sigmas[i], mus[i] + z * sigmas[i]});
        return iv;
    };
    return ev;
}

double density_mass(const DensityEvaluator& g, const QuadratureSpec& quad) {
    quad.validate();
    const Interval iv = g.tail_interval(quad.truncation_mass);
    return integrate([&](double x) { return g.pdf(x); }, iv, quad, 32, g.panel_hints);
}

double clamped_ratio(double g_val, double f_val) {
    require_finite(g_val, "density value g");
    require_finite(f_val, "density value f");
    if (g_val < 0.0) throw InvalidInput("negative density value");
    if (!(f_val > 0.0)) throw InvalidInput("model density must be positive");
    const double r = g_val / f_val;
    return std::min(kRatioClampHi, std::max(kRatioClampLo, r));
}

double pearson_residual(double g_val, double f_val) {
    return clamped_ratio(g_val, f_val) - 1.0;
}

double k_function(double delta, const TuningPair& tuning) {
    require_finite(delta, "delta");
    const double dp1 = delta + 1.0;
    if (dp1 <= 0.0) throw DomainError("k_function requires delta + 1 > 0");
    if (tuning.log_branch_a()) return std::log(dp1);
    return (std::pow(dp1, tuning.A) - 1.0) / tuning.A;
}

double k_prime(double delta, const TuningPair& tuning) {
    require_finite(delta, "delta");
    const double dp1 = delta + 1.0;
    if (dp1 <= 0.0) throw DomainError("k_prime requires delta + 1 > 0");
    if (tuning.log_branch_a()) return 1.0 / dp1;
    return std::pow(dp1, tuning.A - 1.0);
}

double s_divergence(const DensityEvaluator& g, const DensityEvaluator& f,
                    const TuningPair& tuning, const QuadratureSpec& quad) {
    quad.validate();
    const Interval iv = interval_union(g.tail_interval(quad.truncation_mass),
                                       f.tail_interval(quad.truncation_mass));
    const double ap1 = 1.0 + tuning.alpha;
    const int panels = 32;
    std::vector<double> hints = g.panel_hints;
    hints.insert(hints.end(), f.panel_hints.begin(), f.panel_hints.end());

    // Both limit branches share the integral of f^(1+a) and g^(1+a).
    auto f_pow = [&](double x) { return std::pow(f.pdf(x), ap1); };
    auto g_pow = [&](double x) { return std::pow(g.pdf(x), ap1); };

    if (tuning.log_branch_a()) {
        // lim A->0: \int f^{1+a} log(f/g) - \int (f^{1+a} - g^{1+a})/(1+a)
        const double t1 = integrate(
            [&](double x) { return f_pow(x) * -std::log(clamped_ratio(g.pdf(x), f.pdf(x))); },
            iv, quad, panels, hints);
        const double t2 = integrate(f_pow, iv, quad, panels, hints);
        const double t3 = integrate(g_pow, iv, quad, panels, hints);
        return t1 - (t2 - t3) / ap1;
    }
    if (tuning.log_branch_b()) {
        // lim B->0: \int g^{1+a} log(g/f) - \int (g^{1+a} - f^{1+a})/(1+a)
        const double t1 = integrate(
            [&](double x) { return g_pow(x) * std::log(clamped_ratio(g.pdf(x), f.pdf(x))); },
            iv, quad, panels, hints);
        const double t2 = integrate(g_pow, iv, quad, panels, hints);
        const double t3 = integrate(f_pow, iv, quad, panels, hints);
        return t1 - (t2 - t3) / ap1;
    }

    // General case; the cross term f^B g^A is evaluated as (g/f)^A f^{1+a}
    // so the ratio clamp bounds it in the tails.
    const double t1 = integrate(f_pow, iv, quad, panels, hints);
    const double t2 = integrate(
        [&](double x) {
            return std::pow(clamped_ratio(g.pdf(x), f.pdf(x)), tuning.A) * f_pow(x);
        },
        iv, quad, panels, hints);
    const double t3 = integrate(g_pow, iv, quad, panels, hints);
    return t1 / tuning.A - ap1 / (tuning.A * tuning.B) * t2 + t3 / tuning.B;
}

}  // namespace sdive
