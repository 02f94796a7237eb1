#include "sdive/model.hpp"

#include <cmath>
#include <random>

namespace sdive {

namespace {

constexpr double kLogSqrt2Pi = 0.9189385332046727;

double fd_step(double v, double rel) { return std::max(rel, rel * std::abs(v)); }

std::mt19937_64 engine_for(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 over the combined state
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void ParametricModel::require_in_space(const Vector& theta) const {
    if (static_cast<int>(theta.size()) != dim())
        throw InvalidInput("parameter dimension mismatch");
    if (!in_param_space(theta)) throw InvalidInput("parameter outside model space");
}

double ParametricModel::log_density(const Vector& theta, double x) const {
    const double f = density(theta, x);
    if (f <= 0.0) throw DomainError("log density of a zero density value");
    return std::log(f);
}

Vector ParametricModel::score(const Vector& theta, double x) const {
    const int p = dim();
    Vector u(p);
    for (int j = 0; j < p; ++j) {
        const double st = fd_step(theta[j], 1e-6);
        Vector tp = theta, tm = theta;
        tp[j] += st;
        tm[j] -= st;
        u[j] = (log_density(tp, x) - log_density(tm, x)) / (2.0 * st);
    }
    return u;
}

Matrix ParametricModel::score_gradient(const Vector& theta, double x) const {
    const int p = dim();
    Matrix m(p, p);
    for (int j = 0; j < p; ++j) {
        const double st = fd_step(theta[j], 1e-5);
        Vector tp = theta, tm = theta;
        tp[j] += st;
        tm[j] -= st;
        const Vector up = score(tp, x), um = score(tm, x);
        for (int i = 0; i < p; ++i) m(i, j) = (up[i] - um[i]) / (2.0 * st);
    }
    return symmetrized(m);
}

double ParametricModel::smoothed_density(const Vector& theta, const KernelSpec& kernel,
                                         double x, const QuadratureSpec& quad) const {
    // numeric convolution over the kernel window intersected with the
    // model's effective support
    const double w = 8.0 * kernel.bandwidth_h;
    const Interval base = tail_interval(theta, quad.truncation_mass);
    const double lo = std::max(x - w, base.lo - w);
    const double hi = std::min(x + w, base.hi + w);
    if (!(hi > lo)) return 0.0;
    return integrate(
        [&](double y) { return kernel.weight(x, y) * density(theta, y); }, lo, hi,
        quad, 24);
}

double ParametricModel::smoothed_log_density(const Vector& theta, const KernelSpec& kernel,
                                             double x, const QuadratureSpec& quad) const {
    const double f = smoothed_density(theta, kernel, x, quad);
    if (f <= 0.0) throw DomainError("smoothed density underflowed to zero");
    return std::log(f);
}

Vector ParametricModel::smoothed_score(const Vector& theta, const KernelSpec& kernel,
                                       double x, const QuadratureSpec& quad) const {
    // Central differences of log f* in theta. All perturbed convolutions are
    // evaluated on one fixed Simpson grid so the quadrature error is shared
    // and cancels in the difference.
    const int p = dim();
    const double w = kernel.tail_halfwidth(1e-14);
    const int panels = 256;
    const double lo = x - w;
    const double step = 2.0 * w / (2 * panels);

    std::vector<double> kernel_weights(2 * panels + 1);
    for (int i = 0; i <= 2 * panels; ++i) {
        const double simpson = (i == 0 || i == 2 * panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        kernel_weights[i] = simpson * kernel.weight(x, lo + i * step);
    }
    auto log_fstar = [&](const Vector& th) {
        double s = 0.0;
        for (int i = 0; i <= 2 * panels; ++i) s += kernel_weights[i] * density(th, lo + i * step);
        s *= step / 3.0;
        if (s <= 0.0) throw DomainError("smoothed density underflowed to zero");
        return std::log(s);
    };

    Vector u(p);
    for (int j = 0; j < p; ++j) {
        const double st = fd_step(theta[j], 1e-6);
        Vector tp = theta, tm = theta;
        tp[j] += st;
        tm[j] -= st;
        u[j] = (log_fstar(tp) - log_fstar(tm)) / (2.0 * st);
    }
    return u;
}

Matrix ParametricModel::smoothed_score_gradient(const Vector& theta, const KernelSpec& kernel,
                                                double x, const QuadratureSpec& quad) const {
    const int p = dim();
    Matrix m(p, p);
    for (int j = 0; j < p; ++j) {
        const double st = fd_step(theta[j], 1e-4);
        Vector tp = theta, tm = theta;
        tp[j] += st;
        tm[j] -= st;
        const Vector up = smoothed_score(tp, kernel, x, quad);
        const Vector um = smoothed_score(tm, kernel, x, quad);
        for (int i = 0; i < p; ++i) m(i, j) = (up[i] - um[i]) / (2.0 * st);
    }
    return symmetrized(m);
}

Interval ParametricModel::smoothed_tail_interval(const Vector& theta, const KernelSpec& kernel,
                                                 double mass) const {
    const Interval base = tail_interval(theta, 0.5 * mass);
    const double w = kernel.tail_halfwidth(0.5 * mass);
    return {base.lo - w, base.hi + w};
}

Vector ParametricModel::init_robust(std::span<const double> xs) const {
    throw InvalidInput("model provides no robust initialization");
}

Vector ParametricModel::init_mle(std::span<const double> xs) const {
    if (auto mle = closed_form_mle(xs)) return *mle;
    return init_robust(xs);
}

// ---------------------------------------------------------------------------
// NormalModel

double normal_density(double mu, double sigma, double x) {
    if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z - kLogSqrt2Pi) / sigma;
}

Vector normal_score(double mu, double sigma, double x) {
    if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
    const double d = x - mu;
    return {d / (sigma * sigma), d * d / (sigma * sigma * sigma) - 1.0 / sigma};
}

bool NormalModel::in_param_space(const Vector& theta) const {
    return theta.size() == 2 && std::isfinite(theta[0]) && theta[1] > 0.0 &&
           std::isfinite(theta[1]);
}

double NormalModel::density(const Vector& theta, double x) const {
    require_in_space(theta);
    return normal_density(theta[0], theta[1], x);
}

double NormalModel::log_density(const Vector& theta, double x) const {
    require_in_space(theta);
    const double z = (x - theta[0]) / theta[1];
    return -0.5 * z * z - kLogSqrt2Pi - std::log(theta[1]);
}

Vector NormalModel::score(const Vector& theta, double x) const {
    require_in_space(theta);
    return normal_score(theta[0], theta[1], x);
}

Matrix NormalModel::score_gradient(const Vector& theta, double x) const {
    require_in_space(theta);
    const double s = theta[1];
    const double d = x - theta[0];
    Matrix m(2, 2);
    m(0, 0) = -1.0 / (s * s);
    m(0, 1) = m(1, 0) = -2.0 * d / (s * s * s);
    m(1, 1) = -3.0 * d * d / (s * s * s * s) + 1.0 / (s * s);
    return m;
}

Interval NormalModel::tail_interval(const Vector& theta, double mass) const {
    const double z = normal_tail_z(mass);
    return {theta[0] - z * theta[1], theta[0] + z * theta[1]};
}

std::vector<double> NormalModel::sample(const Vector& theta, int n, std::uint64_t seed) const {
    require_in_space(theta);
    auto rng = engine_for(seed);
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        std::normal_distribution<double> d(theta[0], theta[1]);
        xs[i] = d(rng);
    }
    return xs;
}

std::optional<Vector> NormalModel::closed_form_mle(std::span<const double> xs) const {
    if (xs.empty()) throw InvalidInput("MLE of an empty sample");
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double v : xs) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size()));
    if (!(sd > 0.0)) throw DegenerateFit("sample has zero spread; scale MLE collapsed");
    return Vector{mean, sd};
}

Vector NormalModel::to_unconstrained(const Vector& theta) const {
    require_in_space(theta);
    return {theta[0], std::log(theta[1])};
}

Vector NormalModel::from_unconstrained(const Vector& eta) const {
    if (eta.size() != 2) throw InvalidInput("parameter dimension mismatch");
    if (eta[1] < -30.0) throw DegenerateFit("scale collapsed: log sigma < -30");
    return {eta[0], std::exp(eta[1])};
}

bool NormalModel::is_degenerate(const Vector& theta) const {
    return !(theta[1] > 1e-13);
}

Vector NormalModel::init_robust(std::span<const double> xs) const {
    const double mu0 = median(xs);
    const double mad = median_absolute_deviation(xs, mu0);
    if (mad <= 0.0) throw DegenerateSample("zero median absolute deviation");
    return {mu0, mad / 0.6745};
}

Vector NormalModel::init_mle(std::span<const double> xs) const { return *closed_form_mle(xs); }

double NormalModel::smoothed_density(const Vector& theta, const KernelSpec& kernel, double x,
                                     const QuadratureSpec&) const {
    require_in_space(theta);
    const double h = kernel.bandwidth_h;
    return normal_density(theta[0], std::sqrt(theta[1] * theta[1] + h * h), x);
}

double NormalModel::smoothed_log_density(const Vector& theta, const KernelSpec& kernel,
                                         double x, const QuadratureSpec&) const {
    require_in_space(theta);
    const double t2 = theta[1] * theta[1] + kernel.bandwidth_h * kernel.bandwidth_h;
    const double d = x - theta[0];
    return -0.5 * d * d / t2 - kLogSqrt2Pi - 0.5 * std::log(t2);
}

Vector NormalModel::smoothed_score(const Vector& theta, const KernelSpec& kernel, double x,
                                   const QuadratureSpec&) const {
    require_in_space(theta);
    const double s = theta[1];
    const double t2 = s * s + kernel.bandwidth_h * kernel.bandwidth_h;
    const double d = x - theta[0];
    return {d / t2, s * (d * d / (t2 * t2) - 1.0 / t2)};
}

Matrix NormalModel::smoothed_score_gradient(const Vector& theta, const KernelSpec& kernel,
                                            double x, const QuadratureSpec&) const {
    require_in_space(theta);
    const double s = theta[1];
    const double t2 = s * s + kernel.bandwidth_h * kernel.bandwidth_h;
    const double d = x - theta[0];
    Matrix m(2, 2);
    m(0, 0) = -1.0 / t2;
    m(0, 1) = m(1, 0) = -2.0 * s * d / (t2 * t2);
    m(1, 1) = d * d / (t2 * t2) - 1.0 / t2 - 4.0 * s * s * d * d / (t2 * t2 * t2) +
              2.0 * s * s / (t2 * t2);
    return m;
}

Interval NormalModel::smoothed_tail_interval(const Vector& theta, const KernelSpec& kernel,
                                             double mass) const {
    const double t = std::sqrt(theta[1] * theta[1] + kernel.bandwidth_h * kernel.bandwidth_h);
    const double z = normal_tail_z(mass);
    return {theta[0] - z * t, theta[0] + z * t};
}

// ---------------------------------------------------------------------------
// NormalMeanModel

NormalMeanModel::NormalMeanModel(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
}

bool NormalMeanModel::in_param_space(const Vector& theta) const {
    return theta.size() == 1 && std::isfinite(theta[0]);
}

double NormalMeanModel::density(const Vector& theta, double x) const {
    require_in_space(theta);
    return normal_density(theta[0], sigma_, x);
}

double NormalMeanModel::log_density(const Vector& theta, double x) const {
    require_in_space(theta);
    const double z = (x - theta[0]) / sigma_;
    return -0.5 * z * z - kLogSqrt2Pi - std::log(sigma_);
}

Vector NormalMeanModel::score(const Vector& theta, double x) const {
    require_in_space(theta);
    return {(x - theta[0]) / (sigma_ * sigma_)};
}

Matrix NormalMeanModel::score_gradient(const Vector& theta, double x) const {
    require_in_space(theta);
    Matrix m(1, 1);
    m(0, 0) = -1.0 / (sigma_ * sigma_);
    return m;
}

Interval NormalMeanModel::tail_interval(const Vector& theta, double mass) const {
    const double z = normal_tail_z(mass);
    return {theta[0] - z * sigma_, theta[0] + z * sigma_};
}

std::vector<double> NormalMeanModel::sample(const Vector& theta, int n,
                                            std::uint64_t seed) const {
    require_in_space(theta);
    auto rng = engine_for(seed);
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        std::normal_distribution<double> d(theta[0], sigma_);
        xs[i] = d(rng);
    }
    return xs;
}

Vector NormalMeanModel::init_robust(std::span<const double> xs) const {
    return {median(xs)};
}

Vector NormalMeanModel::init_mle(std::span<const double> xs) const {
    if (xs.empty()) throw InvalidInput("MLE of an empty sample");
    double mean = 0.0;
    for (double v : xs) mean += v;
    return {mean / static_cast<double>(xs.size())};
}

double NormalMeanModel::smoothed_density(const Vector& theta, const KernelSpec& kernel,
                                         double x, const QuadratureSpec&) const {
    require_in_space(theta);
    const double h = kernel.bandwidth_h;
    return normal_density(theta[0], std::sqrt(sigma_ * sigma_ + h * h), x);
}

double NormalMeanModel::smoothed_log_density(const Vector& theta, const KernelSpec& kernel,
                                             double x, const QuadratureSpec&) const {
    require_in_space(theta);
    const double t2 = sigma_ * sigma_ + kernel.bandwidth_h * kernel.bandwidth_h;
    const double d = x - theta[0];
    return -0.5 * d * d / t2 - kLogSqrt2Pi - 0.5 * std::log(t2);
}

Vector NormalMeanModel::smoothed_score(const Vector& theta, const KernelSpec& kernel,
                                       double x, const QuadratureSpec&) const {
    require_in_space(theta);
    const double t2 = sigma_ * sigma_ + kernel.bandwidth_h * kernel.bandwidth_h;
    return {(x - theta[0]) / t2};
}

Matrix NormalMeanModel::smoothed_score_gradient(const Vector& theta, const KernelSpec& kernel,
                                                double x, const QuadratureSpec&) const {
    require_in_space(theta);
    const double t2 = sigma_ * sigma_ + kernel.bandwidth_h * kernel.bandwidth_h;
    Matrix m(1, 1);
    m(0, 0) = -1.0 / t2;
    return m;
}

Interval NormalMeanModel::smoothed_tail_interval(const Vector& theta, const KernelSpec& kernel,
                                                 double mass) const {
    const double t = std::sqrt(sigma_ * sigma_ + kernel.bandwidth_h * kernel.bandwidth_h);
    const double z = normal_tail_z(mass);
    return {theta[0] - z * t, theta[0] + z * t};
}

// ---------------------------------------------------------------------------
// Distribution specs and contaminated sampling

DistributionSpec DistributionSpec::normal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw InvalidInput("normal spec requires sigma > 0");
    return {Kind::normal, mu, sigma};
}

DistributionSpec DistributionSpec::parse(const std::string& text) {
    auto fail = [&]() -> DistributionSpec {
        throw InvalidInput("unknown distribution spec: '" + text + "'");
    };
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open) return fail();
    const std::string name = text.substr(0, open);
    const std::string args = text.substr(open + 1, close - open - 1);

    auto parse_num = [&](const std::string& s) {
        try {
            size_t pos = 0;
            const double v = std::stod(s, &pos);
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw InvalidInput("bad number in distribution spec: '" + text + "'");
        }
    };

    if (name == "normal") {
        const auto comma = args.find(',');
        if (comma == std::string::npos) return fail();
        const double mu = parse_num(args.substr(0, comma));
        const double sigma = parse_num(args.substr(comma + 1));
        return DistributionSpec::normal(mu, sigma);
    }
    if (name == "t") {
        const double df = parse_num(args);
        if (!(df > 0.0)) throw InvalidInput("t spec requires df > 0");
        return {Kind::student_t, df, 0.0};
    }
    if (name == "chisq") {
        const double df = parse_num(args);
        if (!(df > 0.0)) throw InvalidInput("chisq spec requires df > 0");
        return {Kind::chi_squared, df, 0.0};
    }
    return fail();
}

std::string DistributionSpec::to_string() const {
    char buf[64];
    switch (kind) {
        case Kind::normal:
            std::snprintf(buf, sizeof buf, "normal(%g,%g)", p1, p2);
            break;
        case Kind::student_t:
            std::snprintf(buf, sizeof buf, "t(%g)", p1);
            break;
        case Kind::chi_squared:
            std::snprintf(buf, sizeof buf, "chisq(%g)", p1);
            break;
    }
    return buf;
}

namespace {

double draw_from(const DistributionSpec& spec, std::mt19937_64& rng) {
    switch (spec.kind) {
        case DistributionSpec::Kind::normal: {
            std::normal_distribution<double> d(spec.p1, spec.p2);
            return d(rng);
        }
        case DistributionSpec::Kind::student_t: {
            std::student_t_distribution<double> d(spec.p1);
            return d(rng);
        }
        case DistributionSpec::Kind::chi_squared: {
            std::chi_squared_distribution<double> d(spec.p1);
            return d(rng);
        }
    }
    throw InvalidInput("unhandled distribution kind");
}

}  // namespace

std::vector<double> sample_contaminated(const DistributionSpec& target,
                                        const std::optional<DistributionSpec>& contaminant,
                                        double epsilon, int n, std::uint64_t seed) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must be in [0,1)");
    if (n < 1) throw InvalidInput("sample size must be positive");
    if (epsilon > 0.0 && !contaminant)
        throw InvalidInput("contamination proportion set without a contaminant spec");

    auto rng = engine_for(seed);
    std::vector<double> xs(n);
    if (epsilon == 0.0) {
        for (int i = 0; i < n; ++i) xs[i] = draw_from(target, rng);
        return xs;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const bool contaminated = unif(rng) < epsilon;
        xs[i] = draw_from(contaminated ? *contaminant : target, rng);
    }
    return xs;
}

}  // namespace sdive
