#include "sdive/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace sdive {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kLogSqrt2Pi = 0.9189385332046727;
// Gaussian weights underflow to zero well inside |z| = 39; points beyond
// this window contribute exactly 0.0 in double arithmetic.
constexpr double kZeroWindow = 39.0;
}  // namespace

double KernelSpec::weight(double x, double y) const {
    const double z = (x - y) / bandwidth_h;
    return kInvSqrt2Pi / bandwidth_h * std::exp(-0.5 * z * z);
}

double KernelSpec::log_weight(double x, double y) const {
    const double z = (x - y) / bandwidth_h;
    return -0.5 * z * z - kLogSqrt2Pi - std::log(bandwidth_h);
}

double KernelSpec::sup_weight() const { return kInvSqrt2Pi / bandwidth_h; }

double KernelSpec::tail_halfwidth(double mass) const {
    return normal_tail_z(mass) * bandwidth_h;
}

SmoothedData::SmoothedData(std::span<const double> sample, KernelSpec kernel)
    : sorted_(sample.begin(), sample.end()), kernel_(kernel) {
    if (sorted_.empty()) throw InvalidInput("smooth_data requires a nonempty sample");
    for (double v : sorted_) require_finite(v, "sample value");
    std::sort(sorted_.begin(), sorted_.end());
}

double SmoothedData::operator()(double x) const {
    const double h = kernel_.bandwidth_h;
    const double lo = x - kZeroWindow * h;
    const double hi = x + kZeroWindow * h;
    auto first = std::lower_bound(sorted_.begin(), sorted_.end(), lo);
    auto last = std::upper_bound(first, sorted_.end(), hi);
    double s = 0.0;
    for (auto it = first; it != last; ++it) {
        const double z = (x - *it) / h;
        s += std::exp(-0.5 * z * z);
    }
    return s * kInvSqrt2Pi / (h * static_cast<double>(sorted_.size()));
}

DensityEvaluator SmoothedData::as_evaluator() const {
    DensityEvaluator ev;
    const SmoothedData copy = *this;
    ev.pdf = [copy](double x) { return copy(x); };
    const double lo = min_value(), hi = max_value();
    const KernelSpec k = kernel_;
    ev.tail_interval = [lo, hi, k](double mass) {
        const double w = k.tail_halfwidth(mass);
        return Interval{lo - w, hi + w};
    };
    if (sorted_.size() <= 2048) ev.panel_hints = sorted_;
    return ev;
}

SmoothedData smooth_data(std::span<const double> sample, const KernelSpec& kernel) {
    return SmoothedData(sample, kernel);
}

double robust_scale(std::span<const double> sample) {
    if (sample.size() < 2) throw InvalidInput("robust scale requires at least 2 points");
    const double mu0 = median(sample);
    const double mad = median_absolute_deviation(sample, mu0);
    if (mad <= 0.0) throw DegenerateSample("zero median absolute deviation");
    return mad / 0.6745;
}

double normal_reference_bandwidth(std::span<const double> sample) {
    const double sigma0 = robust_scale(sample);
    const double n = static_cast<double>(sample.size());
    return 1.06 * sigma0 * std::pow(n, -0.2);
}

}  // namespace sdive
