// Kernel machinery: the smoothing kernel W(x, y, h), the kernel density
// estimate built from a sample, and the robust normal-reference bandwidth.
#pragma once

#include <span>
#include <vector>

#include "sdive/common.hpp"
#include "sdive/divergence.hpp"
#include "sdive/quadrature.hpp"

namespace sdive {

enum class KernelFamily { gaussian };

struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double bandwidth_h = 1.0;

    static KernelSpec gaussian(double h) {
        if (!(h > 0.0)) throw InvalidInput("bandwidth must be positive");
        require_finite(h, "bandwidth");
        return KernelSpec{KernelFamily::gaussian, h};
    }

    // W(x, y, h) = w((x - y)/h)/h; gaussian w.
    double weight(double x, double y) const;
    double log_weight(double x, double y) const;
    // sup over x,y of W; finite for every supported family.
    double sup_weight() const;
    // half-width beyond which the kernel carries less than `mass`.
    double tail_halfwidth(double mass) const;
};

// Kernel density estimate: eval(x) = mean_i W(x, X_i, h). Evaluation is the
// exact sum over the sample; points with an exactly-zero kernel weight are
// skipped via a window on the sorted sample.
class SmoothedData {
  public:
    SmoothedData(std::span<const double> sample, KernelSpec kernel);

    double operator()(double x) const;
    const std::vector<double>& sample() const { return sorted_; }
    const KernelSpec& kernel() const { return kernel_; }
    int size() const { return static_cast<int>(sorted_.size()); }
    double min_value() const { return sorted_.front(); }
    double max_value() const { return sorted_.back(); }

    DensityEvaluator as_evaluator() const;

  private:
    std::vector<double> sorted_;
    KernelSpec kernel_;
};

SmoothedData smooth_data(std::span<const double> sample, const KernelSpec& kernel);

// h = 1.06 sigma0 n^(-1/5) with sigma0 = median_i |X_i - median| / 0.6745.
double normal_reference_bandwidth(std::span<const double> sample);

// The robust scale sigma0 by itself (used for the relative bandwidth rule).
double robust_scale(std::span<const double> sample);

}  // namespace sdive
