// Model-side smoothing: the convolved density f*_theta as a value type and
// the smoothed score/Hessian entry points.
#pragma once

#include "sdive/model.hpp"

namespace sdive {

// f*_theta(x) = \int W(x, y, h) f_theta(y) dy. Carries a closed_form tag when
// the model family provides the convolution analytically (normal + gaussian
// kernel yields another normal with variance sigma^2 + h^2).
class SmoothedDensity {
  public:
    SmoothedDensity(const ParametricModel& model, Vector theta, KernelSpec kernel,
                    QuadratureSpec quad);

    double operator()(double x) const;
    bool closed_form() const { return closed_form_; }
    const Vector& theta() const { return theta_; }
    const KernelSpec& kernel() const { return kernel_; }

    DensityEvaluator as_evaluator() const;

  private:
    const ParametricModel* model_;
    Vector theta_;
    KernelSpec kernel_;
    QuadratureSpec quad_;
    bool closed_form_;
};

SmoothedDensity smooth_model(const ParametricModel& model, const Vector& theta,
                             const KernelSpec& kernel, const QuadratureSpec& quad);

// grad_theta log f*_theta(x)
Vector smoothed_score(const ParametricModel& model, const Vector& theta,
                      const KernelSpec& kernel, double x, const QuadratureSpec& quad);

// grad^2_theta log f*_theta(x); the negation is the smoothed information.
Matrix smoothed_score_hessian(const ParametricModel& model, const Vector& theta,
                              const KernelSpec& kernel, double x, const QuadratureSpec& quad);

}  // namespace sdive
