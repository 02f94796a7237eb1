#include "sdive/smoothing.hpp"

namespace sdive {

SmoothedDensity::SmoothedDensity(const ParametricModel& model, Vector theta, KernelSpec kernel,
                                 QuadratureSpec quad)
    : model_(&model),
      theta_(std::move(theta)),
      kernel_(kernel),
      quad_(quad),
      closed_form_(model.closed_form_smoothing(kernel)) {
    model.require_in_space(theta_);
    quad.validate();
}

double SmoothedDensity::operator()(double x) const {
    return model_->smoothed_density(theta_, kernel_, x, quad_);
}

DensityEvaluator SmoothedDensity::as_evaluator() const {
    DensityEvaluator ev;
    const SmoothedDensity copy = *this;
    ev.pdf = [copy](double x) { return copy(x); };
    const ParametricModel* m = model_;
    const Vector th = theta_;
    const KernelSpec k = kernel_;
    ev.tail_interval = [m, th, k](double mass) { return m->smoothed_tail_interval(th, k, mass); };
    return ev;
}

SmoothedDensity smooth_model(const ParametricModel& model, const Vector& theta,
                             const KernelSpec& kernel, const QuadratureSpec& quad) {
    return SmoothedDensity(model, theta, kernel, quad);
}

Vector smoothed_score(const ParametricModel& model, const Vector& theta,
                      const KernelSpec& kernel, double x, const QuadratureSpec& quad) {
    model.require_in_space(theta);
    return model.smoothed_score(theta, kernel, x, quad);
}

Matrix smoothed_score_hessian(const ParametricModel& model, const Vector& theta,
                              const KernelSpec& kernel, double x, const QuadratureSpec& quad) {
    model.require_in_space(theta);
    return model.smoothed_score_gradient(theta, kernel, x, quad);
}

}  // namespace sdive
