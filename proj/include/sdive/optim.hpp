// Derivative-free simplex search plus a damped Newton polish on a vector
// estimating equation with finite-difference Jacobians.
#pragma once

#include <functional>

#include "sdive/common.hpp"

namespace sdive {

struct SimplexResult {
    Vector x;
    double fmin = 0.0;
    int iterations = 0;
    bool converged = false;
};

SimplexResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                          const Vector& step, int max_iter, double f_tol, double x_tol);

struct NewtonOptions {
    int max_iter = 50;
    double eq_tol = 1e-6;    // stop when ||eq|| below this
    double step_tol = 1e-8;  // and the last undamped step is below this
    double fd_step = 1e-6;   // relative Jacobian step
};

struct NewtonResult {
    Vector x;
    Vector eq;
    double eq_norm = 0.0;
    double last_step = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Solves eq(x) = 0; steps are halved until the equation norm decreases and
// rejected outright when `feasible` says the trial point is out of bounds.
NewtonResult damped_newton(const std::function<Vector(const Vector&)>& eq, const Vector& x0,
                           const NewtonOptions& opts,
                           const std::function<bool(const Vector&)>& feasible);

}  // namespace sdive
