// Shared test helpers.
#pragma once

#include <random>

#include "sdive/model.hpp"

namespace sdive::testing {

// Normal model stripped of every closed form: exercises the generic numeric
// convolution and finite-difference fallbacks of ParametricModel.
class GenericNormalModel final : public ParametricModel {
  public:
    int dim() const override { return 2; }
    bool in_param_space(const Vector& theta) const override {
        return base_.in_param_space(theta);
    }
    double density(const Vector& theta, double x) const override {
        return base_.density(theta, x);
    }
    Interval tail_interval(const Vector& theta, double mass) const override {
        return base_.tail_interval(theta, mass);
    }
    std::vector<double> sample(const Vector& theta, int n, std::uint64_t seed) const override {
        return base_.sample(theta, n, seed);
    }
    Vector to_unconstrained(const Vector& theta) const override {
        return base_.to_unconstrained(theta);
    }
    Vector from_unconstrained(const Vector& eta) const override {
        return base_.from_unconstrained(eta);
    }
    Vector init_robust(std::span<const double> xs) const override {
        return base_.init_robust(xs);
    }

  private:
    NormalModel base_;
};

inline std::vector<double> pseudo_normal_sample(int n, double mu, double sigma,
                                                std::uint64_t seed) {
    return NormalModel().sample({mu, sigma}, n, seed);
}

}  // namespace sdive::testing
