// Parametric model abstraction with kernel-smoothed counterparts, the normal
// location-scale family used throughout, and contaminated-mixture sampling.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdive/common.hpp"
#include "sdive/divergence.hpp"
#include "sdive/kernel.hpp"
#include "sdive/quadrature.hpp"

namespace sdive {

class ParametricModel {
  public:
    virtual ~ParametricModel() = default;

    virtual int dim() const = 0;
    virtual bool in_param_space(const Vector& theta) const = 0;
    virtual double density(const Vector& theta, double x) const = 0;
    virtual double log_density(const Vector& theta, double x) const;
    // u_theta(x) = grad log f_theta(x); default is central finite differences.
    virtual Vector score(const Vector& theta, double x) const;
    // grad u_theta(x); i_theta = -score_gradient.
    virtual Matrix score_gradient(const Vector& theta, double x) const;
    virtual Interval tail_interval(const Vector& theta, double mass) const = 0;
    virtual std::vector<double> sample(const Vector& theta, int n, std::uint64_t seed) const = 0;
    virtual std::optional<Vector> closed_form_mle(std::span<const double> xs) const {
        return std::nullopt;
    }

    // Optimizer support. Scale-type coordinates map to the log scale so the
    // search stays unconstrained; from_unconstrained throws DegenerateFit
    // when a scale collapses (log sigma < -30).
    virtual Vector to_unconstrained(const Vector& theta) const { return theta; }
    virtual Vector from_unconstrained(const Vector& eta) const { return eta; }
    virtual bool is_degenerate(const Vector& theta) const { return false; }
    virtual Vector init_robust(std::span<const double> xs) const;
    virtual Vector init_mle(std::span<const double> xs) const;

    // Smoothed family f*_theta = W(.,.,h) * f_theta. Defaults convolve
    // numerically and differentiate log f* by finite differences; families
    // with an analytic convolution override.
    virtual bool closed_form_smoothing(const KernelSpec& kernel) const { return false; }
    virtual double smoothed_density(const Vector& theta, const KernelSpec& kernel, double x,
                                    const QuadratureSpec& quad) const;
    virtual double smoothed_log_density(const Vector& theta, const KernelSpec& kernel, double x,
                                        const QuadratureSpec& quad) const;
    virtual Vector smoothed_score(const Vector& theta, const KernelSpec& kernel, double x,
                                  const QuadratureSpec& quad) const;
    virtual Matrix smoothed_score_gradient(const Vector& theta, const KernelSpec& kernel,
                                           double x, const QuadratureSpec& quad) const;
    virtual Interval smoothed_tail_interval(const Vector& theta, const KernelSpec& kernel,
                                            double mass) const;

    void require_in_space(const Vector& theta) const;
};

// Normal location-scale model, theta = (mu, sigma), sigma > 0.
class NormalModel final : public ParametricModel {
  public:
    int dim() const override { return 2; }
    bool in_param_space(const Vector& theta) const override;
    double density(const Vector& theta, double x) const override;
    double log_density(const Vector& theta, double x) const override;
    Vector score(const Vector& theta, double x) const override;
    Matrix score_gradient(const Vector& theta, double x) const override;
    Interval tail_interval(const Vector& theta, double mass) const override;
    std::vector<double> sample(const Vector& theta, int n, std::uint64_t seed) const override;
    std::optional<Vector> closed_form_mle(std::span<const double> xs) const override;

    Vector to_unconstrained(const Vector& theta) const override;
    Vector from_unconstrained(const Vector& eta) const override;
    bool is_degenerate(const Vector& theta) const override;
    Vector init_robust(std::span<const double> xs) const override;
    Vector init_mle(std::span<const double> xs) const override;

    bool closed_form_smoothing(const KernelSpec& kernel) const override { return true; }
    double smoothed_density(const Vector& theta, const KernelSpec& kernel, double x,
                            const QuadratureSpec& quad) const override;
    double smoothed_log_density(const Vector& theta, const KernelSpec& kernel, double x,
                                const QuadratureSpec& quad) const override;
    Vector smoothed_score(const Vector& theta, const KernelSpec& kernel, double x,
                          const QuadratureSpec& quad) const override;
    Matrix smoothed_score_gradient(const Vector& theta, const KernelSpec& kernel, double x,
                                   const QuadratureSpec& quad) const override;
    Interval smoothed_tail_interval(const Vector& theta, const KernelSpec& kernel,
                                    double mass) const override;
};

// Normal with known scale, theta = (mu); the scalar-parameter model used by
// the second-order influence analysis.
class NormalMeanModel final : public ParametricModel {
  public:
    explicit NormalMeanModel(double sigma);

    double sigma() const { return sigma_; }
    int dim() const override { return 1; }
    bool in_param_space(const Vector& theta) const override;
    double density(const Vector& theta, double x) const override;
    double log_density(const Vector& theta, double x) const override;
    Vector score(const Vector& theta, double x) const override;
    Matrix score_gradient(const Vector& theta, double x) const override;
    Interval tail_interval(const Vector& theta, double mass) const override;
    std::vector<double> sample(const Vector& theta, int n, std::uint64_t seed) const override;
    Vector init_robust(std::span<const double> xs) const override;
    Vector init_mle(std::span<const double> xs) const override;

    bool closed_form_smoothing(const KernelSpec& kernel) const override { return true; }
    double smoothed_density(const Vector& theta, const KernelSpec& kernel, double x,
                            const QuadratureSpec& quad) const override;
    double smoothed_log_density(const Vector& theta, const KernelSpec& kernel, double x,
                                const QuadratureSpec& quad) const override;
    Vector smoothed_score(const Vector& theta, const KernelSpec& kernel, double x,
                          const QuadratureSpec& quad) const override;
    Matrix smoothed_score_gradient(const Vector& theta, const KernelSpec& kernel, double x,
                                   const QuadratureSpec& quad) const override;
    Interval smoothed_tail_interval(const Vector& theta, const KernelSpec& kernel,
                                    double mass) const override;

  private:
    double sigma_;
};

double normal_density(double mu, double sigma, double x);
Vector normal_score(double mu, double sigma, double x);

// Sampling distribution spec: normal(mu,sigma), t(df), chisq(df).
struct DistributionSpec {
    enum class Kind { normal, student_t, chi_squared };
    Kind kind = Kind::normal;
    double p1 = 0.0;  // mu or df
    double p2 = 1.0;  // sigma (normal only)

    static DistributionSpec normal(double mu, double sigma);
    static DistributionSpec parse(const std::string& text);
    std::string to_string() const;
};

// Each observation comes from the contaminant with probability epsilon,
// otherwise from the target; deterministic given the seed. epsilon = 0
// short-circuits to pure target draws.
std::vector<double> sample_contaminated(const DistributionSpec& target,
                                        const std::optional<DistributionSpec>& contaminant,
                                        double epsilon, int n, std::uint64_t seed);

// Deterministic per-replication seed stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace sdive
