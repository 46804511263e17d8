#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace kmpe {

// Floor applied to (1 - kappa) before raising it to a negative power in
// the weight function; keeps IRLS / fixed-point matrices finite for p < 2.
inline constexpr double kWeightClamp = 1e-12;

// Kernel bandwidth sigma and power exponent p, the two knobs of every
// KMPE quantity.
struct KernelParams {
  KernelParams(double sigma, double p);

  double sigma;
  double p;
};

// Per-sample residuals e = X - Y. Construction rejects NaN/Inf and empty
// input.
class ErrorVector {
 public:
  explicit ErrorVector(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

// exp(-u^2 / (2 sigma^2)); equals 1 iff u == 0.
double gaussian_kernel(double u, double sigma);

// (1/N) sum_i (1 - kappa_sigma(e_i))^(p/2), in [0, 1).
double empirical_kmpe(const ErrorVector& e, const KernelParams& params);

// Sample-mean correntropy (1/N) sum kappa_sigma(x_i - y_i).
double empirical_correntropy(const std::vector<double>& x,
                             const std::vector<double>& y, double sigma);

// 1 - correntropy; equals empirical_kmpe at p = 2.
double c_loss(const std::vector<double>& x, const std::vector<double>& y,
              double sigma);

// M-estimator weight phi(e) = (1 - kappa)^((p-2)/2) * kappa, with the
// (1 - kappa) factor floored at kWeightClamp.
double kmpe_weight(double e_i, const KernelParams& params);

// Diagonal of the Hessian of the empirical KMPE with respect to e.
std::vector<double> kmpe_hessian_diag(const ErrorVector& e,
                                      const KernelParams& params);

// Smallest power p (>= 2) for which the empirical KMPE is convex at e.
double convexity_min_p(const ErrorVector& e, double sigma);

// One executable property check: lhs/rhs of the claimed relation, the
// realized error, the tolerance it is held to, and the verdict. Shared by
// the test suite and the CLI `props` command.
struct PropertyCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double error = 0.0;
  double tol = 0.0;
  bool pass = false;
};

PropertyCheck check_symmetry(const ErrorVector& e, const KernelParams& params);
PropertyCheck check_bounds(const ErrorVector& e, const KernelParams& params);
PropertyCheck check_small_p_limit(const ErrorVector& e, double sigma);
PropertyCheck check_large_sigma_mpe(const ErrorVector& e, double p);
PropertyCheck check_lp_norm_limit(const ErrorVector& x, double p);
PropertyCheck check_l0_norm_limit(const ErrorVector& x, double p);
PropertyCheck check_hessian_consistency(const ErrorVector& e,
                                        const KernelParams& params);
PropertyCheck check_convexity_threshold(const ErrorVector& e, double sigma);

// Runs every property check over `vectors_per_property` random error
// vectors and reports the worst case per property.
std::vector<PropertyCheck> run_property_suite(int vectors_per_property,
                                              std::uint64_t seed);

}  // namespace kmpe
