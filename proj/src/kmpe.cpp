#include "kmpe/kmpe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kmpe/rng.hpp"

namespace kmpe {

KernelParams::KernelParams(double sigma_, double p_) : sigma(sigma_), p(p_) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("KernelParams: sigma must be positive");
  }
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("KernelParams: p must be positive");
  }
}

ErrorVector::ErrorVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty()) {
    throw std::invalid_argument("ErrorVector: empty");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ErrorVector: non-finite entry");
    }
  }
}

double gaussian_kernel(double u, double sigma) {
  if (!std::isfinite(u)) {
    throw std::invalid_argument("gaussian_kernel: non-finite input");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  }
  return std::exp(-(u * u) / (2.0 * sigma * sigma));
}

double empirical_kmpe(const ErrorVector& e, const KernelParams& params) {
  double acc = 0.0;
  for (double ei : e.values()) {
    const double k = gaussian_kernel(ei, params.sigma);
    acc += std::pow(1.0 - k, params.p / 2.0);
  }
  return acc / static_cast<double>(e.size());
}

double empirical_correntropy(const std::vector<double>& x,
                             const std::vector<double>& y, double sigma) {
  if (x.empty() || x.size() != y.size()) {
    throw std::invalid_argument("empirical_correntropy: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += gaussian_kernel(x[i] - y[i], sigma);
  }
  return acc / static_cast<double>(x.size());
}

double c_loss(const std::vector<double>& x, const std::vector<double>& y,
              double sigma) {
  return 1.0 - empirical_correntropy(x, y, sigma);
}

double kmpe_weight(double e_i, const KernelParams& params) {
  if (!std::isfinite(e_i)) {
    throw std::invalid_argument("kmpe_weight: non-finite input");
  }
  const double k = gaussian_kernel(e_i, params.sigma);
  const double base = std::max(1.0 - k, kWeightClamp);
  return std::pow(base, (params.p - 2.0) / 2.0) * k;
}

std::vector<double> kmpe_hessian_diag(const ErrorVector& e,
                                      const KernelParams& params) {
  const double sigma = params.sigma;
  const double p = params.p;
  const double n = static_cast<double>(e.size());
  const double scale = p / (4.0 * n * sigma * sigma * sigma * sigma);
  std::vector<double> xi(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double ei = e[i];
    const double k = gaussian_kernel(ei, sigma);
    const double one_minus_k = std::max(1.0 - k, kWeightClamp);
    const double brace = (p - 2.0) * ei * ei * k -
                         2.0 * ei * ei * (1.0 - k) +
                         2.0 * sigma * sigma * (1.0 - k);
    xi[i] = scale * std::pow(one_minus_k, (p - 4.0) / 2.0) * k * brace;
  }
  return xi;
}

double convexity_min_p(const ErrorVector& e, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("convexity_min_p: sigma must be positive");
  }
  double p_min = 2.0;
  for (double ei : e.values()) {
    if (std::abs(ei) <= sigma) continue;
    const double k = gaussian_kernel(ei, sigma);
    const double cand =
        2.0 * (ei * ei - sigma * sigma) * (1.0 - k) / (ei * ei * k) + 2.0;
    p_min = std::max(p_min, cand);
  }
  return p_min;
}

namespace {

PropertyCheck make_check(std::string name, double lhs, double rhs, double err,
                         double tol) {
  PropertyCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.error = err;
  c.tol = tol;
  c.pass = err <= tol;
  return c;
}

ErrorVector negate(const ErrorVector& e) {
  std::vector<double> v = e.values();
  for (double& x : v) x = -x;
  return ErrorVector(std::move(v));
}

}  // namespace

PropertyCheck check_symmetry(const ErrorVector& e, const KernelParams& params) {
  const double lhs = empirical_kmpe(e, params);
  const double rhs = empirical_kmpe(negate(e), params);
  return make_check("P1 symmetry", lhs, rhs, std::abs(lhs - rhs), 1e-15);
}

PropertyCheck check_bounds(const ErrorVector& e, const KernelParams& params) {
  const double v = empirical_kmpe(e, params);
  bool all_zero = true;
  for (double ei : e.values()) all_zero = all_zero && ei == 0.0;
  const bool in_range = v >= 0.0 && v < 1.0;
  const bool zero_iff = (v == 0.0) == all_zero;
  PropertyCheck c = make_check("P2 bounds", v, 0.0, 0.0, 0.0);
  c.pass = in_range && zero_iff;
  c.error = c.pass ? 0.0 : 1.0;
  return c;
}

PropertyCheck check_small_p_limit(const ErrorVector& e, double sigma) {
  const double p = 1e-4;
  const double lhs = empirical_kmpe(e, KernelParams(sigma, p));
  double mean_log = 0.0;
  for (double ei : e.values()) {
    mean_log += std::log(1.0 - gaussian_kernel(ei, sigma));
  }
  mean_log /= static_cast<double>(e.size());
  const double rhs = 1.0 + (p / 2.0) * mean_log;
  return make_check("P3 small-p limit", lhs, rhs, std::abs(lhs - rhs), 1e-6);
}

PropertyCheck check_large_sigma_mpe(const ErrorVector& e, double p) {
  double max_abs = 0.0;
  for (double ei : e.values()) max_abs = std::max(max_abs, std::abs(ei));
  const double sigma = 100.0 * max_abs;
  const double lhs = empirical_kmpe(e, KernelParams(sigma, p));
  double mpe = 0.0;
  for (double ei : e.values()) mpe += std::pow(std::abs(ei), p);
  mpe /= static_cast<double>(e.size());
  const double rhs = std::pow(2.0 * sigma * sigma, -p / 2.0) * mpe;
  const double rel = std::abs(lhs - rhs) / std::abs(rhs);
  return make_check("P4 large-sigma MPE limit", lhs, rhs, rel, 1e-3);
}

PropertyCheck check_lp_norm_limit(const ErrorVector& x, double p) {
  double max_abs = 0.0;
  for (double xi : x.values()) max_abs = std::max(max_abs, std::abs(xi));
  const double sigma = 1000.0 * max_abs;
  const double n = static_cast<double>(x.size());
  const double kmpe = empirical_kmpe(x, KernelParams(sigma, p));
  const double lhs = n * std::pow(std::sqrt(2.0) * sigma, p) * kmpe;
  double lp = 0.0;
  for (double xi : x.values()) lp += std::pow(std::abs(xi), p);
  const double rel = std::abs(lhs - lp) / lp;
  return make_check("P7 Lp-norm limit", lhs, lp, rel, 1e-3);
}

PropertyCheck check_l0_norm_limit(const ErrorVector& x, double p) {
  const double sigma = 1e-3;
  const double n = static_cast<double>(x.size());
  const double lhs = n * empirical_kmpe(x, KernelParams(sigma, p));
  double nnz = 0.0;
  for (double xi : x.values()) {
    if (xi != 0.0) nnz += 1.0;
  }
  return make_check("P8 L0-norm limit", lhs, nnz, std::abs(lhs - nnz), 1e-6);
}

PropertyCheck check_hessian_consistency(const ErrorVector& e,
                                        const KernelParams& params) {
  const std::vector<double> analytic = kmpe_hessian_diag(e, params);
  const double h = 1e-4;
  double max_err = 0.0;
  std::vector<double> base = e.values();
  double worst_a = 0.0, worst_f = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> up = base, dn = base;
    up[i] += h;
    dn[i] -= h;
    const double f0 = empirical_kmpe(e, params);
    const double fu = empirical_kmpe(ErrorVector(up), params);
    const double fd = empirical_kmpe(ErrorVector(dn), params);
    const double fd2 = (fu - 2.0 * f0 + fd) / (h * h);
    const double err = std::abs(fd2 - analytic[i]);
    if (err > max_err) {
      max_err = err;
      worst_a = analytic[i];
      worst_f = fd2;
    }
  }
  return make_check("P5/P6 Hessian diagonal", worst_a, worst_f, max_err, 1e-5);
}

PropertyCheck check_convexity_threshold(const ErrorVector& e, double sigma) {
  const double p_star = convexity_min_p(e, sigma);
  const std::vector<double> xi = kmpe_hessian_diag(e, KernelParams(sigma, p_star));
  double min_xi = xi[0];
  for (double v : xi) min_xi = std::min(min_xi, v);
  PropertyCheck c =
      make_check("P5/P6 convexity threshold", p_star, min_xi, 0.0, 0.0);
  c.pass = min_xi >= -1e-12;
  c.error = c.pass ? 0.0 : -min_xi;
  c.tol = 1e-12;
  return c;
}

std::vector<PropertyCheck> run_property_suite(int vectors_per_property,
                                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PropertyCheck> worst;

  auto record = [&worst](const PropertyCheck& c) {
    for (PropertyCheck& w : worst) {
      if (w.name == c.name) {
        if (!c.pass || c.error > w.error) {
          const bool pass = w.pass && c.pass;
          w = c;
          w.pass = pass;
        } else {
          w.pass = w.pass && c.pass;
        }
        return;
      }
    }
    worst.push_back(c);
  };

  for (int t = 0; t < vectors_per_property; ++t) {
    const std::size_t n = 2 + rng.index(20);
    const double sigma = rng.uniform(0.5, 3.0);
    const double p = rng.uniform(0.5, 6.0);

    std::vector<double> e(n);
    for (double& v : e) v = rng.uniform(-3.0, 3.0);
    const ErrorVector ev(e);
    record(check_symmetry(ev, KernelParams(sigma, p)));
    record(check_bounds(ev, KernelParams(sigma, p)));

    // P3 needs entries bounded away from zero so log(1 - kappa) is tame.
    std::vector<double> away(n);
    for (double& v : away) {
      const double mag = rng.uniform(0.5, 3.0);
      v = rng.uniform() < 0.5 ? -mag : mag;
    }
    record(check_small_p_limit(ErrorVector(away), sigma));
    record(check_large_sigma_mpe(ErrorVector(away), p));
    record(check_lp_norm_limit(ErrorVector(away), p));

    // P8 vectors: nonzero entries exceed delta = 0.5 in magnitude.
    std::vector<double> sparse(n);
    for (double& v : sparse) {
      if (rng.uniform() < 0.4) {
        v = 0.0;
      } else {
        const double mag = rng.uniform(0.6, 4.0);
        v = rng.uniform() < 0.5 ? -mag : mag;
      }
    }
    record(check_l0_norm_limit(ErrorVector(sparse), p));

    // Hessian check over moderate residuals and the powers the closed form
    // is exercised at.
    const double p_h = (t % 3 == 0) ? 2.0 : (t % 3 == 1) ? 2.5 : 4.0;
    std::vector<double> eh(n);
    for (double& v : eh) {
      const double mag = rng.uniform(0.1 * sigma, 2.0 * sigma);
      v = rng.uniform() < 0.5 ? -mag : mag;
    }
    record(check_hessian_consistency(ErrorVector(eh), KernelParams(sigma, p_h)));
    record(check_convexity_threshold(ErrorVector(eh), sigma));
  }
  return worst;
}

}  // namespace kmpe
