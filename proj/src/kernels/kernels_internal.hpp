#pragma once
// Shared between the scalar and the AVX2 translation units. Everything here
// has internal linkage: the AVX2 unit is compiled with -mavx2 and must not
// contribute COMDAT copies that the scalar path could end up calling.

#include "arturo/kernels.hpp"

namespace arturo::kernels {
namespace {

// Single-dimension filter step. Operation order is mirrored lane-wise by the
// AVX2 kernel; keep the two in sync.
inline void filter_update_one(double& a, double& b, double& p11, double& p12,
                              double& p22, double h, double g, double q,
                              double r) {
  const double pm11 = p11 + q;
  const double pm12 = p12;
  const double pm22 = p22 + q;
  const double ph0 = pm11 * h + pm12;
  const double ph1 = pm12 * h + pm22;
  double v = h * ph0 + ph1 + r;
  v = v < r ? r : v;
  const double k0 = ph0 / v;
  const double k1 = ph1 / v;
  const double innov = g - (a * h + b);
  a = a + k0 * innov;
  b = b + k1 * innov;
  const double vk0 = v * k0;
  const double vk1 = v * k1;
  p11 = pm11 - vk0 * k0;
  p12 = pm12 - vk0 * k1;
  p22 = pm22 - vk1 * k1;
}

inline bool covariance_ok(double p11, double p12, double p22) {
  // Negated comparisons so NaN counts as a violation.
  return p11 > 0.0 && p22 > 0.0 && p11 * p22 - p12 * p12 > 0.0;
}

}  // namespace

namespace scalar {
std::size_t filter_update(std::size_t n, FilterArrays s, const double* mu,
                          const double* g, double q, double r);
void primal_mean(std::size_t n, const double* a, const double* b,
                 const double* mu_prev, const double* sigma2_prev, double eta,
                 double rho_lambda, double* out);
void primal_variance(std::size_t n, const double* a, const double* sigma2_prev,
                     double rho, double nu, double rho_lambda, double* out);
double kl_mean_at_eta(std::size_t n, const double* a, const double* b,
                      const double* mu_prev, const double* sigma2_prev,
                      double eta, double rho_lambda);
double kl_mean_term(std::size_t n, const double* mu_new, const double* mu_prev,
                    const double* sigma2_prev);
void adam_update(std::size_t n, double* theta, const double* grad, double* m,
                 double* v, double beta1, double beta2, double lr, double bc1,
                 double bc2, double eps, double coupled_wd, double decay_mul);
void sgd_momentum_update(std::size_t n, double* theta, const double* grad,
                         double* buf, double lr, double momentum, double wd);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* A,
             std::size_t lda, const double* B, std::size_t ldb, double* C,
             std::size_t ldc, bool accumulate);
}  // namespace scalar

#if defined(ARTURO_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

}  // namespace arturo::kernels
