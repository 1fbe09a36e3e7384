#include "kernels_internal.hpp"

#include <algorithm>
#include <cmath>

namespace arturo::kernels::scalar {

std::size_t filter_update(std::size_t n, FilterArrays s, const double* mu,
                          const double* g, double q, double r) {
  std::size_t bad = 0;
  for (std::size_t j = 0; j < n; ++j) {
    filter_update_one(s.a[j], s.b[j], s.p11[j], s.p12[j], s.p22[j], mu[j],
                      g[j], q, r);
    bad += covariance_ok(s.p11[j], s.p12[j], s.p22[j]) ? 0 : 1;
  }
  return bad;
}

void primal_mean(std::size_t n, const double* a, const double* b,
                 const double* mu_prev, const double* sigma2_prev, double eta,
                 double rho_lambda, double* out) {
  for (std::size_t j = 0; j < n; ++j) {
    const double prec = eta / sigma2_prev[j];
    out[j] = (prec * mu_prev[j] - b[j]) / (a[j] + prec + rho_lambda);
  }
}

void primal_variance(std::size_t n, const double* a, const double* sigma2_prev,
                     double rho, double nu, double rho_lambda, double* out) {
  const double num = rho + nu;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = num / (a[j] + rho_lambda + nu / sigma2_prev[j]);
  }
}

double kl_mean_at_eta(std::size_t n, const double* a, const double* b,
                      const double* mu_prev, const double* sigma2_prev,
                      double eta, double rho_lambda) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double prec = eta / sigma2_prev[j];
    const double mu = (prec * mu_prev[j] - b[j]) / (a[j] + prec + rho_lambda);
    const double d = mu - mu_prev[j];
    acc += d * d / sigma2_prev[j];
  }
  return 0.5 * acc;
}

double kl_mean_term(std::size_t n, const double* mu_new, const double* mu_prev,
                    const double* sigma2_prev) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = mu_new[j] - mu_prev[j];
    acc += d * d / sigma2_prev[j];
  }
  return 0.5 * acc;
}

void adam_update(std::size_t n, double* theta, const double* grad, double* m,
                 double* v, double beta1, double beta2, double lr, double bc1,
                 double bc2, double eps, double coupled_wd, double decay_mul) {
  const double c1 = 1.0 - beta1;
  const double c2 = 1.0 - beta2;
  for (std::size_t j = 0; j < n; ++j) {
    const double gj = grad[j] + coupled_wd * theta[j];
    m[j] = beta1 * m[j] + c1 * gj;
    v[j] = beta2 * v[j] + c2 * (gj * gj);
    const double m_hat = m[j] / bc1;
    const double v_hat = v[j] / bc2;
    theta[j] = theta[j] * decay_mul - lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

void sgd_momentum_update(std::size_t n, double* theta, const double* grad,
                         double* buf, double lr, double momentum, double wd) {
  for (std::size_t j = 0; j < n; ++j) {
    const double gj = grad[j] + wd * theta[j];
    buf[j] = momentum * buf[j] + gj;
    theta[j] = theta[j] - lr * buf[j];
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* A,
             std::size_t lda, const double* B, std::size_t ldb, double* C,
             std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* c = C + i * ldc;
    if (!accumulate) std::fill(c, c + n, 0.0);
    const double* arow = A + i * lda;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      const double* brow = B + p * ldb;
      for (std::size_t j = 0; j < n; ++j) c[j] += aip * brow[j];
    }
  }
}

}  // namespace arturo::kernels::scalar

namespace arturo::kernels {

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::scalar,
      &scalar::filter_update,
      &scalar::primal_mean,
      &scalar::primal_variance,
      &scalar::kl_mean_at_eta,
      &scalar::kl_mean_term,
      &scalar::adam_update,
      &scalar::sgd_momentum_update,
      &scalar::gemm_nn,
  };
  return table;
}

}  // namespace arturo::kernels
