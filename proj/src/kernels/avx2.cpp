// AVX2 variants. This unit is compiled with -mavx2 -mfma; only gemm_nn uses
// FMA explicitly, the elementwise kernels mirror the scalar operation order.
// Remainders are delegated to the scalar kernels so the tails match exactly.

#include "kernels_internal.hpp"

#include <immintrin.h>

namespace arturo::kernels::avx2 {
namespace {

constexpr std::size_t kLanes = 4;

std::size_t filter_update(std::size_t n, FilterArrays s, const double* mu,
                          const double* g, double q, double r) {
  const __m256d vq = _mm256_set1_pd(q);
  const __m256d vr = _mm256_set1_pd(r);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t bad = 0;
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d h = _mm256_loadu_pd(mu + j);
    const __m256d gj = _mm256_loadu_pd(g + j);
    __m256d a = _mm256_loadu_pd(s.a + j);
    __m256d b = _mm256_loadu_pd(s.b + j);
    const __m256d pm11 = _mm256_add_pd(_mm256_loadu_pd(s.p11 + j), vq);
    const __m256d pm12 = _mm256_loadu_pd(s.p12 + j);
    const __m256d pm22 = _mm256_add_pd(_mm256_loadu_pd(s.p22 + j), vq);
    const __m256d ph0 = _mm256_add_pd(_mm256_mul_pd(pm11, h), pm12);
    const __m256d ph1 = _mm256_add_pd(_mm256_mul_pd(pm12, h), pm22);
    __m256d v = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(h, ph0), ph1), vr);
    // v < r ? r : v, same NaN behaviour as the scalar ternary
    v = _mm256_blendv_pd(v, vr, _mm256_cmp_pd(v, vr, _CMP_LT_OQ));
    const __m256d k0 = _mm256_div_pd(ph0, v);
    const __m256d k1 = _mm256_div_pd(ph1, v);
    const __m256d innov =
        _mm256_sub_pd(gj, _mm256_add_pd(_mm256_mul_pd(a, h), b));
    a = _mm256_add_pd(a, _mm256_mul_pd(k0, innov));
    b = _mm256_add_pd(b, _mm256_mul_pd(k1, innov));
    const __m256d vk0 = _mm256_mul_pd(v, k0);
    const __m256d vk1 = _mm256_mul_pd(v, k1);
    const __m256d p11 = _mm256_sub_pd(pm11, _mm256_mul_pd(vk0, k0));
    const __m256d p12 = _mm256_sub_pd(pm12, _mm256_mul_pd(vk0, k1));
    const __m256d p22 = _mm256_sub_pd(pm22, _mm256_mul_pd(vk1, k1));
    _mm256_storeu_pd(s.a + j, a);
    _mm256_storeu_pd(s.b + j, b);
    _mm256_storeu_pd(s.p11 + j, p11);
    _mm256_storeu_pd(s.p12 + j, p12);
    _mm256_storeu_pd(s.p22 + j, p22);

    const __m256d det =
        _mm256_sub_pd(_mm256_mul_pd(p11, p22), _mm256_mul_pd(p12, p12));
    const __m256d ok = _mm256_and_pd(
        _mm256_and_pd(_mm256_cmp_pd(p11, zero, _CMP_GT_OQ),
                      _mm256_cmp_pd(p22, zero, _CMP_GT_OQ)),
        _mm256_cmp_pd(det, zero, _CMP_GT_OQ));
    bad += kLanes - static_cast<std::size_t>(
                        __builtin_popcount(_mm256_movemask_pd(ok)));
  }
  if (j < n) {
    FilterArrays tail{s.a + j, s.b + j, s.p11 + j, s.p12 + j, s.p22 + j};
    bad += scalar::filter_update(n - j, tail, mu + j, g + j, q, r);
  }
  return bad;
}

void primal_mean(std::size_t n, const double* a, const double* b,
                 const double* mu_prev, const double* sigma2_prev, double eta,
                 double rho_lambda, double* out) {
  const __m256d veta = _mm256_set1_pd(eta);
  const __m256d vrl = _mm256_set1_pd(rho_lambda);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d prec = _mm256_div_pd(veta, _mm256_loadu_pd(sigma2_prev + j));
    const __m256d num = _mm256_sub_pd(
        _mm256_mul_pd(prec, _mm256_loadu_pd(mu_prev + j)),
        _mm256_loadu_pd(b + j));
    const __m256d den =
        _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(a + j), prec), vrl);
    _mm256_storeu_pd(out + j, _mm256_div_pd(num, den));
  }
  if (j < n) {
    scalar::primal_mean(n - j, a + j, b + j, mu_prev + j, sigma2_prev + j, eta,
                        rho_lambda, out + j);
  }
}

void primal_variance(std::size_t n, const double* a, const double* sigma2_prev,
                     double rho, double nu, double rho_lambda, double* out) {
  const __m256d vnum = _mm256_set1_pd(rho + nu);
  const __m256d vnu = _mm256_set1_pd(nu);
  const __m256d vrl = _mm256_set1_pd(rho_lambda);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d den = _mm256_add_pd(
        _mm256_add_pd(_mm256_loadu_pd(a + j), vrl),
        _mm256_div_pd(vnu, _mm256_loadu_pd(sigma2_prev + j)));
    _mm256_storeu_pd(out + j, _mm256_div_pd(vnum, den));
  }
  if (j < n) {
    scalar::primal_variance(n - j, a + j, sigma2_prev + j, rho, nu, rho_lambda,
                            out + j);
  }
}

double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double kl_mean_at_eta(std::size_t n, const double* a, const double* b,
                      const double* mu_prev, const double* sigma2_prev,
                      double eta, double rho_lambda) {
  const __m256d veta = _mm256_set1_pd(eta);
  const __m256d vrl = _mm256_set1_pd(rho_lambda);
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d s2 = _mm256_loadu_pd(sigma2_prev + j);
    const __m256d mp = _mm256_loadu_pd(mu_prev + j);
    const __m256d prec = _mm256_div_pd(veta, s2);
    const __m256d num =
        _mm256_sub_pd(_mm256_mul_pd(prec, mp), _mm256_loadu_pd(b + j));
    const __m256d den =
        _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(a + j), prec), vrl);
    const __m256d d = _mm256_sub_pd(_mm256_div_pd(num, den), mp);
    acc = _mm256_add_pd(acc, _mm256_div_pd(_mm256_mul_pd(d, d), s2));
  }
  double total = horizontal_sum(acc);
  if (j < n) {
    total += 2.0 * scalar::kl_mean_at_eta(n - j, a + j, b + j, mu_prev + j,
                                          sigma2_prev + j, eta, rho_lambda);
  }
  return 0.5 * total;
}

double kl_mean_term(std::size_t n, const double* mu_new, const double* mu_prev,
                    const double* sigma2_prev) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(mu_new + j),
                                    _mm256_loadu_pd(mu_prev + j));
    acc = _mm256_add_pd(
        acc, _mm256_div_pd(_mm256_mul_pd(d, d), _mm256_loadu_pd(sigma2_prev + j)));
  }
  double total = horizontal_sum(acc);
  if (j < n) {
    total += 2.0 * scalar::kl_mean_term(n - j, mu_new + j, mu_prev + j,
                                        sigma2_prev + j);
  }
  return 0.5 * total;
}

void adam_update(std::size_t n, double* theta, const double* grad, double* m,
                 double* v, double beta1, double beta2, double lr, double bc1,
                 double bc2, double eps, double coupled_wd, double decay_mul) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vc1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vc2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vbc1 = _mm256_set1_pd(bc1);
  const __m256d vbc2 = _mm256_set1_pd(bc2);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vwd = _mm256_set1_pd(coupled_wd);
  const __m256d vdecay = _mm256_set1_pd(decay_mul);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d th = _mm256_loadu_pd(theta + j);
    const __m256d gj =
        _mm256_add_pd(_mm256_loadu_pd(grad + j), _mm256_mul_pd(vwd, th));
    const __m256d mj = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + j)),
                                     _mm256_mul_pd(vc1, gj));
    const __m256d vj = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + j)),
                                     _mm256_mul_pd(vc2, _mm256_mul_pd(gj, gj)));
    _mm256_storeu_pd(m + j, mj);
    _mm256_storeu_pd(v + j, vj);
    const __m256d m_hat = _mm256_div_pd(mj, vbc1);
    const __m256d v_hat = _mm256_div_pd(vj, vbc2);
    const __m256d step = _mm256_div_pd(
        _mm256_mul_pd(vlr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), veps));
    _mm256_storeu_pd(theta + j,
                     _mm256_sub_pd(_mm256_mul_pd(th, vdecay), step));
  }
  if (j < n) {
    scalar::adam_update(n - j, theta + j, grad + j, m + j, v + j, beta1, beta2,
                        lr, bc1, bc2, eps, coupled_wd, decay_mul);
  }
}

void sgd_momentum_update(std::size_t n, double* theta, const double* grad,
                         double* buf, double lr, double momentum, double wd) {
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vmom = _mm256_set1_pd(momentum);
  const __m256d vwd = _mm256_set1_pd(wd);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d th = _mm256_loadu_pd(theta + j);
    const __m256d gj =
        _mm256_add_pd(_mm256_loadu_pd(grad + j), _mm256_mul_pd(vwd, th));
    const __m256d bj =
        _mm256_add_pd(_mm256_mul_pd(vmom, _mm256_loadu_pd(buf + j)), gj);
    _mm256_storeu_pd(buf + j, bj);
    _mm256_storeu_pd(theta + j, _mm256_sub_pd(th, _mm256_mul_pd(vlr, bj)));
  }
  if (j < n) {
    scalar::sgd_momentum_update(n - j, theta + j, grad + j, buf + j, lr,
                                momentum, wd);
  }
}

// 4x8 register tile: eight accumulators, one broadcast of A per row and two
// loads of B per k.
inline void gemm_tile_4x8(std::size_t k, const double* A, std::size_t lda,
                          const double* B, std::size_t ldb, double* C,
                          std::size_t ldc, bool accumulate) {
  __m256d c00, c01, c10, c11, c20, c21, c30, c31;
  if (accumulate) {
    c00 = _mm256_loadu_pd(C);
    c01 = _mm256_loadu_pd(C + 4);
    c10 = _mm256_loadu_pd(C + ldc);
    c11 = _mm256_loadu_pd(C + ldc + 4);
    c20 = _mm256_loadu_pd(C + 2 * ldc);
    c21 = _mm256_loadu_pd(C + 2 * ldc + 4);
    c30 = _mm256_loadu_pd(C + 3 * ldc);
    c31 = _mm256_loadu_pd(C + 3 * ldc + 4);
  } else {
    c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
  }
  const double* a0 = A;
  const double* a1 = A + lda;
  const double* a2 = A + 2 * lda;
  const double* a3 = A + 3 * lda;
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(B + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(B + p * ldb + 4);
    __m256d av = _mm256_broadcast_sd(a0 + p);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(a1 + p);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(a2 + p);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(a3 + p);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(C, c00);
  _mm256_storeu_pd(C + 4, c01);
  _mm256_storeu_pd(C + ldc, c10);
  _mm256_storeu_pd(C + ldc + 4, c11);
  _mm256_storeu_pd(C + 2 * ldc, c20);
  _mm256_storeu_pd(C + 2 * ldc + 4, c21);
  _mm256_storeu_pd(C + 3 * ldc, c30);
  _mm256_storeu_pd(C + 3 * ldc + 4, c31);
}

inline void gemm_row_x4(std::size_t k, const double* a, const double* B,
                        std::size_t ldb, double* c, bool accumulate) {
  __m256d acc = accumulate ? _mm256_loadu_pd(c) : _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    acc = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p),
                          _mm256_loadu_pd(B + p * ldb), acc);
  }
  _mm256_storeu_pd(c, acc);
}

// Blocking over k keeps a 256 x 8 panel of B in L1 across the row tiles.
constexpr std::size_t kBlockK = 256;

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* A,
             std::size_t lda, const double* B, std::size_t ldb, double* C,
             std::size_t ldc, bool accumulate) {
  const std::size_t n8 = n - n % 8;
  const std::size_t n4 = n - n % 4;
  const std::size_t m4 = m - m % 4;
  for (std::size_t p0 = 0; p0 < k || (k == 0 && p0 == 0); p0 += kBlockK) {
    const std::size_t kb = k - p0 < kBlockK ? k - p0 : kBlockK;
    const bool acc = accumulate || p0 > 0;
    const double* Ab = A + p0;
    const double* Bb = B + p0 * ldb;
    for (std::size_t j = 0; j < n8; j += 8) {
      std::size_t i = 0;
      for (; i < m4; i += 4) {
        gemm_tile_4x8(kb, Ab + i * lda, lda, Bb + j, ldb, C + i * ldc + j, ldc,
                      acc);
      }
      for (; i < m; ++i) {
        gemm_row_x4(kb, Ab + i * lda, Bb + j, ldb, C + i * ldc + j, acc);
        gemm_row_x4(kb, Ab + i * lda, Bb + j + 4, ldb, C + i * ldc + j + 4,
                    acc);
      }
    }
    if (n4 > n8) {
      for (std::size_t i = 0; i < m; ++i) {
        gemm_row_x4(kb, Ab + i * lda, Bb + n8, ldb, C + i * ldc + n8, acc);
      }
    }
    if (n > n4) {
      scalar::gemm_nn(m, n - n4, kb, Ab, lda, Bb + n4, ldb, C + n4, ldc, acc);
    }
    if (k == 0) break;
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{
      Isa::avx2,      &filter_update,       &primal_mean,
      &primal_variance, &kl_mean_at_eta,    &kl_mean_term,
      &adam_update,   &sgd_momentum_update, &gemm_nn,
  };
  return t;
}

}  // namespace arturo::kernels::avx2
