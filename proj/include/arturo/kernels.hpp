#pragma once
// Data-parallel inner loops used by the optimizers and the model zoo.
//
// Every kernel exists as a scalar reference implementation and, on x86-64,
// as an AVX2 variant. The active table is picked once at startup from CPUID
// and can be overridden with ARTURO_ISA=scalar|avx2 or set_active_isa().
//
// Elementwise kernels use the same operation order in both variants and no
// fused multiply-add, so their outputs are bitwise identical across ISAs.
// Reductions (kl_mean_*) and gemm_nn are equal up to rounding only.

#include <cstddef>
#include <optional>
#include <string_view>

namespace arturo::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

/// Per-dimension storage of the 2x2 filter covariance and the mean (a, b).
struct FilterArrays {
  double* a;
  double* b;
  double* p11;
  double* p12;
  double* p22;
};

struct KernelTable {
  Isa isa;

  /// One Kalman step per dimension with H = (mu_j, 1). Returns the number of
  /// dimensions whose updated covariance is not positive definite.
  std::size_t (*filter_update)(std::size_t n, FilterArrays s, const double* mu,
                               const double* g, double q, double r);

  /// out_j = (eta * mu_prev_j / s2_j - b_j) / (a_j + eta / s2_j + rho_lambda)
  void (*primal_mean)(std::size_t n, const double* a, const double* b,
                      const double* mu_prev, const double* sigma2_prev,
                      double eta, double rho_lambda, double* out);

  /// out_j = (rho + nu) / (a_j + rho_lambda + nu / s2_j)
  void (*primal_variance)(std::size_t n, const double* a,
                          const double* sigma2_prev, double rho, double nu,
                          double rho_lambda, double* out);

  /// 0.5 * sum_j (mu_j(eta) - mu_prev_j)^2 / s2_j without materializing mu.
  double (*kl_mean_at_eta)(std::size_t n, const double* a, const double* b,
                           const double* mu_prev, const double* sigma2_prev,
                           double eta, double rho_lambda);

  /// 0.5 * sum_j (mu_new_j - mu_prev_j)^2 / s2_j
  double (*kl_mean_term)(std::size_t n, const double* mu_new,
                         const double* mu_prev, const double* sigma2_prev);

  /// Bias-corrected Adam. g' = g + coupled_wd * theta; moments updated with
  /// g'; theta <- theta * decay_mul - lr * (m / bc1) / (sqrt(v / bc2) + eps).
  void (*adam_update)(std::size_t n, double* theta, const double* grad,
                      double* m, double* v, double beta1, double beta2,
                      double lr, double bc1, double bc2, double eps,
                      double coupled_wd, double decay_mul);

  /// Heavy ball: buf <- momentum * buf + (g + wd * theta); theta -= lr * buf.
  void (*sgd_momentum_update)(std::size_t n, double* theta, const double* grad,
                              double* buf, double lr, double momentum,
                              double wd);

  /// Row-major C(m x n) = A(m x k) * B(k x n), plus C when accumulate.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* A,
                  std::size_t lda, const double* B, std::size_t ldb, double* C,
                  std::size_t ldc, bool accumulate);
};

const KernelTable& scalar_table();
/// nullptr when the binary or the CPU has no AVX2 support.
const KernelTable* avx2_table();

bool isa_available(Isa isa);
const KernelTable& table_for(Isa isa);

/// The process-wide active table.
const KernelTable& active();
Isa active_isa();
/// Throws std::invalid_argument when the ISA is not available.
void set_active_isa(Isa isa);

}  // namespace arturo::kernels
