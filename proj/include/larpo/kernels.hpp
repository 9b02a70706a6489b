#pragma once

#include <cstddef>
#include <string_view>

namespace larpo::kernels {

// Dense double-precision primitives behind every score, softmax and gradient
// evaluation. Scalar reference implementations define the semantics; the AVX2
// variants are selected at runtime when the CPU supports them and are
// equivalence-tested against the scalar ones.
//
// Reductions within one call may reassociate between backends, so results
// agree to rounding, not bitwise. Within a single process the backend is
// fixed, which keeps seeded runs reproducible.
struct Backend {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[r] = dot(M[r, :], v) for each of `rows` rows of a row-major matrix
  void (*matvec)(const double* m, std::size_t rows, std::size_t cols, const double* v,
                 double* out);
  // out[c] += sum_r w[r] * M[r, c]  (accumulates into out)
  void (*weighted_rowsum)(const double* m, std::size_t rows, std::size_t cols, const double* w,
                          double* out);
  // A += alpha * x * y^T, A row-major rows x cols, x length rows, y length cols
  void (*ger)(double* a, std::size_t rows, std::size_t cols, double alpha, const double* x,
              const double* y);
  double (*max)(const double* x, std::size_t n);
};

const Backend& scalar_backend();
#if defined(__x86_64__) || defined(_M_X64)
const Backend& avx2_backend();
bool avx2_supported();
#endif

// Active backend. Chosen once from CPU capabilities (overridable via the
// LARPO_KERNELS env var: "scalar", "avx2" or "auto").
const Backend& active();

// Force a specific backend by name; "auto" re-runs detection. Throws
// InvalidArgument for unknown or unsupported names. Intended for tests and
// the CLI's --kernels flag.
void force_backend(std::string_view name);

// Convenience forwarders through the active backend.
inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void matvec(const double* m, std::size_t rows, std::size_t cols, const double* v,
                   double* out) {
  active().matvec(m, rows, cols, v, out);
}
inline void weighted_rowsum(const double* m, std::size_t rows, std::size_t cols, const double* w,
                            double* out) {
  active().weighted_rowsum(m, rows, cols, w, out);
}
inline void ger(double* a, std::size_t rows, std::size_t cols, double alpha, const double* x,
                const double* y) {
  active().ger(a, rows, cols, alpha, x, y);
}
inline double max(const double* x, std::size_t n) { return active().max(x, n); }

// Numerically stable log(sum(exp(x))). exp is scalar libm either way; only
// the max scan goes through the backend.
double logsumexp(const double* x, std::size_t n);

// probs[i] = exp(x[i] - logsumexp(x)); returns the logsumexp value.
double softmax(const double* x, std::size_t n, double* probs);

// log(1 + exp(x)) without overflow.
double softplus(double x);

}  // namespace larpo::kernels
