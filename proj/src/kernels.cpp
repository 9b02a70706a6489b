#include "larpo/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "larpo/errors.hpp"

namespace larpo::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* m, std::size_t rows, std::size_t cols, const double* v,
                   double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_scalar(m + r * cols, v, cols);
}

void weighted_rowsum_scalar(const double* m, std::size_t rows, std::size_t cols, const double* w,
                            double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double wr = w[r];
    if (wr == 0.0) continue;
    const double* row = m + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += wr * row[c];
  }
}

void ger_scalar(double* a, std::size_t rows, std::size_t cols, double alpha, const double* x,
                const double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double ax = alpha * x[r];
    double* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ax * y[c];
  }
}

double max_scalar(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

const Backend kScalar{"scalar",          dot_scalar, axpy_scalar, matvec_scalar,
                      weighted_rowsum_scalar, ger_scalar, max_scalar};

const Backend* detect() {
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) return &avx2_backend();
#endif
  return &kScalar;
}

const Backend* initial_backend() {
  if (const char* env = std::getenv("LARPO_KERNELS")) {
    std::string name(env);
    if (name == "scalar") return &kScalar;
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2" && avx2_supported()) return &avx2_backend();
#endif
    // unknown or unsupported value: fall through to detection
  }
  return detect();
}

std::atomic<const Backend*> g_active{nullptr};

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active() {
  const Backend* b = g_active.load(std::memory_order_acquire);
  if (b == nullptr) {
    b = initial_backend();
    g_active.store(b, std::memory_order_release);
  }
  return *b;
}

void force_backend(std::string_view name) {
  if (name == "scalar") {
    g_active.store(&kScalar, std::memory_order_release);
    return;
  }
  if (name == "auto") {
    g_active.store(detect(), std::memory_order_release);
    return;
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (name == "avx2") {
    if (!avx2_supported()) throw InvalidArgument("kernels: avx2 not supported on this CPU");
    g_active.store(&avx2_backend(), std::memory_order_release);
    return;
  }
#endif
  throw InvalidArgument("kernels: unknown backend '" + std::string(name) + "'");
}

double logsumexp(const double* x, std::size_t n) {
  const double m = max(x, n);
  if (!std::isfinite(m)) return m;  // all -inf, or a nan propagates
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(x[i] - m);
  return m + std::log(acc);
}

double softmax(const double* x, std::size_t n, double* probs) {
  const double lse = logsumexp(x, n);
  for (std::size_t i = 0; i < n; ++i) probs[i] = std::exp(x[i] - lse);
  return lse;
}

double softplus(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace larpo::kernels
