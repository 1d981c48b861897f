#pragma once

// Dense arithmetic kernels behind the network. Every kernel has a portable
// scalar reference (templated, also used for double-precision gradient
// checks) and, for float, optional SIMD variants picked at runtime.
//
// All matrices are row-major and densely packed.
//   gemm_nn: C[M,N] += A[M,K] * B[K,N]
//   gemm_tn: C[K,N] += A[M,K]^T * B[M,N]
//   gemm_nt: C[M,K] += A[M,N] * B[K,N]^T

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace blastlab::nn {

struct AdamCoeffs {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double correction1 = 1.0;  // 1 - beta1^t
  double correction2 = 1.0;  // 1 - beta2^t
};

namespace ref {

template <class T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C) {
  for (int i = 0; i < M; ++i) {
    T* c = C + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const T a = A[static_cast<std::size_t>(i) * K + k];
      const T* b = B + static_cast<std::size_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

template <class T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C) {
  for (int i = 0; i < M; ++i) {
    const T* b = B + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const T a = A[static_cast<std::size_t>(i) * K + k];
      T* c = C + static_cast<std::size_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

template <class T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C) {
  for (int i = 0; i < M; ++i) {
    const T* a = A + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const T* b = B + static_cast<std::size_t>(k) * N;
      T s = 0;
      for (int j = 0; j < N; ++j) s += a[j] * b[j];
      C[static_cast<std::size_t>(i) * K + k] += s;
    }
  }
}

// C[i, :] += bias
template <class T>
void add_bias(int M, int N, const T* bias, T* C) {
  for (int i = 0; i < M; ++i) {
    T* c = C + static_cast<std::size_t>(i) * N;
    for (int j = 0; j < N; ++j) c[j] += bias[j];
  }
}

// out[j] += sum_i A[i, j]
template <class T>
void column_sums(int M, int N, const T* A, T* out) {
  for (int i = 0; i < M; ++i) {
    const T* a = A + static_cast<std::size_t>(i) * N;
    for (int j = 0; j < N; ++j) out[j] += a[j];
  }
}

template <class T>
void relu(std::size_t n, T* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
}

// Zeroes upstream gradients where the activation was clamped.
template <class T>
void relu_backward(std::size_t n, const T* y, T* dy) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] > T(0))) dy[i] = T(0);
  }
}

template <class T>
void adam(std::size_t n, T* param, const T* grad, T* m, T* v, const AdamCoeffs& c) {
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T lr = static_cast<T>(c.lr), eps = static_cast<T>(c.eps);
  const T ic1 = static_cast<T>(1.0 / c.correction1), ic2 = static_cast<T>(1.0 / c.correction2);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * grad[i];
    v[i] = b2 * v[i] + (T(1) - b2) * grad[i] * grad[i];
    param[i] -= lr * (m[i] * ic1) / (std::sqrt(v[i] * ic2) + eps);
  }
}

}  // namespace ref

// Float kernel table for one instruction set.
struct KernelSet {
  std::string_view name;
  void (*gemm_nn)(int, int, int, const float*, const float*, float*);
  void (*gemm_tn)(int, int, int, const float*, const float*, float*);
  void (*gemm_nt)(int, int, int, const float*, const float*, float*);
  void (*add_bias)(int, int, const float*, float*);
  void (*column_sums)(int, int, const float*, float*);
  void (*relu)(std::size_t, float*);
  void (*relu_backward)(std::size_t, const float*, float*);
  void (*adam)(std::size_t, float*, const float*, float*, float*, const AdamCoeffs&);
};

const KernelSet& scalar_kernels();
// nullptr when not compiled in or not supported by this CPU.
const KernelSet* avx2_kernels();

// Kernel set used by float networks. Defaults to the best supported set;
// BLASTLAB_SIMD=scalar in the environment forces the reference kernels.
const KernelSet& active_kernels();
// Selects a set by name ("scalar", "avx2"); returns false if unavailable.
bool select_kernels(std::string_view name);
std::vector<std::string> available_kernels();

// Precision-generic front end: float dispatches, double uses references.
template <class T>
struct Ops;

template <>
struct Ops<double> {
  static void gemm_nn(int M, int N, int K, const double* A, const double* B, double* C) { ref::gemm_nn(M, N, K, A, B, C); }
  static void gemm_tn(int M, int N, int K, const double* A, const double* B, double* C) { ref::gemm_tn(M, N, K, A, B, C); }
  static void gemm_nt(int M, int N, int K, const double* A, const double* B, double* C) { ref::gemm_nt(M, N, K, A, B, C); }
  static void add_bias(int M, int N, const double* b, double* C) { ref::add_bias(M, N, b, C); }
  static void column_sums(int M, int N, const double* A, double* out) { ref::column_sums(M, N, A, out); }
  static void relu(std::size_t n, double* x) { ref::relu(n, x); }
  static void relu_backward(std::size_t n, const double* y, double* dy) { ref::relu_backward(n, y, dy); }
  static void adam(std::size_t n, double* p, const double* g, double* m, double* v, const AdamCoeffs& c) {
    ref::adam(n, p, g, m, v, c);
  }
};

template <>
struct Ops<float> {
  static void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C) { active_kernels().gemm_nn(M, N, K, A, B, C); }
  static void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C) { active_kernels().gemm_tn(M, N, K, A, B, C); }
  static void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C) { active_kernels().gemm_nt(M, N, K, A, B, C); }
  static void add_bias(int M, int N, const float* b, float* C) { active_kernels().add_bias(M, N, b, C); }
  static void column_sums(int M, int N, const float* A, float* out) { active_kernels().column_sums(M, N, A, out); }
  static void relu(std::size_t n, float* x) { active_kernels().relu(n, x); }
  static void relu_backward(std::size_t n, const float* y, float* dy) { active_kernels().relu_backward(n, y, dy); }
  static void adam(std::size_t n, float* p, const float* g, float* m, float* v, const AdamCoeffs& c) {
    active_kernels().adam(n, p, g, m, v, c);
  }
};

}  // namespace blastlab::nn
