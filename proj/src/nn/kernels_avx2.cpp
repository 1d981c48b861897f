// AVX2 + FMA float kernels. This file is compiled with -mavx2 -mfma; its
// entry points are only reached after a runtime CPU check.

#include "blastlab/nn/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cstring>
#include <vector>

namespace blastlab::nn {

namespace {

// Lane mask for the first `n` (0..8) floats.
inline __m256i tail_mask(int n) {
  alignas(32) static const int table[16] = {-1, -1, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 8 - n));
}

template <bool Full>
inline __m256 load(const float* p, __m256i m) {
  if constexpr (Full) return _mm256_loadu_ps(p);
  else return _mm256_maskload_ps(p, m);
}

template <bool Full>
inline void store(float* p, __m256 v, __m256i m) {
  if constexpr (Full) _mm256_storeu_ps(p, v);
  else _mm256_maskstore_ps(p, m, v);
}

// C[i0..i0+R, j..j+16] += A[i0.., :] * B[:, j..j+16] (masked columns).
template <int R, bool Full>
inline void nn_block(int N, int K, const float* A, const float* B, float* C, int i0, int j, __m256i m0,
                     __m256i m1) {
  __m256 acc[R][2];
  for (int r = 0; r < R; ++r) {
    float* c = C + static_cast<std::size_t>(i0 + r) * N + j;
    acc[r][0] = load<Full>(c, m0);
    acc[r][1] = load<Full>(c + 8, m1);
  }
  const float* a = A + static_cast<std::size_t>(i0) * K;
  for (int k = 0; k < K; ++k) {
    const float* b = B + static_cast<std::size_t>(k) * N + j;
    __m256 b0 = load<Full>(b, m0);
    __m256 b1 = load<Full>(b + 8, m1);
    for (int r = 0; r < R; ++r) {
      __m256 av = _mm256_broadcast_ss(a + static_cast<std::size_t>(r) * K + k);
      acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
    }
  }
  for (int r = 0; r < R; ++r) {
    float* c = C + static_cast<std::size_t>(i0 + r) * N + j;
    store<Full>(c, acc[r][0], m0);
    store<Full>(c + 8, acc[r][1], m1);
  }
}

template <bool Full>
void nn_columns(int M, int N, int K, const float* A, const float* B, float* C, int j, __m256i m0, __m256i m1) {
  int i = 0;
  for (; i + 4 <= M; i += 4) nn_block<4, Full>(N, K, A, B, C, i, j, m0, m1);
  for (; i < M; ++i) nn_block<1, Full>(N, K, A, B, C, i, j, m0, m1);
}

void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C) {
  const __m256i ones = _mm256_set1_epi32(-1);
  int j = 0;
  for (; j + 16 <= N; j += 16) nn_columns<true>(M, N, K, A, B, C, j, ones, ones);
  int rest = N - j;
  if (rest > 0) {
    __m256i m0 = tail_mask(rest >= 8 ? 8 : rest);
    __m256i m1 = tail_mask(rest > 8 ? rest - 8 : 0);
    nn_columns<false>(M, N, K, A, B, C, j, m0, m1);
  }
}

// C[k0..k0+R, j..j+16] += sum_i A[i, k0..k0+R] * B[i, j..j+16]
template <int R, bool Full>
inline void tn_block(int M, int N, int K, const float* A, const float* B, float* C, int k0, int j, __m256i m0,
                     __m256i m1) {
  __m256 acc[R][2];
  for (int r = 0; r < R; ++r) {
    float* c = C + static_cast<std::size_t>(k0 + r) * N + j;
    acc[r][0] = load<Full>(c, m0);
    acc[r][1] = load<Full>(c + 8, m1);
  }
  for (int i = 0; i < M; ++i) {
    const float* b = B + static_cast<std::size_t>(i) * N + j;
    __m256 b0 = load<Full>(b, m0);
    __m256 b1 = load<Full>(b + 8, m1);
    const float* a = A + static_cast<std::size_t>(i) * K + k0;
    for (int r = 0; r < R; ++r) {
      __m256 av = _mm256_broadcast_ss(a + r);
      acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
    }
  }
  for (int r = 0; r < R; ++r) {
    float* c = C + static_cast<std::size_t>(k0 + r) * N + j;
    store<Full>(c, acc[r][0], m0);
    store<Full>(c + 8, acc[r][1], m1);
  }
}

template <bool Full>
void tn_columns(int M, int N, int K, const float* A, const float* B, float* C, int j, __m256i m0, __m256i m1) {
  int k = 0;
  for (; k + 4 <= K; k += 4) tn_block<4, Full>(M, N, K, A, B, C, k, j, m0, m1);
  for (; k < K; ++k) tn_block<1, Full>(M, N, K, A, B, C, k, j, m0, m1);
}

void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C) {
  const __m256i ones = _mm256_set1_epi32(-1);
  int j = 0;
  for (; j + 16 <= N; j += 16) tn_columns<true>(M, N, K, A, B, C, j, ones, ones);
  int rest = N - j;
  if (rest > 0) {
    __m256i m0 = tail_mask(rest >= 8 ? 8 : rest);
    __m256i m1 = tail_mask(rest > 8 ? rest - 8 : 0);
    tn_columns<false>(M, N, K, A, B, C, j, m0, m1);
  }
}

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  lo = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, lo);
  lo = _mm_add_ss(lo, sh);
  return _mm_cvtss_f32(lo);
}

void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C) {
  if (N >= 16 && K >= 8) {
    // Transpose B once and reuse the broadcast-FMA kernel.
    thread_local std::vector<float> bt;
    bt.resize(static_cast<std::size_t>(N) * K);
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < N; ++j) bt[static_cast<std::size_t>(j) * K + k] = B[static_cast<std::size_t>(k) * N + j];
    }
    gemm_nn(M, K, N, A, bt.data(), C);
    return;
  }
  const int full = N / 8 * 8;
  const __m256i m = tail_mask(N - full);
  for (int i = 0; i < M; ++i) {
    const float* a = A + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const float* b = B + static_cast<std::size_t>(k) * N;
      __m256 acc = _mm256_setzero_ps();
      int j = 0;
      for (; j < full; j += 8) acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + j), _mm256_loadu_ps(b + j), acc);
      if (j < N) acc = _mm256_fmadd_ps(_mm256_maskload_ps(a + j, m), _mm256_maskload_ps(b + j, m), acc);
      C[static_cast<std::size_t>(i) * K + k] += hsum(acc);
    }
  }
}

void add_bias(int M, int N, const float* bias, float* C) {
  const int full = N / 8 * 8;
  const __m256i m = tail_mask(N - full);
  for (int i = 0; i < M; ++i) {
    float* c = C + static_cast<std::size_t>(i) * N;
    int j = 0;
    for (; j < full; j += 8) _mm256_storeu_ps(c + j, _mm256_add_ps(_mm256_loadu_ps(c + j), _mm256_loadu_ps(bias + j)));
    if (j < N) {
      _mm256_maskstore_ps(c + j, m, _mm256_add_ps(_mm256_maskload_ps(c + j, m), _mm256_maskload_ps(bias + j, m)));
    }
  }
}

void column_sums(int M, int N, const float* A, float* out) {
  const int full = N / 8 * 8;
  const __m256i m = tail_mask(N - full);
  for (int j = 0; j < full; j += 8) {
    __m256 acc = _mm256_loadu_ps(out + j);
    for (int i = 0; i < M; ++i) acc = _mm256_add_ps(acc, _mm256_loadu_ps(A + static_cast<std::size_t>(i) * N + j));
    _mm256_storeu_ps(out + j, acc);
  }
  if (full < N) {
    __m256 acc = _mm256_maskload_ps(out + full, m);
    for (int i = 0; i < M; ++i) {
      acc = _mm256_add_ps(acc, _mm256_maskload_ps(A + static_cast<std::size_t>(i) * N + full, m));
    }
    _mm256_maskstore_ps(out + full, m, acc);
  }
}

void relu(std::size_t n, float* x) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(std::size_t n, const float* y, float* dy) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 keep = _mm256_cmp_ps(_mm256_loadu_ps(y + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(dy + i, _mm256_and_ps(_mm256_loadu_ps(dy + i), keep));
  }
  for (; i < n; ++i) {
    if (!(y[i] > 0.0f)) dy[i] = 0.0f;
  }
}

void adam(std::size_t n, float* param, const float* grad, float* m, float* v, const AdamCoeffs& c) {
  const float b1f = static_cast<float>(c.beta1), b2f = static_cast<float>(c.beta2);
  const float lrf = static_cast<float>(c.lr), epsf = static_cast<float>(c.eps);
  const float ic1f = static_cast<float>(1.0 / c.correction1), ic2f = static_cast<float>(1.0 / c.correction2);
  const __m256 b1 = _mm256_set1_ps(b1f), b2 = _mm256_set1_ps(b2f);
  const __m256 nb1 = _mm256_set1_ps(1.0f - b1f), nb2 = _mm256_set1_ps(1.0f - b2f);
  const __m256 lr = _mm256_set1_ps(lrf), eps = _mm256_set1_ps(epsf);
  const __m256 ic1 = _mm256_set1_ps(ic1f), ic2 = _mm256_set1_ps(ic2f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 g = _mm256_loadu_ps(grad + i);
    __m256 mv = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(nb1, g));
    __m256 vv = _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)), _mm256_mul_ps(_mm256_mul_ps(nb2, g), g));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vv, ic2)), eps);
    __m256 step = _mm256_div_ps(_mm256_mul_ps(lr, _mm256_mul_ps(mv, ic1)), denom);
    _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), step));
  }
  if (i < n) ref::adam(n - i, param + i, grad + i, m + i, v + i, c);
}

}  // namespace

namespace detail {

const KernelSet* avx2_table() {
  static const KernelSet set{"avx2", &gemm_nn, &gemm_tn, &gemm_nt, &add_bias,
                             &column_sums, &relu, &relu_backward, &adam};
  return &set;
}

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

}  // namespace detail

}  // namespace blastlab::nn

#else

namespace blastlab::nn::detail {
const KernelSet* avx2_table() { return nullptr; }
bool cpu_has_avx2() { return false; }
}  // namespace blastlab::nn::detail

#endif
