#include <cstdlib>
#include <mutex>

#include "blastlab/nn/kernels.hpp"

namespace blastlab::nn {

namespace detail {
const KernelSet* avx2_table();
bool cpu_has_avx2();
}  // namespace detail

const KernelSet& scalar_kernels() {
  static const KernelSet set{
      "scalar",
      &ref::gemm_nn<float>,
      &ref::gemm_tn<float>,
      &ref::gemm_nt<float>,
      &ref::add_bias<float>,
      &ref::column_sums<float>,
      &ref::relu<float>,
      &ref::relu_backward<float>,
      &ref::adam<float>,
  };
  return set;
}

const KernelSet* avx2_kernels() {
  if (!detail::cpu_has_avx2()) return nullptr;
  return detail::avx2_table();
}

namespace {

const KernelSet* initial_kernels() {
  const char* forced = std::getenv("BLASTLAB_SIMD");
  if (forced != nullptr && std::string_view(forced) == "scalar") return &scalar_kernels();
  if (const KernelSet* k = avx2_kernels()) return k;
  return &scalar_kernels();
}

const KernelSet*& current() {
  static const KernelSet* k = initial_kernels();
  return k;
}

}  // namespace

const KernelSet& active_kernels() { return *current(); }

bool select_kernels(std::string_view name) {
  if (name == "scalar") {
    current() = &scalar_kernels();
    return true;
  }
  if (name == "avx2") {
    if (const KernelSet* k = avx2_kernels()) {
      current() = k;
      return true;
    }
  }
  return false;
}

std::vector<std::string> available_kernels() {
  std::vector<std::string> names{"scalar"};
  if (avx2_kernels() != nullptr) names.emplace_back("avx2");
  return names;
}

}  // namespace blastlab::nn
