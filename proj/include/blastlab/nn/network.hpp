#pragma once

// Policy/value network: three 2x2 "same" convolutions with ReLU shared by a
// dense policy head (one logit per board cell) and a dense value head.
//
// Activations use NHWC layout. Convolution kernels are stored as
// [(dy * 2 + dx) * inChannels + c][outChannels]; output cell (y, x) reads
// input cells (y + dy, x + dx) with zeros past the bottom/right edge.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "blastlab/nn/kernels.hpp"

namespace blastlab::nn {

struct NetShape {
  int height = 0;
  int width = 0;
  int inChannels = 0;
  int conv1 = 32;
  int conv2 = 64;
  int conv3 = 64;

  int cells() const { return height * width; }
  bool operator==(const NetShape&) const = default;
};

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool operator==(const TensorInfo&) const = default;
};

// Parameter names in storage order.
enum ParamIndex { kW1, kB1, kW2, kB2, kW3, kB3, kWPolicy, kBPolicy, kWValue, kBValue, kParamCount };

std::vector<TensorInfo> param_table(const NetShape& shape);

template <class T>
struct NetworkParams {
  NetShape shape;
  std::vector<TensorInfo> table;
  std::vector<T> data;  // all tensors back to back
  std::string initScheme = "orthogonal";

  NetworkParams() = default;
  explicit NetworkParams(const NetShape& s);

  std::size_t count() const { return data.size(); }
  T* ptr(ParamIndex i) { return data.data() + table[i].offset; }
  const T* ptr(ParamIndex i) const { return data.data() + table[i].offset; }
  std::span<T> view(ParamIndex i) { return {ptr(i), table[i].size}; }

  template <class U>
  NetworkParams<U> cast() const {
    NetworkParams<U> out(shape);
    out.initScheme = initScheme;
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool operator==(const NetworkParams&) const = default;
};

// Orthogonal init scaled per layer (sqrt(2) trunk, 0.01 policy, 1 value),
// zero biases. Deterministic in `seed`.
template <class T>
NetworkParams<T> init_params(const NetShape& shape, uint64_t seed);

struct ConvGeom {
  int batch = 1;
  int height = 0;
  int width = 0;
  int inChannels = 0;
  int outChannels = 0;

  int rows() const { return batch * height * width; }
  int patch() const { return 4 * inChannels; }
};

template <class T>
void im2col(const ConvGeom& g, const T* input, T* col);
template <class T>
void col2im_add(const ConvGeom& g, const T* col, T* dinput);

// output = conv(input) + bias. `col` must hold rows() * patch() values.
template <class T>
void conv2d_forward(const ConvGeom& g, const T* input, const T* kernel, const T* bias, T* output, T* col);

// Accumulates into dkernel/dbias and writes dinput (when non-null). `col`
// is the im2col buffer of the forward pass.
template <class T>
void conv2d_backward(const ConvGeom& g, const T* col, const T* kernel, const T* doutput, T* dinput, T* dkernel,
                     T* dbias, T* dcol);

// Activation buffers for one batch.
template <class T>
struct Workspace {
  int batch = 0;
  std::vector<T> col1, a1, col2, a2, col3, a3, logits, values;
  std::vector<T> da3, da2, da1, dcol;
  void reserve(const NetShape& s, int batch);
};

template <class T>
void forward(const NetworkParams<T>& params, std::span<const T> input, int batch, Workspace<T>& ws);

// Gradients of a scalar loss given dL/dlogits [batch x cells] and
// dL/dvalue [batch]. Accumulates into `grads` (same layout as params).
template <class T>
void backward(const NetworkParams<T>& params, std::span<const T> dlogits, std::span<const T> dvalues,
              Workspace<T>& ws, std::span<T> grads);

// Masked log-softmax over one row of logits; masked entries get -inf.
// Throws ContractError when nothing is unmasked.
template <class T>
void masked_log_softmax(std::span<const T> logits, const std::vector<bool>& mask, std::span<T> out);

template <class T>
struct AdamState {
  std::vector<T> m, v;
  long step = 0;
  bool operator==(const AdamState&) const = default;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, const AdamConfig& cfg);

// Throws if any value is NaN or infinite.
template <class T>
void check_finite(std::span<const T> values, const char* what);

}  // namespace blastlab::nn
