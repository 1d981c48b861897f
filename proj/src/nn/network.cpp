#include "blastlab/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "blastlab/error.hpp"

namespace blastlab::nn {

std::vector<TensorInfo> param_table(const NetShape& s) {
  const int flat = s.cells() * s.conv3;
  std::vector<TensorInfo> t = {
      {"conv1.kernel", {2, 2, s.inChannels, s.conv1}},
      {"conv1.bias", {s.conv1}},
      {"conv2.kernel", {2, 2, s.conv1, s.conv2}},
      {"conv2.bias", {s.conv2}},
      {"conv3.kernel", {2, 2, s.conv2, s.conv3}},
      {"conv3.bias", {s.conv3}},
      {"policy.weight", {flat, s.cells()}},
      {"policy.bias", {s.cells()}},
      {"value.weight", {flat, 1}},
      {"value.bias", {1}},
  };
  std::size_t offset = 0;
  for (auto& info : t) {
    std::size_t n = 1;
    for (int d : info.shape) n *= static_cast<std::size_t>(d);
    info.offset = offset;
    info.size = n;
    offset += n;
  }
  return t;
}

template <class T>
NetworkParams<T>::NetworkParams(const NetShape& s) : shape(s), table(param_table(s)) {
  if (s.height < 1 || s.width < 1 || s.inChannels < 1 || s.conv1 < 1 || s.conv2 < 1 || s.conv3 < 1) {
    throw ShapeError("network dimensions must be positive");
  }
  data.assign(table.back().offset + table.back().size, T(0));
}

namespace {

// rows x cols matrix with orthonormal columns (rows >= cols) or rows.
std::vector<double> orthogonal(int rows, int cols, std::mt19937_64& rng) {
  const bool tall = rows >= cols;
  const int n = tall ? rows : cols;  // vector length
  const int k = tall ? cols : rows;  // vector count
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> q(static_cast<std::size_t>(n) * k);
  for (double& v : q) v = normal(rng);
  // Modified Gram-Schmidt over the k vectors q[j*n .. j*n+n).
  for (int j = 0; j < k; ++j) {
    double* qj = &q[static_cast<std::size_t>(j) * n];
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) {
        const double* qi = &q[static_cast<std::size_t>(i) * n];
        double dot = 0.0;
        for (int r = 0; r < n; ++r) dot += qi[r] * qj[r];
        for (int r = 0; r < n; ++r) qj[r] -= dot * qi[r];
      }
    }
    double norm = 0.0;
    for (int r = 0; r < n; ++r) norm += qj[r] * qj[r];
    norm = std::sqrt(norm);
    for (int r = 0; r < n; ++r) qj[r] /= norm;
  }
  std::vector<double> out(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(r) * cols + c] =
          tall ? q[static_cast<std::size_t>(c) * n + r] : q[static_cast<std::size_t>(r) * n + c];
    }
  }
  return out;
}

}  // namespace

template <class T>
NetworkParams<T> init_params(const NetShape& shape, uint64_t seed) {
  NetworkParams<T> p(shape);
  std::mt19937_64 rng(seed);
  auto fill = [&](ParamIndex idx, int rows, int cols, double gain) {
    auto w = orthogonal(rows, cols, rng);
    T* dst = p.ptr(idx);
    for (std::size_t i = 0; i < w.size(); ++i) dst[i] = static_cast<T>(gain * w[i]);
  };
  const double relu_gain = std::sqrt(2.0);
  fill(kW1, 4 * shape.inChannels, shape.conv1, relu_gain);
  fill(kW2, 4 * shape.conv1, shape.conv2, relu_gain);
  fill(kW3, 4 * shape.conv2, shape.conv3, relu_gain);
  fill(kWPolicy, shape.cells() * shape.conv3, shape.cells(), 0.01);
  fill(kWValue, shape.cells() * shape.conv3, 1, 1.0);
  return p;
}

template <class T>
void im2col(const ConvGeom& g, const T* input, T* col) {
  const int C = g.inChannels;
  const int patch = g.patch();
  for (int b = 0; b < g.batch; ++b) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        T* row = col + static_cast<std::size_t>((b * g.height + y) * g.width + x) * patch;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            T* dst = row + (dy * 2 + dx) * C;
            int yy = y + dy, xx = x + dx;
            if (yy < g.height && xx < g.width) {
              const T* src = input + static_cast<std::size_t>((b * g.height + yy) * g.width + xx) * C;
              std::copy(src, src + C, dst);
            } else {
              std::fill(dst, dst + C, T(0));
            }
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const ConvGeom& g, const T* col, T* dinput) {
  const int C = g.inChannels;
  const int patch = g.patch();
  for (int b = 0; b < g.batch; ++b) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        const T* row = col + static_cast<std::size_t>((b * g.height + y) * g.width + x) * patch;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            int yy = y + dy, xx = x + dx;
            if (yy >= g.height || xx >= g.width) continue;
            const T* src = row + (dy * 2 + dx) * C;
            T* dst = dinput + static_cast<std::size_t>((b * g.height + yy) * g.width + xx) * C;
            for (int c = 0; c < C; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

template <class T>
void conv2d_forward(const ConvGeom& g, const T* input, const T* kernel, const T* bias, T* output, T* col) {
  im2col(g, input, col);
  std::fill(output, output + static_cast<std::size_t>(g.rows()) * g.outChannels, T(0));
  Ops<T>::gemm_nn(g.rows(), g.outChannels, g.patch(), col, kernel, output);
  if (bias != nullptr) Ops<T>::add_bias(g.rows(), g.outChannels, bias, output);
}

template <class T>
void conv2d_backward(const ConvGeom& g, const T* col, const T* kernel, const T* doutput, T* dinput, T* dkernel,
                     T* dbias, T* dcol) {
  Ops<T>::gemm_tn(g.rows(), g.outChannels, g.patch(), col, doutput, dkernel);
  if (dbias != nullptr) Ops<T>::column_sums(g.rows(), g.outChannels, doutput, dbias);
  if (dinput == nullptr) return;
  std::fill(dcol, dcol + static_cast<std::size_t>(g.rows()) * g.patch(), T(0));
  Ops<T>::gemm_nt(g.rows(), g.outChannels, g.patch(), doutput, kernel, dcol);
  std::fill(dinput, dinput + static_cast<std::size_t>(g.rows()) * g.inChannels, T(0));
  col2im_add(g, dcol, dinput);
}

template <class T>
void Workspace<T>::reserve(const NetShape& s, int b) {
  batch = b;
  const std::size_t rows = static_cast<std::size_t>(b) * s.cells();
  col1.resize(rows * 4 * s.inChannels);
  a1.resize(rows * s.conv1);
  col2.resize(rows * 4 * s.conv1);
  a2.resize(rows * s.conv2);
  col3.resize(rows * 4 * s.conv2);
  a3.resize(rows * s.conv3);
  logits.resize(static_cast<std::size_t>(b) * s.cells());
  values.resize(b);
}

template <class T>
void forward(const NetworkParams<T>& p, std::span<const T> input, int batch, Workspace<T>& ws) {
  const NetShape& s = p.shape;
  if (input.size() != static_cast<std::size_t>(batch) * s.cells() * s.inChannels) {
    throw ShapeError("network input has " + std::to_string(input.size()) + " values, expected " +
                     std::to_string(static_cast<std::size_t>(batch) * s.cells() * s.inChannels));
  }
  ws.reserve(s, batch);
  ConvGeom g1{batch, s.height, s.width, s.inChannels, s.conv1};
  ConvGeom g2{batch, s.height, s.width, s.conv1, s.conv2};
  ConvGeom g3{batch, s.height, s.width, s.conv2, s.conv3};
  conv2d_forward(g1, input.data(), p.ptr(kW1), p.ptr(kB1), ws.a1.data(), ws.col1.data());
  Ops<T>::relu(ws.a1.size(), ws.a1.data());
  conv2d_forward(g2, ws.a1.data(), p.ptr(kW2), p.ptr(kB2), ws.a2.data(), ws.col2.data());
  Ops<T>::relu(ws.a2.size(), ws.a2.data());
  conv2d_forward(g3, ws.a2.data(), p.ptr(kW3), p.ptr(kB3), ws.a3.data(), ws.col3.data());
  Ops<T>::relu(ws.a3.size(), ws.a3.data());

  const int flat = s.cells() * s.conv3;
  std::fill(ws.logits.begin(), ws.logits.end(), T(0));
  Ops<T>::gemm_nn(batch, s.cells(), flat, ws.a3.data(), p.ptr(kWPolicy), ws.logits.data());
  Ops<T>::add_bias(batch, s.cells(), p.ptr(kBPolicy), ws.logits.data());
  std::fill(ws.values.begin(), ws.values.end(), T(0));
  Ops<T>::gemm_nn(batch, 1, flat, ws.a3.data(), p.ptr(kWValue), ws.values.data());
  Ops<T>::add_bias(batch, 1, p.ptr(kBValue), ws.values.data());
}

template <class T>
void backward(const NetworkParams<T>& p, std::span<const T> dlogits, std::span<const T> dvalues, Workspace<T>& ws,
              std::span<T> grads) {
  const NetShape& s = p.shape;
  const int batch = ws.batch;
  if (grads.size() != p.data.size()) throw ShapeError("gradient buffer does not match parameters");
  if (dlogits.size() != static_cast<std::size_t>(batch) * s.cells() || dvalues.size() != static_cast<std::size_t>(batch)) {
    throw ShapeError("output gradients do not match the forward batch");
  }
  auto g = [&](ParamIndex i) { return grads.data() + p.table[i].offset; };
  const int flat = s.cells() * s.conv3;
  const std::size_t rows = static_cast<std::size_t>(batch) * s.cells();

  Ops<T>::gemm_tn(batch, s.cells(), flat, ws.a3.data(), dlogits.data(), g(kWPolicy));
  Ops<T>::column_sums(batch, s.cells(), dlogits.data(), g(kBPolicy));
  Ops<T>::gemm_tn(batch, 1, flat, ws.a3.data(), dvalues.data(), g(kWValue));
  Ops<T>::column_sums(batch, 1, dvalues.data(), g(kBValue));

  ws.da3.assign(rows * s.conv3, T(0));
  Ops<T>::gemm_nt(batch, s.cells(), flat, dlogits.data(), p.ptr(kWPolicy), ws.da3.data());
  Ops<T>::gemm_nt(batch, 1, flat, dvalues.data(), p.ptr(kWValue), ws.da3.data());
  Ops<T>::relu_backward(ws.da3.size(), ws.a3.data(), ws.da3.data());

  ConvGeom g1{batch, s.height, s.width, s.inChannels, s.conv1};
  ConvGeom g2{batch, s.height, s.width, s.conv1, s.conv2};
  ConvGeom g3{batch, s.height, s.width, s.conv2, s.conv3};
  ws.da2.resize(rows * s.conv2);
  ws.dcol.resize(rows * 4 * std::max(s.conv1, s.conv2));
  conv2d_backward(g3, ws.col3.data(), p.ptr(kW3), ws.da3.data(), ws.da2.data(), g(kW3), g(kB3), ws.dcol.data());
  Ops<T>::relu_backward(ws.da2.size(), ws.a2.data(), ws.da2.data());
  ws.da1.resize(rows * s.conv1);
  conv2d_backward(g2, ws.col2.data(), p.ptr(kW2), ws.da2.data(), ws.da1.data(), g(kW2), g(kB2), ws.dcol.data());
  Ops<T>::relu_backward(ws.da1.size(), ws.a1.data(), ws.da1.data());
  conv2d_backward<T>(g1, ws.col1.data(), p.ptr(kW1), ws.da1.data(), nullptr, g(kW1), g(kB1), nullptr);
}

template <class T>
void masked_log_softmax(std::span<const T> logits, const std::vector<bool>& mask, std::span<T> out) {
  const T neg_inf = -std::numeric_limits<T>::infinity();
  T mx = neg_inf;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) mx = std::max(mx, logits[i]);
  }
  if (mx == neg_inf) throw ContractError("masked softmax over an all-false mask");
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) sum += std::exp(static_cast<double>(logits[i] - mx));
  }
  const T lse = mx + static_cast<T>(std::log(sum));
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = mask[i] ? logits[i] - lse : neg_inf;
}

template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& st, const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw ShapeError("adam: gradient size mismatch");
  if (st.m.empty()) {
    st.m.assign(params.size(), T(0));
    st.v.assign(params.size(), T(0));
  }
  if (st.m.size() != params.size() || st.v.size() != params.size()) throw ShapeError("adam: state size mismatch");
  ++st.step;
  AdamCoeffs c;
  c.lr = cfg.lr;
  c.beta1 = cfg.beta1;
  c.beta2 = cfg.beta2;
  c.eps = cfg.eps;
  c.correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  c.correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  Ops<T>::adam(params.size(), params.data(), grads.data(), st.m.data(), st.v.data(), c);
}

template <class T>
void check_finite(std::span<const T> values, const char* what) {
  for (T v : values) {
    if (!std::isfinite(v)) throw NaNLoss(std::string("non-finite value in ") + what);
  }
}

#define BLASTLAB_INSTANTIATE(T)                                                                          \
  template struct NetworkParams<T>;                                                                      \
  template NetworkParams<T> init_params<T>(const NetShape&, uint64_t);                                   \
  template void im2col<T>(const ConvGeom&, const T*, T*);                                                \
  template void col2im_add<T>(const ConvGeom&, const T*, T*);                                            \
  template void conv2d_forward<T>(const ConvGeom&, const T*, const T*, const T*, T*, T*);                \
  template void conv2d_backward<T>(const ConvGeom&, const T*, const T*, const T*, T*, T*, T*, T*);       \
  template struct Workspace<T>;                                                                          \
  template void forward<T>(const NetworkParams<T>&, std::span<const T>, int, Workspace<T>&);             \
  template void backward<T>(const NetworkParams<T>&, std::span<const T>, std::span<const T>,             \
                            Workspace<T>&, std::span<T>);                                                \
  template void masked_log_softmax<T>(std::span<const T>, const std::vector<bool>&, std::span<T>);       \
  template void adam_step<T>(std::span<T>, std::span<const T>, AdamState<T>&, const AdamConfig&);        \
  template void check_finite<T>(std::span<const T>, const char*);

BLASTLAB_INSTANTIATE(float)
BLASTLAB_INSTANTIATE(double)

#undef BLASTLAB_INSTANTIATE

}  // namespace blastlab::nn
