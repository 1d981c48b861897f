#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "blastlab/error.hpp"
#include "blastlab/nn/checkpoint.hpp"
#include "blastlab/nn/network.hpp"
#include "blastlab/obs.hpp"
#include "blastlab/rng.hpp"

using namespace blastlab;
using namespace blastlab::nn;

namespace {

std::vector<float> random_floats(std::size_t n, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  std::vector<float> v(n);
  for (float& x : v) x = d(rng);
  return v;
}

std::vector<double> widen(const std::vector<float>& v) { return {v.begin(), v.end()}; }

// max |a - b| / (1 + |b|)
double max_rel_diff(const std::vector<float>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / (1.0 + std::abs(b[i])));
  return worst;
}

std::vector<const KernelSet*> all_sets() {
  std::vector<const KernelSet*> sets{&scalar_kernels()};
  if (const KernelSet* k = avx2_kernels()) sets.push_back(k);
  return sets;
}

// Restores the dispatcher after a test switches it.
struct KernelGuard {
  std::string saved{active_kernels().name};
  ~KernelGuard() { select_kernels(saved); }
};

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("every kernel set matches the double-precision reference") {
  Rng rng(3);
  const int shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 16, 8}, {5, 17, 9}, {13, 33, 31}, {36, 64, 128}, {64, 36, 2304}, {7, 1, 300}};
  for (const KernelSet* ks : all_sets()) {
    CAPTURE(ks->name);
    for (const auto& s : shapes) {
      const int M = s[0], N = s[1], K = s[2];
      CAPTURE(M);
      CAPTURE(N);
      CAPTURE(K);
      // float accumulation error grows like sqrt(K)
      const double tol = 1e-6 * (4 + std::sqrt(static_cast<double>(std::max(M, K))));
      auto A = random_floats(static_cast<std::size_t>(M) * K, rng);
      auto B = random_floats(static_cast<std::size_t>(K) * N, rng);
      auto C0 = random_floats(static_cast<std::size_t>(M) * N, rng);
      {
        auto C = C0;
        auto Cd = widen(C0);
        ks->gemm_nn(M, N, K, A.data(), B.data(), C.data());
        ref::gemm_nn(M, N, K, widen(A).data(), widen(B).data(), Cd.data());
        CHECK(max_rel_diff(C, Cd) < tol);
      }
      {
        // A[M,K]^T * Bm[M,N] -> [K,N]
        auto Bm = random_floats(static_cast<std::size_t>(M) * N, rng);
        auto C1 = random_floats(static_cast<std::size_t>(K) * N, rng);
        auto C = C1;
        auto Cd = widen(C1);
        ks->gemm_tn(M, N, K, A.data(), Bm.data(), C.data());
        ref::gemm_tn(M, N, K, widen(A).data(), widen(Bm).data(), Cd.data());
        CHECK(max_rel_diff(C, Cd) < tol);
      }
      {
        // Am[M,N] * Bk[K,N]^T -> [M,K]
        auto Am = random_floats(static_cast<std::size_t>(M) * N, rng);
        auto Bk = random_floats(static_cast<std::size_t>(K) * N, rng);
        auto C2 = random_floats(static_cast<std::size_t>(M) * K, rng);
        auto C = C2;
        auto Cd = widen(C2);
        ks->gemm_nt(M, N, K, Am.data(), Bk.data(), C.data());
        ref::gemm_nt(M, N, K, widen(Am).data(), widen(Bk).data(), Cd.data());
        CHECK(max_rel_diff(C, Cd) < tol);
      }
      {
        auto bias = random_floats(N, rng);
        auto C = C0;
        auto Cd = widen(C0);
        ks->add_bias(M, N, bias.data(), C.data());
        ref::add_bias(M, N, widen(bias).data(), Cd.data());
        CHECK(max_rel_diff(C, Cd) < 1e-6);
        std::vector<float> sums(N, 0.5f);
        std::vector<double> sumsd(N, 0.5);
        ks->column_sums(M, N, C0.data(), sums.data());
        ref::column_sums(M, N, widen(C0).data(), sumsd.data());
        CHECK(max_rel_diff(sums, sumsd) < tol);
      }
    }
    for (std::size_t n : {1u, 7u, 8u, 9u, 31u, 1000u}) {
      auto x = random_floats(n, rng);
      auto y = x;
      ks->relu(n, y.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == (x[i] > 0 ? x[i] : 0.0f));
      auto dy = random_floats(n, rng);
      auto dz = dy;
      ks->relu_backward(n, y.data(), dz.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(dz[i] == (y[i] > 0 ? dy[i] : 0.0f));

      auto p = random_floats(n, rng), g = random_floats(n, rng), m = random_floats(n, rng);
      auto v = random_floats(n, rng, 0.0f, 1.0f);
      auto pd = widen(p), md = widen(m), vd = widen(v);
      AdamCoeffs c;
      c.lr = 1e-3;
      c.correction1 = 1 - std::pow(0.9, 3);
      c.correction2 = 1 - std::pow(0.999, 3);
      ks->adam(n, p.data(), g.data(), m.data(), v.data(), c);
      ref::adam(n, pd.data(), widen(g).data(), md.data(), vd.data(), c);
      CHECK(max_rel_diff(p, pd) < 1e-6);
      CHECK(max_rel_diff(m, md) < 1e-6);
      CHECK(max_rel_diff(v, vd) < 1e-6);
    }
  }
}

TEST_CASE("kernel selection") {
  KernelGuard guard;
  CHECK(select_kernels("scalar"));
  CHECK(active_kernels().name == "scalar");
  CHECK_FALSE(select_kernels("neon-imaginary"));
  auto names = available_kernels();
  CHECK(names.front() == "scalar");
  if (avx2_kernels() != nullptr) {
    CHECK(select_kernels("avx2"));
    CHECK(active_kernels().name == "avx2");
  }
}

TEST_CASE("network outputs agree across kernel sets") {
  KernelGuard guard;
  NetShape s{6, 6, 8};
  auto p = init_params<float>(s, 5);
  Rng rng(2);
  auto x = random_floats(static_cast<std::size_t>(3) * s.cells() * s.inChannels, rng, 0.0f, 2.0f);
  select_kernels("scalar");
  Workspace<float> a;
  forward<float>(p, x, 3, a);
  for (const auto& name : available_kernels()) {
    select_kernels(name);
    Workspace<float> b;
    forward<float>(p, x, 3, b);
    for (std::size_t i = 0; i < a.logits.size(); ++i) CHECK(b.logits[i] == doctest::Approx(a.logits[i]).epsilon(1e-4));
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] == doctest::Approx(a.values[i]).epsilon(1e-4));
  }
}

TEST_CASE("conv with an all-ones kernel sums the window") {
  ConvGeom g{1, 2, 2, 1, 1};
  std::vector<double> in{1, 2, 3, 4}, k{1, 1, 1, 1}, out(4), col(16);
  conv2d_forward<double>(g, in.data(), k.data(), nullptr, out.data(), col.data());
  CHECK(out[0] == 10);  // full 2x2 window at the top-left corner
  CHECK(out[1] == 6);   // 2 + 4, right edge padded
  CHECK(out[2] == 7);   // 3 + 4
  CHECK(out[3] == 4);
}

TEST_CASE("conv with a delta kernel is the identity") {
  ConvGeom g{2, 3, 4, 3, 3};
  Rng rng(1);
  auto inf = random_floats(static_cast<std::size_t>(g.rows()) * 3, rng);
  std::vector<double> in = widen(inf), out(in.size()), col(static_cast<std::size_t>(g.rows()) * g.patch());
  std::vector<double> k(static_cast<std::size_t>(g.patch()) * 3, 0.0);
  for (int c = 0; c < 3; ++c) k[static_cast<std::size_t>(c) * 3 + c] = 1.0;  // offset (0,0)
  conv2d_forward<double>(g, in.data(), k.data(), nullptr, out.data(), col.data());
  CHECK(out == in);
}

TEST_CASE("conv gradients match central differences") {
  ConvGeom g{2, 3, 3, 2, 3};
  Rng rng(4);
  auto in = widen(random_floats(static_cast<std::size_t>(g.rows()) * g.inChannels, rng));
  auto k = widen(random_floats(static_cast<std::size_t>(g.patch()) * g.outChannels, rng));
  auto bias = widen(random_floats(g.outChannels, rng));
  auto w = widen(random_floats(static_cast<std::size_t>(g.rows()) * g.outChannels, rng));
  std::vector<double> out(w.size()), col(static_cast<std::size_t>(g.rows()) * g.patch());
  // loss = sum(w * conv(in))
  auto loss = [&] {
    conv2d_forward<double>(g, in.data(), k.data(), bias.data(), out.data(), col.data());
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += w[i] * out[i];
    return s;
  };
  loss();
  std::vector<double> dk(k.size(), 0.0), db(bias.size(), 0.0), din(in.size()), dcol(col.size());
  conv2d_backward<double>(g, col.data(), k.data(), w.data(), din.data(), dk.data(), db.data(), dcol.data());
  const double h = 1e-6;
  auto check = [&](std::vector<double>& param, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double keep = param[i];
      param[i] = keep + h;
      const double up = loss();
      param[i] = keep - h;
      const double down = loss();
      param[i] = keep;
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(fd - grad[i]) / std::max(1e-8, std::abs(fd) + std::abs(grad[i])) < 1e-4);
    }
  };
  check(k, dk);
  check(bias, db);
  check(in, din);
}

TEST_CASE("zero weights give equal logits and zero value") {
  NetShape s{3, 4, 5};
  NetworkParams<float> p(s);
  Rng rng(1);
  auto x = random_floats(static_cast<std::size_t>(s.cells()) * s.inChannels, rng);
  Workspace<float> ws;
  forward<float>(p, x, 1, ws);
  for (float l : ws.logits) CHECK(l == ws.logits[0]);
  CHECK(ws.values[0] == 0.0f);
  CHECK_THROWS_AS(forward<float>(p, std::span<const float>(x.data(), x.size() - 1), 1, ws), ShapeError);
}

TEST_CASE("masked softmax puts zero mass on masked cells") {
  Rng rng(6);
  NetShape s{4, 4, 6};
  auto p = init_params<double>(s, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(s.cells()) * s.inChannels);
    for (double& v : x) v = uniform01(rng) * 3;
    Workspace<double> ws;
    forward<double>(p, x, 1, ws);
    CHECK(std::isfinite(ws.values[0]));
    std::vector<bool> mask(s.cells());
    for (int i = 0; i < s.cells(); ++i) mask[i] = uniform01(rng) < 0.5;
    mask[uniform_index(rng, s.cells())] = true;
    std::vector<double> lp(s.cells());
    masked_log_softmax<double>(ws.logits, mask, lp);
    double total = 0.0;
    for (int i = 0; i < s.cells(); ++i) {
      const double pr = std::exp(lp[i]);
      if (!mask[i]) CHECK(pr == 0.0);
      total += pr;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
  std::vector<double> logits(3, 0.0), out(3);
  CHECK_THROWS_AS(masked_log_softmax<double>(logits, std::vector<bool>(3, false), out), ContractError);
}

TEST_CASE("init is deterministic and orthogonal") {
  NetShape s{4, 4, 7};
  auto a = init_params<double>(s, 9);
  auto b = init_params<double>(s, 9);
  CHECK(a == b);
  CHECK_FALSE(a == init_params<double>(s, 10));
  // conv2 kernel has 128 rows and 64 orthogonal columns scaled by sqrt(2)
  const double* w = a.ptr(kW2);
  const int rows = 4 * s.conv1, cols = s.conv2;
  for (int i = 0; i < cols; i += 7) {
    for (int j = 0; j < cols; j += 5) {
      double dot = 0;
      for (int r = 0; r < rows; ++r) dot += w[r * cols + i] * w[r * cols + j];
      CHECK(dot == doctest::Approx(i == j ? 2.0 : 0.0).epsilon(1e-9).scale(1.0));
    }
  }
  for (double v : a.view(kB1)) CHECK(v == 0.0);
}

TEST_CASE("full network gradient matches finite differences") {
  NetShape s{3, 3, 3, 4, 5, 6};
  auto p = init_params<double>(s, 12);
  Rng rng(13);
  for (double& v : p.data) v += 0.05 * (uniform01(rng) - 0.5);
  const int batch = 2;
  std::vector<double> x(static_cast<std::size_t>(batch) * s.cells() * s.inChannels);
  for (double& v : x) v = uniform01(rng);
  std::vector<double> wl(static_cast<std::size_t>(batch) * s.cells()), wv(batch);
  for (double& v : wl) v = uniform01(rng) - 0.5;
  for (double& v : wv) v = uniform01(rng) - 0.5;
  Workspace<double> ws;
  auto loss = [&] {
    forward<double>(p, x, batch, ws);
    double l = 0;
    for (std::size_t i = 0; i < wl.size(); ++i) l += wl[i] * ws.logits[i];
    for (int i = 0; i < batch; ++i) l += wv[i] * ws.values[i];
    return l;
  };
  loss();
  std::vector<double> grads(p.count(), 0.0);
  backward<double>(p, wl, wv, ws, grads);
  int bad = 0;
  for (std::size_t i = 0; i < p.count(); ++i) {
    const double keep = p.data[i];
    const double h = 1e-6;
    p.data[i] = keep + h;
    const double up = loss();
    p.data[i] = keep - h;
    const double down = loss();
    p.data[i] = keep;
    const double fd = (up - down) / (2 * h);
    const double rel = std::abs(fd - grads[i]) / std::max(1e-7, std::abs(fd) + std::abs(grads[i]));
    bad += rel > 1e-4;
  }
  CHECK(bad == 0);
}

TEST_CASE("adam with zero gradients leaves parameters alone") {
  std::vector<double> p{1.0, -2.0}, g{0.0, 0.0};
  AdamState<double> st;
  st.m = {0.5, 0.5};
  st.v = {0.25, 0.25};
  st.step = 3;
  AdamConfig cfg;
  adam_step<double>(p, g, st, cfg);
  CHECK(st.m[0] == doctest::Approx(0.45));
  CHECK(st.v[0] == doctest::Approx(0.25 * 0.999));
  // moments are non-zero so the update is not zero; only zero moments keep params fixed
  std::vector<double> q{1.0, -2.0};
  AdamState<double> fresh;
  adam_step<double>(q, g, fresh, cfg);
  CHECK(q == std::vector<double>{1.0, -2.0});
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
  std::vector<double> p{0.0, 0.0, 0.0}, g{3.0, -0.5, 1e-3};
  AdamState<double> st;
  AdamConfig cfg;
  cfg.lr = 0.01;
  adam_step<double>(p, g, st, cfg);
  // m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(-cfg.lr * g[i] / (std::abs(g[i]) + cfg.eps)).epsilon(1e-12));
}

TEST_CASE("two adam steps follow the moment recursion") {
  std::vector<double> p{1.0}, g{2.0};
  AdamState<double> st;
  AdamConfig cfg;
  cfg.lr = 0.1;
  adam_step<double>(p, g, st, cfg);
  adam_step<double>(p, g, st, cfg);
  // m1 = 0.2, m2 = 0.38; v1 = 0.004, v2 = 0.007996
  CHECK(st.m[0] == doctest::Approx(0.38).epsilon(1e-12));
  CHECK(st.v[0] == doctest::Approx(0.007996).epsilon(1e-12));
  const double mhat = 0.38 / (1 - 0.81), vhat = 0.007996 / (1 - 0.998001);
  const double expect = 1.0 - 0.1 * 2.0 / (2.0 + 1e-8) - 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
  CHECK(p[0] == doctest::Approx(expect).epsilon(1e-12));
  std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(adam_step<double>(p, wrong, st, cfg), ShapeError);
}

TEST_CASE("non-finite values are reported") {
  std::vector<float> v{1.0f, std::nanf("")};
  CHECK_THROWS_AS(check_finite<float>(v, "test"), NaNLoss);
}

TEST_CASE("checkpoint round-trip is bit exact") {
  NetShape s{5, 4, 9};
  Checkpoint ck;
  ck.params = init_params<float>(s, 77);
  ck.channelLegend = channel_legend(5);
  ck.metadata = {{"scenario", "two-step"}, {"note", "x y z"}};
  auto bytes = encode_checkpoint(ck);
  Checkpoint back = decode_checkpoint(bytes);
  CHECK(back == ck);
  CHECK(std::memcmp(back.params.data.data(), ck.params.data.data(), ck.params.data.size() * sizeof(float)) == 0);
  auto path = std::filesystem::temp_directory_path() / "blastlab_test_ckpt.bin";
  save_checkpoint(ck, path);
  CHECK(load_checkpoint(path) == ck);
  std::filesystem::remove(path);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), DataError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "!"), DataError);
}

}  // TEST_SUITE
