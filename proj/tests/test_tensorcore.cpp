#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "cliniseq/error.hpp"
#include "cliniseq/layers.hpp"
#include "cliniseq/losses.hpp"
#include "cliniseq/optim.hpp"
#include "cliniseq/rng.hpp"

using namespace cliniseq;

namespace {

Tensor random_tensor(std::vector<std::size_t> dims, Rng& rng, double scale = 1.0) {
  Tensor t(dims);
  for (auto& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

LstmParams random_lstm(std::size_t H, std::size_t K, Rng& rng) {
  LstmParams p = LstmParams::zeros(H, K);
  for (int g = 0; g < 4; ++g) {
    p.U[g] = random_tensor({H, K}, rng);
    p.R[g] = random_tensor({H, H}, rng);
    p.bias[g] = random_tensor({H}, rng);
  }
  return p;
}

Vec random_vec(std::size_t n, Rng& rng) {
  Vec v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

std::vector<Tensor*> lstm_tensors(LstmParams& p) {
  std::vector<Tensor*> out;
  for (int g = 0; g < 4; ++g) out.insert(out.end(), {&p.U[g], &p.R[g], &p.bias[g]});
  return out;
}

}  // namespace

TEST_CASE("tensor shape contract") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.all_finite());
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  t[4] = std::nan("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("sparse vector round trip") {
  Vec d{0, 0.25, 0, 0.75};
  SparseVec s = SparseVec::from_dense(d);
  CHECK(s.nnz() == 2);
  CHECK(s.to_dense(4) == d);
  CHECK(s.sum() == doctest::Approx(1.0));
}

TEST_CASE("affine forward") {
  AffineParams id = AffineParams::zeros(2, 2, true);
  id.W(0, 0) = id.W(1, 1) = 1;
  CHECK(affine_forward(id, Vec{3, 4}) == Vec{3, 4});

  AffineParams p = AffineParams::zeros(2, 2, true);
  p.W = Tensor({2, 2}, {1, 2, 0, 1});
  (*p.b)[0] = 1;
  CHECK(affine_forward(p, Vec{1, 1}) == Vec{4, 1});

  Rng rng(3);
  AffineParams r{random_tensor({3, 5}, rng), std::nullopt};
  Vec x = random_vec(5, rng);
  std::vector<std::vector<double>> W(3, Vec(5));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) W[i][j] = r.W(i, j);
  Vec want = oracle::matvec(W, x);
  Vec got = affine_forward(r, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
  SparseVec sx = SparseVec::from_dense(x);
  Vec got_sparse = affine_forward(r, sx);
  for (std::size_t i = 0; i < 3; ++i) CHECK(got_sparse[i] == doctest::Approx(want[i]).epsilon(1e-14));

  CHECK_THROWS_AS(affine_forward(r, Vec{1, 2}), DimensionError);
}

TEST_CASE("activations") {
  CHECK(relu(Vec{-1, 2}) == Vec{0, 2});
  CHECK(softmax(Vec{0, 0}) == Vec{0.5, 0.5});
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(Vec{0.0})[0] == 0.5);
  CHECK(cliniseq::tanh(Vec{0.5})[0] == doctest::Approx(std::tanh(0.5)));
}

TEST_CASE("softmax sums to one and ignores shifts") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Vec x = random_vec(1 + trial % 9, rng);
    for (auto& v : x) v *= 50;
    Vec y = softmax(x);
    double s = 0;
    for (double v : y) s += v;
    CHECK(std::fabs(s - 1.0) < 1e-9);
    Vec shifted = x;
    for (auto& v : shifted) v += 123.0;
    Vec ys = softmax(shifted);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::fabs(y[i] - ys[i]) < 1e-9);
  }
}

TEST_CASE("layer backward passes match finite differences") {
  Rng rng(5);
  AffineParams p{random_tensor({3, 4}, rng), random_tensor({3}, rng)};
  Vec x = random_vec(4, rng), a = random_vec(3, rng);
  // L = a . relu(W x + b) through affine, relu and softmax in turn.
  auto eval_relu = [&](const Vec& xx) { return dot(a, relu(affine_forward(p, xx))); };
  auto eval_soft = [&](const Vec& xx) { return dot(a, softmax(affine_forward(p, xx))); };

  Vec pre = affine_forward(p, x);
  {
    Vec dpre = relu_backward(pre, a);
    AffineParams g = AffineParams::zeros(3, 4, true);
    Vec dx;
    affine_backward(p, x, dpre, g, &dx);
    auto r = grad_check(eval_relu, x, dx, 1e-4);
    CHECK(r.max_rel_error < 1e-4);
  }
  {
    Vec dpre = softmax_backward(softmax(pre), a);
    AffineParams g = AffineParams::zeros(3, 4, true);
    Vec dx;
    affine_backward(p, x, dpre, g, &dx);
    CHECK(grad_check(eval_soft, x, dx, 1e-4).max_rel_error < 1e-4);

    Vec wflat(p.W.values().begin(), p.W.values().end());
    auto f_w = [&](const Vec& w) {
      AffineParams q = p;
      std::copy(w.begin(), w.end(), q.W.values().begin());
      return dot(a, softmax(affine_forward(q, x)));
    };
    Vec gw(g.W.values().begin(), g.W.values().end());
    CHECK(grad_check(f_w, wflat, gw, 1e-4).max_rel_error < 1e-4);

    Vec bflat(p.b->values().begin(), p.b->values().end());
    auto f_b = [&](const Vec& b) {
      AffineParams q = p;
      std::copy(b.begin(), b.end(), q.b->values().begin());
      return dot(a, softmax(affine_forward(q, x)));
    };
    Vec gb(g.b->values().begin(), g.b->values().end());
    CHECK(grad_check(f_b, bflat, gb, 1e-4).max_rel_error < 1e-4);
  }
  {
    // Sparse input path accumulates the same weight gradient.
    SparseVec sx = SparseVec::from_dense(Vec{0, 0.5, 0, 0.5});
    Vec dense = sx.to_dense(4);
    AffineParams g1 = AffineParams::zeros(3, 4, true), g2 = AffineParams::zeros(3, 4, true);
    affine_backward(p, sx, a, g1);
    affine_backward(p, dense, a, g2);
    CHECK(g1.W == g2.W);
    CHECK(*g1.b == *g2.b);
  }
}

TEST_CASE("lstm step fixed points") {
  LstmParams z = LstmParams::zeros(3, 2);
  auto s = lstm_step(z, Vec{0, 0}, Vec(3, 0.0), Vec(3, 0.0));
  CHECK(s.h == Vec(3, 0.0));
  CHECK(s.c == Vec(3, 0.0));
  CHECK(s.i == Vec(3, 0.5));
  CHECK(s.g == Vec(3, 0.0));

  LstmParams one = LstmParams::zeros(1, 1);
  one.gate_bias(Gate::Forget)[0] = 50.0;
  auto sat = lstm_step(one, Vec{0}, Vec{0}, Vec{2});
  CHECK(std::fabs(sat.c[0] - 2.0) < 1e-9);
}

TEST_CASE("lstm step and forward match the scalar oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t H = 1 + seed % 5, K = 1 + seed % 4;
    LstmParams p = random_lstm(H, K, rng);
    std::vector<Vec> xs;
    for (int t = 0; t < 3; ++t) xs.push_back(random_vec(K, rng));
    LstmTrace tr = lstm_forward(p, xs);
    REQUIRE(tr.length() == 3);
    oracle::LstmState st{Vec(H, 0.0), Vec(H, 0.0)};
    for (int t = 0; t < 3; ++t) {
      st = oracle::lstm_step(p, xs[t], st);
      for (std::size_t j = 0; j < H; ++j) {
        CHECK(std::fabs(tr.steps[t].h[j] - st.h[j]) < 1e-12);
        CHECK(std::fabs(tr.steps[t].c[j] - st.c[j]) < 1e-12);
      }
    }
    auto single = lstm_forward(p, {xs[0]});
    auto step = lstm_step(p, xs[0], Vec(H, 0.0), Vec(H, 0.0));
    CHECK(single.steps[0].h == step.h);
  }
  LstmParams z = LstmParams::zeros(2, 2);
  for (const auto& s : lstm_forward(z, {Vec{0, 0}, Vec{0, 0}}).steps) CHECK(s.h == Vec{0, 0});
}

TEST_CASE("lstm backward matches finite differences") {
  Rng rng(9);
  const std::size_t H = 4, K = 3, T = 4;
  LstmParams p = random_lstm(H, K, rng);
  std::vector<Vec> xs, as;
  for (std::size_t t = 0; t < T; ++t) xs.push_back(random_vec(K, rng)), as.push_back(random_vec(H, rng));
  auto value = [&](const LstmParams& q, const std::vector<Vec>& in) {
    auto tr = lstm_forward(q, in);
    double s = 0;
    for (std::size_t t = 0; t < T; ++t) s += dot(as[t], tr.steps[t].h);
    return s;
  };
  LstmParams grad = LstmParams::zeros(H, K);
  std::vector<Vec> dx;
  lstm_backward(p, lstm_forward(p, xs), as, grad, dx);

  auto ptensors = lstm_tensors(p);
  auto gtensors = lstm_tensors(grad);
  for (std::size_t n = 0; n < ptensors.size(); ++n) {
    Vec point(ptensors[n]->values().begin(), ptensors[n]->values().end());
    Vec analytic(gtensors[n]->values().begin(), gtensors[n]->values().end());
    auto f = [&](const Vec& v) {
      LstmParams q = p;
      auto qt = lstm_tensors(q);
      std::copy(v.begin(), v.end(), qt[n]->values().begin());
      return value(q, xs);
    };
    CHECK(grad_check(f, point, analytic, 1e-4).max_rel_error < 1e-4);
  }
  for (std::size_t t = 0; t < T; ++t) {
    auto f = [&](const Vec& v) {
      auto in = xs;
      in[t] = v;
      return value(p, in);
    };
    CHECK(grad_check(f, xs[t], dx[t], 1e-4).max_rel_error < 1e-4);
  }
}

TEST_CASE("weighted cross-entropy") {
  CHECK(weighted_ce(0.5, 1, 1) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(weighted_ce(0.5, 1, 2) == doctest::Approx(1.386294).epsilon(1e-6));
  for (double p : {0.01, 0.3, 0.77, 0.999}) {
    CHECK(weighted_ce(p, 0, 8) == weighted_ce(p, 0, 1));
    for (double q : {0.0, 1.0}) {
      double bce = -q * std::log(p) - (1 - q) * std::log(1 - p);
      CHECK(weighted_ce(p, q, 1) == doctest::Approx(bce).epsilon(1e-14));
    }
  }
  CHECK(std::isfinite(weighted_ce(0.0, 1, 1)));
  CHECK(std::isfinite(weighted_ce(1.0, 0, 1)));

  auto f = [](const Vec& v) { return weighted_ce(v[0], 1, 4); };
  auto r = grad_check(f, Vec{0.3}, Vec{weighted_ce_grad(0.3, 1, 4)}, 1e-5);
  CHECK(r.max_rel_error < 1e-6);
  CHECK(weighted_ce_grad(0.3, 0, 2) == doctest::Approx(1 / 0.7));
}

TEST_CASE("categorical cross-entropy") {
  CHECK(categorical_ce(Vec{0.5, 0.5}, Vec{0.5, 0.5}) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(categorical_ce(Vec{0.5, 0.5}, Vec{0, 0}) == 0.0);
  CHECK(categorical_ce(Vec{0.5, 0.5}, SparseVec{}) == 0.0);
  CHECK(categorical_ce(Vec{0.9, 0.1}, Vec{1, 0}) == doctest::Approx(0.105361).epsilon(1e-5));
  CHECK(std::isfinite(categorical_ce(Vec{0.0, 1.0}, Vec{1, 0})));
  CHECK_THROWS_AS(categorical_ce(Vec{0.5, 0.5}, Vec{1, 0, 0}), DimensionError);

  Vec pred{0.2, 0.5, 0.3};
  SparseVec tgt = SparseVec::from_dense(Vec{0.25, 0, 0.75});
  auto f = [&](const Vec& v) { return categorical_ce(v, tgt); };
  CHECK(grad_check(f, pred, categorical_ce_grad(pred, tgt), 1e-6).max_rel_error < 1e-6);
}

TEST_CASE("l1 value and subgradient") {
  auto [v0, g0] = l1_value_and_subgradient(Tensor({2}, {0, 0}));
  CHECK(v0 == 0);
  CHECK(g0 == Tensor({2}, {0, 0}));
  auto [v1, g1] = l1_value_and_subgradient(Tensor({2}, {3, -4}));
  CHECK(v1 == 7);
  CHECK(g1 == Tensor({2}, {1, -1}));

  Rng rng(2);
  Vec x(10);
  for (auto& v : x) v = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.1, 2.0);
  auto [v, g] = l1_value_and_subgradient(Tensor({10}, x));
  auto f = [](const Vec& p) { return l1_norm(p); };
  Vec an(g.values().begin(), g.values().end());
  CHECK(grad_check(f, x, an, 1e-5).max_rel_error < 1e-6);
}

TEST_CASE("adam") {
  SUBCASE("first step moves by lr against the gradient sign") {
    Tensor p({3}, {1, 2, 3});
    Tensor g({3}, {0.5, -2.0, 1e-3});
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    AdamState st = AdamState::for_params(ps);
    adam_update(ps, gs, st, 0.01);
    CHECK(p[0] == doctest::Approx(1 - 0.01).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(2 + 0.01).epsilon(1e-6));
    CHECK(p[2] == doctest::Approx(3 - 0.01).epsilon(1e-4));
  }
  SUBCASE("zero gradients leave parameters unchanged") {
    Tensor p({2}, {1, -1});
    Tensor g({2}, {0, 0});
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    AdamState st = AdamState::for_params(ps);
    for (int i = 0; i < 50; ++i) adam_update(ps, gs, st, 0.1);
    CHECK(p == Tensor({2}, {1, -1}));
  }
  SUBCASE("three steps match the scalar recurrence") {
    Tensor p({1}, {0.7});
    Tensor* ps[] = {&p};
    AdamState st = AdamState::for_params(ps);
    double x = 0.7, m = 0, v = 0;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.05;
    for (int k = 1; k <= 3; ++k) {
      double grad = 2 * x - 1;
      Tensor g({1}, {grad});
      const Tensor* gs[] = {&g};
      adam_update(ps, gs, st, lr);
      m = b1 * m + (1 - b1) * grad;
      v = b2 * v + (1 - b2) * grad * grad;
      double mh = m / (1 - std::pow(b1, k)), vh = v / (1 - std::pow(b2, k));
      x -= lr * mh / (std::sqrt(vh) + eps);
      CHECK(std::fabs(p[0] - x) < 1e-12);
    }
    CHECK(st.step == 3);
  }
  SUBCASE("beta1 = beta2 = 0 gives an RMS-normalized step") {
    Tensor p({2}, {0, 0});
    Tensor g({2}, {3, -0.5});
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    AdamState st = AdamState::for_params(ps);
    st.beta1 = st.beta2 = 0.0;
    adam_update(ps, gs, st, 0.1);
    CHECK(p[0] == doctest::Approx(-0.1 * 3 / (3 + 1e-8)));
    CHECK(p[1] == doctest::Approx(0.1 * 0.5 / (0.5 + 1e-8)));
  }
  SUBCASE("shape mismatch") {
    Tensor p({2}), g({3});
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    AdamState st = AdamState::for_params(ps);
    CHECK_THROWS_AS(adam_update(ps, gs, st, 0.1), DimensionError);
  }
}

TEST_CASE("grad_check is exact on linear functions") {
  Vec a{1.5, -2.0, 0.25};
  auto f = [&](const Vec& x) { return dot(a, x) + 3.0; };
  auto r = grad_check(f, Vec{0.1, 0.2, 0.3}, a, 1e-3);
  CHECK(r.max_rel_error < 1e-9);
  auto fg = [&](const Vec& x) { return std::make_pair(dot(a, x), a); };
  CHECK(grad_check(fg, Vec{1, 2, 3}, 1e-3).max_rel_error < 1e-9);
}

TEST_CASE("rng streams are reproducible and seed-separated") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(a.next_u64() != c.next_u64());
  CHECK(mix_seed(1, "a") != mix_seed(1, "b"));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));

  Rng d(7);
  double sum = 0;
  for (int i = 0; i < 20000; ++i) sum += d.normal();
  CHECK(std::fabs(sum / 20000) < 0.05);
  Vec alpha{1, 2, 3};
  Vec dir = d.dirichlet(alpha);
  CHECK(dir[0] + dir[1] + dir[2] == doctest::Approx(1.0));
  for (int i = 0; i < 100; ++i) CHECK(d.uniform_int(7) < 7);
}
