#include <doctest.h>

#include <cmath>

#include "fndet/errors.hpp"
#include "fndet/nn/optim.hpp"
#include "fndet/nn/rng.hpp"
#include "fndet/nn/tensor.hpp"
#include "testutil.hpp"

using namespace fndet::nn;
using testutil::max_grad_error;
using testutil::random_matrix;

TEST_SUITE("nn") {

TEST_CASE("rng determinism and ranges") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.uniform_int(10) < 10);
  }
  // Derived streams differ from each other and from the base.
  CHECK(Rng::derive_seed(42, 1) != Rng::derive_seed(42, 2));
  CHECK(Rng::derive_seed(42, 1) != 42);
}

TEST_CASE("rng shuffle is a permutation and seed-stable") {
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Rng r1(99), r2(99);
  auto a = v;
  auto b = v;
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
}

TEST_CASE("matmul gradients for all transpose combinations") {
  Rng rng(1);
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      Tensor a = Tensor::leaf(random_matrix(ta ? 4 : 3, ta ? 3 : 4, rng), true);
      Tensor b = Tensor::leaf(random_matrix(tb ? 5 : 4, tb ? 4 : 5, rng), true);
      auto loss_value = [&]() { return sum_all(matmul(a, b, ta, tb)).value()(0, 0); };
      a.zero_grad();
      b.zero_grad();
      sum_all(matmul(a, b, ta, tb)).backward();
      CHECK(max_grad_error(a, loss_value) < 1e-7);
      CHECK(max_grad_error(b, loss_value) < 1e-7);
    }
  }
}

TEST_CASE("elementwise and reduction op gradients") {
  Rng rng(2);
  Tensor x = Tensor::leaf(random_matrix(4, 5, rng), true);
  Tensor y = Tensor::leaf(random_matrix(4, 5, rng), true);
  Tensor bias = Tensor::leaf(random_matrix(1, 5, rng), true);

  auto build = [&]() {
    Tensor t = add(mul(x, y), scale(x, 0.5));
    t = add_rowvec(t, bias);
    t = sub(t, scale(y, 0.25));
    return sum_all(mul(t, t));
  };
  auto loss_value = [&]() { return build().value()(0, 0); };
  x.zero_grad();
  y.zero_grad();
  bias.zero_grad();
  build().backward();
  CHECK(max_grad_error(x, loss_value) < 1e-6);
  CHECK(max_grad_error(y, loss_value) < 1e-6);
  CHECK(max_grad_error(bias, loss_value) < 1e-6);
}

TEST_CASE("activation gradients") {
  Rng rng(3);
  for (auto* fn : {&relu, &gelu, &tanh_act, &sigmoid_act}) {
    Tensor x = Tensor::leaf(random_matrix(3, 4, rng), true);
    auto loss_value = [&]() { return sum_all(mul(fn(x), fn(x))).value()(0, 0); };
    x.zero_grad();
    sum_all(mul(fn(x), fn(x))).backward();
    CHECK(max_grad_error(x, loss_value) < 1e-6);
  }
}

TEST_CASE("softmax, layer norm and cross entropy gradients") {
  Rng rng(4);
  Tensor x = Tensor::leaf(random_matrix(3, 6, rng), true);
  Tensor gamma = Tensor::leaf(random_matrix(1, 6, rng), true);
  Tensor beta = Tensor::leaf(random_matrix(1, 6, rng), true);

  auto build = [&]() {
    Tensor n = layer_norm(x, gamma, beta, 1e-12);
    Tensor s = rowwise_softmax(n);
    Tensor row = slice_rows(s, 1, 1);
    return cross_entropy_with_logits(row, 2);
  };
  auto loss_value = [&]() { return build().value()(0, 0); };
  x.zero_grad();
  gamma.zero_grad();
  beta.zero_grad();
  build().backward();
  CHECK(max_grad_error(x, loss_value, 1e-6) < 1e-5);
  CHECK(max_grad_error(gamma, loss_value, 1e-6) < 1e-5);
  CHECK(max_grad_error(beta, loss_value, 1e-6) < 1e-5);
}

TEST_CASE("slice, concat, embedding and max-pool gradients") {
  Rng rng(5);
  Tensor table = Tensor::leaf(random_matrix(7, 4, rng), true);
  std::vector<int> ids{1, 3, 1, 6, 0};

  auto build = [&]() {
    Tensor e = embedding_lookup(table, ids);          // 5 x 4
    Tensor a = slice_rows(e, 0, 4);                   // reuse of rows 0..3
    Tensor b = slice_rows(e, 1, 4);                   // rows 1..4 (overlap)
    Tensor pairs = concat_cols({a, b});               // 4 x 8
    Tensor pooled = colwise_max(pairs);               // 1 x 8
    Tensor stacked = concat_rows({pooled, scale(pooled, -1.0)});
    return sum_all(mul(stacked, stacked));
  };
  auto loss_value = [&]() { return build().value()(0, 0); };
  table.zero_grad();
  build().backward();
  CHECK(max_grad_error(table, loss_value) < 1e-6);
}

TEST_CASE("embedding rejects out-of-range ids naming the position") {
  Tensor table = Tensor::constant(Matrix::Zero(3, 2));
  CHECK_THROWS_WITH_AS(embedding_lookup(table, {0, 5}),
                       doctest::Contains("position 1"), fndet::Error);
}

TEST_CASE("dropout scales kept entries and is identity in eval mode") {
  Rng rng(6);
  Tensor x = Tensor::constant(Matrix::Ones(20, 20));
  Rng drop_rng(11);
  Tensor eval_out = dropout(x, 0.5, drop_rng, false);
  CHECK(eval_out.value() == x.value());

  Tensor train_out = dropout(x, 0.5, drop_rng, true);
  int kept = 0;
  for (Eigen::Index r = 0; r < 20; ++r)
    for (Eigen::Index c = 0; c < 20; ++c) {
      const double v = train_out.value()(r, c);
      CHECK((v == 0.0 || v == 2.0));
      kept += v != 0.0;
    }
  CHECK(kept > 120);  // keep prob 0.5 over 400 entries
  CHECK(kept < 280);
}

TEST_CASE("no-grad mode records no history") {
  Tensor a = Tensor::leaf(Matrix::Ones(2, 2), true);
  {
    NoGradGuard guard;
    Tensor out = sum_all(mul(a, a));
    CHECK_FALSE(out.requires_grad());
  }
  Tensor out = sum_all(mul(a, a));
  CHECK(out.requires_grad());
}

TEST_CASE("grad accumulates across diamond reuse") {
  // loss = sum(x*x) computed through two paths sharing x.
  Tensor x = Tensor::leaf(Matrix::Constant(1, 1, 3.0), true);
  Tensor y = add(mul(x, x), mul(x, x));  // 2 x^2; d/dx = 4x = 12
  y.backward();
  CHECK(x.grad()(0, 0) == doctest::Approx(12.0));
}

TEST_CASE("adamw single step matches hand computation") {
  // One parameter, one grad; verify against the update formula.
  Tensor p = Tensor::leaf(Matrix::Constant(1, 1, 1.0), true);
  AdamWOptions opt;
  opt.lr = 0.1;
  opt.weight_decay = 0.01;
  AdamW optimizer({{"p", p, true}}, opt);

  sum_all(mul(p, p)).backward();  // grad = 2p = 2
  optimizer.step();

  const double g = 2.0;
  const double m_hat = (0.1 * g) / (1.0 - 0.9);
  const double v_hat = (0.001 * g * g) / (1.0 - 0.999);
  const double expected = 1.0 - 0.1 * (m_hat / (std::sqrt(v_hat) + 1e-8) + 0.01 * 1.0);
  CHECK(p.value()(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adamw warmup ramps the learning rate") {
  Tensor p = Tensor::leaf(Matrix::Constant(1, 1, 1.0), true);
  AdamWOptions opt;
  opt.lr = 1.0;
  opt.warmup_steps = 4;
  opt.weight_decay = 0.0;
  AdamW optimizer({{"p", p, true}}, opt);
  for (int step = 1; step <= 6; ++step) {
    sum_all(p).backward();
    optimizer.step();
    optimizer.zero_grad();
    CHECK(optimizer.last_lr() == doctest::Approx(std::min(1.0, step / 4.0)));
  }
}

TEST_CASE("adamw skips parameters that received no gradient") {
  Tensor used = Tensor::leaf(Matrix::Constant(1, 1, 1.0), true);
  Tensor untouched = Tensor::leaf(Matrix::Constant(1, 1, 5.0), true);
  AdamW optimizer({{"used", used, true}, {"untouched", untouched, true}}, {});
  sum_all(mul(used, used)).backward();
  optimizer.step();
  CHECK(untouched.value()(0, 0) == 5.0);
  CHECK(used.value()(0, 0) != 1.0);
}

TEST_CASE("global norm clipping") {
  Tensor a = Tensor::leaf(Matrix::Constant(1, 1, 0.0), true);
  Tensor b = Tensor::leaf(Matrix::Constant(1, 1, 0.0), true);
  a.node()->accumulate(Matrix::Constant(1, 1, 3.0));
  b.node()->accumulate(Matrix::Constant(1, 1, 4.0));
  std::vector<NamedParam> params{{"a", a, true}, {"b", b, true}};
  const double norm = clip_global_norm(params, 1.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(a.grad()(0, 0) == doctest::Approx(0.6));
  CHECK(b.grad()(0, 0) == doctest::Approx(0.8));
  // Under the threshold: untouched.
  const double norm2 = clip_global_norm(params, 10.0);
  CHECK(norm2 == doctest::Approx(1.0));
  CHECK(a.grad()(0, 0) == doctest::Approx(0.6));
}

}  // TEST_SUITE
