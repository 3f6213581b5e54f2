#include <doctest.h>

#include <cmath>
#include <numeric>

#include "retseg/adam.hpp"
#include "retseg/tensor.hpp"
#include "support/errors.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace retseg;
using synthetic::random_tensor;

namespace {

template <class T>
std::vector<T> bias_of(const Tensor4<T>& b) {
  return {b.data().begin(), b.data().end()};
}

template <class T>
std::vector<double> as_double(const std::vector<T>& v) {
  return {v.begin(), v.end()};
}

// Distinct values spaced well above the finite-difference step, shuffled.
template <class T>
Tensor4<T> spaced_tensor(Shape4 s, std::uint64_t seed) {
  std::vector<T> v(s.count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(-1.0 + 0.05 * i);
  Rng rng(seed);
  rng.shuffle(v);
  return Tensor4<T>(s, v);
}

// Values bounded away from relu's kink.
template <class T>
Tensor4<T> away_from_zero(Shape4 s, std::uint64_t seed) {
  Tensor4<T> t = random_tensor<T>(s, seed, 0.05, 1.0);
  Rng rng(seed + 1);
  for (auto& v : t.data())
    if (rng.uniform01() < 0.5) v = -v;
  return t;
}

}  // namespace

TEST_SUITE("tensor_nn") {
  TEST_CASE("tensor construction checks lengths") {
    CHECK_ERROR(Tensor(Shape4{1, 1, 2, 2}, std::vector<float>(3)), ErrorCode::ShapeMismatch);
    Tensor t(Shape4{2, 3, 4, 5}, 1.5f);
    CHECK(t.size() == 120);
    CHECK(t(1, 2, 3, 4) == 1.5f);
    CHECK(t.offset(1, 0, 0, 0) == 60);
  }

  TEST_CASE("zero kernel gives the bias") {
    Tensor x = random_tensor<float>({1, 1, 3, 3}, 1);
    Tensor w(Shape4{1, 1, 3, 3}, 0.f);
    std::vector<float> b{0.7f};
    Tensor y = nn::conv2d<float>(x, w, b);
    for (float v : y.data()) CHECK(v == 0.7f);
  }

  TEST_CASE("identity kernel gives the input") {
    Tensor x = random_tensor<float>({2, 1, 5, 4}, 2);
    Tensor w(Shape4{1, 1, 3, 3}, 0.f);
    w(0, 0, 1, 1) = 1.f;
    std::vector<float> b{0.f};
    CHECK(nn::conv2d<float>(x, w, b) == x);
  }

  TEST_CASE("conv2d shape errors") {
    Tensor x(Shape4{1, 2, 4, 4});
    std::vector<float> b{0.f};
    CHECK_ERROR(nn::conv2d<float>(x, Tensor(Shape4{1, 3, 3, 3}), b), ErrorCode::ShapeMismatch);
    CHECK_ERROR(nn::conv2d<float>(x, Tensor(Shape4{1, 2, 2, 2}), b), ErrorCode::ShapeMismatch);
    CHECK_ERROR(nn::conv2d<float>(x, Tensor(Shape4{2, 2, 3, 3}), b), ErrorCode::ShapeMismatch);
    Tensor bad(Shape4{1, 2, 1, 1});
    bad(0, 0, 0, 0) = std::numeric_limits<float>::infinity();
    CHECK_ERROR(nn::conv2d<float>(Tensor(Shape4{1, 1, 1, 1}, 1.f), Tensor(Shape4{2, 1, 1, 1}, 1e38f),
                                  std::vector<float>{1e38f, 3e38f}),
                ErrorCode::NonFiniteValue);
  }

  TEST_CASE_TEMPLATE("conv2d matches the direct-sum oracle and finite differences", T, float, double) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Tensor4<T> x = random_tensor<T>({2, 3, 5, 5}, seed);
      const int k = seed % 4 == 3 ? 1 : 3;
      Tensor4<T> w = random_tensor<T>({4, 3, k, k}, seed + 100);
      std::vector<T> b = bias_of(random_tensor<T>({4, 1, 1, 1}, seed + 200));
      Tensor4<T> y = nn::conv2d<T>(x, w, b);
      auto ref = oracle::conv2d(x, w, as_double(b));
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::fabs(y.data()[i] - ref.data()[i]) <= 1e-5);

      Tensor4<T> r = random_tensor<T>(y.shape(), seed + 300);
      auto g = nn::conv2d_backward<T>(x, w, r);
      auto loss = [&] { return gradcheck::project(nn::conv2d<T>(x, w, b), r); };
      CHECK(gradcheck::relative_error(x, g.dx, loss) <= gradcheck::tolerance<T>());
      CHECK(gradcheck::relative_error(w, g.dweight, loss) <= gradcheck::tolerance<T>());
      Tensor4<T> bt(Shape4{4, 1, 1, 1}, b);
      auto bias_loss = [&] { return gradcheck::project(nn::conv2d<T>(x, w, bt.data()), r); };
      CHECK(gradcheck::relative_error(bt, g.dbias, bias_loss) <= gradcheck::tolerance<T>());
    }
  }

  TEST_CASE("maxpool picks the max with first-index ties") {
    Tensor x(Shape4{1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
    auto p = nn::maxpool2(x);
    CHECK(p.y(0, 0, 0, 0) == 4.f);
    CHECK(p.argmax[0] == 3);
    auto c = nn::maxpool2(Tensor(Shape4{1, 1, 2, 2}, 0.25f));
    CHECK(c.y(0, 0, 0, 0) == 0.25f);
    CHECK(c.argmax[0] == 0);
    CHECK_ERROR(nn::maxpool2(Tensor(Shape4{1, 1, 3, 2})), ErrorCode::OddSpatialDim);
  }

  TEST_CASE("maxpool backward routes each gradient to one slot") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Tensor x = random_tensor<float>({1, 1, 6, 6}, seed);
      auto p = nn::maxpool2(x);
      Tensor dy = random_tensor<float>(p.y.shape(), seed + 9);
      Tensor dx = nn::maxpool2_backward<float>(dy, p.argmax, x.shape());
      double sx = 0, sy = 0;
      for (float v : dx.data()) sx += v;
      for (float v : dy.data()) sy += v;
      CHECK(sx == doctest::Approx(sy).epsilon(1e-6));
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          int nonzero = 0;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              const float v = dx(0, 0, 2 * r + a, 2 * c + b);
              if (v != 0.f) {
                ++nonzero;
                CHECK(v == dy(0, 0, r, c));
                CHECK(x(0, 0, 2 * r + a, 2 * c + b) == p.y(0, 0, r, c));
              }
            }
          CHECK(nonzero == 1);
        }
    }
  }

  TEST_CASE_TEMPLATE("maxpool gradient passes finite differences", T, float, double) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Tensor4<T> x = spaced_tensor<T>({2, 2, 4, 6}, seed);
      auto p = nn::maxpool2(x);
      Tensor4<T> r = random_tensor<T>(p.y.shape(), seed + 1);
      Tensor4<T> dx = nn::maxpool2_backward<T>(r, p.argmax, x.shape());
      auto loss = [&] { return gradcheck::project(nn::maxpool2(x).y, r); };
      CHECK(gradcheck::relative_error(x, dx, loss) <= gradcheck::tolerance<T>());
    }
  }

  TEST_CASE("single-pixel up-conv stamps the kernel") {
    Tensor x(Shape4{1, 1, 1, 1}, 2.f);
    Tensor w(Shape4{1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
    std::vector<float> b{0.f};
    Tensor y = nn::upconv2<float>(x, w, b);
    CHECK(y == Tensor(Shape4{1, 1, 2, 2}, std::vector<float>{2, 4, 6, 8}));

    Tensor z = nn::upconv2<float>(Tensor(Shape4{1, 1, 3, 2}), w, std::vector<float>{0.3f});
    CHECK(z.shape() == Shape4{1, 1, 6, 4});
    for (float v : z.data()) CHECK(v == 0.3f);
    CHECK_ERROR(nn::upconv2<float>(Tensor(Shape4{1, 2, 1, 1}), w, b), ErrorCode::ShapeMismatch);
  }

  TEST_CASE_TEMPLATE("upconv2 matches the stamp oracle and finite differences", T, float, double) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Tensor4<T> x = random_tensor<T>({1, 2, 3, 3}, seed);
      Tensor4<T> w = random_tensor<T>({2, 3, 2, 2}, seed + 10);
      Tensor4<T> bt = random_tensor<T>({3, 1, 1, 1}, seed + 20);
      Tensor4<T> y = nn::upconv2<T>(x, w, bt.data());
      auto ref = oracle::upconv2(x, w, as_double(bias_of(bt)));
      REQUIRE(y.shape() == ref.shape());
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::fabs(y.data()[i] - ref.data()[i]) <= 1e-5);

      Tensor4<T> r = random_tensor<T>(y.shape(), seed + 30);
      auto g = nn::upconv2_backward<T>(x, w, r);
      auto loss = [&] { return gradcheck::project(nn::upconv2<T>(x, w, bt.data()), r); };
      CHECK(gradcheck::relative_error(x, g.dx, loss) <= gradcheck::tolerance<T>());
      CHECK(gradcheck::relative_error(w, g.dweight, loss) <= gradcheck::tolerance<T>());
      CHECK(gradcheck::relative_error(bt, g.dbias, loss) <= gradcheck::tolerance<T>());
    }
  }

  TEST_CASE("relu and sigmoid values") {
    Tensor x(Shape4{1, 1, 1, 3}, std::vector<float>{-2, 0, 3});
    CHECK(nn::relu(x) == Tensor(Shape4{1, 1, 1, 3}, std::vector<float>{0, 0, 3}));
    CHECK(nn::sigmoid(Tensor(Shape4{1, 1, 1, 1}, 0.f))(0, 0, 0, 0) == 0.5f);

    Tensor big(Shape4{1, 1, 1, 2}, std::vector<float>{-500.f, 500.f});
    Tensor s = nn::sigmoid(big);
    CHECK(std::isfinite(s(0, 0, 0, 0)));
    CHECK(s(0, 0, 0, 0) > 0.f);
    CHECK(s(0, 0, 0, 1) < 1.f);
    TensorD sd = nn::sigmoid(big.cast<double>());
    CHECK(sd(0, 0, 0, 0) > 0.0);
    CHECK(sd(0, 0, 0, 1) < 1.0);

    Tensor half(Shape4{1, 1, 1, 1}, 0.5f);
    CHECK(nn::sigmoid_backward(half, Tensor(Shape4{1, 1, 1, 1}, 1.f))(0, 0, 0, 0) == 0.25f);
    CHECK_ERROR(nn::relu(Tensor(Shape4{1, 1, 1, 1}, NAN)), ErrorCode::NonFiniteValue);
  }

  TEST_CASE_TEMPLATE("activation gradients pass finite differences", T, float, double) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Tensor4<T> x = away_from_zero<T>({2, 2, 3, 3}, seed);
      Tensor4<T> r = random_tensor<T>(x.shape(), seed + 5);
      Tensor4<T> drelu = nn::relu_backward(nn::relu(x), r);
      CHECK(drelu == nn::relu_backward(x, r));
      auto relu_loss = [&] { return gradcheck::project(nn::relu(x), r); };
      CHECK(gradcheck::relative_error(x, drelu, relu_loss) <= gradcheck::tolerance<T>());

      Tensor4<T> z = random_tensor<T>(x.shape(), seed + 6, -4.0, 4.0);
      Tensor4<T> dsig = nn::sigmoid_backward(nn::sigmoid(z), r);
      auto sig_loss = [&] { return gradcheck::project(nn::sigmoid(z), r); };
      CHECK(gradcheck::relative_error(z, dsig, sig_loss) <= gradcheck::tolerance<T>());
    }
  }

  TEST_CASE("concat stacks a first and split inverts it") {
    Tensor a = random_tensor<float>({2, 2, 3, 4}, 1), b = random_tensor<float>({2, 3, 3, 4}, 2);
    Tensor ab = nn::concat_channels(a, b);
    CHECK(ab.shape() == Shape4{2, 5, 3, 4});
    CHECK(ab(1, 1, 2, 3) == a(1, 1, 2, 3));
    CHECK(ab(1, 2, 0, 0) == b(1, 0, 0, 0));
    auto [da, db] = nn::split_channels(ab, 2);
    CHECK(da == a);
    CHECK(db == b);
    CHECK_ERROR(nn::concat_channels(a, Tensor(Shape4{2, 1, 3, 5})), ErrorCode::SpatialMismatch);
  }

  TEST_CASE_TEMPLATE("concat gradient of a sum is all ones", T, float, double) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Tensor4<T> a = random_tensor<T>({1, 2, 2, 3}, seed), b = random_tensor<T>({1, 1, 2, 3}, seed + 1);
      Tensor4<T> ones(nn::concat_channels(a, b).shape(), T(1));
      auto [da, db] = nn::split_channels(ones, 2);
      CHECK(da == Tensor4<T>(a.shape(), T(1)));
      auto loss = [&] { return gradcheck::project(nn::concat_channels(a, b), ones); };
      CHECK(gradcheck::relative_error(a, da, loss) <= gradcheck::tolerance<T>());
      CHECK(gradcheck::relative_error(b, db, loss) <= gradcheck::tolerance<T>());
    }
  }

  TEST_CASE("dice loss closed forms") {
    Tensor t = random_tensor<float>({1, 1, 4, 4}, 3, 0.0, 1.0);
    for (auto& v : t.data()) v = v >= 0.5f ? 1.f : 0.f;
    CHECK(nn::soft_dice_loss(t, t).loss == 0.0f);

    Tensor zeros(Shape4{2, 1, 3, 3}, 0.f), ones(Shape4{2, 1, 3, 3}, 1.f);
    CHECK(nn::soft_dice_loss(zeros, ones).loss == doctest::Approx(1.0 - 1.0 / 19.0).epsilon(1e-7));
    CHECK_ERROR(nn::soft_dice_loss(zeros, Tensor(Shape4{1, 1, 3, 3})), ErrorCode::ShapeMismatch);
  }

  TEST_CASE_TEMPLATE("dice gradient passes finite differences and loss stays in [0,1)", T, float, double) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Tensor4<T> p = random_tensor<T>({1, 1, 4, 4}, seed, 0.05, 0.95);
      Tensor4<T> t = random_tensor<T>(p.shape(), seed + 1, 0.0, 1.0);
      for (auto& v : t.data()) v = v >= T(0.5) ? T(1) : T(0);
      auto d = nn::soft_dice_loss(p, t);
      CHECK(d.loss >= T(0));
      CHECK(d.loss < T(1));
      auto loss = [&] { return double(nn::soft_dice_loss(p, t).loss); };
      CHECK(gradcheck::relative_error(p, d.dprobs, loss) <= gradcheck::tolerance<T>());
    }
  }

  TEST_CASE("gradient descent on dice lowers the loss") {
    Tensor p = random_tensor<float>({1, 1, 4, 4}, 1, 0.2, 0.8);
    Tensor t = random_tensor<float>(p.shape(), 2, 0.0, 1.0);
    for (auto& v : t.data()) v = v >= 0.5f ? 1.f : 0.f;
    float prev = nn::soft_dice_loss(p, t).loss;
    for (int step = 0; step < 10; ++step) {
      auto d = nn::soft_dice_loss(p, t);
      for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = std::clamp(p.data()[i] - 0.5f * d.dprobs.data()[i], 0.f, 1.f);
      float now = nn::soft_dice_loss(p, t).loss;
      CHECK(now < prev);
      prev = now;
    }
  }

  TEST_CASE("adam zero gradient leaves the parameter alone") {
    Tensor p = random_tensor<float>({1, 2, 2, 2}, 1);
    Tensor before = p;
    AdamMoments<float> m;
    adam_step(p, Tensor(p.shape(), 0.f), m, AdamHyper{}, 1);
    CHECK(p == before);
  }

  TEST_CASE("adam first step moves each element by about lr") {
    Tensor p(Shape4{1, 1, 1, 4}, 0.f);
    Tensor g(Shape4{1, 1, 1, 4}, std::vector<float>{3.f, -0.02f, 150.f, -7.f});
    AdamMoments<float> m;
    adam_step(p, g, m, AdamHyper{}, 1);
    for (int i = 0; i < 4; ++i) CHECK(std::fabs(std::fabs(p(0, 0, 0, i)) - 1e-4) <= 1e-8);
    CHECK(p(0, 0, 0, 0) < 0.f);
    CHECK(p(0, 0, 0, 1) > 0.f);
  }

  TEST_CASE("two adam steps match a scalar simulation") {
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.37, p0 = 0.5;
    double p = p0, m = 0, v = 0;
    for (int t = 1; t <= 2; ++t) {
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      p -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    }
    TensorD param(Shape4{1, 1, 1, 1}, p0);
    TensorD grad(Shape4{1, 1, 1, 1}, g);
    AdamMoments<double> mom;
    AdamHyper hyper{lr, b1, b2, eps};
    adam_step(param, grad, mom, hyper, 1);
    adam_step(param, grad, mom, hyper, 2);
    CHECK(std::fabs(param(0, 0, 0, 0) - p) <= 1e-7);

    Tensor pf(Shape4{1, 1, 1, 1}, float(p0));
    AdamMoments<float> mf;
    adam_step(pf, Tensor(pf.shape(), float(g)), mf, hyper, 1);
    adam_step(pf, Tensor(pf.shape(), float(g)), mf, hyper, 2);
    CHECK(std::fabs(pf(0, 0, 0, 0) - p) <= 1e-7);
  }

  TEST_CASE("adam is deterministic and complete") {
    ParameterList<float> a{{"w", random_tensor<float>({2, 2, 3, 3}, 1)}, {"b", random_tensor<float>({2, 1, 1, 1}, 2)}};
    ParameterList<float> b = a;
    LayerGrads<float> g{{"w", random_tensor<float>({2, 2, 3, 3}, 3)}, {"b", random_tensor<float>({2, 1, 1, 1}, 4)}};
    AdamState<float> sa, sb;
    for (int i = 0; i < 3; ++i) {
      sa.step(a, g);
      sb.step(b, g);
    }
    CHECK(a == b);
    CHECK(sa == sb);
    CHECK(sa.t() == 3);
    g.erase("b");
    CHECK_ERROR(sa.step(a, g), ErrorCode::ShapeMismatch);
    CHECK_ERROR(AdamState<float>(AdamHyper{0.0}), ErrorCode::ConfigInvalid);
    AdamMoments<float> m;
    Tensor p(Shape4{1, 1, 1, 1});
    CHECK_ERROR(adam_step(p, Tensor(Shape4{1, 1, 1, 2}), m, AdamHyper{}, 1), ErrorCode::ShapeMismatch);
    CHECK_ERROR(adam_step(p, Tensor(Shape4{1, 1, 1, 1}, NAN), m, AdamHyper{}, 1), ErrorCode::NonFiniteValue);
  }
}
