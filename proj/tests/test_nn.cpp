#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tnet/nn.hpp"

using namespace tnet;

TEST_CASE("mlp_eval matches hand computation for a relu chain") {
  MlpParams p;
  p.output_activation = Activation::kIdentity;
  MlpLayer l1, l2;
  l1.weight = Mat(2, 2);
  l1.weight << 1, -1, 2, 0;
  l1.bias = Mat::Zero(1, 2);
  l1.bias << 0.5, 0.0;
  l2.weight = Mat(2, 1);
  l2.weight << 1, 3;
  l2.bias = Mat::Constant(1, 1, -1.0);
  p.layers = {l1, l2};

  Mat x(1, 2);
  x << 1.0, 0.5;
  // hidden = relu([1*1+0.5*2+0.5, 1*(-1)+0]) = [2.5, 0]
  // out    = 2.5*1 + 0*3 - 1 = 1.5
  CHECK(mlp_eval(p, x)(0, 0) == doctest::Approx(1.5).epsilon(1e-15));

  p.output_activation = Activation::kSigmoid;
  CHECK(mlp_eval(p, x)(0, 0) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-1.5))).epsilon(1e-15));
}

TEST_CASE("softmax output rows sum to one") {
  Rng rng(3);
  MlpParams p = make_mlp(4, 6, 5, 2, Activation::kSoftmax, 0.0, rng);
  Mat x(7, 4);
  Rng xr(4);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(xr);
  const Mat out = mlp_eval(p, x);
  for (int i = 0; i < 7; ++i) {
    CHECK(out.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.row(i).minCoeff() > 0.0);
  }
}

TEST_CASE("make_mlp shapes") {
  Rng rng(5);
  MlpParams p = make_mlp(10, 32, 3, 3, Activation::kIdentity, 0.1, rng);
  REQUIRE(p.layers.size() == 3);
  CHECK(p.in_width() == 10);
  CHECK(p.out_width() == 3);
  CHECK(p.layers[0].weight.cols() == 32);
  CHECK(p.layers[1].weight.rows() == 32);
  CHECK(p.layers[0].bias.rows() == 1);
}

TEST_CASE("adam first step moves by lr in the gradient sign direction") {
  Mat w = Mat::Constant(2, 2, 1.0);
  Mat g(2, 2);
  g << 3.0, -0.5, 1e-3, 0.0;
  AdamState adam;
  adam.init({&w}, 0.1);
  adam.update({&w}, {g});
  // After bias correction, step ~= lr * g / (|g| + eps') per entry.
  CHECK(w(0, 0) == doctest::Approx(0.9).epsilon(1e-4));
  CHECK(w(0, 1) == doctest::Approx(1.1).epsilon(1e-4));
  CHECK(w(1, 0) == doctest::Approx(0.9).epsilon(1e-2));
  CHECK(w(1, 1) == 1.0);  // zero gradient leaves the entry untouched
}

TEST_CASE("adam drives a quadratic toward its minimum") {
  Mat w(1, 1);
  w << 5.0;
  AdamState adam;
  adam.init({&w}, 0.05);
  double prev = w(0, 0) * w(0, 0);
  double best = prev;
  for (int i = 0; i < 300; ++i) {
    Mat g(1, 1);
    g << 2.0 * w(0, 0);
    adam.update({&w}, {g});
    const double loss = w(0, 0) * w(0, 0);
    if (i < 60) CHECK(loss < prev);  // far from optimum: strict descent
    prev = loss;
    best = std::min(best, loss);
  }
  CHECK(best < 1e-3);
  CHECK(std::abs(w(0, 0)) < 0.5);
}
