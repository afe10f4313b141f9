#pragma once

#include <vector>

#include "tnet/tape.hpp"
#include "tnet/types.hpp"

namespace tnet {

enum class Activation { kRelu, kSigmoid, kSoftmax, kIdentity };

struct MlpLayer {
  Mat weight;  // in x out
  Mat bias;    // 1 x out
};

struct MlpParams {
  std::vector<MlpLayer> layers;
  Activation output_activation = Activation::kIdentity;
  double dropout_rate = 0.0;

  Eigen::Index in_width() const { return layers.front().weight.rows(); }
  Eigen::Index out_width() const { return layers.back().weight.cols(); }
};

// Hidden layers use relu + dropout; the output layer uses output_activation.
MlpParams make_mlp(Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                   int n_layers, Activation output_activation,
                   double dropout_rate, Rng& rng);

int mlp_forward(Tape& tape, const MlpParams& params,
                const std::vector<int>& layer_ids, int input, bool training,
                Rng& dropout_rng);

// Convenience: puts params on the tape as leaves, then runs the forward pass.
Mat mlp_eval(const MlpParams& params, const Mat& input);

Mat glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng);

struct AdamState {
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Mat> m;
  std::vector<Mat> v;

  void init(const std::vector<Mat*>& params, double learning_rate);
  void update(const std::vector<Mat*>& params, const std::vector<Mat>& grads);
};

}  // namespace tnet
