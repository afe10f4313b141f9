#include "tnet/nn.hpp"

#include <cmath>

namespace tnet {

Mat glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Mat w(rows, cols);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  return w;
}

MlpParams make_mlp(Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                   int n_layers, Activation output_activation,
                   double dropout_rate, Rng& rng) {
  require(n_layers >= 1, "mlp needs at least one layer");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate in [0,1)");
  MlpParams p;
  p.output_activation = output_activation;
  p.dropout_rate = dropout_rate;
  Eigen::Index prev = in;
  for (int l = 0; l < n_layers; ++l) {
    const Eigen::Index width = (l == n_layers - 1) ? out : hidden;
    p.layers.push_back({glorot(prev, width, rng), Mat::Zero(1, width)});
    prev = width;
  }
  return p;
}

static int apply_activation(Tape& tape, int x, Activation act) {
  switch (act) {
    case Activation::kRelu:
      return tape.relu(x);
    case Activation::kSigmoid:
      return tape.sigmoid(x);
    case Activation::kSoftmax:
      return tape.softmax_rows(x);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

int mlp_forward(Tape& tape, const MlpParams& params,
                const std::vector<int>& layer_ids, int input, bool training,
                Rng& dropout_rng) {
  require(layer_ids.size() == 2 * params.layers.size(),
          "layer_ids must hold (weight, bias) per layer");
  require(tape.val(input).cols() == params.in_width(),
          "mlp input width mismatch");
  int h = input;
  const int n_layers = static_cast<int>(params.layers.size());
  for (int l = 0; l < n_layers; ++l) {
    h = tape.matmul(h, layer_ids[2 * static_cast<std::size_t>(l)]);
    h = tape.add_rowvec(h, layer_ids[2 * static_cast<std::size_t>(l) + 1]);
    if (l < n_layers - 1) {
      h = tape.relu(h);
      h = tape.dropout(h, params.dropout_rate, dropout_rng, training);
    } else {
      h = apply_activation(tape, h, params.output_activation);
    }
  }
  return h;
}

Mat mlp_eval(const MlpParams& params, const Mat& input) {
  Tape tape;
  std::vector<int> ids;
  for (const auto& layer : params.layers) {
    ids.push_back(tape.leaf(layer.weight));
    ids.push_back(tape.leaf(layer.bias));
  }
  Rng rng(0);
  const int out = mlp_forward(tape, params, ids, tape.leaf(input),
                              /*training=*/false, rng);
  return tape.val(out);
}

void AdamState::init(const std::vector<Mat*>& params, double learning_rate) {
  lr = learning_rate;
  step = 0;
  m.clear();
  v.clear();
  for (const Mat* p : params) {
    m.push_back(Mat::Zero(p->rows(), p->cols()));
    v.push_back(Mat::Zero(p->rows(), p->cols()));
  }
}

void AdamState::update(const std::vector<Mat*>& params,
                       const std::vector<Mat>& grads) {
  require(params.size() == m.size() && grads.size() == m.size(),
          "adam buffers misaligned");
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * grads[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * grads[k].cwiseProduct(grads[k]);
    const Mat mhat = m[k] / bc1;
    const Mat vhat = v[k] / bc2;
    params[k]->array() -=
        lr * mhat.array() / (vhat.array().sqrt() + eps);
  }
}

}  // namespace tnet
