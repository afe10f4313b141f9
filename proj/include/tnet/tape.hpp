#pragma once

#include <functional>
#include <vector>

#include "tnet/types.hpp"

namespace tnet {

// Reverse-mode tape over dense matrices. The graph is rebuilt every forward
// pass; node ids index into the tape in topological order.
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int)>;

  int leaf(const Mat& v) { return push(v, {}); }

  const Mat& val(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const { return nodes_[id].grad; }
  Mat& grad_mut(int id) { return nodes_[id].grad; }

  // Seeds the root (must be 1x1) with grad 1 and sweeps the tape backwards.
  void backward(int root);

  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int cmul(int a, int b);
  // out.row(i) = a.row(i) + b (b is 1 x cols)
  int add_rowvec(int a, int b);
  // out.row(i) = a.row(i) / c(i)  (c is n x 1)
  int div_colvec(int a, int c);
  // out.col(j) = a.col(j) .* m  (m is n x 1, constant; no grad into m)
  int mul_colmask(int a, const Vec& m);
  int relu(int a);
  int sigmoid(int a);
  int softmax_rows(int a);
  int log_elem(int a);
  int square(int a);
  int sum(int a);
  int scale(int a, double s);
  int add_const(int a, double c);
  // Gradient passes through where the input is strictly inside [lo, hi].
  int clamp(int a, double lo, double hi);
  int max_const(int a, double lo);
  int concat_cols(int a, int b);
  // y = S * x with S constant.
  int spmm(const SpMat& S, int x);
  // Inverted dropout; identity when !training or rate == 0.
  int dropout(int a, double rate, Rng& rng, bool training);
  // out(i) = (1 - w(i)) * grid(i, j(i)) + w(i) * grid(i, j(i) + 1)
  int row_interp(int grid, const std::vector<int>& j, const Vec& w);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    BackFn back;
  };

  int push(Mat v, BackFn back) {
    nodes_.push_back({std::move(v), Mat(), std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace tnet
