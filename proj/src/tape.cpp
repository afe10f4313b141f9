#include "tnet/tape.hpp"

#include <cmath>

namespace tnet {

void Tape::backward(int root) {
  require(nodes_[root].value.size() == 1, "backward root must be scalar");
  for (auto& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  nodes_[root].grad(0, 0) = 1.0;
  for (int i = root; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back(*this, i);
  }
}

int Tape::matmul(int a, int b) {
  require(val(a).cols() == val(b).rows(), "matmul shape mismatch");
  Mat v = val(a) * val(b);
  return push(std::move(v), [a, b](Tape& t, int self) {
    const Mat& g = t.grad(self);
    t.grad_mut(a).noalias() += g * t.val(b).transpose();
    t.grad_mut(b).noalias() += t.val(a).transpose() * g;
  });
}

int Tape::add(int a, int b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(),
          "add shape mismatch");
  return push(val(a) + val(b), [a, b](Tape& t, int self) {
    t.grad_mut(a) += t.grad(self);
    t.grad_mut(b) += t.grad(self);
  });
}

int Tape::sub(int a, int b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(),
          "sub shape mismatch");
  return push(val(a) - val(b), [a, b](Tape& t, int self) {
    t.grad_mut(a) += t.grad(self);
    t.grad_mut(b) -= t.grad(self);
  });
}

int Tape::cmul(int a, int b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(),
          "cmul shape mismatch");
  return push(val(a).cwiseProduct(val(b)), [a, b](Tape& t, int self) {
    t.grad_mut(a) += t.grad(self).cwiseProduct(t.val(b));
    t.grad_mut(b) += t.grad(self).cwiseProduct(t.val(a));
  });
}

int Tape::add_rowvec(int a, int b) {
  require(val(b).rows() == 1 && val(a).cols() == val(b).cols(),
          "add_rowvec shape mismatch");
  Mat v = val(a).rowwise() + val(b).row(0);
  return push(std::move(v), [a, b](Tape& t, int self) {
    t.grad_mut(a) += t.grad(self);
    t.grad_mut(b) += t.grad(self).colwise().sum();
  });
}

int Tape::div_colvec(int a, int c) {
  require(val(c).cols() == 1 && val(a).rows() == val(c).rows(),
          "div_colvec shape mismatch");
  Mat v = val(a).array().colwise() / val(c).col(0).array();
  return push(std::move(v), [a, c](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const auto cv = t.val(c).col(0).array();
    t.grad_mut(a) += (g.array().colwise() / cv).matrix();
    t.grad_mut(c).col(0) -=
        (g.cwiseProduct(t.val(self)).rowwise().sum().array() / cv).matrix();
  });
}

int Tape::mul_colmask(int a, const Vec& m) {
  require(val(a).rows() == m.size(), "mul_colmask shape mismatch");
  Mat v = val(a).array().colwise() * m.array();
  return push(std::move(v), [a, m](Tape& t, int self) {
    t.grad_mut(a) += (t.grad(self).array().colwise() * m.array()).matrix();
  });
}

int Tape::relu(int a) {
  return push(val(a).cwiseMax(0.0), [a](Tape& t, int self) {
    t.grad_mut(a) +=
        (t.val(a).array() > 0.0).cast<double>().matrix().cwiseProduct(
            t.grad(self));
  });
}

int Tape::sigmoid(int a) {
  Mat v = (1.0 / (1.0 + (-val(a).array()).exp())).matrix();
  return push(std::move(v), [a](Tape& t, int self) {
    const auto& y = t.val(self).array();
    t.grad_mut(a) += (t.grad(self).array() * y * (1.0 - y)).matrix();
  });
}

int Tape::softmax_rows(int a) {
  Mat v = val(a);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double m = v.row(i).maxCoeff();
    v.row(i) = (v.row(i).array() - m).exp();
    v.row(i) /= v.row(i).sum();
  }
  return push(std::move(v), [a](Tape& t, int self) {
    const Mat& y = t.val(self);
    const Mat& g = t.grad(self);
    Vec dot = g.cwiseProduct(y).rowwise().sum();
    Mat centered = (g.array().colwise() - dot.array()).matrix();
    t.grad_mut(a) += y.cwiseProduct(centered);
  });
}

int Tape::log_elem(int a) {
  return push(val(a).array().log().matrix(), [a](Tape& t, int self) {
    t.grad_mut(a) += t.grad(self).cwiseQuotient(t.val(a));
  });
}

int Tape::square(int a) {
  return push(val(a).cwiseProduct(val(a)), [a](Tape& t, int self) {
    t.grad_mut(a) += 2.0 * t.grad(self).cwiseProduct(t.val(a));
  });
}

int Tape::sum(int a) {
  Mat v(1, 1);
  v(0, 0) = val(a).sum();
  return push(std::move(v), [a](Tape& t, int self) {
    t.grad_mut(a).array() += t.grad(self)(0, 0);
  });
}

int Tape::scale(int a, double s) {
  return push(val(a) * s, [a, s](Tape& t, int self) {
    t.grad_mut(a) += s * t.grad(self);
  });
}

int Tape::add_const(int a, double c) {
  return push((val(a).array() + c).matrix(), [a](Tape& t, int self) {
    t.grad_mut(a) += t.grad(self);
  });
}

int Tape::clamp(int a, double lo, double hi) {
  Mat v = val(a).cwiseMax(lo).cwiseMin(hi);
  return push(std::move(v), [a, lo, hi](Tape& t, int self) {
    const auto& x = t.val(a).array();
    Mat mask = ((x > lo) && (x < hi)).cast<double>().matrix();
    t.grad_mut(a) += mask.cwiseProduct(t.grad(self));
  });
}

int Tape::max_const(int a, double lo) {
  return push(val(a).cwiseMax(lo), [a, lo](Tape& t, int self) {
    Mat mask = (t.val(a).array() > lo).cast<double>().matrix();
    t.grad_mut(a) += mask.cwiseProduct(t.grad(self));
  });
}

int Tape::concat_cols(int a, int b) {
  require(val(a).rows() == val(b).rows(), "concat_cols row mismatch");
  Mat v(val(a).rows(), val(a).cols() + val(b).cols());
  v << val(a), val(b);
  return push(std::move(v), [a, b](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Eigen::Index ca = t.val(a).cols();
    t.grad_mut(a) += g.leftCols(ca);
    t.grad_mut(b) += g.rightCols(g.cols() - ca);
  });
}

int Tape::spmm(const SpMat& S, int x) {
  require(S.cols() == val(x).rows(), "spmm shape mismatch");
  Mat v = S * val(x);
  return push(std::move(v), [&S, x](Tape& t, int self) {
    t.grad_mut(x).noalias() += S.transpose() * t.grad(self);
  });
}

int Tape::dropout(int a, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) {
    return push(val(a), [a](Tape& t, int self) {
      t.grad_mut(a) += t.grad(self);
    });
  }
  const double keep = 1.0 - rate;
  Mat mask(val(a).rows(), val(a).cols());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = u(rng) < keep ? 1.0 / keep : 0.0;
  return push(val(a).cwiseProduct(mask), [a, mask](Tape& t, int self) {
    t.grad_mut(a) += t.grad(self).cwiseProduct(mask);
  });
}

int Tape::row_interp(int grid, const std::vector<int>& j, const Vec& w) {
  const Mat& g = val(grid);
  require(static_cast<Eigen::Index>(j.size()) == g.rows() &&
              w.size() == g.rows(),
          "row_interp shape mismatch");
  Mat v(g.rows(), 1);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const int lo = j[static_cast<std::size_t>(i)];
    const int hi = lo + 1 < g.cols() ? lo + 1 : lo;
    v(i, 0) = (1.0 - w(i)) * g(i, lo) + w(i) * g(i, hi);
  }
  return push(std::move(v), [grid, j, w](Tape& t, int self) {
    const Mat& gr = t.grad(self);
    Mat& gg = t.grad_mut(grid);
    for (Eigen::Index i = 0; i < gr.rows(); ++i) {
      const int lo = j[static_cast<std::size_t>(i)];
      const int hi = lo + 1 < gg.cols() ? lo + 1 : lo;
      gg(i, lo) += (1.0 - w(i)) * gr(i, 0);
      gg(i, hi) += w(i) * gr(i, 0);
    }
  });
}

}  // namespace tnet
