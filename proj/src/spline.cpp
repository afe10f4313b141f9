#include "tnet/spline.hpp"

namespace tnet {

SplineBasis::SplineBasis(int dim, int degree) : dim_(dim), degree_(degree) {
  require(degree >= 0, "spline degree must be non-negative");
  require(dim >= degree + 1, "spline dim must be at least degree+1");
  // Knot vector length dim + degree + 1: degree+1 copies of each endpoint,
  // interior knots equally spaced.
  const int interior = dim - degree - 1;
  for (int i = 0; i <= degree; ++i) knots_.push_back(0.0);
  for (int i = 1; i <= interior; ++i)
    knots_.push_back(static_cast<double>(i) / (interior + 1));
  for (int i = 0; i <= degree; ++i) knots_.push_back(1.0);
}

// Cox-de Boor recursion over all basis functions at once.
Vec SplineBasis::evaluate(double z) const {
  if (z < 0.0 || z > 1.0)
    throw std::domain_error("spline argument outside [0,1]");
  const int m = static_cast<int>(knots_.size()) - 1;
  // Degree-0 indicators; the last interval is closed at z = 1.
  std::vector<double> b(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    const bool last = knots_[static_cast<std::size_t>(i) + 1] >= 1.0 &&
                      knots_[static_cast<std::size_t>(i)] < 1.0;
    if ((z >= knots_[static_cast<std::size_t>(i)] &&
         z < knots_[static_cast<std::size_t>(i) + 1]) ||
        (last && z == 1.0))
      b[static_cast<std::size_t>(i)] = 1.0;
  }
  for (int d = 1; d <= degree_; ++d) {
    for (int i = 0; i + d < m; ++i) {
      const double den1 = knots_[static_cast<std::size_t>(i + d)] -
                          knots_[static_cast<std::size_t>(i)];
      const double den2 = knots_[static_cast<std::size_t>(i + d + 1)] -
                          knots_[static_cast<std::size_t>(i + 1)];
      double v = 0.0;
      if (den1 > 0.0)
        v += (z - knots_[static_cast<std::size_t>(i)]) / den1 *
             b[static_cast<std::size_t>(i)];
      if (den2 > 0.0)
        v += (knots_[static_cast<std::size_t>(i + d + 1)] - z) / den2 *
             b[static_cast<std::size_t>(i + 1)];
      b[static_cast<std::size_t>(i)] = v;
    }
  }
  Vec out(dim_);
  for (int k = 0; k < dim_; ++k) out(k) = b[static_cast<std::size_t>(k)];
  return out;
}

Mat SplineBasis::design_matrix(const Vec& z) const {
  Mat phi(z.size(), dim_);
  for (Eigen::Index i = 0; i < z.size(); ++i)
    phi.row(i) = evaluate(z(i)).transpose();
  return phi;
}

}  // namespace tnet
