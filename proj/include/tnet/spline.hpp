#pragma once

#include <vector>

#include "tnet/types.hpp"

namespace tnet {

// Clamped (open uniform) B-spline basis on [0,1]. Endpoint knots have
// multiplicity degree+1, so the basis is a partition of unity on the
// closed interval.
class SplineBasis {
 public:
  SplineBasis(int dim, int degree = 2);

  int dim() const { return dim_; }
  int degree() const { return degree_; }

  // Basis values (phi_1(z), ..., phi_K(z)); z must lie in [0,1].
  Vec evaluate(double z) const;

  // n x K matrix of basis values at each z.
  Mat design_matrix(const Vec& z) const;

  const std::vector<double>& knots() const { return knots_; }

 private:
  int dim_;
  int degree_;
  std::vector<double> knots_;
};

}  // namespace tnet
