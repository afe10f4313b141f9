#pragma once

#include <memory>

#include "tnet/graph.hpp"
#include "tnet/types.hpp"

namespace tnet {

struct NetworkDataset {
  Mat features;                        // n x p
  Vec treatments;                      // entries in {0,1}
  Vec outcomes;
  std::shared_ptr<const Graph> graph;
  Vec exposures;                       // z_i = mean neighbor treatment

  int n() const { return static_cast<int>(features.rows()); }
  int covariate_dim() const { return static_cast<int>(features.cols()); }

  void validate() const {
    require(graph != nullptr, "dataset missing graph");
    require(graph->n() == n(), "graph size mismatch");
    require(treatments.size() == n() && outcomes.size() == n() &&
                exposures.size() == n(),
            "dataset column length mismatch");
    for (int i = 0; i < n(); ++i)
      require(treatments(i) == 0.0 || treatments(i) == 1.0,
              "treatments must be binary");
  }
};

}  // namespace tnet
