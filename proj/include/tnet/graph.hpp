#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tnet/types.hpp"

namespace tnet {

// Simple undirected graph; edge input is deduplicated and symmetrized.
class Graph {
 public:
  Graph(int n, const std::vector<std::pair<int, int>>& edges);

  int n() const { return n_; }
  const std::vector<int>& neighbors(int i) const {
    return adjacency_[static_cast<std::size_t>(i)];
  }
  int degree(int i) const {
    return static_cast<int>(adjacency_[static_cast<std::size_t>(i)].size());
  }
  long edge_count() const { return edge_count_; }

  // Symmetric-normalized adjacency 1/sqrt(d_i d_j), no self loops.
  const SpMat& normalized_adjacency() const { return norm_adj_; }

  // Mean of a per-unit value over each unit's neighborhood (0 if isolated).
  Vec neighbor_mean(const Vec& values) const;

 private:
  int n_;
  long edge_count_ = 0;
  std::vector<std::vector<int>> adjacency_;
  SpMat norm_adj_;
};

struct Exposure {
  Vec z;                 // per-unit, in [0,1]
  int isolated_units = 0;
};

Exposure compute_exposure(const Graph& graph, const Vec& treatments);

// h_i = sum_{j in N_i} 1/sqrt(d_i d_j) * W^T x_j, optionally relu'd.
Mat gcn_aggregate(const Graph& graph, const Mat& features, const Mat& weight,
                  bool relu_activation = false);

Graph load_edge_list(const std::string& path, int n);
void save_edge_list(const Graph& graph, const std::string& path);

}  // namespace tnet
