#include "tnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tnet {

Graph::Graph(int n, const std::vector<std::pair<int, int>>& edges) : n_(n) {
  require(n >= 1, "graph needs at least one unit");
  adjacency_.assign(static_cast<std::size_t>(n), {});
  for (const auto& [a, b] : edges) {
    require(a >= 0 && a < n && b >= 0 && b < n, "edge endpoint out of range");
    if (a == b) continue;  // drop self-loops
    adjacency_[static_cast<std::size_t>(a)].push_back(b);
    adjacency_[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nbrs : adjacency_) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    edge_count_ += static_cast<long>(nbrs.size());
  }
  edge_count_ /= 2;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(2 * edge_count_));
  for (int i = 0; i < n; ++i) {
    const double di = static_cast<double>(degree(i));
    for (int j : neighbors(i)) {
      const double dj = static_cast<double>(degree(j));
      trips.emplace_back(i, j, 1.0 / std::sqrt(di * dj));
    }
  }
  norm_adj_.resize(n, n);
  norm_adj_.setFromTriplets(trips.begin(), trips.end());
}

Vec Graph::neighbor_mean(const Vec& values) const {
  require(values.size() == n_, "neighbor_mean length mismatch");
  Vec out = Vec::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    const auto& nbrs = neighbors(i);
    if (nbrs.empty()) continue;
    double s = 0.0;
    for (int j : nbrs) s += values(j);
    out(i) = s / static_cast<double>(nbrs.size());
  }
  return out;
}

Exposure compute_exposure(const Graph& graph, const Vec& treatments) {
  require(treatments.size() == graph.n(), "treatments length mismatch");
  Exposure e;
  e.z = graph.neighbor_mean(treatments);
  for (int i = 0; i < graph.n(); ++i)
    if (graph.degree(i) == 0) ++e.isolated_units;
  return e;
}

Mat gcn_aggregate(const Graph& graph, const Mat& features, const Mat& weight,
                  bool relu_activation) {
  require(features.rows() == graph.n(), "features row count mismatch");
  require(features.cols() == weight.rows(), "gcn weight shape mismatch");
  Mat h = graph.normalized_adjacency() * (features * weight);
  if (relu_activation) h = h.cwiseMax(0.0);
  return h;
}

Graph load_edge_list(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list: " + path);
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int a = -1, b = -1;
    if (!(ss >> a >> b))
      throw IoError("malformed edge list line " + std::to_string(lineno) +
                    " in " + path);
    edges.emplace_back(a, b);
  }
  return Graph(n, edges);
}

void save_edge_list(const Graph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list: " + path);
  out << "# " << graph.n() << " units, " << graph.edge_count() << " edges\n";
  for (int i = 0; i < graph.n(); ++i)
    for (int j : graph.neighbors(i))
      if (i < j) out << i << " " << j << "\n";
}

}  // namespace tnet
