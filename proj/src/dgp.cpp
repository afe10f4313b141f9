#include "tnet/dgp.hpp"

#include <cmath>

namespace tnet {

OutcomeVariant parse_variant(const std::string& name) {
  if (name == "homo") return OutcomeVariant::kHomo;
  if (name == "hete") return OutcomeVariant::kHete;
  if (name == "hete_z") return OutcomeVariant::kHeteZ;
  throw ConfigError("unknown outcome variant: " + name);
}

std::string variant_name(OutcomeVariant v) {
  switch (v) {
    case OutcomeVariant::kHomo: return "homo";
    case OutcomeVariant::kHete: return "hete";
    case OutcomeVariant::kHeteZ: return "hete_z";
  }
  return "?";
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "erdos_renyi") return GraphKind::kErdosRenyi;
  if (name == "preferential_attachment")
    return GraphKind::kPreferentialAttachment;
  if (name == "edge_list_file") return GraphKind::kEdgeListFile;
  throw ConfigError("unknown graph kind: " + name);
}

std::shared_ptr<Graph> generate_graph(GraphKind kind, int n, double param,
                                      std::uint64_t seed,
                                      const std::string& path) {
  if (kind == GraphKind::kEdgeListFile)
    return std::make_shared<Graph>(load_edge_list(path, n));
  if (n < 2) throw ConfigError("graph needs n >= 2");
  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  if (kind == GraphKind::kErdosRenyi) {
    if (param < 0.0 || param > 1.0)
      throw ConfigError("erdos_renyi probability outside [0,1]");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (u(rng) < param) edges.emplace_back(i, j);
  } else {
    // Barabasi-Albert: each new node attaches to m targets drawn from the
    // endpoint urn (degree-proportional), seeded by an (m+1)-clique.
    const int m = static_cast<int>(param);
    if (m < 1 || m >= n) throw ConfigError("attachment count m out of range");
    std::vector<int> urn;
    for (int i = 0; i <= m && i < n; ++i)
      for (int j = i + 1; j <= m && j < n; ++j) {
        edges.emplace_back(i, j);
        urn.push_back(i);
        urn.push_back(j);
      }
    for (int v = m + 1; v < n; ++v) {
      std::vector<int> targets;
      while (static_cast<int>(targets.size()) < m) {
        std::uniform_int_distribution<std::size_t> pick(0, urn.size() - 1);
        const int cand = urn[pick(rng)];
        if (std::find(targets.begin(), targets.end(), cand) == targets.end())
          targets.push_back(cand);
      }
      for (int tgt : targets) {
        edges.emplace_back(v, tgt);
        urn.push_back(v);
        urn.push_back(tgt);
      }
    }
  }
  return std::make_shared<Graph>(n, edges);
}

Mat generate_covariates(int n, int dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat x(n, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
  return x;
}

namespace {

Vec sigmoid_of(const Mat& features, const Vec& w) {
  Vec lin = features * w;
  return (1.0 / (1.0 + (-lin.array()).exp())).matrix();
}

}  // namespace

Vec generate_treatments(const Graph& graph, const Mat& features,
                        const Vec& w1) {
  require(features.rows() == graph.n(), "feature rows mismatch");
  require(features.cols() == w1.size(), "w1 length mismatch");
  const Vec pt = sigmoid_of(features, w1);
  const Vec tpt = pt + graph.neighbor_mean(pt);
  const double threshold = tpt.mean();
  Vec t(graph.n());
  for (int i = 0; i < graph.n(); ++i) t(i) = tpt(i) > threshold ? 1.0 : 0.0;
  return t;
}

TruthOracle::TruthOracle(OutcomeVariant variant, Vec po, Vec po_neigh)
    : variant_(variant), po_(std::move(po)), po_neigh_(std::move(po_neigh)) {}

Vec TruthOracle::potential_outcomes(double t, double z) const {
  Vec y = Vec::Constant(po_.size(), t + z) + po_ + 0.5 * po_neigh_;
  if (variant_ == OutcomeVariant::kHete || variant_ == OutcomeVariant::kHeteZ)
    y += t * (po_ + 0.5 * po_neigh_);
  if (variant_ == OutcomeVariant::kHeteZ)
    y += z * (0.5 * po_ + po_neigh_);
  return y;
}

double TruthOracle::potential_outcome(int i, double t, double z) const {
  double y = t + z + po_(i) + 0.5 * po_neigh_(i);
  if (variant_ == OutcomeVariant::kHete || variant_ == OutcomeVariant::kHeteZ)
    y += t * (po_(i) + 0.5 * po_neigh_(i));
  if (variant_ == OutcomeVariant::kHeteZ)
    y += z * (0.5 * po_(i) + po_neigh_(i));
  return y;
}

GeneratedDataset generate(const DgpSpec& spec, std::shared_ptr<Graph> graph) {
  spec.validate();
  require(graph != nullptr, "generate needs a graph");
  const int n = graph->n();
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  GeneratedDataset out;
  out.dataset.features = generate_covariates(n, spec.covariate_dim, rng);
  out.w1 = Vec(spec.covariate_dim);
  out.w2 = Vec(spec.covariate_dim);
  for (int k = 0; k < spec.covariate_dim; ++k) out.w1(k) = gauss(rng);
  for (int k = 0; k < spec.covariate_dim; ++k) out.w2(k) = gauss(rng);

  out.dataset.graph = graph;
  out.dataset.treatments =
      generate_treatments(*graph, out.dataset.features, out.w1);
  out.dataset.exposures =
      compute_exposure(*graph, out.dataset.treatments).z;

  const Vec po = sigmoid_of(out.dataset.features, out.w2);
  out.truth = std::make_shared<TruthOracle>(spec.variant, po,
                                            graph->neighbor_mean(po));
  out.noise = Vec(n);
  for (int i = 0; i < n; ++i) out.noise(i) = spec.noise_sd * gauss(rng);

  out.dataset.outcomes = Vec(n);
  for (int i = 0; i < n; ++i)
    out.dataset.outcomes(i) =
        out.truth->potential_outcome(i, out.dataset.treatments(i),
                                     out.dataset.exposures(i)) +
        out.noise(i);
  return out;
}

TrueEffect true_effect(const TruthOracle& truth, double t, double z,
                       double t2, double z2) {
  TrueEffect e;
  e.per_unit =
      truth.potential_outcomes(t, z) - truth.potential_outcomes(t2, z2);
  e.average = e.per_unit.mean();
  return e;
}

}  // namespace tnet
