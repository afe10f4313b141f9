#pragma once

#include <memory>
#include <string>

#include "tnet/dataset.hpp"

namespace tnet {

enum class OutcomeVariant { kHomo, kHete, kHeteZ };

OutcomeVariant parse_variant(const std::string& name);
std::string variant_name(OutcomeVariant v);

struct DgpSpec {
  OutcomeVariant variant = OutcomeVariant::kHomo;
  double noise_sd = 0.1;
  int covariate_dim = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (noise_sd <= 0.0) throw ConfigError("noise_sd must be positive");
    if (covariate_dim < 1) throw ConfigError("covariate_dim must be >= 1");
  }
};

enum class GraphKind { kErdosRenyi, kPreferentialAttachment, kEdgeListFile };

GraphKind parse_graph_kind(const std::string& name);

// param: edge probability for ER, attachment count m for PA, unused for file.
std::shared_ptr<Graph> generate_graph(GraphKind kind, int n, double param,
                                      std::uint64_t seed,
                                      const std::string& path = "");

// Noise-free potential-outcome oracle. The per-unit signal components are
// fixed at generation time, so counterfactual (t, z) can be evaluated exactly.
class TruthOracle {
 public:
  TruthOracle(OutcomeVariant variant, Vec po, Vec po_neigh);

  // Noise-free y_i(t, z) for every unit at a common (t, z).
  Vec potential_outcomes(double t, double z) const;
  double potential_outcome(int i, double t, double z) const;
  double psi(double t, double z) const {
    return potential_outcomes(t, z).mean();
  }
  const Vec& po() const { return po_; }
  const Vec& po_neigh() const { return po_neigh_; }
  OutcomeVariant variant() const { return variant_; }

 private:
  OutcomeVariant variant_;
  Vec po_;
  Vec po_neigh_;
};

struct GeneratedDataset {
  NetworkDataset dataset;
  Vec noise;  // the drawn e_i, so outcomes reproduce exactly
  std::shared_ptr<TruthOracle> truth;
  Vec w1;
  Vec w2;
};

Mat generate_covariates(int n, int dim, Rng& rng);

// Threshold rule: t_i = 1 iff pt_i + mean_neighbor(pt) > sample mean of that
// sum, with pt_i = sigmoid(w1 . x_i).
Vec generate_treatments(const Graph& graph, const Mat& features,
                        const Vec& w1);

GeneratedDataset generate(const DgpSpec& spec, std::shared_ptr<Graph> graph);

// Exact (tau, tau_i) for a pair of (t, z) settings from the oracle.
struct TrueEffect {
  double average;
  Vec per_unit;
};
TrueEffect true_effect(const TruthOracle& truth, double t, double z,
                       double t2, double z2);

}  // namespace tnet
