#pragma once

#include <string>
#include <vector>

#include "tnet/dataset.hpp"
#include "tnet/nn.hpp"
#include "tnet/spline.hpp"
#include "tnet/tape.hpp"

namespace tnet {

struct ModelConfig {
  int covariate_dim = 10;
  int gcn_dim = 64;
  int hidden = 64;
  int rep_dim = 64;
  int mlp_layers = 3;
  int grid_count = 10;   // B
  int spline_dim = 5;    // K per treatment arm
  int spline_degree = 2;
  double dropout = 0.05;
  double g1_clamp = 1e-4;   // propensity kept in [g1_clamp, 1-g1_clamp]
  double g_floor = 1e-2;    // floor on g1*g2 inside ratio terms
};

// All trainable parameters of the estimator: GCN weight, shared
// representation MLP, propensity heads (binary + exposure density grid),
// two outcome heads, and per-arm spline perturbation coefficients.
class TNetModel {
 public:
  TNetModel(const ModelConfig& cfg, std::uint64_t seed);

  ModelConfig cfg;
  Mat gcn_weight;              // p x gcn_dim
  MlpParams rep_mlp;           // (gcn_dim + p) -> rep_dim
  MlpParams g1_head;           // rep_dim -> 1, sigmoid
  MlpParams g2_head;           // rep_dim -> B+1, softmax
  MlpParams mu_treated;        // (1 + rep_dim) -> 1
  MlpParams mu_control;
  Mat eps_treated_coeffs;      // K x 1
  Mat eps_control_coeffs;      // K x 1
  SplineBasis spline;

  // Fixed registry order; spline coefficients are the last two entries.
  std::vector<Mat*> all_params();
  std::vector<const Mat*> all_params() const;
  std::vector<Mat*> nuisance_params();
  std::size_t nuisance_count() const;

  bool finite() const;
};

// Ids of one full forward pass at the observed data, all on one tape.
struct ModelForward {
  std::vector<int> param_ids;  // aligned with all_params()
  int rep = -1;       // n x rep_dim
  int g1_prob = -1;   // n x 1, clamped probability of t = 1
  int g2_grid = -1;   // n x (B+1) normalized density grid values
  std::vector<int> mu_t_ids;   // outcome head leaves, reused per (t,z) query
  std::vector<int> mu_c_ids;
  int eps_t_id = -1;
  int eps_c_id = -1;
};

// Puts parameters on the tape and evaluates the shared representation and
// both propensity heads. The graph must outlive the tape.
ModelForward build_forward(Tape& tape, const TNetModel& model,
                           const Graph& graph, const Mat& features,
                           bool training, Rng& dropout_rng);

// g1(t|x) on the tape: t ? p : 1 - p, per unit.
int propensity_of(Tape& tape, const ModelForward& fwd, const Vec& t);

// Density of the piecewise-linear interpolant through the normalized grid.
int density_at(Tape& tape, const TNetModel& model, const ModelForward& fwd,
               const Vec& z);

// Outcome head selected per-unit by t, with z prepended to the representation.
int outcome_at(Tape& tape, const TNetModel& model, const ModelForward& fwd,
               const Vec& t, const Vec& z, bool training, Rng& dropout_rng);

// Spline perturbation eps(t_i, z_i).
int perturbation_at(Tape& tape, const TNetModel& model,
                    const ModelForward& fwd, const Vec& t, const Vec& z);

// ---- Frozen-model evaluation (no tape, no dropout) ----

Mat represent(const TNetModel& model, const Graph& graph, const Mat& features);
Vec propensity_t(const TNetModel& model, const Mat& rep);  // P(T=1|.)
Vec exposure_density(const TNetModel& model, const Mat& rep, const Vec& z);
Vec outcome(const TNetModel& model, const Mat& rep, const Vec& t, const Vec& z);
Vec perturbation(const TNetModel& model, const Vec& t, const Vec& z);

// Normalized density grid values (n x B+1) from the raw softmax output.
Mat density_grid(const TNetModel& model, const Mat& rep);

void save_checkpoint(const TNetModel& model, const std::string& path,
                     const std::string& config_hash = "");
TNetModel load_checkpoint(const std::string& path,
                          std::string* config_hash = nullptr);

}  // namespace tnet
