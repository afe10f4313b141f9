#pragma once

#include <optional>
#include <vector>

#include "tnet/model.hpp"

namespace tnet {

struct TrainConfig {
  double alpha = 0.5;
  double gamma = 0.5;
  double beta = -1.0;  // <= 0 means the default 20 / sqrt(n_train)
  double lr_nuisance = 1e-3;
  double lr_targeted = 1e-3;
  int iterations = 300;
  std::uint64_t seed = 0;
  int early_stop_patience = 30;
  double val_fraction = 0.2;

  void validate() const {
    if (alpha <= 0.0 || gamma <= 0.0)
      throw ConfigError("alpha and gamma must be positive");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
      throw ConfigError("val_fraction in [0,1)");
  }
};

struct LossRow {
  int iteration;
  double l1;
  double l2;
  double l3;
  double val_l2;  // NaN when no validation split
};

struct TrainResult {
  std::vector<LossRow> history;
  double beta_used = 0.0;
  int lr_halvings = 0;
  int best_iteration = -1;
};

enum class Loss { kL1, kL2, kL3, kL1PlusL2 };

// Which parameter groups receive gradient updates (dr_stress freezes some).
struct UpdateMask {
  bool propensity = true;  // g1 + g2 heads
  bool outcome = true;     // mu heads
};

// Regression targets used by the losses; dr_stress label shuffling replaces
// them while the observed data keeps flowing through the forward pass.
struct LossTargets {
  const Vec* l1_treatments = nullptr;  // CE target + g1 arm in L1
  const Vec* l1_exposures = nullptr;   // density evaluation point in L1
  const Vec* l2_outcomes = nullptr;    // L2 target (L3 keeps the real y)
};

// Alternating optimization: per iteration one Adam step on L1+L2 over the
// nuisance parameters, then one Adam step on L3 over all parameters. After
// the loop a closed-form fluctuation regression places the spline
// coefficients at the exact L3 stationary point (zero spline-weighted score).
// train_indices restricts the losses to those units (nullptr = all units);
// a val_fraction share of them is held out for early stopping on L2.
TrainResult train(TNetModel& model, const NetworkDataset& data,
                  const TrainConfig& cfg,
                  const std::vector<int>* train_indices = nullptr,
                  const UpdateMask& update = {},
                  const LossTargets& targets = {});

// Deterministic (dropout-free) loss evaluation and gradients, in the
// all_params() registry order.
struct LossGradients {
  double value;
  std::vector<Mat> grads;
};
double loss_value(const TNetModel& model, const NetworkDataset& data,
                  Loss which, const TrainConfig& cfg);
LossGradients loss_with_gradients(const TNetModel& model,
                                  const NetworkDataset& data, Loss which,
                                  const TrainConfig& cfg);

// Per-unit indicator part of the influence curve at the observed points:
// (y_i - [mu_i + eps_i/g_i]) / g_i, with g_i = max(g1*g2, floor).
Vec eic_arm_residuals(const TNetModel& model, const NetworkDataset& data);

// Per-unit influence curve values at a counterfactual (t, z); the indicator
// matches exactly on the binary t and exactly on z.
struct EicResult {
  double score;       // mean of phi
  double sd;          // SD of phi
  int matched_units;  // units with t_i == t and z_i == z
  bool overlap_warning = false;
};
EicResult eic_score(const TNetModel& model, const NetworkDataset& data,
                    double t, double z, double psi_hat);

}  // namespace tnet
