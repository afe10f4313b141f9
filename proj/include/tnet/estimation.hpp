#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tnet/train.hpp"

namespace tnet {

enum class EstimandKind { kAME, kASE, kATE, kIME, kISE, kITE, kCustom };
enum class EstimateMethod { kTnet, kPlugin };

EstimandKind parse_estimand(const std::string& name);
std::string estimand_name(EstimandKind k);

struct EstimandSpec {
  EstimandKind kind = EstimandKind::kCustom;
  double t1 = 1.0, z1 = 0.0;
  double t2 = 0.0, z2 = 0.0;

  void validate() const;
  static EstimandSpec ame() { return {EstimandKind::kAME, 1, 0, 0, 0}; }
  static EstimandSpec ase(double z) { return {EstimandKind::kASE, 0, z, 0, 0}; }
  static EstimandSpec ate(double z) { return {EstimandKind::kATE, 1, z, 0, 0}; }
};

struct ConfidenceInterval {
  double lower;
  double upper;
  double level;
};

struct EffectEstimate {
  EstimandSpec spec;
  EstimateMethod method = EstimateMethod::kTnet;
  double average = 0.0;
  Vec per_unit;
  std::optional<ConfidenceInterval> ci;
  std::vector<std::string> warnings;
};

struct PsiResult {
  double average;
  Vec per_unit;
  bool overlap_warning = false;  // floor hit for > 50% of units
};

// y_hat_i(t, z) = mu(t,z,x_i) + eps(t,z) / max(g1*g2, floor); the plugin
// method drops the correction term.
PsiResult psi_hat(const TNetModel& model, const NetworkDataset& data, double t,
                  double z, EstimateMethod method = EstimateMethod::kTnet);

EffectEstimate estimate_effect(const TNetModel& model,
                               const NetworkDataset& data,
                               const EstimandSpec& spec,
                               EstimateMethod method = EstimateMethod::kTnet);

// Seed-resampling bootstrap: retrains with distinct seeds and forms a
// percentile interval over the replicate estimates. The point estimate comes
// from the primary seed in `config`.
struct BootstrapOptions {
  int replicates = 100;
  double level = 0.95;
  ModelConfig model_config;
};
// Percentile interval over a sample (linear interpolation between order
// statistics); identical values give a zero-width interval.
ConfidenceInterval percentile_interval(const std::vector<double>& sample,
                                       double level);

EffectEstimate bootstrap_ci(const NetworkDataset& data,
                            const EstimandSpec& spec, const TrainConfig& config,
                            const BootstrapOptions& opts,
                            EstimateMethod method = EstimateMethod::kTnet);

}  // namespace tnet
