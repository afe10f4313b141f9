#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tnet/dgp.hpp"
#include "tnet/estimation.hpp"

namespace tnet {

enum class Split { kWithinSample, kOutOfSample };

struct MetricReport {
  double mae_average = 0.0;
  double pehe_individual = 0.0;
  std::optional<double> mape_average;     // absent when |tau| < 1e-8
  std::optional<double> mape_individual;  // absent when any |tau_i| < 1e-8
  Split split = Split::kWithinSample;
};

MetricReport compute_metrics(double tau_hat, double tau, const Vec& tau_hat_i,
                             const Vec& tau_i, Split split);

enum class CorruptionTarget { kNone, kPropensity, kOutcome, kBoth };
enum class CorruptionMode { kFreezeRandomInit, kConstant, kLabelShuffle };

CorruptionTarget parse_corruption(const std::string& name);

struct CorruptionSpec {
  CorruptionTarget target = CorruptionTarget::kNone;
  CorruptionMode mode = CorruptionMode::kFreezeRandomInit;
};

struct StressRow {
  CorruptionTarget corruption;
  EstimateMethod method;
  double ame_mae;
  double ame_estimate;
};

// Trains the four corruption arms and reports AME accuracy for both the
// targeted and plug-in estimates of each arm.
std::vector<StressRow> dr_stress(const DgpSpec& dgp, int n,
                                 CorruptionMode mode, const TrainConfig& config,
                                 const ModelConfig& model_config,
                                 GraphKind graph_kind = GraphKind::kPreferentialAttachment,
                                 double graph_param = 5.0);

// Trains one arm under a given corruption; exposed for tests.
TNetModel train_corrupted(const GeneratedDataset& gen,
                          const CorruptionSpec& corruption,
                          const TrainConfig& config,
                          const ModelConfig& model_config);

struct SweepRow {
  int n;
  double mean_error;
  double sd_error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double loglog_slope;  // least-squares slope of log(err) on log(n)
  bool strictly_decreasing;
};

SweepResult convergence_sweep(const DgpSpec& dgp, const std::vector<int>& n_list,
                              const TrainConfig& config,
                              const ModelConfig& model_config, int repeats,
                              GraphKind graph_kind = GraphKind::kPreferentialAttachment,
                              double graph_param = 5.0);

struct IndexSplit {
  std::vector<int> train;
  std::vector<int> held_out;
};

// Node-level random split; held-out outcomes never enter any loss, but the
// full graph stays visible for representation.
IndexSplit within_out_split(int n, double train_fraction,
                            double held_out_fraction, std::uint64_t seed);

}  // namespace tnet
