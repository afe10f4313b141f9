#include "tnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tnet {

MetricReport compute_metrics(double tau_hat, double tau, const Vec& tau_hat_i,
                             const Vec& tau_i, Split split) {
  require(tau_hat_i.size() == tau_i.size(), "per-unit length mismatch");
  MetricReport r;
  r.split = split;
  r.mae_average = std::abs(tau_hat - tau);
  const Vec err = tau_hat_i - tau_i;
  r.pehe_individual =
      std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
  if (std::abs(tau) >= 1e-8) r.mape_average = std::abs((tau - tau_hat) / tau);
  bool guarded = false;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < tau_i.size(); ++i) {
    if (std::abs(tau_i(i)) < 1e-8) {
      guarded = true;
      break;
    }
    acc += std::abs((tau_i(i) - tau_hat_i(i)) / tau_i(i));
  }
  if (!guarded && tau_i.size() > 0)
    r.mape_individual = acc / static_cast<double>(tau_i.size());
  return r;
}

CorruptionTarget parse_corruption(const std::string& name) {
  if (name == "none") return CorruptionTarget::kNone;
  if (name == "propensity") return CorruptionTarget::kPropensity;
  if (name == "outcome") return CorruptionTarget::kOutcome;
  if (name == "both") return CorruptionTarget::kBoth;
  throw ConfigError("unknown corruption target: " + name);
}

namespace {

void set_constant_head(MlpParams* mlp, double value) {
  for (auto& layer : mlp->layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  mlp->layers.back().bias.setConstant(value);
}

}  // namespace

TNetModel train_corrupted(const GeneratedDataset& gen,
                          const CorruptionSpec& corruption,
                          const TrainConfig& config,
                          const ModelConfig& model_config) {
  TNetModel model(model_config, config.seed);
  const bool hit_prop = corruption.target == CorruptionTarget::kPropensity ||
                        corruption.target == CorruptionTarget::kBoth;
  const bool hit_out = corruption.target == CorruptionTarget::kOutcome ||
                       corruption.target == CorruptionTarget::kBoth;

  const NetworkDataset& data = gen.dataset;
  UpdateMask update;
  LossTargets targets;
  Vec shuffled_t, shuffled_z, shuffled_y;
  if (corruption.mode == CorruptionMode::kLabelShuffle) {
    // Shuffled regression targets make the corrupted nuisance fit pure noise;
    // the observed data still flows through the shared forward pass.
    Rng rng(config.seed + 0x9e3779b97f4a7c15ULL);
    auto shuffle_copy = [&](const Vec& v) {
      std::vector<int> perm(static_cast<std::size_t>(v.size()));
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Vec out(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = v(perm[i]);
      return out;
    };
    if (hit_prop) {
      shuffled_t = shuffle_copy(data.treatments);
      shuffled_z = shuffle_copy(data.exposures);
      targets.l1_treatments = &shuffled_t;
      targets.l1_exposures = &shuffled_z;
    }
    if (hit_out) {
      shuffled_y = shuffle_copy(data.outcomes);
      targets.l2_outcomes = &shuffled_y;
    }
  } else {
    update.propensity = !hit_prop;
    update.outcome = !hit_out;
    if (corruption.mode == CorruptionMode::kConstant) {
      if (hit_prop) {
        set_constant_head(&model.g1_head, 0.0);  // sigmoid(0) = 0.5
        set_constant_head(&model.g2_head, 0.0);  // uniform grid
      }
      if (hit_out) {
        set_constant_head(&model.mu_treated, 0.0);
        set_constant_head(&model.mu_control, 0.0);
      }
    }
  }
  train(model, data, config, nullptr, update, targets);
  return model;
}

std::vector<StressRow> dr_stress(const DgpSpec& dgp, int n,
                                 CorruptionMode mode, const TrainConfig& config,
                                 const ModelConfig& model_config,
                                 GraphKind graph_kind, double graph_param) {
  auto graph = generate_graph(graph_kind, n, graph_param, dgp.seed);
  const GeneratedDataset gen = generate(dgp, graph);
  const EstimandSpec ame = EstimandSpec::ame();
  const double truth = true_effect(*gen.truth, 1, 0, 0, 0).average;

  std::vector<StressRow> rows;
  for (CorruptionTarget target :
       {CorruptionTarget::kNone, CorruptionTarget::kPropensity,
        CorruptionTarget::kOutcome, CorruptionTarget::kBoth}) {
    const TNetModel model =
        train_corrupted(gen, {target, mode}, config, model_config);
    for (EstimateMethod method :
         {EstimateMethod::kTnet, EstimateMethod::kPlugin}) {
      const double est =
          estimate_effect(model, gen.dataset, ame, method).average;
      rows.push_back({target, method, std::abs(est - truth), est});
    }
  }
  return rows;
}

SweepResult convergence_sweep(const DgpSpec& dgp,
                              const std::vector<int>& n_list,
                              const TrainConfig& config,
                              const ModelConfig& model_config, int repeats,
                              GraphKind graph_kind, double graph_param) {
  require(!n_list.empty(), "sweep needs at least one n");
  require(repeats >= 1, "sweep needs repeats >= 1");
  SweepResult out;
  for (int n : n_list) {
    Vec errs(repeats);
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t seed =
          dgp.seed + static_cast<std::uint64_t>(1000 * n + r);
      DgpSpec spec = dgp;
      spec.seed = seed;
      auto graph = generate_graph(graph_kind, n, graph_param, seed);
      const GeneratedDataset gen = generate(spec, graph);
      TNetModel model(model_config, seed);
      TrainConfig cfg = config;
      cfg.seed = seed;
      train(model, gen.dataset, cfg);
      const double est =
          estimate_effect(model, gen.dataset, EstimandSpec::ame()).average;
      const double truth = true_effect(*gen.truth, 1, 0, 0, 0).average;
      errs(r) = std::abs(est - truth);
    }
    const double mean = errs.mean();
    const double sd = repeats > 1
                          ? std::sqrt((errs.array() - mean).square().sum() /
                                      (repeats - 1))
                          : 0.0;
    out.rows.push_back({n, mean, sd});
  }

  out.strictly_decreasing = true;
  for (std::size_t k = 1; k < out.rows.size(); ++k)
    if (out.rows[k].mean_error >= out.rows[k - 1].mean_error)
      out.strictly_decreasing = false;

  out.loglog_slope = 0.0;
  if (out.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(out.rows.size());
    for (const auto& row : out.rows) {
      const double x = std::log(static_cast<double>(row.n));
      const double y = std::log(std::max(row.mean_error, 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    out.loglog_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return out;
}

IndexSplit within_out_split(int n, double train_fraction,
                            double held_out_fraction, std::uint64_t seed) {
  if (train_fraction < 0.0 || held_out_fraction < 0.0 ||
      train_fraction + held_out_fraction > 1.0 + 1e-12)
    throw ConfigError("split fractions must be non-negative and sum <= 1");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  IndexSplit split;
  const std::size_t n_train =
      static_cast<std::size_t>(std::lround(train_fraction * n));
  const std::size_t n_out =
      static_cast<std::size_t>(std::lround(held_out_fraction * n));
  if (n_train == 0) throw ConfigError("empty training split");
  split.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
  split.held_out.assign(idx.begin() + static_cast<long>(n_train),
                        idx.begin() + static_cast<long>(n_train + n_out));
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.held_out.begin(), split.held_out.end());
  return split;
}

}  // namespace tnet
