#include "tnet/estimation.hpp"

#include <algorithm>
#include <cmath>

namespace tnet {

EstimandKind parse_estimand(const std::string& name) {
  if (name == "ame" || name == "AME") return EstimandKind::kAME;
  if (name == "ase" || name == "ASE") return EstimandKind::kASE;
  if (name == "ate" || name == "ATE") return EstimandKind::kATE;
  if (name == "ime" || name == "IME") return EstimandKind::kIME;
  if (name == "ise" || name == "ISE") return EstimandKind::kISE;
  if (name == "ite" || name == "ITE") return EstimandKind::kITE;
  if (name == "custom") return EstimandKind::kCustom;
  throw ConfigError("unknown estimand: " + name);
}

std::string estimand_name(EstimandKind k) {
  switch (k) {
    case EstimandKind::kAME: return "ame";
    case EstimandKind::kASE: return "ase";
    case EstimandKind::kATE: return "ate";
    case EstimandKind::kIME: return "ime";
    case EstimandKind::kISE: return "ise";
    case EstimandKind::kITE: return "ite";
    case EstimandKind::kCustom: return "custom";
  }
  return "?";
}

void EstimandSpec::validate() const {
  auto binary = [](double t) { return t == 0.0 || t == 1.0; };
  if (!binary(t1) || !binary(t2)) throw ConfigError("t must be 0 or 1");
  if (z1 < 0.0 || z1 > 1.0 || z2 < 0.0 || z2 > 1.0)
    throw ConfigError("z must lie in [0,1]");
  if (kind == EstimandKind::kAME || kind == EstimandKind::kIME) {
    if (z1 != 0.0 || z2 != 0.0)
      throw ConfigError("main effects fix z = z' = 0");
  }
  if (kind == EstimandKind::kASE || kind == EstimandKind::kISE) {
    if (t1 != 0.0 || t2 != 0.0)
      throw ConfigError("spillover effects fix t = t' = 0");
  }
  if (kind != EstimandKind::kCustom && t1 == t2 && z1 == z2)
    throw ConfigError("estimand pair must be distinct");
}

PsiResult psi_hat(const TNetModel& model, const NetworkDataset& data, double t,
                  double z, EstimateMethod method) {
  if (t != 0.0 && t != 1.0) throw ConfigError("t must be 0 or 1");
  if (z < 0.0 || z > 1.0) throw std::domain_error("z outside [0,1]");
  const int n = data.n();
  const Mat rep = represent(model, *data.graph, data.features);
  const Vec tvec = Vec::Constant(n, t);
  const Vec zvec = Vec::Constant(n, z);
  PsiResult res;
  res.per_unit = outcome(model, rep, tvec, zvec);
  if (method == EstimateMethod::kTnet) {
    const Vec p1 = propensity_t(model, rep);
    const Vec g1 = t == 1.0 ? p1 : (1.0 - p1.array()).matrix();
    const Vec g2 = exposure_density(model, rep, zvec);
    const Vec prod = g1.cwiseProduct(g2);
    const Vec ghat = prod.cwiseMax(model.cfg.g_floor);
    const int floored =
        static_cast<int>((prod.array() < model.cfg.g_floor).count());
    res.overlap_warning = floored > n / 2;
    res.per_unit += perturbation(model, tvec, zvec).cwiseQuotient(ghat);
  }
  res.average = res.per_unit.mean();
  return res;
}

EffectEstimate estimate_effect(const TNetModel& model,
                               const NetworkDataset& data,
                               const EstimandSpec& spec,
                               EstimateMethod method) {
  spec.validate();
  const PsiResult a = psi_hat(model, data, spec.t1, spec.z1, method);
  const PsiResult b = psi_hat(model, data, spec.t2, spec.z2, method);
  EffectEstimate est;
  est.spec = spec;
  est.method = method;
  est.per_unit = a.per_unit - b.per_unit;
  est.average = a.average - b.average;
  if (a.overlap_warning || b.overlap_warning)
    est.warnings.push_back("overlap floor active for > 50% of units");
  return est;
}

namespace {

double percentile(std::vector<double> sorted, double q) {
  // Linear interpolation between order statistics.
  if (sorted.empty()) throw ConfigError("empty sample for percentile");
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace

ConfidenceInterval percentile_interval(const std::vector<double>& sample,
                                       double level) {
  if (level <= 0.0 || level >= 1.0)
    throw ConfigError("interval level in (0,1)");
  const double tail = (1.0 - level) / 2.0;
  return {percentile(sample, tail), percentile(sample, 1.0 - tail), level};
}

EffectEstimate bootstrap_ci(const NetworkDataset& data,
                            const EstimandSpec& spec, const TrainConfig& config,
                            const BootstrapOptions& opts,
                            EstimateMethod method) {
  if (opts.replicates < 20)
    throw ConfigError("bootstrap needs at least 20 replicates");
  if (opts.level <= 0.0 || opts.level >= 1.0)
    throw ConfigError("bootstrap level in (0,1)");
  spec.validate();

  auto run_once = [&](std::uint64_t seed) {
    TNetModel model(opts.model_config, seed);
    TrainConfig cfg = config;
    cfg.seed = seed;
    train(model, data, cfg);
    return estimate_effect(model, data, spec, method).average;
  };

  std::vector<double> estimates;
  int dropped = 0;
  for (int r = 0; r < opts.replicates; ++r) {
    const std::uint64_t seed = config.seed + 1 + static_cast<std::uint64_t>(r);
    try {
      estimates.push_back(run_once(seed));
    } catch (const NumericError&) {
      ++dropped;
    }
  }
  if (4 * dropped > opts.replicates)
    throw NumericError("more than 25% of bootstrap replicates diverged");

  EffectEstimate est;
  est.spec = spec;
  est.method = method;
  est.average = run_once(config.seed);
  est.ci = percentile_interval(estimates, opts.level);
  if (dropped > 0)
    est.warnings.push_back(std::to_string(dropped) +
                           " bootstrap replicates dropped");
  if (est.ci->lower > est.average || est.ci->upper < est.average)
    est.warnings.push_back("percentile interval excludes point estimate");
  return est;
}

}  // namespace tnet
