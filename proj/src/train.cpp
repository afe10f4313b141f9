#include "tnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tnet {

namespace {

constexpr double kDivergenceCap = 1e8;

struct LossIds {
  int l1 = -1;
  int l2 = -1;
  int l3 = -1;
};

// Builds the requested losses on one tape; mask selects contributing units.
LossIds build_losses(Tape& tape, const TNetModel& model,
                     const NetworkDataset& data, const ModelForward& fwd,
                     const Vec& mask, double alpha, double gamma, double beta,
                     bool training, Rng& rng, bool want_l12, bool want_l3,
                     const LossTargets& targets = {}) {
  LossIds ids;
  const Vec& t = data.treatments;
  const Vec& z = data.exposures;
  const Vec& t1 = targets.l1_treatments ? *targets.l1_treatments : t;
  const Vec& z1 = targets.l1_exposures ? *targets.l1_exposures : z;
  const Vec& y2 = targets.l2_outcomes ? *targets.l2_outcomes : data.outcomes;

  if (want_l12) {
    // L1 = sum alpha * CE(g1(t_i), t_i) - gamma * log g2(z_i)
    //    = sum -alpha * log g1(t_i|.) - gamma * log g2(z_i|.)
    const int g1t = propensity_of(tape, fwd, t1);
    const int g2z = tape.max_const(density_at(tape, model, fwd, z1), 1e-12);
    const int ce = tape.scale(tape.log_elem(g1t), -alpha);
    const int dens = tape.scale(tape.log_elem(g2z), -gamma);
    ids.l1 = tape.sum(tape.mul_colmask(tape.add(ce, dens), mask));

    const int mu = outcome_at(tape, model, fwd, t, z, training, rng);
    const int resid = tape.sub(tape.leaf(y2), mu);
    ids.l2 = tape.sum(tape.mul_colmask(tape.square(resid), mask));
  }
  if (want_l3) {
    const int g1t = propensity_of(tape, fwd, t);
    const int g2z = density_at(tape, model, fwd, z);
    const int ghat = tape.max_const(tape.cmul(g1t, g2z), model.cfg.g_floor);
    const int mu = outcome_at(tape, model, fwd, t, z, training, rng);
    const int eps = perturbation_at(tape, model, fwd, t, z);
    const int corrected = tape.add(mu, tape.div_colvec(eps, ghat));
    const int resid = tape.sub(tape.leaf(data.outcomes), corrected);
    ids.l3 = tape.scale(tape.sum(tape.mul_colmask(tape.square(resid), mask)),
                        beta);
  }
  return ids;
}

std::vector<Mat> snapshot(const TNetModel& model) {
  std::vector<Mat> out;
  for (const Mat* p : model.all_params()) out.push_back(*p);
  return out;
}

void restore(TNetModel& model, const std::vector<Mat>& snap) {
  auto params = model.all_params();
  for (std::size_t k = 0; k < params.size(); ++k) *params[k] = snap[k];
}

// Validation L2 in eval mode (no dropout).
double validation_l2(const TNetModel& model, const NetworkDataset& data,
                     const Vec& val_mask) {
  const double count = val_mask.sum();
  if (count == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const Mat rep = represent(model, *data.graph, data.features);
  const Vec mu = outcome(model, rep, data.treatments, data.exposures);
  const Vec resid = data.outcomes - mu;
  return val_mask.cwiseProduct(resid.cwiseProduct(resid)).sum() / count;
}

// Drops gradients of frozen parameter groups. Registry layout:
// [gcn][rep][g1][g2][mu_t][mu_c][eps_t][eps_c].
void apply_update_mask(const TNetModel& model, const UpdateMask& update,
                       std::vector<Mat>* grads) {
  if (update.propensity && update.outcome) return;
  const std::size_t per_mlp = 2 * model.rep_mlp.layers.size();
  const std::size_t g1_begin = 1 + per_mlp;
  const std::size_t g2_end = g1_begin + 2 * per_mlp;
  const std::size_t mu_end = g2_end + 2 * per_mlp;
  for (std::size_t k = g1_begin; k < g2_end && k < grads->size(); ++k)
    if (!update.propensity) (*grads)[k].setZero();
  for (std::size_t k = g2_end; k < mu_end && k < grads->size(); ++k)
    if (!update.outcome) (*grads)[k].setZero();
}

}  // namespace

TrainResult train(TNetModel& model, const NetworkDataset& data,
                  const TrainConfig& cfg,
                  const std::vector<int>* train_indices,
                  const UpdateMask& update, const LossTargets& targets) {
  cfg.validate();
  data.validate();
  const int n = data.n();

  std::vector<int> train_idx;
  if (train_indices) {
    train_idx = *train_indices;
  } else {
    train_idx.resize(static_cast<std::size_t>(n));
    std::iota(train_idx.begin(), train_idx.end(), 0);
  }
  require(!train_idx.empty(), "empty training set");

  Rng rng(cfg.seed);
  std::vector<int> shuffled = train_idx;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::size_t n_val =
      static_cast<std::size_t>(cfg.val_fraction *
                               static_cast<double>(shuffled.size()));
  Vec loss_mask = Vec::Zero(n);
  Vec val_mask = Vec::Zero(n);
  for (std::size_t k = 0; k < shuffled.size(); ++k)
    (k < n_val ? val_mask : loss_mask)(shuffled[k]) = 1.0;
  const double n_train = loss_mask.sum();

  TrainResult result;
  result.beta_used =
      cfg.beta > 0.0 ? cfg.beta : 20.0 / std::sqrt(n_train);

  AdamState adam_nuisance;
  AdamState adam_targeted;
  adam_nuisance.init(model.nuisance_params(), cfg.lr_nuisance);
  adam_targeted.init(model.all_params(), cfg.lr_targeted);

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Mat> best_params = snapshot(model);
  int since_best = 0;
  int halvings = 0;
  std::vector<Mat> last_good = snapshot(model);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    // Nuisance step on L1 + L2.
    double l1_val, l2_val;
    {
      Tape tape;
      const ModelForward fwd = build_forward(tape, model, *data.graph,
                                             data.features, true, rng);
      const LossIds ids =
          build_losses(tape, model, data, fwd, loss_mask, cfg.alpha,
                       cfg.gamma, result.beta_used, true, rng, true, false,
                       targets);
      l1_val = tape.val(ids.l1)(0, 0);
      l2_val = tape.val(ids.l2)(0, 0);
      // A frozen nuisance must not recover through any path: its loss is
      // dropped from the objective so the shared trunk cannot learn around
      // the masked head, not just the head gradients zeroed.
      if (update.propensity || update.outcome) {
        const int goal = update.propensity && update.outcome
                             ? tape.add(ids.l1, ids.l2)
                             : (update.propensity ? ids.l1 : ids.l2);
        tape.backward(goal);
        auto params = model.nuisance_params();
        std::vector<Mat> grads;
        for (std::size_t k = 0; k < params.size(); ++k)
          grads.push_back(tape.grad(fwd.param_ids[k]));
        apply_update_mask(model, update, &grads);
        adam_nuisance.update(params, grads);
      }
    }

    // Targeted step on L3 over all parameters.
    double l3_val;
    {
      Tape tape;
      const ModelForward fwd = build_forward(tape, model, *data.graph,
                                             data.features, true, rng);
      const LossIds ids =
          build_losses(tape, model, data, fwd, loss_mask, cfg.alpha,
                       cfg.gamma, result.beta_used, true, rng, false, true,
                       targets);
      l3_val = tape.val(ids.l3)(0, 0);
      tape.backward(ids.l3);
      auto params = model.all_params();
      std::vector<Mat> grads;
      for (std::size_t k = 0; k < params.size(); ++k)
        grads.push_back(tape.grad(fwd.param_ids[k]));
      apply_update_mask(model, update, &grads);
      // Under corruption the targeted step may only move the spline: its
      // gradient flows through the frozen head, and letting it reach the
      // shared trunk would retrain the trunk to fit the corrupted
      // nuisance's target.
      if (!update.propensity || !update.outcome)
        for (std::size_t k = 0; k + 2 < grads.size(); ++k) grads[k].setZero();
      adam_targeted.update(params, grads);
    }

    const bool bad = !std::isfinite(l1_val) || !std::isfinite(l2_val) ||
                     !std::isfinite(l3_val) || !model.finite() ||
                     std::abs(l1_val) > kDivergenceCap ||
                     std::abs(l2_val) > kDivergenceCap ||
                     std::abs(l3_val) > kDivergenceCap;
    if (bad) {
      if (halvings >= 3)
        throw NumericError("training diverged after 3 learning-rate cuts");
      ++halvings;
      restore(model, last_good);
      adam_nuisance.init(model.nuisance_params(), adam_nuisance.lr * 0.5);
      adam_targeted.init(model.all_params(), adam_targeted.lr * 0.5);
      continue;
    }
    last_good = snapshot(model);

    const double val_l2 = validation_l2(model, data, val_mask);
    result.history.push_back({iter, l1_val, l2_val, l3_val, val_l2});

    if (!std::isnan(val_l2)) {
      if (val_l2 < best_val) {
        best_val = val_l2;
        best_params = snapshot(model);
        result.best_iteration = iter;
        since_best = 0;
      } else if (++since_best > cfg.early_stop_patience) {
        break;
      }
    }
  }
  result.lr_halvings = halvings;
  if (result.best_iteration >= 0) restore(model, best_params);

  // Final fluctuation regression: with the nuisances frozen, L3 is an exact
  // weighted least-squares problem in the spline coefficients, so solve it
  // directly. This puts the model at the L3 stationary point, where the
  // spline-weighted empirical score vanishes.
  {
    const Mat rep = represent(model, *data.graph, data.features);
    const Vec p1 = propensity_t(model, rep);
    const Vec g1 = data.treatments.cwiseProduct(p1) +
                   (1.0 - data.treatments.array())
                       .matrix()
                       .cwiseProduct((1.0 - p1.array()).matrix());
    const Vec g2 = exposure_density(model, rep, data.exposures);
    const Vec ghat = g1.cwiseProduct(g2).cwiseMax(model.cfg.g_floor);
    const Vec mu = outcome(model, rep, data.treatments, data.exposures);
    const Mat phi = model.spline.design_matrix(data.exposures);
    const int k = model.cfg.spline_dim;
    for (int arm = 0; arm <= 1; ++arm) {
      Mat a = Mat::Identity(k, k) * 1e-10;
      Vec b = Vec::Zero(k);
      for (int i = 0; i < n; ++i) {
        if (loss_mask(i) == 0.0 || data.treatments(i) != arm) continue;
        const Vec row = phi.row(i).transpose() / ghat(i);
        a += row * row.transpose();
        b += row * (data.outcomes(i) - mu(i));
      }
      Mat& coeffs =
          arm == 1 ? model.eps_treated_coeffs : model.eps_control_coeffs;
      coeffs.col(0) = a.ldlt().solve(b);
    }
    if (!model.finite()) throw NumericError("fluctuation solve diverged");
  }
  return result;
}

namespace {

double beta_for(const TrainConfig& cfg, int n) {
  return cfg.beta > 0.0 ? cfg.beta : 20.0 / std::sqrt(static_cast<double>(n));
}

LossGradients loss_impl(const TNetModel& model, const NetworkDataset& data,
                        Loss which, const TrainConfig& cfg, bool want_grads) {
  data.validate();
  Rng rng(0);  // unused: evaluation mode has no dropout
  Tape tape;
  const ModelForward fwd =
      build_forward(tape, model, *data.graph, data.features, false, rng);
  const Vec mask = Vec::Ones(data.n());
  const bool l12 = which != Loss::kL3;
  const bool l3 = which == Loss::kL3;
  const LossIds ids =
      build_losses(tape, model, data, fwd, mask, cfg.alpha, cfg.gamma,
                   beta_for(cfg, data.n()), false, rng, l12, l3);
  int root = -1;
  switch (which) {
    case Loss::kL1: root = ids.l1; break;
    case Loss::kL2: root = ids.l2; break;
    case Loss::kL3: root = ids.l3; break;
    case Loss::kL1PlusL2: root = tape.add(ids.l1, ids.l2); break;
  }
  LossGradients out;
  out.value = tape.val(root)(0, 0);
  if (!std::isfinite(out.value)) throw NumericError("non-finite loss");
  if (want_grads) {
    tape.backward(root);
    for (int id : fwd.param_ids) out.grads.push_back(tape.grad(id));
  }
  return out;
}

}  // namespace

double loss_value(const TNetModel& model, const NetworkDataset& data,
                  Loss which, const TrainConfig& cfg) {
  return loss_impl(model, data, which, cfg, false).value;
}

LossGradients loss_with_gradients(const TNetModel& model,
                                  const NetworkDataset& data, Loss which,
                                  const TrainConfig& cfg) {
  return loss_impl(model, data, which, cfg, true);
}

Vec eic_arm_residuals(const TNetModel& model, const NetworkDataset& data) {
  const Mat rep = represent(model, *data.graph, data.features);
  const Vec g1t = data.treatments.cwiseProduct(propensity_t(model, rep)) +
                  (1.0 - data.treatments.array()).matrix().cwiseProduct(
                      (1.0 - propensity_t(model, rep).array()).matrix());
  const Vec g2z = exposure_density(model, rep, data.exposures);
  const Vec ghat = g1t.cwiseProduct(g2z).cwiseMax(model.cfg.g_floor);
  const Vec mu = outcome(model, rep, data.treatments, data.exposures);
  const Vec eps = perturbation(model, data.treatments, data.exposures);
  const Vec corrected = mu + eps.cwiseQuotient(ghat);
  return (data.outcomes - corrected).cwiseQuotient(ghat);
}

EicResult eic_score(const TNetModel& model, const NetworkDataset& data,
                    double t, double z, double psi_hat) {
  const int n = data.n();
  const Mat rep = represent(model, *data.graph, data.features);
  const Vec tvec = Vec::Constant(n, t);
  const Vec zvec = Vec::Constant(n, z);
  const Vec p1 = propensity_t(model, rep);
  const Vec g1 = t == 1.0 ? p1 : (1.0 - p1.array()).matrix();
  const Vec g2 = exposure_density(model, rep, zvec);
  const Vec ghat = g1.cwiseProduct(g2).cwiseMax(model.cfg.g_floor);
  const Vec mu = outcome(model, rep, tvec, zvec);
  const Vec eps = perturbation(model, tvec, zvec);
  const Vec yhat = mu + eps.cwiseQuotient(ghat);

  EicResult res{0.0, 0.0, 0, false};
  Vec phi(n);
  int floored_matches = 0;
  for (int i = 0; i < n; ++i) {
    double ind = 0.0;
    if (data.treatments(i) == t && data.exposures(i) == z) {
      ind = 1.0;
      ++res.matched_units;
      if (g1(i) * g2(i) < model.cfg.g_floor) ++floored_matches;
    }
    phi(i) = ind / ghat(i) * (data.outcomes(i) - yhat(i)) + yhat(i) - psi_hat;
  }
  res.overlap_warning =
      res.matched_units > 0 && floored_matches == res.matched_units;
  res.score = phi.mean();
  res.sd = std::sqrt((phi.array() - res.score).square().sum() /
                     std::max(1, n - 1));
  return res;
}

}  // namespace tnet
