#include "tnet/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace tnet {

namespace {

Vec trapezoid_weights(int grid_count) {
  Vec w = Vec::Constant(grid_count + 1, 1.0 / grid_count);
  w(0) *= 0.5;
  w(grid_count) *= 0.5;
  return w;
}

// floor(B*z) with the last cell closed at z = 1, plus the interpolation weight.
void grid_position(const Vec& z, int grid_count, std::vector<int>* j, Vec* w) {
  j->resize(static_cast<std::size_t>(z.size()));
  w->resize(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) < 0.0 || z(i) > 1.0)
      throw std::domain_error("exposure outside [0,1]");
    int lo = static_cast<int>(std::floor(grid_count * z(i)));
    if (lo >= grid_count) lo = grid_count - 1;
    (*j)[static_cast<std::size_t>(i)] = lo;
    (*w)(i) = grid_count * z(i) - lo;
  }
}

}  // namespace

TNetModel::TNetModel(const ModelConfig& c, std::uint64_t seed)
    : cfg(c), spline(c.spline_dim, c.spline_degree) {
  Rng rng(seed);
  gcn_weight = glorot(cfg.covariate_dim, cfg.gcn_dim, rng);
  rep_mlp = make_mlp(cfg.gcn_dim + cfg.covariate_dim, cfg.hidden, cfg.rep_dim,
                     cfg.mlp_layers, Activation::kRelu, cfg.dropout, rng);
  g1_head = make_mlp(cfg.rep_dim, cfg.hidden, 1, cfg.mlp_layers,
                     Activation::kSigmoid, cfg.dropout, rng);
  g2_head = make_mlp(cfg.rep_dim, cfg.hidden, cfg.grid_count + 1,
                     cfg.mlp_layers, Activation::kSoftmax, cfg.dropout, rng);
  mu_treated = make_mlp(1 + cfg.rep_dim, cfg.hidden, 1, cfg.mlp_layers,
                        Activation::kIdentity, cfg.dropout, rng);
  mu_control = make_mlp(1 + cfg.rep_dim, cfg.hidden, 1, cfg.mlp_layers,
                        Activation::kIdentity, cfg.dropout, rng);
  eps_treated_coeffs = Mat::Zero(cfg.spline_dim, 1);
  eps_control_coeffs = Mat::Zero(cfg.spline_dim, 1);
}

std::vector<Mat*> TNetModel::all_params() {
  std::vector<Mat*> out;
  out.push_back(&gcn_weight);
  for (MlpParams* mlp : {&rep_mlp, &g1_head, &g2_head, &mu_treated,
                         &mu_control}) {
    for (auto& layer : mlp->layers) {
      out.push_back(&layer.weight);
      out.push_back(&layer.bias);
    }
  }
  out.push_back(&eps_treated_coeffs);
  out.push_back(&eps_control_coeffs);
  return out;
}

std::vector<const Mat*> TNetModel::all_params() const {
  auto mut = const_cast<TNetModel*>(this)->all_params();
  return {mut.begin(), mut.end()};
}

std::size_t TNetModel::nuisance_count() const {
  return all_params().size() - 2;
}

std::vector<Mat*> TNetModel::nuisance_params() {
  auto all = all_params();
  all.resize(all.size() - 2);
  return all;
}

bool TNetModel::finite() const {
  for (const Mat* p : all_params())
    if (!p->allFinite()) return false;
  return true;
}

ModelForward build_forward(Tape& tape, const TNetModel& model,
                           const Graph& graph, const Mat& features,
                           bool training, Rng& dropout_rng) {
  require(features.cols() == model.cfg.covariate_dim,
          "feature width mismatch");
  ModelForward fwd;
  auto params = model.all_params();
  fwd.param_ids.reserve(params.size());
  for (const Mat* p : params) fwd.param_ids.push_back(tape.leaf(*p));

  // Registry layout: [gcn][rep][g1][g2][mu_t][mu_c][eps_t][eps_c]
  std::size_t pos = 0;
  const int gcn_id = fwd.param_ids[pos++];
  auto take_mlp = [&](const MlpParams& mlp) {
    std::vector<int> ids;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      ids.push_back(fwd.param_ids[pos++]);
      ids.push_back(fwd.param_ids[pos++]);
    }
    return ids;
  };
  const auto rep_ids = take_mlp(model.rep_mlp);
  const auto g1_ids = take_mlp(model.g1_head);
  const auto g2_ids = take_mlp(model.g2_head);
  fwd.mu_t_ids = take_mlp(model.mu_treated);
  fwd.mu_c_ids = take_mlp(model.mu_control);
  fwd.eps_t_id = fwd.param_ids[pos++];
  fwd.eps_c_id = fwd.param_ids[pos++];

  const int x_id = tape.leaf(features);
  const int h1 = tape.relu(tape.spmm(graph.normalized_adjacency(),
                                     tape.matmul(x_id, gcn_id)));
  fwd.rep = mlp_forward(tape, model.rep_mlp, rep_ids,
                        tape.concat_cols(h1, x_id), training, dropout_rng);

  const int p_raw = mlp_forward(tape, model.g1_head, g1_ids, fwd.rep,
                                training, dropout_rng);
  fwd.g1_prob = tape.clamp(p_raw, model.cfg.g1_clamp,
                           1.0 - model.cfg.g1_clamp);

  const int grid_raw = mlp_forward(tape, model.g2_head, g2_ids, fwd.rep,
                                   training, dropout_rng);
  const int wtrap = tape.leaf(trapezoid_weights(model.cfg.grid_count));
  const int integral = tape.matmul(grid_raw, wtrap);  // n x 1
  fwd.g2_grid = tape.div_colvec(grid_raw, integral);
  return fwd;
}

int propensity_of(Tape& tape, const ModelForward& fwd, const Vec& t) {
  // t*p + (1-t)*(1-p)
  const int p1 = tape.mul_colmask(fwd.g1_prob, t);
  const int p0m = tape.mul_colmask(
      tape.add_const(tape.scale(fwd.g1_prob, -1.0), 1.0),
      (1.0 - t.array()).matrix());
  return tape.add(p1, p0m);
}

int density_at(Tape& tape, const TNetModel& model, const ModelForward& fwd,
               const Vec& z) {
  std::vector<int> j;
  Vec w;
  grid_position(z, model.cfg.grid_count, &j, &w);
  return tape.row_interp(fwd.g2_grid, j, w);
}

int outcome_at(Tape& tape, const TNetModel& model, const ModelForward& fwd,
               const Vec& t, const Vec& z, bool training, Rng& dropout_rng) {
  const int zin = tape.concat_cols(tape.leaf(z), fwd.rep);
  const int mu1 = mlp_forward(tape, model.mu_treated, fwd.mu_t_ids, zin,
                              training, dropout_rng);
  const int mu0 = mlp_forward(tape, model.mu_control, fwd.mu_c_ids, zin,
                              training, dropout_rng);
  return tape.add(tape.mul_colmask(mu1, t),
                  tape.mul_colmask(mu0, (1.0 - t.array()).matrix()));
}

int perturbation_at(Tape& tape, const TNetModel& model,
                    const ModelForward& fwd, const Vec& t, const Vec& z) {
  const int phi = tape.leaf(model.spline.design_matrix(z));
  const int e1 = tape.matmul(phi, fwd.eps_t_id);
  const int e0 = tape.matmul(phi, fwd.eps_c_id);
  return tape.add(tape.mul_colmask(e1, t),
                  tape.mul_colmask(e0, (1.0 - t.array()).matrix()));
}

// ---- Frozen-model evaluation ----

Mat represent(const TNetModel& model, const Graph& graph,
              const Mat& features) {
  Mat h1 = gcn_aggregate(graph, features, model.gcn_weight, true);
  Mat in(features.rows(), h1.cols() + features.cols());
  in << h1, features;
  return mlp_eval(model.rep_mlp, in);
}

Vec propensity_t(const TNetModel& model, const Mat& rep) {
  Vec p = mlp_eval(model.g1_head, rep).col(0);
  return p.cwiseMax(model.cfg.g1_clamp).cwiseMin(1.0 - model.cfg.g1_clamp);
}

Mat density_grid(const TNetModel& model, const Mat& rep) {
  Mat grid = mlp_eval(model.g2_head, rep);
  Vec integral = grid * trapezoid_weights(model.cfg.grid_count);
  return grid.array().colwise() / integral.array();
}

Vec exposure_density(const TNetModel& model, const Mat& rep, const Vec& z) {
  const Mat grid = density_grid(model, rep);
  std::vector<int> j;
  Vec w;
  grid_position(z, model.cfg.grid_count, &j, &w);
  Vec out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const int lo = j[static_cast<std::size_t>(i)];
    out(i) = (1.0 - w(i)) * grid(i, lo) + w(i) * grid(i, lo + 1);
  }
  return out;
}

Vec outcome(const TNetModel& model, const Mat& rep, const Vec& t,
            const Vec& z) {
  Mat in(rep.rows(), 1 + rep.cols());
  in << z, rep;
  Vec mu1 = mlp_eval(model.mu_treated, in).col(0);
  Vec mu0 = mlp_eval(model.mu_control, in).col(0);
  return t.cwiseProduct(mu1) +
         (1.0 - t.array()).matrix().cwiseProduct(mu0);
}

Vec perturbation(const TNetModel& model, const Vec& t, const Vec& z) {
  const Mat phi = model.spline.design_matrix(z);
  Vec e1 = phi * model.eps_treated_coeffs.col(0);
  Vec e0 = phi * model.eps_control_coeffs.col(0);
  return t.cwiseProduct(e1) +
         (1.0 - t.array()).matrix().cwiseProduct(e0);
}

// ---- Checkpoint ----

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Mat mat_from_json(const nlohmann::json& j) {
  Mat m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto data = j.at("data").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(data.size()) == m.size(),
          "checkpoint array size mismatch");
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace

void save_checkpoint(const TNetModel& model, const std::string& path,
                     const std::string& config_hash) {
  nlohmann::json j;
  const auto& c = model.cfg;
  j["config"] = {{"covariate_dim", c.covariate_dim},
                 {"gcn_dim", c.gcn_dim},
                 {"hidden", c.hidden},
                 {"rep_dim", c.rep_dim},
                 {"mlp_layers", c.mlp_layers},
                 {"grid_count", c.grid_count},
                 {"spline_dim", c.spline_dim},
                 {"spline_degree", c.spline_degree},
                 {"dropout", c.dropout},
                 {"g1_clamp", c.g1_clamp},
                 {"g_floor", c.g_floor}};
  j["config_hash"] = config_hash;
  nlohmann::json arrays = nlohmann::json::array();
  for (const Mat* p : model.all_params()) arrays.push_back(mat_to_json(*p));
  j["params"] = std::move(arrays);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << j.dump();
}

TNetModel load_checkpoint(const std::string& path, std::string* config_hash) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  const auto& jc = j.at("config");
  ModelConfig c;
  c.covariate_dim = jc.at("covariate_dim");
  c.gcn_dim = jc.at("gcn_dim");
  c.hidden = jc.at("hidden");
  c.rep_dim = jc.at("rep_dim");
  c.mlp_layers = jc.at("mlp_layers");
  c.grid_count = jc.at("grid_count");
  c.spline_dim = jc.at("spline_dim");
  c.spline_degree = jc.at("spline_degree");
  c.dropout = jc.at("dropout");
  c.g1_clamp = jc.at("g1_clamp");
  c.g_floor = jc.at("g_floor");
  TNetModel model(c, 0);
  auto params = model.all_params();
  const auto& arrays = j.at("params");
  require(arrays.size() == params.size(), "checkpoint parameter count");
  for (std::size_t k = 0; k < params.size(); ++k)
    *params[k] = mat_from_json(arrays[k]);
  if (config_hash) *config_hash = j.value("config_hash", "");
  return model;
}

}  // namespace tnet
