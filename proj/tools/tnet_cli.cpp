// Command-line front end: generate / train / estimate / evaluate / dr-check /
// sweep / bootstrap, all driven by a sectioned key=value config file. Every
// run echoes its config (and hash) into the output directory.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tnet/estimation.hpp"
#include "tnet/eval.hpp"
#include "tnet/io.hpp"

using namespace tnet;
namespace fs = std::filesystem;

namespace {

ModelConfig model_config_from(const RunConfig& cfg, int covariate_dim) {
  ModelConfig mc;
  mc.covariate_dim = covariate_dim;
  mc.gcn_dim = cfg.get_int("model", "gcn_dim", mc.gcn_dim);
  mc.hidden = cfg.get_int("model", "hidden", mc.hidden);
  mc.rep_dim = cfg.get_int("model", "rep_dim", mc.rep_dim);
  mc.mlp_layers = cfg.get_int("model", "mlp_layers", mc.mlp_layers);
  mc.grid_count = cfg.get_int("model", "grid_count", mc.grid_count);
  mc.spline_dim = cfg.get_int("model", "spline_dim", mc.spline_dim);
  mc.spline_degree = cfg.get_int("model", "spline_degree", mc.spline_degree);
  mc.dropout = cfg.get_double("model", "dropout", mc.dropout);
  mc.g1_clamp = cfg.get_double("model", "g1_clamp", mc.g1_clamp);
  mc.g_floor = cfg.get_double("model", "g_floor", mc.g_floor);
  return mc;
}

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig tc;
  tc.alpha = cfg.get_double("train", "alpha", tc.alpha);
  tc.gamma = cfg.get_double("train", "gamma", tc.gamma);
  tc.beta = cfg.get_double("train", "beta", tc.beta);
  tc.lr_nuisance = cfg.get_double("train", "lr_nuisance", tc.lr_nuisance);
  tc.lr_targeted = cfg.get_double("train", "lr_targeted", tc.lr_targeted);
  tc.iterations = cfg.get_int("train", "iterations", tc.iterations);
  tc.seed = cfg.get_u64("train", "seed", tc.seed);
  tc.early_stop_patience =
      cfg.get_int("train", "early_stop_patience", tc.early_stop_patience);
  tc.val_fraction = cfg.get_double("train", "val_fraction", tc.val_fraction);
  tc.validate();
  return tc;
}

DgpSpec dgp_from(const RunConfig& cfg) {
  DgpSpec spec;
  spec.variant = parse_variant(cfg.get_or("dgp", "variant", "homo"));
  spec.noise_sd = cfg.get_double("dgp", "noise_sd", spec.noise_sd);
  spec.covariate_dim =
      cfg.get_int("dgp", "covariate_dim", spec.covariate_dim);
  spec.seed = cfg.get_u64("dgp", "seed", 0);
  spec.validate();
  return spec;
}

std::shared_ptr<Graph> graph_from(const RunConfig& cfg, int n,
                                  std::uint64_t seed) {
  const GraphKind kind =
      parse_graph_kind(cfg.get_or("graph", "kind", "preferential_attachment"));
  const double param = cfg.get_double("graph", "param", 5.0);
  const std::string path = cfg.get_or("graph", "path", "");
  return generate_graph(kind, n, param, seed, path);
}

// Estimand list syntax: whitespace-separated entries of the form
//   ame | ime | ase:z | ise:z | ate:z | ite:z | custom:t1:z1:t2:z2
std::vector<EstimandSpec> parse_specs(const std::string& text) {
  std::vector<EstimandSpec> specs;
  std::istringstream in(text);
  std::string entry;
  while (in >> entry) {
    std::vector<std::string> parts;
    std::istringstream es(entry);
    std::string part;
    while (std::getline(es, part, ':')) parts.push_back(part);
    const EstimandKind kind = parse_estimand(parts[0]);
    auto arg = [&](std::size_t k) {
      if (k >= parts.size())
        throw ConfigError("estimand " + entry + " is missing arguments");
      try {
        return std::stod(parts[k]);
      } catch (const std::exception&) {
        throw ConfigError("bad number in estimand " + entry);
      }
    };
    EstimandSpec spec;
    spec.kind = kind;
    switch (kind) {
      case EstimandKind::kAME:
      case EstimandKind::kIME:
        spec = {kind, 1, 0, 0, 0};
        break;
      case EstimandKind::kASE:
      case EstimandKind::kISE:
        spec = {kind, 0, arg(1), 0, 0};
        break;
      case EstimandKind::kATE:
      case EstimandKind::kITE:
        spec = {kind, 1, arg(1), 0, 0};
        break;
      case EstimandKind::kCustom:
        spec = {kind, arg(1), arg(2), arg(3), arg(4)};
        break;
    }
    spec.validate();
    specs.push_back(spec);
  }
  if (specs.empty()) throw ConfigError("no estimands requested");
  return specs;
}

EstimateMethod method_from(const RunConfig& cfg) {
  const std::string name = cfg.get_or("estimate", "method", "tnet");
  if (name == "tnet") return EstimateMethod::kTnet;
  if (name == "plugin") return EstimateMethod::kPlugin;
  throw ConfigError("unknown estimate method: " + name);
}

bool individual_estimand(EstimandKind k) {
  return k == EstimandKind::kIME || k == EstimandKind::kISE ||
         k == EstimandKind::kITE;
}

std::string spec_label(const EstimandSpec& s) {
  std::ostringstream out;
  out << estimand_name(s.kind) << "(" << s.t1 << "," << s.z1 << ";" << s.t2
      << "," << s.z2 << ")";
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path);
  out << text;
}

// ---- subcommand bodies ----

void cmd_generate(const RunConfig& cfg) {
  const DgpSpec spec = dgp_from(cfg);
  const int n = cfg.get_int("graph", "n", 0);
  if (n < 2) throw ConfigError("[graph] n must be >= 2");
  const std::string dir = cfg.get("output", "dir");
  auto graph =
      graph_from(cfg, n, cfg.get_u64("graph", "seed", spec.seed));
  cfg.reject_unknown();
  const GeneratedDataset gen = generate(spec, graph);
  save_dataset(gen, dir);
  echo_config(cfg, dir);
  std::cout << "wrote dataset (n=" << n << ", " << graph->edge_count()
            << " edges) to " << dir << "\n";
}

void cmd_train(const RunConfig& cfg) {
  const std::string data_dir = cfg.get("data", "dir");
  const std::string out_dir = cfg.get("output", "dir");
  const NetworkDataset data = load_dataset(data_dir);
  const ModelConfig mc = model_config_from(cfg, data.covariate_dim());
  const TrainConfig tc = train_config_from(cfg);
  cfg.reject_unknown();

  TNetModel model(mc, tc.seed);
  const TrainResult result = train(model, data, tc);

  fs::create_directories(out_dir);
  save_checkpoint(model, out_dir + "/checkpoint.json", cfg.hash());
  save_history(result.history, out_dir + "/history.csv");
  echo_config(cfg, out_dir);
  std::cout << "trained " << result.history.size() << " iterations (beta="
            << result.beta_used << ", lr_halvings=" << result.lr_halvings
            << ", best=" << result.best_iteration << ")\n";
}

// Shared by estimate/evaluate: records for each requested estimand.
std::vector<ResultRecord> run_estimates(const TNetModel& model,
                                        const NetworkDataset& data,
                                        const std::vector<EstimandSpec>& specs,
                                        EstimateMethod method,
                                        const std::string& hash,
                                        std::uint64_t seed) {
  std::vector<ResultRecord> records;
  for (const auto& spec : specs) {
    ResultRecord rec;
    rec.estimate = estimate_effect(model, data, spec, method);
    if (!individual_estimand(spec.kind)) rec.estimate.per_unit = Vec();
    rec.n = data.n();
    rec.seed = seed;
    rec.config_hash = hash;
    records.push_back(std::move(rec));
    if (!records.back().estimate.warnings.empty() &&
        records.back().estimate.warnings[0].find("overlap") !=
            std::string::npos)
      throw OverlapError("overlap failure for " + spec_label(spec) + ": " +
                         records.back().estimate.warnings[0]);
  }
  return records;
}

// Influence-curve diagnostics at every endpoint of the requested estimands.
void write_eic(const TNetModel& model, const NetworkDataset& data,
               const std::vector<EstimandSpec>& specs, EstimateMethod method,
               const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  std::vector<std::pair<double, double>> seen;
  for (const auto& spec : specs) {
    const std::pair<double, double> ends[] = {{spec.t1, spec.z1},
                                              {spec.t2, spec.z2}};
    for (auto [t, z] : ends) {
      if (std::find(seen.begin(), seen.end(), std::pair{t, z}) != seen.end())
        continue;
      seen.emplace_back(t, z);
      const double psi = psi_hat(model, data, t, z, method).average;
      const EicResult eic = eic_score(model, data, t, z, psi);
      arr.push_back({{"t", t},
                     {"z", z},
                     {"psi", psi},
                     {"score", eic.score},
                     {"sd", eic.sd},
                     {"matched_units", eic.matched_units},
                     {"overlap_warning", eic.overlap_warning}});
    }
  }
  write_text(path, arr.dump(2));
}

void cmd_estimate(const RunConfig& cfg) {
  const NetworkDataset data = load_dataset(cfg.get("data", "dir"));
  const std::string out_dir = cfg.get("output", "dir");
  const TNetModel model = load_checkpoint(cfg.get("checkpoint", "path"));
  const auto specs = parse_specs(cfg.get("estimate", "specs"));
  const EstimateMethod method = method_from(cfg);
  const bool eic = cfg.get_int("estimate", "eic", 0) != 0;
  const std::uint64_t seed = cfg.get_u64("train", "seed", 0);
  cfg.reject_unknown();

  fs::create_directories(out_dir);
  const auto records =
      run_estimates(model, data, specs, method, cfg.hash(), seed);
  save_results(records, out_dir + "/results.json");
  if (eic) write_eic(model, data, specs, method, out_dir + "/eic.json");
  echo_config(cfg, out_dir);
  for (std::size_t k = 0; k < records.size(); ++k)
    std::cout << spec_label(specs[k]) << " = "
              << records[k].estimate.average << "\n";
}

void cmd_evaluate(const RunConfig& cfg) {
  const std::string data_dir = cfg.get("data", "dir");
  const std::string out_dir = cfg.get("output", "dir");
  const GeneratedDataset gen = load_generated(data_dir);  // needs the oracle
  const TNetModel model = load_checkpoint(cfg.get("checkpoint", "path"));
  const auto specs = parse_specs(cfg.get("estimate", "specs"));
  const EstimateMethod method = method_from(cfg);

  const std::string split_name = cfg.get_or("evaluate", "split", "within");
  std::vector<int> eval_idx;
  Split split = Split::kWithinSample;
  if (split_name == "out") {
    split = Split::kOutOfSample;
    const IndexSplit s = within_out_split(
        gen.dataset.n(), cfg.get_double("evaluate", "train_fraction", 0.8),
        cfg.get_double("evaluate", "held_out_fraction", 0.2),
        cfg.get_u64("evaluate", "split_seed", 0));
    eval_idx = s.held_out;
  } else if (split_name != "within") {
    throw ConfigError("[evaluate] split must be within or out");
  }
  cfg.reject_unknown();

  nlohmann::json arr = nlohmann::json::array();
  std::ostringstream csv;
  csv << "estimand,split,mae,pehe,mape,mape_individual\n";
  for (const auto& spec : specs) {
    const EffectEstimate est = estimate_effect(model, gen.dataset, spec,
                                               method);
    const TrueEffect truth =
        true_effect(*gen.truth, spec.t1, spec.z1, spec.t2, spec.z2);
    Vec hat_i = est.per_unit;
    Vec true_i = truth.per_unit;
    if (!eval_idx.empty()) {
      Vec h(eval_idx.size()), t(eval_idx.size());
      for (std::size_t k = 0; k < eval_idx.size(); ++k) {
        h(static_cast<Eigen::Index>(k)) = est.per_unit(eval_idx[k]);
        t(static_cast<Eigen::Index>(k)) = truth.per_unit(eval_idx[k]);
      }
      hat_i = h;
      true_i = t;
    }
    const MetricReport r = compute_metrics(est.average, truth.average, hat_i,
                                           true_i, split);
    nlohmann::json j{{"estimand", spec_label(spec)},
                     {"split", split_name},
                     {"estimate", est.average},
                     {"truth", truth.average},
                     {"mae", r.mae_average},
                     {"pehe", r.pehe_individual}};
    if (r.mape_average) j["mape"] = *r.mape_average;
    if (r.mape_individual) j["mape_individual"] = *r.mape_individual;
    arr.push_back(std::move(j));
    csv << spec_label(spec) << "," << split_name << "," << r.mae_average
        << "," << r.pehe_individual << ","
        << (r.mape_average ? std::to_string(*r.mape_average) : "") << ","
        << (r.mape_individual ? std::to_string(*r.mape_individual) : "")
        << "\n";
    std::cout << spec_label(spec) << " mae=" << r.mae_average
              << " pehe=" << r.pehe_individual << "\n";
  }
  fs::create_directories(out_dir);
  write_text(out_dir + "/metrics.json", arr.dump(2));
  write_text(out_dir + "/metrics.csv", csv.str());
  echo_config(cfg, out_dir);
}

void cmd_dr_check(const RunConfig& cfg) {
  const DgpSpec dgp = dgp_from(cfg);
  const int n = cfg.get_int("stress", "n", 2000);
  const std::string mode_name =
      cfg.get_or("stress", "mode", "freeze_random_init");
  CorruptionMode mode;
  if (mode_name == "freeze_random_init")
    mode = CorruptionMode::kFreezeRandomInit;
  else if (mode_name == "constant")
    mode = CorruptionMode::kConstant;
  else if (mode_name == "label_shuffle")
    mode = CorruptionMode::kLabelShuffle;
  else
    throw ConfigError("unknown corruption mode: " + mode_name);
  const GraphKind kind =
      parse_graph_kind(cfg.get_or("graph", "kind", "preferential_attachment"));
  const double param = cfg.get_double("graph", "param", 5.0);
  const ModelConfig mc = model_config_from(cfg, dgp.covariate_dim);
  const TrainConfig tc = train_config_from(cfg);
  const std::string out_dir = cfg.get("output", "dir");
  cfg.reject_unknown();

  const auto rows = dr_stress(dgp, n, mode, tc, mc, kind, param);
  std::ostringstream csv;
  csv << "corruption,method,ame_estimate,ame_mae\n";
  auto target_name = [](CorruptionTarget t) {
    switch (t) {
      case CorruptionTarget::kNone: return "none";
      case CorruptionTarget::kPropensity: return "propensity";
      case CorruptionTarget::kOutcome: return "outcome";
      case CorruptionTarget::kBoth: return "both";
    }
    return "?";
  };
  for (const auto& row : rows)
    csv << target_name(row.corruption) << ","
        << (row.method == EstimateMethod::kTnet ? "tnet" : "plugin") << ","
        << row.ame_estimate << "," << row.ame_mae << "\n";
  fs::create_directories(out_dir);
  write_text(out_dir + "/stress.csv", csv.str());
  echo_config(cfg, out_dir);
  std::cout << csv.str();
}

void cmd_sweep(const RunConfig& cfg) {
  const DgpSpec dgp = dgp_from(cfg);
  std::vector<int> n_list;
  {
    std::istringstream in(cfg.get("sweep", "n_list"));
    std::string tok;
    while (std::getline(in, tok, ',')) {
      if (tok.empty()) continue;
      try {
        n_list.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw ConfigError("bad entry in [sweep] n_list: " + tok);
      }
    }
  }
  const int repeats = cfg.get_int("sweep", "repeats", 5);
  const GraphKind kind =
      parse_graph_kind(cfg.get_or("graph", "kind", "preferential_attachment"));
  const double param = cfg.get_double("graph", "param", 5.0);
  const ModelConfig mc = model_config_from(cfg, dgp.covariate_dim);
  const TrainConfig tc = train_config_from(cfg);
  const std::string out_dir = cfg.get("output", "dir");
  cfg.reject_unknown();

  const SweepResult res = convergence_sweep(dgp, n_list, tc, mc, repeats,
                                            kind, param);
  // Plot-ready (x, y, sd) series.
  std::ostringstream csv;
  csv << "n,mean_error,sd_error\n";
  for (const auto& row : res.rows)
    csv << row.n << "," << row.mean_error << "," << row.sd_error << "\n";
  fs::create_directories(out_dir);
  write_text(out_dir + "/sweep.csv", csv.str());
  nlohmann::json j{{"loglog_slope", res.loglog_slope},
                   {"strictly_decreasing", res.strictly_decreasing}};
  write_text(out_dir + "/sweep_summary.json", j.dump(2));
  echo_config(cfg, out_dir);
  std::cout << csv.str() << "loglog_slope=" << res.loglog_slope << "\n";
}

void cmd_bootstrap(const RunConfig& cfg) {
  const NetworkDataset data = load_dataset(cfg.get("data", "dir"));
  const auto specs = parse_specs(cfg.get("estimate", "specs"));
  const EstimateMethod method = method_from(cfg);
  const ModelConfig mc = model_config_from(cfg, data.covariate_dim());
  const TrainConfig tc = train_config_from(cfg);
  BootstrapOptions opts;
  opts.model_config = mc;
  opts.replicates = cfg.get_int("bootstrap", "replicates", opts.replicates);
  opts.level = cfg.get_double("bootstrap", "level", opts.level);
  const std::string out_dir = cfg.get("output", "dir");
  cfg.reject_unknown();

  std::vector<ResultRecord> records;
  for (const auto& spec : specs) {
    ResultRecord rec;
    rec.estimate = bootstrap_ci(data, spec, tc, opts, method);
    rec.estimate.per_unit = Vec();
    rec.n = data.n();
    rec.seed = tc.seed;
    rec.config_hash = cfg.hash();
    std::cout << spec_label(spec) << " = " << rec.estimate.average << " ["
              << rec.estimate.ci->lower << ", " << rec.estimate.ci->upper
              << "]\n";
    records.push_back(std::move(rec));
  }
  fs::create_directories(out_dir);
  save_results(records, out_dir + "/results.json");
  echo_config(cfg, out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Targeted doubly robust estimation of treatment and spillover "
               "effects under network interference"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&);
  };
  const Sub subs[] = {
      {"generate", "Generate a semisynthetic network dataset", cmd_generate},
      {"train", "Train the estimator on a dataset directory", cmd_train},
      {"estimate", "Compute effect estimates from a checkpoint", cmd_estimate},
      {"evaluate", "Score estimates against the generation oracle",
       cmd_evaluate},
      {"dr-check", "Run the double-robustness stress arms", cmd_dr_check},
      {"sweep", "Error-versus-n convergence sweep", cmd_sweep},
      {"bootstrap", "Seed-resampling percentile confidence intervals",
       cmd_bootstrap},
  };

  std::map<std::string, std::string> config_paths;
  for (const auto& sub : subs) {
    CLI::App* s = app.add_subcommand(sub.name, sub.help);
    s->add_option("-c,--config", config_paths[sub.name],
                  "Path to the run config file")
        ->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (const auto& sub : subs) {
      if (app.got_subcommand(sub.name)) {
        sub.run(RunConfig::parse_file(config_paths[sub.name]));
        return 0;
      }
    }
    return 2;
  } catch (const OverlapError& e) {
    std::cerr << "overlap error: " << e.what() << "\n";
    return 5;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
