#include "tnet/io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace tnet {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read: " + path);
  return in;
}

std::vector<double> json_vec(const Vec& v) {
  return {v.data(), v.data() + v.size()};
}

Vec vec_json(const nlohmann::json& j) {
  const auto data = j.get<std::vector<double>>();
  Vec v(static_cast<Eigen::Index>(data.size()));
  std::copy(data.begin(), data.end(), v.data());
  return v;
}

}  // namespace

void save_dataset(const GeneratedDataset& gen, const std::string& dir) {
  fs::create_directories(dir);
  const auto& d = gen.dataset;
  {
    auto out = open_out(dir + "/features.csv");
    out << "id";
    for (int k = 0; k < d.covariate_dim(); ++k) out << ",x" << k;
    out << "\n";
    for (int i = 0; i < d.n(); ++i) {
      out << i;
      for (int k = 0; k < d.covariate_dim(); ++k)
        out << "," << fmt(d.features(i, k));
      out << "\n";
    }
  }
  {
    auto out = open_out(dir + "/observations.csv");
    out << "id,treatment,outcome\n";
    for (int i = 0; i < d.n(); ++i)
      out << i << "," << static_cast<int>(d.treatments(i)) << ","
          << fmt(d.outcomes(i)) << "\n";
  }
  save_edge_list(*d.graph, dir + "/edges.txt");
  if (gen.truth) {
    nlohmann::json j;
    j["variant"] = variant_name(gen.truth->variant());
    j["po"] = json_vec(gen.truth->po());
    j["po_neigh"] = json_vec(gen.truth->po_neigh());
    j["noise"] = json_vec(gen.noise);
    j["w1"] = json_vec(gen.w1);
    j["w2"] = json_vec(gen.w2);
    open_out(dir + "/truth.json") << j.dump();
  }
}

NetworkDataset load_dataset(const std::string& dir) {
  NetworkDataset d;
  {
    auto in = open_in(dir + "/features.csv");
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');  // id
      while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("empty features file in " + dir);
    d.features = Mat(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size())
        throw IoError("ragged features row " + std::to_string(i));
      for (std::size_t k = 0; k < rows[i].size(); ++k)
        d.features(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  const int n = d.n();
  d.treatments = Vec(n);
  d.outcomes = Vec(n);
  {
    auto in = open_in(dir + "/observations.csv");
    std::string line;
    std::getline(in, line);
    int count = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');
      const int id = std::stoi(cell);
      if (id < 0 || id >= n) throw IoError("observation id out of range");
      std::getline(ss, cell, ',');
      d.treatments(id) = std::stod(cell);
      std::getline(ss, cell, ',');
      d.outcomes(id) = std::stod(cell);
      ++count;
    }
    if (count != n) throw IoError("observations row count mismatch");
  }
  d.graph = std::make_shared<Graph>(load_edge_list(dir + "/edges.txt", n));
  d.exposures = compute_exposure(*d.graph, d.treatments).z;
  d.validate();
  return d;
}

bool has_truth(const std::string& dir) {
  return fs::exists(dir + "/truth.json");
}

GeneratedDataset load_generated(const std::string& dir) {
  GeneratedDataset gen;
  gen.dataset = load_dataset(dir);
  if (!has_truth(dir))
    throw IoError("no truth sidecar in " + dir + " (no-oracle)");
  nlohmann::json j = nlohmann::json::parse(open_in(dir + "/truth.json"));
  gen.truth = std::make_shared<TruthOracle>(
      parse_variant(j.at("variant").get<std::string>()),
      vec_json(j.at("po")), vec_json(j.at("po_neigh")));
  gen.noise = vec_json(j.at("noise"));
  gen.w1 = vec_json(j.at("w1"));
  gen.w2 = vec_json(j.at("w2"));
  return gen;
}

void save_history(const std::vector<LossRow>& history,
                  const std::string& path) {
  auto out = open_out(path);
  out << "iteration,l1,l2,l3,val_l2\n";
  for (const auto& row : history)
    out << row.iteration << "," << fmt(row.l1) << "," << fmt(row.l2) << ","
        << fmt(row.l3) << "," << fmt(row.val_l2) << "\n";
}

void save_results(const std::vector<ResultRecord>& records,
                  const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& rec : records) {
    nlohmann::json j;
    const auto& e = rec.estimate;
    j["estimand"] = estimand_name(e.spec.kind);
    j["pair"] = {{"t", e.spec.t1}, {"z", e.spec.z1},
                 {"t2", e.spec.t2}, {"z2", e.spec.z2}};
    j["method"] = e.method == EstimateMethod::kTnet ? "tnet" : "plugin";
    j["average"] = e.average;
    if (e.per_unit.size() > 0) j["per_unit"] = json_vec(e.per_unit);
    if (e.ci)
      j["ci"] = {{"lower", e.ci->lower},
                 {"upper", e.ci->upper},
                 {"level", e.ci->level}};
    j["n"] = rec.n;
    j["seed"] = rec.seed;
    j["config_hash"] = rec.config_hash;
    j["warnings"] = e.warnings;
    arr.push_back(std::move(j));
  }
  open_out(path) << arr.dump(2);
}

// ---- RunConfig ----

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("bad section at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key=value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("empty key at line " + std::to_string(lineno));
    cfg.sections_[section][key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  auto in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return false;
  const bool found = s->second.count(key) > 0;
  if (found) seen_[section][key] = true;
  return found;
}

std::string RunConfig::get(const std::string& section,
                           const std::string& key) const {
  if (!has(section, key))
    throw ConfigError("missing config key [" + section + "] " + key);
  return sections_.at(section).at(key);
}

std::string RunConfig::get_or(const std::string& section,
                              const std::string& key,
                              const std::string& fallback) const {
  return has(section, key) ? sections_.at(section).at(key) : fallback;
}

double RunConfig::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stod(sections_.at(section).at(key));
  } catch (const std::exception&) {
    throw ConfigError("bad number for [" + section + "] " + key);
  }
}

int RunConfig::get_int(const std::string& section, const std::string& key,
                       int fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stoi(sections_.at(section).at(key));
  } catch (const std::exception&) {
    throw ConfigError("bad integer for [" + section + "] " + key);
  }
}

std::uint64_t RunConfig::get_u64(const std::string& section,
                                 const std::string& key,
                                 std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stoull(sections_.at(section).at(key));
  } catch (const std::exception&) {
    throw ConfigError("bad integer for [" + section + "] " + key);
  }
}

void RunConfig::reject_unknown() const {
  for (const auto& [section, kv] : sections_)
    for (const auto& [key, value] : kv)
      if (!seen_[section][key])
        throw ConfigError("unknown config key [" + section + "] " + key);
}

std::string RunConfig::canonical() const {
  std::ostringstream out;
  for (const auto& [section, kv] : sections_) {
    out << "[" << section << "]\n";
    for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
  }
  return out.str();
}

std::string RunConfig::hash() const {
  // FNV-1a 64
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

void echo_config(const RunConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  open_out(dir + "/config.echo.ini")
      << "# config hash " << cfg.hash() << "\n" << cfg.canonical();
}

}  // namespace tnet
