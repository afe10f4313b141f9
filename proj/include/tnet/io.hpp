#pragma once

#include <map>
#include <string>
#include <vector>

#include "tnet/dgp.hpp"
#include "tnet/estimation.hpp"
#include "tnet/train.hpp"

namespace tnet {

// Dataset trio + truth sidecar. Import accepts the same layout for
// externally supplied data (the truth file is optional there).
void save_dataset(const GeneratedDataset& gen, const std::string& dir);
NetworkDataset load_dataset(const std::string& dir);
bool has_truth(const std::string& dir);
GeneratedDataset load_generated(const std::string& dir);

void save_history(const std::vector<LossRow>& history,
                  const std::string& path);

struct ResultRecord {
  EffectEstimate estimate;
  int n = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
};
void save_results(const std::vector<ResultRecord>& records,
                  const std::string& path);

// Flat sectioned key=value config text; '#' starts a comment.
class RunConfig {
 public:
  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;

  // Rejects keys that were never read (typos fail loudly).
  void reject_unknown() const;

  // Canonical text (sorted sections/keys) and its FNV-1a hash.
  std::string canonical() const;
  std::string hash() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  mutable std::map<std::string, std::map<std::string, bool>> seen_;
};

// Writes the canonical config echo next to the results.
void echo_config(const RunConfig& cfg, const std::string& dir);

}  // namespace tnet
