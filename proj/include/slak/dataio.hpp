#pragma once

#include <map>
#include <string>
#include <vector>

#include "slak/kg.hpp"
#include "slak/metapath.hpp"

namespace slak {

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
};

// MAE / RMSE / R^2 with the mean taken from `truth`. Constant truth makes
// R^2 undefined and is reported as an error, never NaN.
Metrics metrics(const std::vector<double>& pred, const std::vector<double>& truth);

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  uint64_t seed = 0;
};

struct Split {
  std::vector<int> train;  // positions into the region list
  std::vector<int> val;
  std::vector<int> test;
};

// Random disjoint cover of [0, n_regions): floor allocation for val/test,
// remainder to train. Deterministic per seed.
Split split_regions(size_t n_regions, const SplitSpec& spec);

// One value per (region, indicator); regions must exist in the KG with type
// Region. File format: CSV with header `region_id,indicator,value`.
class RegionIndicatorTable {
 public:
  static RegionIndicatorTable load(const std::string& path, const KnowledgeGraph& kg);

  void set(const std::string& region, const std::string& indicator, double value);
  void save(const std::string& path) const;

  std::vector<std::string> indicators() const;
  bool has(const std::string& region, const std::string& indicator) const;
  // Values aligned with `region_ids`; errors if any value is missing.
  std::vector<double> values(const std::string& indicator,
                             const std::vector<std::string>& region_ids) const;

 private:
  // indicator -> region -> value
  std::map<std::string, std::map<std::string, double>> values_;
};

// Ordinary least squares with intercept via normal equations; used as the
// independent count-feature oracle for planted-signal datasets.
struct OlsFit {
  std::vector<double> coefficients;  // one per feature
  double intercept = 0.0;
  std::vector<double> predict(const std::vector<std::vector<double>>& features) const;
};
OlsFit ols_fit(const std::vector<std::vector<double>>& features,
               const std::vector<double>& targets);

// --- synthetic LBKG generation --------------------------------------------

struct PlantedPath {
  MetaPathSchema path;
  double weight = 1.0;
};

struct SyntheticSpec {
  std::string name;
  uint64_t seed = 0;
  Schema schema;
  std::map<std::string, size_t> entity_counts;            // per entity type
  std::map<std::string, std::pair<int, int>> degrees;     // relation -> [lo, hi] out-edges/head
  std::pair<int, int> default_degree = {1, 2};
  std::map<std::string, std::vector<PlantedPath>> planted;  // indicator -> paths
  std::map<std::string, double> noise_std;                  // indicator -> sigma
  uint64_t split_seed = 0;

  // JSON document; `schema` is a file path resolved relative to the spec file.
  static SyntheticSpec load(const std::string& path);
};

struct SyntheticDataset {
  KnowledgeGraph kg;
  RegionIndicatorTable indicators;
  std::map<std::string, double> oracle_r2;  // per indicator, test-split OLS R^2
};

// Builds a schema-valid KG whose indicator values are a noisy linear function
// of planted meta-path instance counts. Rejects specs under which a planted
// path has zero instances.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// Writes schema.tsv / entities.tsv / facts.tsv / indicators.csv /
// manifest.json into `out_dir`.
void write_synthetic_dataset(const SyntheticSpec& spec, const SyntheticDataset& dataset,
                             const std::string& out_dir);

// Loads a dataset directory produced by write_synthetic_dataset (or any
// directory with the same layout).
struct LoadedDataset {
  Schema schema;
  KnowledgeGraph kg;
  RegionIndicatorTable indicators;
  std::vector<std::string> region_ids;  // canonical order: sorted by id
};
LoadedDataset load_dataset_dir(const std::string& dir);

}  // namespace slak
