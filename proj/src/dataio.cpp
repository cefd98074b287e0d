#include "slak/dataio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

namespace slak {

using nlohmann::json;

Metrics metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    fail(ErrorKind::Invalid, "metrics: prediction/truth size mismatch");
  double n = static_cast<double>(truth.size());
  double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
  double abs_sum = 0.0, sq_sum = 0.0, tot_sum = 0.0;
  for (size_t i = 0; i < truth.size(); ++i) {
    double d = pred[i] - truth[i];
    abs_sum += std::fabs(d);
    sq_sum += d * d;
    double t = truth[i] - mean;
    tot_sum += t * t;
  }
  if (tot_sum == 0.0)
    fail(ErrorKind::Invalid, "metrics: constant targets make R^2 undefined");
  Metrics m;
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  m.r2 = 1.0 - sq_sum / tot_sum;
  return m;
}

Split split_regions(size_t n_regions, const SplitSpec& spec) {
  if (n_regions < 5) fail(ErrorKind::Invalid, "split: need at least 5 regions");
  if (std::fabs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
    fail(ErrorKind::Invalid, "split: ratios must sum to 1");
  std::vector<int> order(n_regions);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  for (size_t i = n_regions - 1; i > 0; --i)
    std::swap(order[i], order[rng.index(i + 1)]);
  size_t n_val = static_cast<size_t>(std::floor(spec.val * static_cast<double>(n_regions)));
  size_t n_test = static_cast<size_t>(std::floor(spec.test * static_cast<double>(n_regions)));
  size_t n_train = n_regions - n_val - n_test;
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  s.val.assign(order.begin() + static_cast<long>(n_train),
               order.begin() + static_cast<long>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<long>(n_train + n_val), order.end());
  return s;
}

RegionIndicatorTable RegionIndicatorTable::load(const std::string& path,
                                                const KnowledgeGraph& kg) {
  std::istringstream in(read_file(path));
  RegionIndicatorTable table;
  std::string line;
  size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!saw_header) {
      if (t != "region_id,indicator,value")
        fail(ErrorKind::Parse, path + ":" + std::to_string(lineno) +
                                   ": expected header `region_id,indicator,value`");
      saw_header = true;
      continue;
    }
    auto fields = split(t, ',');
    if (fields.size() != 3)
      fail(ErrorKind::Parse, path + ":" + std::to_string(lineno) + ": expected 3 fields");
    const std::string& region = fields[0];
    int idx = kg.entity_index(region);
    if (idx < 0)
      fail(ErrorKind::Validation,
           path + ":" + std::to_string(lineno) + ": unknown region `" + region + "`");
    if (kg.entity(idx).etype != "Region")
      fail(ErrorKind::Validation, path + ":" + std::to_string(lineno) + ": entity `" + region +
                                      "` has type " + kg.entity(idx).etype);
    double value;
    try {
      value = std::stod(fields[2]);
    } catch (const std::exception&) {
      fail(ErrorKind::Parse,
           path + ":" + std::to_string(lineno) + ": bad value `" + fields[2] + "`");
    }
    if (!std::isfinite(value))
      fail(ErrorKind::Validation, path + ":" + std::to_string(lineno) + ": non-finite value");
    if (table.has(region, fields[1]))
      fail(ErrorKind::Validation, path + ":" + std::to_string(lineno) + ": duplicate value for (" +
                                      region + ", " + fields[1] + ")");
    table.set(region, fields[1], value);
  }
  return table;
}

void RegionIndicatorTable::set(const std::string& region, const std::string& indicator,
                               double value) {
  values_[indicator][region] = value;
}

void RegionIndicatorTable::save(const std::string& path) const {
  std::ostringstream out;
  out << "region_id,indicator,value\n";
  out.precision(17);
  for (const auto& [indicator, rows] : values_)
    for (const auto& [region, value] : rows)
      out << region << ',' << indicator << ',' << value << '\n';
  write_file(path, out.str());
}

std::vector<std::string> RegionIndicatorTable::indicators() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : values_) out.push_back(name);
  return out;
}

bool RegionIndicatorTable::has(const std::string& region, const std::string& indicator) const {
  auto it = values_.find(indicator);
  return it != values_.end() && it->second.count(region) > 0;
}

std::vector<double> RegionIndicatorTable::values(const std::string& indicator,
                                                 const std::vector<std::string>& region_ids) const {
  auto it = values_.find(indicator);
  if (it == values_.end()) fail(ErrorKind::Invalid, "unknown indicator `" + indicator + "`");
  std::vector<double> out;
  out.reserve(region_ids.size());
  for (const std::string& region : region_ids) {
    auto vit = it->second.find(region);
    if (vit == it->second.end())
      fail(ErrorKind::Invalid, "no " + indicator + " value for region `" + region + "`");
    out.push_back(vit->second);
  }
  return out;
}

OlsFit ols_fit(const std::vector<std::vector<double>>& features,
               const std::vector<double>& targets) {
  size_t n = targets.size();
  if (features.size() != n || n == 0) fail(ErrorKind::Invalid, "ols_fit: size mismatch");
  size_t k = features[0].size() + 1;  // + intercept
  // Normal equations (X^T X) b = X^T y, solved by Gaussian elimination with
  // partial pivoting; a tiny ridge keeps degenerate (constant) features solvable.
  std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
  for (size_t row = 0; row < n; ++row) {
    std::vector<double> x(k, 1.0);
    for (size_t f = 0; f + 1 < k; ++f) x[f + 1] = features[row][f];
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = 0; j < k; ++j) a[i][j] += x[i] * x[j];
      a[i][k] += x[i] * targets[row];
    }
  }
  for (size_t i = 1; i < k; ++i) a[i][i] += 1e-9;
  for (size_t col = 0; col < k; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < k; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    if (std::fabs(a[col][col]) < 1e-12)
      fail(ErrorKind::Runtime, "ols_fit: singular normal equations");
    for (size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      double factor = a[r][col] / a[col][col];
      for (size_t c = col; c <= k; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  OlsFit fit;
  fit.intercept = a[0][k] / a[0][0];
  fit.coefficients.resize(k - 1);
  for (size_t f = 0; f + 1 < k; ++f) fit.coefficients[f] = a[f + 1][k] / a[f + 1][f + 1];
  return fit;
}

std::vector<double> OlsFit::predict(const std::vector<std::vector<double>>& features) const {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& row : features) {
    double v = intercept;
    for (size_t f = 0; f < coefficients.size(); ++f) v += coefficients[f] * row[f];
    out.push_back(v);
  }
  return out;
}

SyntheticSpec SyntheticSpec::load(const std::string& path) {
  json doc = json::parse(read_file(path), nullptr, true, /*ignore_comments=*/true);
  SyntheticSpec spec;
  spec.name = doc.value("name", "synthetic");
  spec.seed = doc.value("seed", 0ULL);
  spec.split_seed = doc.value("split_seed", 0ULL);

  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::string schema_rel = doc.value("schema", "lbkg_schema.tsv");
  std::filesystem::path schema_path = std::filesystem::path(schema_rel);
  if (schema_path.is_relative()) schema_path = base / schema_path;
  spec.schema = Schema::load(schema_path.string());

  for (auto& [etype, count] : doc.at("entities").items()) {
    if (!entity_types::is_valid(etype))
      fail(ErrorKind::Validation, path + ": unknown entity type `" + etype + "`");
    spec.entity_counts[etype] = count.get<size_t>();
  }
  if (doc.contains("default_degree")) {
    auto d = doc["default_degree"];
    spec.default_degree = {d.at(0).get<int>(), d.at(1).get<int>()};
  }
  if (doc.contains("degrees")) {
    for (auto& [rel, range] : doc["degrees"].items()) {
      if (spec.schema.index_of(rel) < 0)
        fail(ErrorKind::Validation, path + ": degree for unknown relation `" + rel + "`");
      spec.degrees[rel] = {range.at(0).get<int>(), range.at(1).get<int>()};
    }
  }
  for (auto& [indicator, paths] : doc.at("planted").items()) {
    for (auto& entry : paths) {
      PlantedPath p;
      p.path = parse_metapath(entry.at("path").get<std::string>(), spec.schema);
      p.weight = entry.value("weight", 1.0);
      spec.planted[indicator].push_back(std::move(p));
    }
  }
  if (doc.contains("noise_std"))
    for (auto& [indicator, sigma] : doc["noise_std"].items()) {
      double s = sigma.get<double>();
      if (s < 0) fail(ErrorKind::Validation, path + ": noise_std must be >= 0");
      spec.noise_std[indicator] = s;
    }
  return spec;
}

namespace {

std::string entity_id(const std::string& etype, size_t i) {
  std::string lower;
  for (char c : etype) lower.push_back(static_cast<char>(std::tolower(c)));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return lower + ":" + buf;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  KnowledgeGraphBuilder builder(spec.schema);
  std::map<std::string, std::vector<std::string>> ids_by_type;
  for (const std::string& etype : spec.schema.entity_types()) {
    auto it = spec.entity_counts.find(etype);
    size_t count = it == spec.entity_counts.end() ? 0 : it->second;
    if (count == 0)
      fail(ErrorKind::Validation, "synthetic spec: no entities of type " + etype +
                                      " but the schema references it");
    for (size_t i = 0; i < count; ++i) {
      std::string id = entity_id(etype, i);
      builder.add_entity(id, etype);
      ids_by_type[etype].push_back(id);
    }
  }

  // Each relation is sampled independently: per head entity, a uniform
  // out-degree in [lo, hi] with distinct random tails (no self loops).
  for (const RelationType& rel : spec.schema.relations()) {
    Rng rng = Rng::fanout(spec.seed, "facts:" + rel.name);
    auto deg_it = spec.degrees.find(rel.name);
    auto [lo, hi] = deg_it == spec.degrees.end() ? spec.default_degree : deg_it->second;
    if (lo < 0 || hi < lo)
      fail(ErrorKind::Validation, "synthetic spec: bad degree range for " + rel.name);
    const auto& heads = ids_by_type.at(rel.head_type);
    const auto& tails = ids_by_type.at(rel.tail_type);
    for (const std::string& head : heads) {
      int k = rng.uniform_int(lo, hi);
      std::vector<size_t> chosen;
      for (int e = 0; e < k && chosen.size() < tails.size(); ++e) {
        size_t t = rng.index(tails.size());
        size_t guard = 0;
        while ((tails[t] == head ||
                std::find(chosen.begin(), chosen.end(), t) != chosen.end()) &&
               guard++ < 64)
          t = rng.index(tails.size());
        if (tails[t] == head || std::find(chosen.begin(), chosen.end(), t) != chosen.end())
          continue;
        chosen.push_back(t);
        builder.add_fact(head, rel.name, tails[t]);
      }
    }
  }

  SyntheticDataset out{builder.build(), {}, {}};
  const KnowledgeGraph& kg = out.kg;

  std::vector<int> regions = kg.entities_of_type("Region");
  std::vector<std::string> region_ids;
  for (int r : regions) region_ids.push_back(kg.entity(r).id);

  for (const auto& [indicator, paths] : spec.planted) {
    // counts[path][region position]
    std::vector<std::vector<double>> features(region_ids.size(),
                                              std::vector<double>(paths.size(), 0.0));
    for (size_t p = 0; p < paths.size(); ++p) {
      auto counts = count_instances_all(kg, paths[p].path);
      uint64_t total = 0;
      for (size_t r = 0; r < counts.size(); ++r) {
        features[r][p] = static_cast<double>(counts[r].second);
        total += counts[r].second;
      }
      if (total == 0)
        fail(ErrorKind::Validation, "synthetic spec: planted path `" +
                                        format_metapath(paths[p].path) + "` for " + indicator +
                                        " has zero instances; raise the relevant degrees");
    }
    double sigma = 0.0;
    if (auto it = spec.noise_std.find(indicator); it != spec.noise_std.end()) sigma = it->second;
    Rng noise_rng = Rng::fanout(spec.seed, "noise:" + indicator);
    std::vector<double> values(region_ids.size());
    for (size_t r = 0; r < region_ids.size(); ++r) {
      double v = 0.0;
      for (size_t p = 0; p < paths.size(); ++p) v += paths[p].weight * features[r][p];
      v += sigma * noise_rng.normal();
      values[r] = v;
      out.indicators.set(region_ids[r], indicator, v);
    }

    // Independent count-feature oracle: OLS on the true counts, R^2 on the
    // held-out test split.
    Split sp = split_regions(region_ids.size(), SplitSpec{0.6, 0.2, 0.2, spec.split_seed});
    std::vector<std::vector<double>> train_x;
    std::vector<double> train_y;
    for (int i : sp.train) {
      train_x.push_back(features[static_cast<size_t>(i)]);
      train_y.push_back(values[static_cast<size_t>(i)]);
    }
    OlsFit fit = ols_fit(train_x, train_y);
    std::vector<std::vector<double>> test_x;
    std::vector<double> test_y;
    for (int i : sp.test) {
      test_x.push_back(features[static_cast<size_t>(i)]);
      test_y.push_back(values[static_cast<size_t>(i)]);
    }
    out.oracle_r2[indicator] = metrics(fit.predict(test_x), test_y).r2;
  }
  return out;
}

void write_synthetic_dataset(const SyntheticSpec& spec, const SyntheticDataset& dataset,
                             const std::string& out_dir) {
  ensure_dir(out_dir);
  // Schema file regenerated from the in-memory schema (identical content to
  // the source file modulo comments).
  std::string schema_out;
  schema_out += "# relation\thead_type\ttail_type\tdescription\n";
  for (const RelationType& rel : spec.schema.relations()) {
    schema_out += rel.name + '\t' + rel.head_type + '\t' + rel.tail_type + '\t' + rel.description +
                  '\n';
  }
  write_file(out_dir + "/schema.tsv", schema_out);
  dataset.kg.save(out_dir + "/entities.tsv", out_dir + "/facts.tsv");
  dataset.indicators.save(out_dir + "/indicators.csv");

  json manifest;
  manifest["name"] = spec.name;
  manifest["seed"] = spec.seed;
  manifest["split_seed"] = spec.split_seed;
  manifest["entities"] = spec.entity_counts;
  manifest["n_entities"] = dataset.kg.entity_count();
  manifest["n_facts"] = dataset.kg.fact_count();
  manifest["kg_hash"] = dataset.kg.content_hash();
  json planted = json::object();
  for (const auto& [indicator, paths] : spec.planted) {
    json arr = json::array();
    for (const PlantedPath& p : paths)
      arr.push_back({{"path", format_metapath(p.path)}, {"weight", p.weight}});
    planted[indicator] = arr;
  }
  manifest["planted"] = planted;
  manifest["noise_std"] = spec.noise_std;
  manifest["oracle_r2"] = dataset.oracle_r2;
  write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

LoadedDataset load_dataset_dir(const std::string& dir) {
  LoadedDataset out;
  out.schema = Schema::load(dir + "/schema.tsv");
  out.kg = KnowledgeGraph::load(dir + "/entities.tsv", dir + "/facts.tsv", out.schema);
  out.indicators = RegionIndicatorTable::load(dir + "/indicators.csv", out.kg);
  for (int r : out.kg.entities_of_type("Region")) out.region_ids.push_back(out.kg.entity(r).id);
  return out;
}

}  // namespace slak
