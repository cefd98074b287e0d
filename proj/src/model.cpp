#include "slak/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace slak {

using nlohmann::json;

TargetTransform target_transform_from_string(const std::string& s) {
  if (s == "zscore") return TargetTransform::ZScore;
  if (s == "log-zscore") return TargetTransform::LogZScore;
  fail(ErrorKind::Invalid, "unknown target transform `" + s + "` (expected zscore|log-zscore)");
}

std::string to_string(TargetTransform t) {
  return t == TargetTransform::ZScore ? "zscore" : "log-zscore";
}

void SlakConfig::validate() const {
  if (n_p < 1) fail(ErrorKind::Invalid, "config: n_p must be >= 1");
  if (patience >= max_epochs) fail(ErrorKind::Invalid, "config: patience must be < max_epochs");
  if (d_h == 0 || L < 1) fail(ErrorKind::Invalid, "config: d_h and L must be positive");
  if (lr <= 0) fail(ErrorKind::Invalid, "config: lr must be positive");
}

SlakConfig SlakConfig::from_json_text(const std::string& text) {
  json doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  SlakConfig c;
  c.d_h = doc.value("d_h", c.d_h);
  c.L = doc.value("L", c.L);
  c.lr = doc.value("lr", c.lr);
  c.weight_decay = doc.value("weight_decay", c.weight_decay);
  c.embed_lr_scale = doc.value("embed_lr_scale", c.embed_lr_scale);
  c.max_epochs = doc.value("max_epochs", c.max_epochs);
  c.patience = doc.value("patience", c.patience);
  c.n_p = doc.value("n_p", c.n_p);
  c.seed = doc.value("seed", c.seed);
  if (doc.contains("normalization"))
    c.normalization = normalization_from_string(doc["normalization"].get<std::string>());
  if (doc.contains("global_normalization"))
    c.global_normalization =
        normalization_from_string(doc["global_normalization"].get<std::string>());
  if (doc.contains("ablation")) {
    const json& a = doc["ablation"];
    c.ablation.no_self_update = a.value("no_self_update", false);
    c.ablation.no_rec = a.value("no_rec", false);
    c.ablation.no_trans = a.value("no_trans", false);
    c.ablation.no_attn = a.value("no_attn", false);
  }
  if (doc.contains("target_transform"))
    c.target_transform = target_transform_from_string(doc["target_transform"].get<std::string>());
  c.validate();
  return c;
}

std::string SlakConfig::to_json_text() const {
  json doc;
  doc["d_h"] = d_h;
  doc["L"] = L;
  doc["lr"] = lr;
  doc["weight_decay"] = weight_decay;
  doc["embed_lr_scale"] = embed_lr_scale;
  doc["max_epochs"] = max_epochs;
  doc["patience"] = patience;
  doc["n_p"] = n_p;
  doc["seed"] = seed;
  doc["normalization"] = to_string(normalization);
  doc["global_normalization"] = to_string(global_normalization);
  doc["ablation"] = {{"no_self_update", ablation.no_self_update},
                     {"no_rec", ablation.no_rec},
                     {"no_trans", ablation.no_trans},
                     {"no_attn", ablation.no_attn}};
  doc["target_transform"] = to_string(target_transform);
  return doc.dump(2) + "\n";
}

TargetScaler TargetScaler::fit(const std::vector<double>& train_values,
                               TargetTransform transform) {
  if (train_values.empty()) fail(ErrorKind::Invalid, "target scaler: empty training values");
  TargetScaler s;
  s.kind_ = transform;
  std::vector<double> pre;
  pre.reserve(train_values.size());
  for (double y : train_values) {
    if (transform == TargetTransform::LogZScore) {
      if (y < 0) fail(ErrorKind::Invalid, "log-zscore transform requires nonnegative targets");
      pre.push_back(std::log1p(y));
    } else {
      pre.push_back(y);
    }
  }
  double n = static_cast<double>(pre.size());
  for (double v : pre) s.mean_ += v;
  s.mean_ /= n;
  double var = 0.0;
  for (double v : pre) var += (v - s.mean_) * (v - s.mean_);
  s.std_ = std::sqrt(var / n);
  if (s.std_ == 0.0)
    fail(ErrorKind::Invalid, "target scaler: constant training targets");
  return s;
}

double TargetScaler::transform(double y) const {
  double v = kind_ == TargetTransform::LogZScore ? std::log1p(y) : y;
  return (v - mean_) / std_;
}

double TargetScaler::inverse(double z) const {
  double v = z * std_ + mean_;
  return kind_ == TargetTransform::LogZScore ? std::expm1(v) : v;
}

std::vector<double> TargetScaler::transform(const std::vector<double>& ys) const {
  std::vector<double> out;
  out.reserve(ys.size());
  for (double y : ys) out.push_back(transform(y));
  return out;
}

std::vector<double> TargetScaler::inverse(const std::vector<double>& zs) const {
  std::vector<double> out;
  out.reserve(zs.size());
  for (double z : zs) out.push_back(inverse(z));
  return out;
}

SlakModel SlakModel::build(const KnowledgeGraph& kg, const std::vector<std::string>& region_ids,
                           const std::vector<MetaPathSchema>& metapaths,
                           const Tensor& metapath_embeddings, const SlakConfig& config,
                           const std::optional<CrossTaskInputs>& cross_task) {
  config.validate();
  if (metapaths.empty()) fail(ErrorKind::Invalid, "model: need at least one meta-path");
  if (metapath_embeddings.rows() != metapaths.size() ||
      metapath_embeddings.cols() != kSemanticDim)
    fail(ErrorKind::Invalid, "model: meta-path embeddings misaligned with meta-path set");

  SlakModel m;
  m.params_ = std::make_unique<ParameterSet>();
  m.graph_ = std::make_unique<Graph>(*m.params_);
  m.n_regions_ = region_ids.size();
  Graph& g = *m.graph_;
  ParameterSet& ps = *m.params_;

  RgcnConfig sub_config{config.L, config.d_h, config.d_h, config.normalization};
  RgcnConfig global_config{config.L, config.d_h, config.d_h, config.global_normalization};

  // Every component draws its initial weights from its own named stream, so
  // the init of one component is independent of the others. Sub-encoders are
  // keyed by their meta-path, which makes the model invariant to the order of
  // the meta-path list.
  auto stream = [&config](const std::string& name) { return Rng::fanout(config.seed, name); };

  // Shared trainable entity-embedding table, one row per KG entity. Rows
  // start at a per-type base vector plus a small per-entity jitter, so the
  // initial region representations are driven by graph structure rather than
  // by entity identities.
  {
    Rng rng = stream("init:table");
    std::map<std::string, std::vector<double>> type_base;
    for (const char* etype : entity_types::kNames) {
      std::vector<double>& base = type_base[etype];
      base.resize(config.d_h);
      for (double& v : base) v = 0.1 * rng.normal();
    }
    Rng jitter = stream("init:table:jitter");
    Tensor init(kg.entity_count(), config.d_h);
    for (size_t i = 0; i < kg.entity_count(); ++i) {
      const std::vector<double>& base = type_base.at(kg.entity(static_cast<int>(i)).etype);
      for (size_t c = 0; c < config.d_h; ++c)
        init.at(i, c) = base[c] + 0.001 * jitter.normal();
    }
    ps.add("embed.table", std::move(init));
  }
  int table = g.param("embed.table");

  std::vector<int> region_rows;
  for (const std::string& id : region_ids) {
    int idx = kg.entity_index(id);
    if (idx < 0) fail(ErrorKind::Invalid, "model: region `" + id + "` not in KG");
    region_rows.push_back(idx);
  }

  // Global encoder over the full LBKG.
  EncoderGraph global_structure = EncoderGraph::from_kg(kg);
  Rng global_rng = stream("init:global");
  int global_out = RgcnEncoder::build(g, ps, "global", global_structure, table, global_config,
                                      global_rng, m.sparse_storage_);
  m.global_node_ =
      g.gather_rows(global_out, region_rows, config.d_h, "global.regions");
  int global_regions = m.global_node_;

  // One sub-KG encoder per meta-path; each indexes the shared table.
  std::vector<int> source_nodes;
  for (size_t p = 0; p < metapaths.size(); ++p) {
    SubKG sub = extract_subkg(kg, metapaths[p]);
    MetaPathSchema bare = metapaths[p];
    bare.label.clear();
    std::string path_key = format_metapath(bare);
    std::string prefix = "sub" + std::to_string(p);
    if (sub.entities.empty()) {
      // No instances: this source contributes zero rows.
      source_nodes.push_back(
          g.constant(Tensor::zeros(region_ids.size(), config.d_h), prefix + ".regions"));
      continue;
    }
    EncoderGraph structure = EncoderGraph::from_subkg(sub);
    Rng sub_rng = stream("init:sub:" + path_key);
    int sub_out =
        RgcnEncoder::build(g, ps, prefix, structure, table, sub_config, sub_rng,
                           m.sparse_storage_);
    std::map<int, int> local;
    for (size_t i = 0; i < structure.table_rows.size(); ++i)
      local[structure.table_rows[i]] = static_cast<int>(i);
    std::vector<int> rows;
    for (int idx : region_rows) {
      auto it = local.find(idx);
      rows.push_back(it == local.end() ? -1 : it->second);  // absent region -> zero row
    }
    source_nodes.push_back(g.gather_rows(sub_out, rows, config.d_h, prefix + ".regions"));
  }

  // Semantic-guided fusion; with no_attn the query is a free learned vector
  // per source instead of a projection of the semantic embeddings.
  int queries;
  if (config.ablation.no_attn) {
    Tensor free_q(metapaths.size(), config.d_h);
    for (size_t p = 0; p < metapaths.size(); ++p) {
      MetaPathSchema bare = metapaths[p];
      bare.label.clear();
      Rng row_rng = stream("init:freequery:" + format_metapath(bare));
      for (size_t c = 0; c < config.d_h; ++c) free_q.at(p, c) = 0.1 * row_rng.normal();
    }
    ps.add("fusion.free_query", std::move(free_q));
    queries = g.param("fusion.free_query");
  } else {
    Rng rng = stream("init:fusion");
    ps.add("fusion.W_Q", Tensor::gaussian(kSemanticDim, config.d_h,
                                          1.0 / std::sqrt(static_cast<double>(kSemanticDim)),
                                          rng));
    int emb = g.constant(metapath_embeddings, "fusion.E_MP");
    queries = g.matmul(emb, g.param("fusion.W_Q"), "fusion.Q");
  }
  int scores = g.attn_scores(queries, source_nodes, "fusion.scores");
  m.alpha_node_ = g.row_softmax(scores, "fusion.alpha");
  int fused = g.attn_mix(m.alpha_node_, source_nodes, "fusion.mix");

  // Residual connection onto the global encoder output.
  int e_reg = g.add(global_regions, fused, "model.e_reg");

  int representation = e_reg;
  if (cross_task && !cross_task->embeddings.empty()) {
    const CrossTaskInputs& ct = *cross_task;
    if (ct.task_queries.rows() != ct.embeddings.size())
      fail(ErrorKind::Invalid, "model: cross-task queries misaligned with embeddings");
    std::vector<int> other_nodes;
    for (size_t i = 0; i < ct.embeddings.size(); ++i) {
      if (ct.embeddings[i].rows() != region_ids.size() || ct.embeddings[i].cols() != config.d_h)
        fail(ErrorKind::Invalid, "model: saved embeddings " + ct.embeddings[i].shape_str() +
                                     " misaligned with regions x d_h");
      other_nodes.push_back(
          g.constant(ct.embeddings[i], "crosstask.E_" + std::to_string(i)));
    }
    int ct_queries;
    Rng ct_rng = stream("init:crosstask");
    if (config.ablation.no_attn) {
      ps.add("crosstask.free_query",
             Tensor::gaussian(ct.embeddings.size(), config.d_h, 0.1, ct_rng));
      ct_queries = g.param("crosstask.free_query");
    } else {
      ps.add("crosstask.W_Q", Tensor::gaussian(kSemanticDim, config.d_h,
                                               1.0 / std::sqrt(static_cast<double>(kSemanticDim)),
                                               ct_rng));
      int task_emb = g.constant(ct.task_queries, "crosstask.E_task");
      ct_queries = g.matmul(task_emb, g.param("crosstask.W_Q"), "crosstask.Q");
    }
    int ct_scores = g.attn_scores(ct_queries, other_nodes, "crosstask.scores");
    m.cross_alpha_node_ = g.row_softmax(ct_scores, "crosstask.alpha");
    int transferred = g.attn_mix(m.cross_alpha_node_, other_nodes, "crosstask.mix");
    representation = g.add(e_reg, transferred, "model.e_fused");
  }
  m.fused_node_ = representation;

  // MLP head: d_h -> d_h -> 1 with relu between.
  Rng head_rng = stream("init:head");
  double head_std = 1.0 / std::sqrt(static_cast<double>(config.d_h));
  ps.add("head.W1", Tensor::gaussian(config.d_h, config.d_h, head_std, head_rng));
  ps.add("head.b1", Tensor::zeros(1, config.d_h));
  ps.add("head.W2", Tensor::gaussian(config.d_h, 1, head_std, head_rng));
  ps.add("head.b2", Tensor::zeros(1, 1));
  int h1 = g.relu(g.add_row_vec(g.matmul(representation, g.param("head.W1"), "head.z1"),
                                g.param("head.b1"), "head.z1b"),
                  "head.h1");
  m.pred_node_ = g.add_row_vec(g.matmul(h1, g.param("head.W2"), "head.z2"), g.param("head.b2"),
                               "model.pred");
  return m;
}

std::vector<double> SlakModel::predictions() {
  const Tensor& p = graph_->value(pred_node_);
  std::vector<double> out(p.rows());
  for (size_t i = 0; i < p.rows(); ++i) out[i] = p.at(i, 0);
  return out;
}

void SlakModel::attach_loss(const std::vector<int>& train_rows,
                            const std::vector<double>& train_targets) {
  if (train_rows.size() != train_targets.size())
    fail(ErrorKind::Invalid, "model: train rows/targets misaligned");
  int train_pred = graph_->gather_rows(pred_node_, train_rows, 1, "loss.train_pred");
  loss_node_ = graph_->mse(train_pred, Tensor::column(train_targets), "loss.mse");
}

namespace {

double subset_mse(const std::vector<double>& pred_z, const std::vector<int>& rows,
                  const std::vector<double>& targets_z) {
  double sum = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    double d = pred_z[static_cast<size_t>(rows[i])] - targets_z[i];
    sum += d * d;
  }
  return sum / static_cast<double>(rows.size());
}

std::vector<double> subset(const std::vector<double>& values, const std::vector<int>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(values[static_cast<size_t>(r)]);
  return out;
}

TrainResult run_training(SlakModel& model, const std::vector<double>& targets,
                         const Split& split, const SlakConfig& config,
                         const TargetScaler& scaler) {
  Graph& g = model.graph();
  ParameterSet& ps = model.params();

  std::vector<double> targets_z;
  targets_z.reserve(targets.size());
  for (double y : targets) targets_z.push_back(scaler.transform(y));

  std::vector<double> train_z = subset(targets_z, split.train);
  std::vector<double> val_z = subset(targets_z, split.val);
  model.attach_loss(split.train, train_z);

  AdamConfig adam_config{config.lr, 0.9, 0.999, 1e-8, config.weight_decay, {}};
  adam_config.lr_scale["embed.table"] = config.embed_lr_scale;
  AdamState adam(adam_config);
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    ps.zero_grads();
    double loss = g.forward_loss(model.loss_node());
    if (!std::isfinite(loss))
      fail(ErrorKind::Runtime, "training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch));

    // Validate the parameters this forward pass used, then update them.
    std::vector<double> pred_z = model.predictions();
    double val_mse = subset_mse(pred_z, split.val, val_z);
    result.val_mse_history.push_back(val_mse);
    ++result.epochs_run;

    bool improved = val_mse < best;
    if (improved) {
      best = val_mse;
      since_best = 0;
      result.best_epoch = epoch;
      result.parameters = ps.snapshot_values();
      result.region_embeddings = g.value(model.fused_node());
      result.alpha = g.value(model.alpha_node());
      if (model.cross_alpha_node() >= 0)
        result.cross_alpha = g.value(model.cross_alpha_node());
    } else if (++since_best >= config.patience) {
      break;
    }
    g.backward(model.loss_node());
    adam.step(ps);
  }
  result.best_val_mse = best;

  // Restore best-epoch parameters and recompute everything from them.
  ps.restore_values(result.parameters);
  g.forward();
  std::vector<double> pred_z = model.predictions();
  result.all_pred = scaler.inverse(pred_z);
  result.val = metrics(subset(result.all_pred, split.val), subset(targets, split.val));
  result.test_pred = subset(result.all_pred, split.test);
  result.test = metrics(result.test_pred, subset(targets, split.test));
  return result;
}

Tensor metapath_embedding_matrix(const std::vector<MetaPathSchema>& paths,
                                 EmbeddingProvider& provider) {
  std::vector<std::string> sentences;
  for (const auto& p : paths) sentences.push_back(to_natural_language(p));
  return provider.embed_all(sentences);
}

}  // namespace

TrainResult train_single(TaskContext& task, const KnowledgeGraph& kg,
                         const std::vector<std::string>& region_ids,
                         const std::vector<double>& targets, const Split& split,
                         const SlakConfig& config, EmbeddingProvider& provider) {
  if (task.metapaths.empty())
    fail(ErrorKind::Invalid, "train_single(" + task.indicator + "): no meta-paths");
  TargetScaler scaler = TargetScaler::fit(subset(targets, split.train),
                                          config.target_transform);
  Tensor emb = metapath_embedding_matrix(task.metapaths, provider);
  SlakModel model =
      SlakModel::build(kg, region_ids, task.metapaths, emb, config, std::nullopt);
  TrainResult result = run_training(model, targets, split, config, scaler);
  task.saved_embeddings = result.region_embeddings;
  task.has_saved_embeddings = true;
  return result;
}

TrainResult train_round2_task(TaskContext& task, const std::vector<const TaskContext*>& others,
                              const KnowledgeGraph& kg,
                              const std::vector<std::string>& region_ids,
                              const std::vector<double>& targets, const Split& split,
                              const SlakConfig& config, EmbeddingProvider& provider) {
  if (task.metapaths.empty())
    fail(ErrorKind::Invalid, "train_round2(" + task.indicator + "): no meta-paths");
  TargetScaler scaler = TargetScaler::fit(subset(targets, split.train),
                                          config.target_transform);
  Tensor emb = metapath_embedding_matrix(task.metapaths, provider);

  std::optional<CrossTaskInputs> cross;
  if (!config.ablation.no_trans && !others.empty()) {
    CrossTaskInputs ct;
    std::vector<std::string> descriptions;
    for (const TaskContext* other : others) {
      if (!other->has_saved_embeddings)
        fail(ErrorKind::Invalid, "train_round2(" + task.indicator +
                                     "): missing saved embeddings for task `" +
                                     other->indicator + "`");
      ct.embeddings.push_back(other->saved_embeddings);
      descriptions.push_back(other->description);
    }
    ct.task_queries = provider.embed_all(descriptions);
    cross = std::move(ct);
  }

  SlakModel model = SlakModel::build(kg, region_ids, task.metapaths, emb, config, cross);
  TrainResult result = run_training(model, targets, split, config, scaler);
  task.saved_embeddings = result.region_embeddings;
  task.has_saved_embeddings = true;
  return result;
}

Metrics evaluate(const std::vector<double>& pred, const std::vector<double>& truth) {
  return metrics(pred, truth);
}

}  // namespace slak
