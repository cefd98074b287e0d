#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slak/dataio.hpp"
#include "slak/fusion.hpp"
#include "slak/optim.hpp"
#include "slak/rgcn.hpp"

namespace slak {

enum class TargetTransform { ZScore, LogZScore };
TargetTransform target_transform_from_string(const std::string& s);
std::string to_string(TargetTransform t);

struct AblationFlags {
  bool no_self_update = false;
  bool no_rec = false;
  bool no_trans = false;
  bool no_attn = false;
};

struct SlakConfig {
  size_t d_h = 64;
  int L = 2;
  double lr = 1e-3;
  double weight_decay = 0.0;
  double embed_lr_scale = 0.01;  // entity-embedding table trains slower
  int max_epochs = 500;
  int patience = 20;
  int n_p = 3;
  uint64_t seed = 42;
  // Aggregation mode of the sub-KG encoders. Sum semantics preserve the
  // instance counts a meta-path was chosen for.
  Normalization normalization = Normalization::None;
  // The full-KG encoder faces much higher degrees; mean aggregation keeps it
  // numerically tame.
  Normalization global_normalization = Normalization::Mean;
  AblationFlags ablation;
  TargetTransform target_transform = TargetTransform::ZScore;

  void validate() const;
  static SlakConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// One indicator prediction task.
struct TaskContext {
  std::string indicator;
  std::vector<MetaPathSchema> metapaths;
  std::string description;            // one-sentence task description
  Tensor saved_embeddings;            // best-epoch region embeddings (round 1)
  bool has_saved_embeddings = false;
};

// Inputs that only exist in round 2.
struct CrossTaskInputs {
  Tensor task_queries;          // (N_I - 1) x 768 semantic embeddings
  std::vector<Tensor> embeddings;  // saved region embeddings of the other tasks
};

// The assembled computation: global encoder + per-meta-path sub-KG encoders
// + semantic fusion (+ optional cross-task fusion) + MLP head.
class SlakModel {
 public:
  static SlakModel build(const KnowledgeGraph& kg, const std::vector<std::string>& region_ids,
                         const std::vector<MetaPathSchema>& metapaths,
                         const Tensor& metapath_embeddings, const SlakConfig& config,
                         const std::optional<CrossTaskInputs>& cross_task);

  // Full-graph predictions, one value per region (z-scored scale).
  std::vector<double> predictions();
  void attach_loss(const std::vector<int>& train_rows, const std::vector<double>& train_targets);

  Graph& graph() { return *graph_; }
  ParameterSet& params() { return *params_; }
  int prediction_node() const { return pred_node_; }
  int global_node() const { return global_node_; }   // global-encoder region rows
  int fused_node() const { return fused_node_; }     // pre-MLP region representation
  int alpha_node() const { return alpha_node_; }     // meta-path attention weights
  int cross_alpha_node() const { return cross_alpha_node_; }  // -1 when absent
  int loss_node() const { return loss_node_; }
  size_t n_regions() const { return n_regions_; }

 private:
  SlakModel() = default;
  std::unique_ptr<ParameterSet> params_;
  std::unique_ptr<Graph> graph_;
  std::deque<SparseMat> sparse_storage_;
  size_t n_regions_ = 0;
  int pred_node_ = -1;
  int global_node_ = -1;
  int fused_node_ = -1;
  int alpha_node_ = -1;
  int cross_alpha_node_ = -1;
  int loss_node_ = -1;
};

// Train-split-fitted target transform; metrics are always computed back in
// original units.
class TargetScaler {
 public:
  static TargetScaler fit(const std::vector<double>& train_values, TargetTransform transform);
  double transform(double y) const;
  double inverse(double z) const;
  std::vector<double> transform(const std::vector<double>& ys) const;
  std::vector<double> inverse(const std::vector<double>& zs) const;

 private:
  TargetTransform kind_ = TargetTransform::ZScore;
  double mean_ = 0.0;
  double std_ = 1.0;
};

struct TrainResult {
  Metrics val;
  Metrics test;
  double best_val_mse = 0.0;  // z-scored scale
  int best_epoch = -1;
  int epochs_run = 0;
  std::vector<double> val_mse_history;
  Tensor region_embeddings;   // best-epoch pre-MLP representation, all regions
  Tensor alpha;               // best-epoch meta-path attention weights
  Tensor cross_alpha;         // empty unless round 2 with transfer
  std::vector<double> test_pred;   // original units, aligned with split.test
  std::vector<double> all_pred;    // original units, all regions
  std::map<std::string, Tensor> parameters;  // best-epoch values
};

// Round-1 training for one task: MSE on transformed targets, Adam, early
// stopping on validation MSE with parameter restore. Fills
// task.saved_embeddings with the best-epoch region representation.
TrainResult train_single(TaskContext& task, const KnowledgeGraph& kg,
                         const std::vector<std::string>& region_ids,
                         const std::vector<double>& targets, const Split& split,
                         const SlakConfig& config, EmbeddingProvider& provider);

// Round-2 training for one task with cross-task fusion over the other tasks'
// saved embeddings. `others` must have saved embeddings present.
TrainResult train_round2_task(TaskContext& task, const std::vector<const TaskContext*>& others,
                              const KnowledgeGraph& kg,
                              const std::vector<std::string>& region_ids,
                              const std::vector<double>& targets, const Split& split,
                              const SlakConfig& config, EmbeddingProvider& provider);

// Metrics on original-unit values; thin wrapper over dataio::metrics.
Metrics evaluate(const std::vector<double>& pred, const std::vector<double>& truth);

}  // namespace slak
