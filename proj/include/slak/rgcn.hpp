#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "slak/autodiff.hpp"
#include "slak/kg.hpp"
#include "slak/metapath.hpp"

namespace slak {

enum class Normalization { None, Mean };

Normalization normalization_from_string(const std::string& s);
std::string to_string(Normalization n);

struct RgcnConfig {
  int layers = 2;
  size_t d_in = 64;   // embedding-table width
  size_t d_out = 64;  // hidden width (all layers share it)
  Normalization normalization = Normalization::Mean;
};

// The graph structure an encoder runs over: a local (dense, 0-based)
// entity indexing plus per-relation edge lists.
struct EncoderGraph {
  struct RelationEdges {
    std::string relation;
    // (head, tail) pairs in local indices
    std::vector<std::pair<int, int>> edges;
  };
  size_t n_entities = 0;
  std::vector<RelationEdges> relations;   // sorted by relation name
  std::vector<int> table_rows;            // local index -> embedding-table row

  static EncoderGraph from_kg(const KnowledgeGraph& kg);
  static EncoderGraph from_subkg(const SubKG& sub);
};

// One relational graph-convolution stack wired into an autodiff Graph.
// Per-relation aggregation with self-loop:
//   e_i' = relu( sum_r sum_{j in N_i^r} c * W_r e_j + W_0 e_i )
// where N_i^r are forward neighbors (i as head), c = 1 for Normalization::None
// and c = 1/|N_i^r| for Normalization::Mean.
class RgcnEncoder {
 public:
  // `table_node` is the shared entity-embedding table (|E_table| x d_in);
  // rows are selected through structure.table_rows. Parameters are created
  // under `prefix` (e.g. "global.l0.W_Has"). Returns the node holding the
  // final embeddings (n_entities x d_out).
  static int build(Graph& graph, ParameterSet& params, const std::string& prefix,
                   const EncoderGraph& structure, int table_node, const RgcnConfig& config,
                   Rng& init_rng, std::deque<SparseMat>& sparse_storage);
};

// Reference evaluation of one layer, used directly by small call sites and as
// the non-tape route for layer-level checks. Embeddings are row-aligned with
// the structure's local indices.
Tensor rgcn_layer_forward(const EncoderGraph& structure,
                          const std::vector<Tensor>& relation_weights, const Tensor& self_weight,
                          const Tensor& embeddings, Normalization normalization);

}  // namespace slak
