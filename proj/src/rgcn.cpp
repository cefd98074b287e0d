#include "slak/rgcn.hpp"

#include <algorithm>
#include <map>

namespace slak {

Normalization normalization_from_string(const std::string& s) {
  if (s == "none") return Normalization::None;
  if (s == "mean") return Normalization::Mean;
  fail(ErrorKind::Invalid, "unknown normalization `" + s + "` (expected none|mean)");
}

std::string to_string(Normalization n) {
  return n == Normalization::None ? "none" : "mean";
}

EncoderGraph EncoderGraph::from_kg(const KnowledgeGraph& kg) {
  EncoderGraph g;
  g.n_entities = kg.entity_count();
  g.table_rows.resize(g.n_entities);
  for (size_t i = 0; i < g.n_entities; ++i) g.table_rows[i] = static_cast<int>(i);
  std::map<std::string, std::vector<std::pair<int, int>>> by_rel;
  for (const Fact& f : kg.facts())
    by_rel[kg.schema().relations()[static_cast<size_t>(f.rel)].name].emplace_back(f.head, f.tail);
  for (auto& [name, edges] : by_rel) g.relations.push_back({name, std::move(edges)});
  return g;
}

EncoderGraph EncoderGraph::from_subkg(const SubKG& sub) {
  EncoderGraph g;
  g.n_entities = sub.entities.size();
  g.table_rows = sub.entities;
  std::map<int, int> local;  // parent entity index -> local index
  for (size_t i = 0; i < sub.entities.size(); ++i) local[sub.entities[i]] = static_cast<int>(i);
  std::map<std::string, std::vector<std::pair<int, int>>> by_rel;
  const Schema& schema = sub.parent->schema();
  for (const Fact& f : sub.facts)
    by_rel[schema.relations()[static_cast<size_t>(f.rel)].name].emplace_back(local.at(f.head),
                                                                             local.at(f.tail));
  for (auto& [name, edges] : by_rel) g.relations.push_back({name, std::move(edges)});
  return g;
}

namespace {

// Sparse aggregation matrix for one relation: S[i,j] = c for edge (i, j).
SparseMat aggregation_matrix(size_t n, const std::vector<std::pair<int, int>>& edges,
                             Normalization norm) {
  SparseMat s;
  s.rows = n;
  s.cols = n;
  std::vector<uint32_t> degree(n, 0);
  for (const auto& [head, _] : edges) ++degree[static_cast<size_t>(head)];
  for (const auto& [head, tail] : edges) {
    double c = norm == Normalization::Mean ? 1.0 / degree[static_cast<size_t>(head)] : 1.0;
    s.nz.push_back({static_cast<uint32_t>(head), static_cast<uint32_t>(tail), c});
  }
  return s;
}

}  // namespace

int RgcnEncoder::build(Graph& graph, ParameterSet& params, const std::string& prefix,
                       const EncoderGraph& structure, int table_node, const RgcnConfig& config,
                       Rng& init_rng, std::deque<SparseMat>& sparse_storage) {
  if (config.layers < 1) fail(ErrorKind::Invalid, prefix + ": encoder needs at least one layer");
  if (structure.n_entities == 0)
    fail(ErrorKind::Invalid, prefix + ": encoder graph has no entities");

  int h = graph.gather_rows(table_node, structure.table_rows, config.d_in, prefix + ".input");

  for (int layer = 0; layer < config.layers; ++layer) {
    size_t d_in = layer == 0 ? config.d_in : config.d_out;
    std::string lp = prefix + ".l" + std::to_string(layer);
    double init_std = 1.0 / std::sqrt(static_cast<double>(d_in));

    params.add(lp + ".W_self", Tensor::gaussian(d_in, config.d_out, init_std, init_rng));
    int self_w = graph.param(lp + ".W_self");
    int acc = graph.matmul(h, self_w, lp + ".self");
    for (const auto& rel : structure.relations) {
      params.add(lp + ".W_" + rel.relation,
                 Tensor::gaussian(d_in, config.d_out, init_std, init_rng));
      int w = graph.param(lp + ".W_" + rel.relation);
      sparse_storage.push_back(
          aggregation_matrix(structure.n_entities, rel.edges, config.normalization));
      int agg = graph.spmm(&sparse_storage.back(), h, lp + ".agg_" + rel.relation);
      int term = graph.matmul(agg, w, lp + ".msg_" + rel.relation);
      acc = graph.add(acc, term, lp + ".sum");
    }
    h = graph.relu(acc, lp + ".out");
  }
  return h;
}

Tensor rgcn_layer_forward(const EncoderGraph& structure,
                          const std::vector<Tensor>& relation_weights, const Tensor& self_weight,
                          const Tensor& embeddings, Normalization normalization) {
  if (relation_weights.size() != structure.relations.size())
    fail(ErrorKind::Invalid, "rgcn_layer_forward: need one weight per relation");
  if (embeddings.rows() != structure.n_entities)
    fail(ErrorKind::Invalid, "rgcn_layer_forward: embeddings misaligned with entities");
  size_t d_out = self_weight.cols();
  Tensor out(structure.n_entities, d_out);
  matmul_into(out, embeddings, self_weight, false, false, false);
  for (size_t r = 0; r < structure.relations.size(); ++r) {
    SparseMat s = aggregation_matrix(structure.n_entities, structure.relations[r].edges,
                                     normalization);
    Tensor agg(structure.n_entities, embeddings.cols());
    for (const auto& nz : s.nz)
      for (size_t c = 0; c < embeddings.cols(); ++c)
        agg.at(nz.row, c) += nz.w * embeddings.at(nz.col, c);
    matmul_into(out, agg, relation_weights[r], false, false, true);
  }
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  if (!out.all_finite()) fail(ErrorKind::Runtime, "rgcn_layer_forward: non-finite output");
  return out;
}

}  // namespace slak
