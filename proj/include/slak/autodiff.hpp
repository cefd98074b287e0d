#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "slak/tensor.hpp"

namespace slak {

// Named parameters with matching gradient buffers. Iteration order is the
// (deterministic) name order.
class ParameterSet {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
  };

  Entry& add(const std::string& name, Tensor init);
  Entry& get(const std::string& name);
  const Entry& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }

  void zero_grads();
  size_t parameter_count() const;  // total scalar count

  std::map<std::string, Entry>& entries() { return entries_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  // Deep copy / restore of values only (used by early stopping).
  std::map<std::string, Tensor> snapshot_values() const;
  void restore_values(const std::map<std::string, Tensor>& snapshot);

 private:
  std::map<std::string, Entry> entries_;
};

// Fixed sparse matrix in triplet form; constant within a computation.
struct SparseMat {
  struct Nz {
    uint32_t row;
    uint32_t col;
    double w;
  };
  size_t rows = 0;
  size_t cols = 0;
  std::vector<Nz> nz;
};

// A static computation graph over 2-D tensors. Nodes are appended in
// topological order; forward() recomputes every node, backward() accumulates
// gradients into the bound ParameterSet. The graph is built once per model
// and re-evaluated each epoch.
class Graph {
 public:
  enum class Op {
    Const,
    Param,
    Matmul,
    Spmm,        // fixed sparse * dense
    Gather,      // row selection, -1 selects a zero row
    Add,
    AddRowVec,   // X + broadcast row vector
    Relu,
    RowSoftmax,
    AttnScores,  // scaled dot product of per-source queries and values
    AttnMix,     // per-row convex combination of per-source values
    Mse,         // mean squared error against a fixed target
  };

  explicit Graph(ParameterSet& params) : params_(&params) {}

  int constant(Tensor value, const std::string& name = "const");
  int param(const std::string& name);  // must exist in the ParameterSet

  int matmul(int a, int b, const std::string& name = "matmul");
  int spmm(const SparseMat* s, int x, const std::string& name = "spmm");
  int gather_rows(int x, std::vector<int> rows, size_t out_cols_hint,
                  const std::string& name = "gather");
  int add(int a, int b, const std::string& name = "add");
  int add_row_vec(int x, int bias, const std::string& name = "bias");
  int relu(int x, const std::string& name = "relu");
  int row_softmax(int x, const std::string& name = "softmax");
  // L[j, i] = dot(values[i] row j, Q row i) / sqrt(d)
  int attn_scores(int queries, std::vector<int> values, const std::string& name = "attn_scores");
  // E[j] = sum_i alpha[j, i] * values[i] row j
  int attn_mix(int alpha, std::vector<int> values, const std::string& name = "attn_mix");
  int mse(int pred, Tensor target, const std::string& name = "mse");

  // Recomputes all node values in order. Throws on a non-finite intermediate,
  // naming the node.
  void forward();
  // forward() + returns the scalar value of `loss`.
  double forward_loss(int loss);
  // Seeds d(loss)=1 and accumulates parameter gradients into the bound
  // ParameterSet (on top of whatever is there; call zero_grads() first).
  void backward(int loss);

  const Tensor& value(int node) const { return nodes_[static_cast<size_t>(node)].val; }
  const std::string& node_name(int node) const { return nodes_[static_cast<size_t>(node)].name; }
  bool has_node(const std::string& name) const;
  size_t node_count() const { return nodes_.size(); }
  ParameterSet& params() { return *params_; }

 private:
  struct Node {
    Op op;
    std::vector<int> in;
    Tensor val;
    Tensor grad;
    std::string name;
    const SparseMat* sparse = nullptr;
    std::vector<int> rows;     // Gather
    Tensor payload;            // Const initial value / Mse target
    std::string param_name;    // Param
    double scale = 1.0;        // AttnScores 1/sqrt(d)
  };

  int push(Node n);
  void compute(Node& n);
  const Tensor& in_val(const Node& n, size_t i) const {
    return nodes_[static_cast<size_t>(n.in[i])].val;
  }
  Tensor& in_grad(const Node& n, size_t i) {
    return nodes_[static_cast<size_t>(n.in[i])].grad;
  }

  ParameterSet* params_;
  std::vector<Node> nodes_;
};

// Dense matmul helper shared by Graph and plain-math call sites:
// out (+)= a * b, with optional transposes.
void matmul_into(Tensor& out, const Tensor& a, const Tensor& b, bool transpose_a,
                 bool transpose_b, bool accumulate);

}  // namespace slak
