#include "slak/autodiff.hpp"

#include <cmath>

namespace slak {

ParameterSet::Entry& ParameterSet::add(const std::string& name, Tensor init) {
  auto [it, inserted] = entries_.emplace(name, Entry{std::move(init), Tensor()});
  if (!inserted) fail(ErrorKind::Invalid, "parameter `" + name + "` already exists");
  it->second.grad = Tensor::zeros(it->second.value.rows(), it->second.value.cols());
  return it->second;
}

ParameterSet::Entry& ParameterSet::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) fail(ErrorKind::Invalid, "unknown parameter `" + name + "`");
  return it->second;
}

const ParameterSet::Entry& ParameterSet::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) fail(ErrorKind::Invalid, "unknown parameter `" + name + "`");
  return it->second;
}

void ParameterSet::zero_grads() {
  for (auto& [_, e] : entries_) e.grad.fill(0.0);
}

size_t ParameterSet::parameter_count() const {
  size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

std::map<std::string, Tensor> ParameterSet::snapshot_values() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, e] : entries_) out.emplace(name, e.value);
  return out;
}

void ParameterSet::restore_values(const std::map<std::string, Tensor>& snapshot) {
  for (const auto& [name, value] : snapshot) get(name).value = value;
}

void matmul_into(Tensor& out, const Tensor& a, const Tensor& b, bool transpose_a,
                 bool transpose_b, bool accumulate) {
  size_t m = transpose_a ? a.cols() : a.rows();
  size_t k = transpose_a ? a.rows() : a.cols();
  size_t kb = transpose_b ? b.cols() : b.rows();
  size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb)
    fail(ErrorKind::Invalid,
         "matmul: inner dimension mismatch " + a.shape_str() + " x " + b.shape_str());
  if (out.rows() != m || out.cols() != n) out = Tensor::zeros(m, n);
  else if (!accumulate) out.fill(0.0);

  // i-k-j loop order keeps the inner loop contiguous in both `b` and `out`.
  for (size_t i = 0; i < m; ++i) {
    double* out_row = out.row(i);
    for (size_t kk = 0; kk < k; ++kk) {
      double av = transpose_a ? a.at(kk, i) : a.at(i, kk);
      if (av == 0.0) continue;
      if (!transpose_b) {
        const double* b_row = b.row(kk);
        for (size_t j = 0; j < n; ++j) out_row[j] += av * b_row[j];
      } else {
        for (size_t j = 0; j < n; ++j) out_row[j] += av * b.at(j, kk);
      }
    }
  }
}

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  compute(nodes_.back());
  nodes_.back().grad = Tensor::zeros(nodes_.back().val.rows(), nodes_.back().val.cols());
  return id;
}

int Graph::constant(Tensor value, const std::string& name) {
  Node n;
  n.op = Op::Const;
  n.payload = std::move(value);
  n.name = name;
  return push(std::move(n));
}

int Graph::param(const std::string& name) {
  params_->get(name);  // existence check
  Node n;
  n.op = Op::Param;
  n.param_name = name;
  n.name = name;
  return push(std::move(n));
}

int Graph::matmul(int a, int b, const std::string& name) {
  Node n;
  n.op = Op::Matmul;
  n.in = {a, b};
  n.name = name;
  return push(std::move(n));
}

int Graph::spmm(const SparseMat* s, int x, const std::string& name) {
  Node n;
  n.op = Op::Spmm;
  n.sparse = s;
  n.in = {x};
  n.name = name;
  return push(std::move(n));
}

int Graph::gather_rows(int x, std::vector<int> rows, size_t out_cols_hint,
                       const std::string& name) {
  Node n;
  n.op = Op::Gather;
  n.in = {x};
  n.rows = std::move(rows);
  n.name = name;
  (void)out_cols_hint;
  return push(std::move(n));
}

int Graph::add(int a, int b, const std::string& name) {
  Node n;
  n.op = Op::Add;
  n.in = {a, b};
  n.name = name;
  return push(std::move(n));
}

int Graph::add_row_vec(int x, int bias, const std::string& name) {
  Node n;
  n.op = Op::AddRowVec;
  n.in = {x, bias};
  n.name = name;
  return push(std::move(n));
}

int Graph::relu(int x, const std::string& name) {
  Node n;
  n.op = Op::Relu;
  n.in = {x};
  n.name = name;
  return push(std::move(n));
}

int Graph::row_softmax(int x, const std::string& name) {
  Node n;
  n.op = Op::RowSoftmax;
  n.in = {x};
  n.name = name;
  return push(std::move(n));
}

int Graph::attn_scores(int queries, std::vector<int> values, const std::string& name) {
  if (values.empty()) fail(ErrorKind::Invalid, name + ": needs at least one value source");
  Node n;
  n.op = Op::AttnScores;
  n.in = {queries};
  n.in.insert(n.in.end(), values.begin(), values.end());
  n.scale = 1.0 / std::sqrt(static_cast<double>(value(queries).cols()));
  n.name = name;
  return push(std::move(n));
}

int Graph::attn_mix(int alpha, std::vector<int> values, const std::string& name) {
  if (values.empty()) fail(ErrorKind::Invalid, name + ": needs at least one value source");
  Node n;
  n.op = Op::AttnMix;
  n.in = {alpha};
  n.in.insert(n.in.end(), values.begin(), values.end());
  n.name = name;
  return push(std::move(n));
}

int Graph::mse(int pred, Tensor target, const std::string& name) {
  Node n;
  n.op = Op::Mse;
  n.in = {pred};
  n.payload = std::move(target);
  n.name = name;
  return push(std::move(n));
}

void Graph::compute(Node& n) {
  switch (n.op) {
    case Op::Const:
      n.val = n.payload;
      break;
    case Op::Param:
      n.val = params_->get(n.param_name).value;
      break;
    case Op::Matmul:
      matmul_into(n.val, in_val(n, 0), in_val(n, 1), false, false, false);
      break;
    case Op::Spmm: {
      const Tensor& x = in_val(n, 0);
      if (n.sparse->cols != x.rows())
        fail(ErrorKind::Invalid, n.name + ": spmm dimension mismatch");
      if (n.val.rows() != n.sparse->rows || n.val.cols() != x.cols())
        n.val = Tensor::zeros(n.sparse->rows, x.cols());
      else
        n.val.fill(0.0);
      for (const auto& nz : n.sparse->nz) {
        const double* src = x.row(nz.col);
        double* dst = n.val.row(nz.row);
        for (size_t c = 0; c < x.cols(); ++c) dst[c] += nz.w * src[c];
      }
      break;
    }
    case Op::Gather: {
      const Tensor& x = in_val(n, 0);
      if (n.val.rows() != n.rows.size() || n.val.cols() != x.cols())
        n.val = Tensor::zeros(n.rows.size(), x.cols());
      else
        n.val.fill(0.0);
      for (size_t i = 0; i < n.rows.size(); ++i) {
        int r = n.rows[i];
        if (r < 0) continue;  // absent entity: zero row
        if (static_cast<size_t>(r) >= x.rows())
          fail(ErrorKind::Invalid, n.name + ": gather row out of range");
        const double* src = x.row(static_cast<size_t>(r));
        double* dst = n.val.row(i);
        for (size_t c = 0; c < x.cols(); ++c) dst[c] = src[c];
      }
      break;
    }
    case Op::Add: {
      const Tensor& a = in_val(n, 0);
      const Tensor& b = in_val(n, 1);
      if (!a.same_shape(b))
        fail(ErrorKind::Invalid,
             n.name + ": add shape mismatch " + a.shape_str() + " vs " + b.shape_str());
      n.val = a;
      for (size_t i = 0; i < n.val.size(); ++i) n.val.data()[i] += b.data()[i];
      break;
    }
    case Op::AddRowVec: {
      const Tensor& x = in_val(n, 0);
      const Tensor& b = in_val(n, 1);
      if (b.rows() != 1 || b.cols() != x.cols())
        fail(ErrorKind::Invalid, n.name + ": bias must be 1x" + std::to_string(x.cols()));
      n.val = x;
      for (size_t r = 0; r < x.rows(); ++r) {
        double* row = n.val.row(r);
        for (size_t c = 0; c < x.cols(); ++c) row[c] += b.at(0, c);
      }
      break;
    }
    case Op::Relu: {
      n.val = in_val(n, 0);
      for (double& v : n.val.data()) v = v > 0.0 ? v : 0.0;
      break;
    }
    case Op::RowSoftmax: {
      const Tensor& x = in_val(n, 0);
      n.val = x;
      for (size_t r = 0; r < x.rows(); ++r) {
        double* row = n.val.row(r);
        double mx = row[0];
        for (size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (size_t c = 0; c < x.cols(); ++c) {
          row[c] = std::exp(row[c] - mx);
          sum += row[c];
        }
        for (size_t c = 0; c < x.cols(); ++c) row[c] /= sum;
      }
      break;
    }
    case Op::AttnScores: {
      const Tensor& q = in_val(n, 0);
      size_t n_src = n.in.size() - 1;
      if (q.rows() != n_src)
        fail(ErrorKind::Invalid, n.name + ": query count " + std::to_string(q.rows()) +
                                     " != source count " + std::to_string(n_src));
      size_t n_rows = in_val(n, 1).rows();
      if (n.val.rows() != n_rows || n.val.cols() != n_src) n.val = Tensor::zeros(n_rows, n_src);
      for (size_t i = 0; i < n_src; ++i) {
        const Tensor& v = in_val(n, 1 + i);
        if (v.rows() != n_rows || v.cols() != q.cols())
          fail(ErrorKind::Invalid, n.name + ": value source " + std::to_string(i) +
                                       " shape " + v.shape_str() + " misaligned");
        const double* qi = q.row(i);
        for (size_t j = 0; j < n_rows; ++j) {
          const double* vj = v.row(j);
          double dot = 0.0;
          for (size_t c = 0; c < q.cols(); ++c) dot += qi[c] * vj[c];
          n.val.at(j, i) = dot * n.scale;
        }
      }
      break;
    }
    case Op::AttnMix: {
      const Tensor& alpha = in_val(n, 0);
      size_t n_src = n.in.size() - 1;
      if (alpha.cols() != n_src)
        fail(ErrorKind::Invalid, n.name + ": alpha has " + std::to_string(alpha.cols()) +
                                     " columns for " + std::to_string(n_src) + " sources");
      size_t n_rows = alpha.rows();
      size_t d = in_val(n, 1).cols();
      if (n.val.rows() != n_rows || n.val.cols() != d) n.val = Tensor::zeros(n_rows, d);
      else n.val.fill(0.0);
      for (size_t i = 0; i < n_src; ++i) {
        const Tensor& v = in_val(n, 1 + i);
        if (v.rows() != n_rows || v.cols() != d)
          fail(ErrorKind::Invalid, n.name + ": value source " + std::to_string(i) +
                                       " shape " + v.shape_str() + " misaligned");
        for (size_t j = 0; j < n_rows; ++j) {
          double a = alpha.at(j, i);
          const double* src = v.row(j);
          double* dst = n.val.row(j);
          for (size_t c = 0; c < d; ++c) dst[c] += a * src[c];
        }
      }
      break;
    }
    case Op::Mse: {
      const Tensor& pred = in_val(n, 0);
      if (!pred.same_shape(n.payload))
        fail(ErrorKind::Invalid, n.name + ": prediction shape " + pred.shape_str() +
                                     " != target shape " + n.payload.shape_str());
      if (pred.size() == 0) fail(ErrorKind::Invalid, n.name + ": empty prediction");
      double sum = 0.0;
      for (size_t i = 0; i < pred.size(); ++i) {
        double d = pred.data()[i] - n.payload.data()[i];
        sum += d * d;
      }
      n.val = Tensor::full(1, 1, sum / static_cast<double>(pred.size()));
      break;
    }
  }
  if (!n.val.all_finite())
    fail(ErrorKind::Runtime, "non-finite intermediate at node `" + n.name + "`");
}

void Graph::forward() {
  for (Node& n : nodes_) compute(n);
}

double Graph::forward_loss(int loss) {
  forward();
  const Tensor& v = value(loss);
  if (v.size() != 1) fail(ErrorKind::Invalid, "loss node must be scalar");
  return v.at(0, 0);
}

void Graph::backward(int loss) {
  for (Node& n : nodes_) {
    if (n.grad.rows() != n.val.rows() || n.grad.cols() != n.val.cols())
      n.grad = Tensor::zeros(n.val.rows(), n.val.cols());
    else
      n.grad.fill(0.0);
  }
  Node& loss_node = nodes_[static_cast<size_t>(loss)];
  if (loss_node.val.size() != 1) fail(ErrorKind::Invalid, "loss node must be scalar");
  loss_node.grad.at(0, 0) = 1.0;

  for (size_t idx = static_cast<size_t>(loss) + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    switch (n.op) {
      case Op::Const:
        break;
      case Op::Param: {
        Tensor& g = params_->get(n.param_name).grad;
        for (size_t i = 0; i < g.size(); ++i) g.data()[i] += n.grad.data()[i];
        break;
      }
      case Op::Matmul: {
        // dA += dY * B^T ; dB += A^T * dY
        matmul_into(in_grad(n, 0), n.grad, in_val(n, 1), false, true, true);
        matmul_into(in_grad(n, 1), in_val(n, 0), n.grad, true, false, true);
        break;
      }
      case Op::Spmm: {
        Tensor& dx = in_grad(n, 0);
        for (const auto& nz : n.sparse->nz) {
          const double* g = n.grad.row(nz.row);
          double* dst = dx.row(nz.col);
          for (size_t c = 0; c < dx.cols(); ++c) dst[c] += nz.w * g[c];
        }
        break;
      }
      case Op::Gather: {
        Tensor& dx = in_grad(n, 0);
        for (size_t i = 0; i < n.rows.size(); ++i) {
          int r = n.rows[i];
          if (r < 0) continue;
          const double* g = n.grad.row(i);
          double* dst = dx.row(static_cast<size_t>(r));
          for (size_t c = 0; c < dx.cols(); ++c) dst[c] += g[c];
        }
        break;
      }
      case Op::Add: {
        for (int which : {0, 1}) {
          Tensor& d = in_grad(n, static_cast<size_t>(which));
          for (size_t i = 0; i < d.size(); ++i) d.data()[i] += n.grad.data()[i];
        }
        break;
      }
      case Op::AddRowVec: {
        Tensor& dx = in_grad(n, 0);
        for (size_t i = 0; i < dx.size(); ++i) dx.data()[i] += n.grad.data()[i];
        Tensor& db = in_grad(n, 1);
        for (size_t r = 0; r < n.grad.rows(); ++r)
          for (size_t c = 0; c < n.grad.cols(); ++c) db.at(0, c) += n.grad.at(r, c);
        break;
      }
      case Op::Relu: {
        // relu'(0) = 0 by convention.
        const Tensor& x = in_val(n, 0);
        Tensor& dx = in_grad(n, 0);
        for (size_t i = 0; i < dx.size(); ++i)
          if (x.data()[i] > 0.0) dx.data()[i] += n.grad.data()[i];
        break;
      }
      case Op::RowSoftmax: {
        const Tensor& y = n.val;
        Tensor& dx = in_grad(n, 0);
        for (size_t r = 0; r < y.rows(); ++r) {
          double dot = 0.0;
          for (size_t c = 0; c < y.cols(); ++c) dot += n.grad.at(r, c) * y.at(r, c);
          for (size_t c = 0; c < y.cols(); ++c)
            dx.at(r, c) += y.at(r, c) * (n.grad.at(r, c) - dot);
        }
        break;
      }
      case Op::AttnScores: {
        const Tensor& q = in_val(n, 0);
        Tensor& dq = in_grad(n, 0);
        size_t n_src = n.in.size() - 1;
        for (size_t i = 0; i < n_src; ++i) {
          const Tensor& v = in_val(n, 1 + i);
          Tensor& dv = in_grad(n, 1 + i);
          const double* qi = q.row(i);
          double* dqi = dq.row(i);
          for (size_t j = 0; j < v.rows(); ++j) {
            double g = n.grad.at(j, i) * n.scale;
            if (g == 0.0) continue;
            const double* vj = v.row(j);
            double* dvj = dv.row(j);
            for (size_t c = 0; c < q.cols(); ++c) {
              dqi[c] += g * vj[c];
              dvj[c] += g * qi[c];
            }
          }
        }
        break;
      }
      case Op::AttnMix: {
        const Tensor& alpha = in_val(n, 0);
        Tensor& dalpha = in_grad(n, 0);
        size_t n_src = n.in.size() - 1;
        for (size_t i = 0; i < n_src; ++i) {
          const Tensor& v = in_val(n, 1 + i);
          Tensor& dv = in_grad(n, 1 + i);
          for (size_t j = 0; j < alpha.rows(); ++j) {
            const double* g = n.grad.row(j);
            const double* vj = v.row(j);
            double* dvj = dv.row(j);
            double a = alpha.at(j, i);
            double da = 0.0;
            for (size_t c = 0; c < v.cols(); ++c) {
              da += g[c] * vj[c];
              dvj[c] += a * g[c];
            }
            dalpha.at(j, i) += da;
          }
        }
        break;
      }
      case Op::Mse: {
        const Tensor& pred = in_val(n, 0);
        Tensor& dp = in_grad(n, 0);
        double g = n.grad.at(0, 0) * 2.0 / static_cast<double>(pred.size());
        for (size_t i = 0; i < pred.size(); ++i)
          dp.data()[i] += g * (pred.data()[i] - n.payload.data()[i]);
        break;
      }
    }
  }
}

bool Graph::has_node(const std::string& name) const {
  for (const Node& n : nodes_)
    if (n.name == name) return true;
  return false;
}

}  // namespace slak
