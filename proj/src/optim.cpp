#include "slak/optim.hpp"

#include <cmath>

namespace slak {

void AdamState::step(ParameterSet& params) {
  ++step_;
  double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (auto& [name, entry] : params.entries()) {
    double lr = config_.lr;
    if (auto it = config_.lr_scale.find(name); it != config_.lr_scale.end()) lr *= it->second;
    if (!entry.grad.same_shape(entry.value))
      fail(ErrorKind::Invalid, "adam_step: missing gradients for `" + name + "`");
    auto [mit, m_new] = m_.emplace(name, Tensor::zeros(entry.value.rows(), entry.value.cols()));
    auto [vit, v_new] = v_.emplace(name, Tensor::zeros(entry.value.rows(), entry.value.cols()));
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    if (!m.same_shape(entry.value))
      fail(ErrorKind::Invalid, "adam_step: state shape mismatch for `" + name + "`");
    for (size_t i = 0; i < entry.value.size(); ++i) {
      double g = entry.grad.data()[i];
      m.data()[i] = config_.beta1 * m.data()[i] + (1.0 - config_.beta1) * g;
      v.data()[i] = config_.beta2 * v.data()[i] + (1.0 - config_.beta2) * g * g;
      double mhat = m.data()[i] / bc1;
      double vhat = v.data()[i] / bc2;
      double w = entry.value.data()[i];
      entry.value.data()[i] =
          w - lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * w);
    }
  }
}

GradCheckReport grad_check(Graph& graph, int loss, ParameterSet& params, double h,
                           bool recompute_grads) {
  if (recompute_grads) {
    params.zero_grads();
    graph.forward_loss(loss);
    graph.backward(loss);
  }
  GradCheckReport report;
  for (auto& [name, entry] : params.entries()) {
    for (size_t i = 0; i < entry.value.size(); ++i) {
      double saved = entry.value.data()[i];
      entry.value.data()[i] = saved + h;
      double up = graph.forward_loss(loss);
      entry.value.data()[i] = saved - h;
      double down = graph.forward_loss(loss);
      entry.value.data()[i] = saved;
      double numeric = (up - down) / (2.0 * h);
      double analytic = entry.grad.data()[i];
      double rel = std::fabs(analytic - numeric) /
                   std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  graph.forward();  // restore node values for the unperturbed parameters
  return report;
}

namespace {
constexpr char kCheckpointMagic[] = "SLAKCKP1";
}

void save_checkpoint(const std::string& path, const ParameterSet& params) {
  std::string out;
  out.append(kCheckpointMagic, 8);
  put_u32(out, static_cast<uint32_t>(params.entries().size()));
  for (const auto& [name, entry] : params.entries()) {
    if (name.size() > UINT16_MAX) fail(ErrorKind::Invalid, "parameter name too long");
    put_u16(out, static_cast<uint16_t>(name.size()));
    out += name;
    put_u64(out, entry.value.rows());
    put_u64(out, entry.value.cols());
    for (double v : entry.value.data()) put_f64(out, v);
  }
  write_file(path, out);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::string blob = read_file(path);
  ByteReader r(blob, path);
  if (r.bytes(8) != kCheckpointMagic)
    fail(ErrorKind::Io, path + ": not a checkpoint file (bad magic)");
  uint32_t count = r.u32();
  std::map<std::string, Tensor> out;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.u16());
    uint64_t rows = r.u64();
    uint64_t cols = r.u64();
    Tensor t(rows, cols);
    for (double& v : t.data()) v = r.f64();
    if (!out.emplace(std::move(name), std::move(t)).second)
      fail(ErrorKind::Io, path + ": duplicate tensor name");
  }
  return out;
}

}  // namespace slak
