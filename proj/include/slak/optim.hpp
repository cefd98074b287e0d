#pragma once

#include <map>
#include <string>

#include "slak/autodiff.hpp"

namespace slak {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;                // decoupled (AdamW-style)
  std::map<std::string, double> lr_scale;   // per-parameter learning-rate factors
};

// Bias-corrected Adam. Moment buffers are created lazily per parameter.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  // Applies one update using the gradients currently in `params`.
  void step(ParameterSet& params);

  int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  int64_t step_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  size_t checked = 0;
  bool pass(double tolerance) const { return checked > 0 && max_rel_err < tolerance; }
};

// Central finite differences over every parameter element.
// With recompute_grads=false the gradients already present in `params` are
// compared instead of running backward() (used to diagnose a suspect
// backward pass).
GradCheckReport grad_check(Graph& graph, int loss, ParameterSet& params, double h = 1e-5,
                           bool recompute_grads = true);

// Checkpoint container: named tensors, shape header, raw little-endian
// float64 payload behind a versioned magic.
void save_checkpoint(const std::string& path, const ParameterSet& params);
std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace slak
