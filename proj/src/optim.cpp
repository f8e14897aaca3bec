#include "coex/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace coex::nd {

namespace {

void ensure_slot(Tensor& slot, const Tensor& like) {
  if (!slot.same_shape(like)) slot = Tensor(like.shape());
}

void check_grad_finite(const ParamEntry& e) {
  if (!e.grad.all_finite()) {
    throw std::domain_error("optimizer_step: non-finite gradient for parameter '" + e.name + "'");
  }
}

}  // namespace

void rmsprop_step(ParameterSet& params, const RmsPropConfig& cfg) {
  for (size_t i = 0; i < params.size(); ++i) {
    ParamEntry& e = params.entry(i);
    check_grad_finite(e);
    ensure_slot(e.slot0, e.value);
    for (size_t j = 0; j < e.value.size(); ++j) {
      const double g = e.grad[j];
      e.slot0[j] = cfg.decay * e.slot0[j] + (1.0 - cfg.decay) * g * g;
      e.value[j] -= cfg.lr * g / std::sqrt(e.slot0[j] + cfg.eps);
    }
  }
  params.bump_step_count();
}

void adam_step(ParameterSet& params, const AdamConfig& cfg) {
  params.bump_step_count();  // t starts at 1 for bias correction
  const double t = static_cast<double>(params.step_count());
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    ParamEntry& e = params.entry(i);
    check_grad_finite(e);
    ensure_slot(e.slot0, e.value);
    ensure_slot(e.slot1, e.value);
    for (size_t j = 0; j < e.value.size(); ++j) {
      const double g = e.grad[j];
      e.slot1[j] = cfg.beta1 * e.slot1[j] + (1.0 - cfg.beta1) * g;        // first moment
      e.slot0[j] = cfg.beta2 * e.slot0[j] + (1.0 - cfg.beta2) * g * g;    // second moment
      const double m_hat = e.slot1[j] / bc1;
      const double v_hat = e.slot0[j] / bc2;
      e.value[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

}  // namespace coex::nd
