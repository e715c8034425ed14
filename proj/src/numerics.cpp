#include "simtrans/numerics.hpp"

#include <cmath>

namespace simtrans {

CeResult label_smoothed_ce(const Matrix& logits, const std::vector<int>& targets,
                           Scalar epsilon, int pad_id) {
  if (!(epsilon >= 0 && epsilon < 1))
    throw ArgumentError("label_smoothed_ce: epsilon must be in [0, 1)");
  if (static_cast<Index>(targets.size()) != logits.rows())
    throw ArgumentError("label_smoothed_ce: one target per logit row required");
  const Index vocab = logits.cols();

  CeResult result;
  result.grad = Matrix::Zero(logits.rows(), vocab);
  Scalar total = 0;
  long long positions = 0;

  for (Index i = 0; i < logits.rows(); ++i) {
    const int target = targets[i];
    if (target == pad_id) continue;
    if (target < 0 || target >= vocab)
      throw ArgumentError("label_smoothed_ce: target id " + std::to_string(target) +
                          " out of range for vocab " + std::to_string(vocab));
    const Scalar max = logits.row(i).maxCoeff();
    ArrayX shifted = logits.row(i).transpose().array() - max;
    const Scalar lse = std::log(shifted.exp().sum());
    ArrayX logp = shifted - lse;

    total += (1 - epsilon) * -logp(target) +
             (epsilon / static_cast<Scalar>(vocab)) * -logp.sum();

    // dL/dlogits = softmax - q with q = (1-eps) onehot + eps/V.
    ArrayX grad_row = logp.exp() - epsilon / static_cast<Scalar>(vocab);
    grad_row(target) -= 1 - epsilon;
    result.grad.row(i) = grad_row.transpose();
    ++positions;
  }

  result.positions = positions;
  if (positions > 0) {
    result.loss = total / static_cast<Scalar>(positions);
    result.grad /= static_cast<Scalar>(positions);
  }
  return result;
}

OptimizerState OptimizerState::init(const std::vector<TensorView>& params) {
  OptimizerState state;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const auto& p : params) {
    state.m.push_back(ArrayX::Zero(p.size()));
    state.v.push_back(ArrayX::Zero(p.size()));
  }
  return state;
}

void adam_step(const std::vector<TensorView>& params,
               const std::vector<TensorView>& grads, OptimizerState& state,
               Scalar lr, Scalar beta1, Scalar beta2, Scalar eps,
               Scalar weight_decay) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ArgumentError("adam_step: parameter/gradient/state count mismatch");

  const long long step = state.step + 1;
  const Scalar bias1 = 1 - std::pow(beta1, static_cast<Scalar>(step));
  const Scalar bias2 = 1 - std::pow(beta2, static_cast<Scalar>(step));

  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grads[t].size() || params[t].size() != state.m[t].size())
      throw ArgumentError("adam_step: shape mismatch for tensor " + params[t].name);
    auto g = grads[t].array();
    if (!g.isFinite().all())
      throw NumericError("adam_step: non-finite gradient in tensor " + grads[t].name);
    auto p = params[t].array();
    p -= lr * weight_decay * p;
    state.m[t] = beta1 * state.m[t] + (1 - beta1) * g;
    state.v[t] = beta2 * state.v[t] + (1 - beta2) * g.square();
    p -= lr * (state.m[t] / bias1) / ((state.v[t] / bias2).sqrt() + eps);
  }
  state.step = step;
}

Scalar clip_grad_norm(const std::vector<TensorView>& grads, Scalar threshold) {
  if (threshold < 0) throw ArgumentError("clip_grad_norm: threshold must be >= 0");
  Scalar sq = 0;
  for (const auto& g : grads) sq += g.array().square().sum();
  const Scalar norm = std::sqrt(sq);
  if (threshold == 0) return norm;  // clipping disabled
  if (norm > threshold) {
    const Scalar scale = threshold / norm;
    for (const auto& g : grads) g.array() *= scale;
  }
  return norm;
}

Scalar lr_at(long long step, const LrSchedule& schedule) {
  if (step < 1) throw ArgumentError("lr_at: step must be >= 1");
  const Scalar base = schedule.base_rate;
  const Scalar warmup = static_cast<Scalar>(schedule.warmup_steps);
  if (step <= schedule.warmup_steps) return base * static_cast<Scalar>(step) / warmup;
  return base * std::sqrt(warmup / static_cast<Scalar>(step));
}

}  // namespace simtrans
