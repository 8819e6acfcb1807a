#include <cmath>

#include "ftfer/error.hpp"
#include "ftfer/gnn.hpp"
#include "ftfer/simd.hpp"

namespace ftfer::gnn {

AdamState make_adam_state(const GnnModel& model) {
  AdamState state;
  for (const auto& p : model.parameters()) {
    state.first_moment.emplace_back(p.rows(), p.cols());
    state.second_moment.emplace_back(p.rows(), p.cols());
  }
  return state;
}

void adam_step(GnnModel& model, const Gradients& grads, AdamState& state, double learning_rate) {
  auto& params = model.parameters();
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw InvalidArgument("adam_step: parameter, gradient and state counts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const simd::AdamCoefficients c{learning_rate,
                                 kAdamBeta1,
                                 kAdamBeta2,
                                 kAdamEpsilon,
                                 1.0 - std::pow(kAdamBeta1, t),
                                 1.0 - std::pow(kAdamBeta2, t)};
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].size()) throw InvalidArgument("adam_step: shape mismatch");
    k.adam(params[i].values().data(), state.first_moment[i].values().data(),
           state.second_moment[i].values().data(), grads[i].values().data(), params[i].size(), c);
  }
}

}  // namespace ftfer::gnn
