#include "textwalk/optim.hpp"

#include <cmath>
#include <string>

#include "textwalk/error.hpp"

namespace textwalk {

AdamState AdamState::like(std::span<const Matrix* const> params) {
  AdamState s;
  for (const Matrix* p : params) {
    s.first_moment.emplace_back(p->rows(), p->cols());
    s.second_moment.emplace_back(p->rows(), p->cols());
  }
  return s;
}

void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<TensorGrad> grads,
               double learning_rate) {
  for (std::size_t k = 0; k < grads.size(); ++k) {
    for (auto r : grads[k].touched_rows) {
      for (double g : grads[k].value.row(r)) {
        if (!std::isfinite(g)) {
          throw Error(ErrorCode::NonFiniteGradient,
                      "tensor " + std::to_string(k) + " row " + std::to_string(r));
        }
      }
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < grads.size(); ++k) {
    Matrix& value = *params[k];
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    for (auto r : grads[k].touched_rows) {
      auto g = grads[k].value.row(r);
      auto p = value.row(r);
      auto mr = m.row(r);
      auto vr = v.row(r);
      for (std::size_t c = 0; c < g.size(); ++c) {
        mr[c] = state.beta1 * mr[c] + (1.0 - state.beta1) * g[c];
        vr[c] = state.beta2 * vr[c] + (1.0 - state.beta2) * g[c] * g[c];
        const double m_hat = mr[c] / correction1;
        const double v_hat = vr[c] / correction2;
        p[c] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
      }
    }
    grads[k].clear();
  }
}

}  // namespace textwalk
