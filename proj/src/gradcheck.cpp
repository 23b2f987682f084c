// Copyright 2026 The cuctx Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cuctx/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cuctx {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

namespace {

void note(GradCheckResult& r, double a, double n, double floor, const std::string& label) {
  const double rel = relative_error(a, n, floor);
  r.max_absolute_error = std::max(r.max_absolute_error, std::abs(a - n));
  if (rel >= r.max_relative_error) {
    r.max_relative_error = rel;
    r.worst_entry = label;
  }
  ++r.entries;
}

double evaluate(const std::function<Var(Tape&)>& objective) {
  Tape tape(false);
  return objective(tape).value()[0];
}

}  // namespace

GradCheckResult check_parameter_gradients(ParameterStore& store,
                                          const std::function<Var(Tape&)>& objective,
                                          double step, double floor) {
  store.zero_grad();
  {
    Tape tape;
    tape.backward(objective(tape));
  }
  GradCheckResult r;
  for (Parameter* p : store.trainable()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + step;
      const double up = evaluate(objective);
      p->value[i] = saved - step;
      const double down = evaluate(objective);
      p->value[i] = saved;
      note(r, p->grad[i], (up - down) / (2.0 * step), floor,
           p->name + "[" + std::to_string(i) + "]");
    }
  }
  return r;
}

GradCheckResult check_input_gradients(
    std::vector<Tensor> inputs, const std::function<Var(Tape&, std::span<const Var>)>& objective,
    double step, double floor) {
  auto run = [&](Tape& tape) {
    std::vector<Var> leaves;
    for (const Tensor& x : inputs) leaves.push_back(tape.leaf(x));
    Var out = objective(tape, leaves);
    return std::make_pair(out, leaves);
  };
  std::vector<Tensor> analytic;
  {
    Tape tape;
    auto [out, leaves] = run(tape);
    tape.backward(out);
    for (const Var& v : leaves) analytic.push_back(v.grad());
  }
  GradCheckResult r;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + step;
      double up = 0.0;
      {
        Tape tape(false);
        up = run(tape).first.value()[0];
      }
      inputs[k][i] = saved - step;
      double down = 0.0;
      {
        Tape tape(false);
        down = run(tape).first.value()[0];
      }
      inputs[k][i] = saved;
      note(r, analytic[k][i], (up - down) / (2.0 * step), floor,
           "input" + std::to_string(k) + "[" + std::to_string(i) + "]");
    }
  }
  return r;
}

}  // namespace cuctx
