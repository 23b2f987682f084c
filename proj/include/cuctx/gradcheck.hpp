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

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cuctx/autograd.hpp"

namespace cuctx {

// Whole-model check settings. Central-difference round-off at this step is
// around 1e-9 in absolute terms, so gradients below the floor are compared
// absolutely.
inline constexpr double kGradcheckStep = 1e-6;
inline constexpr double kGradcheckFloor = 1e-4;
inline constexpr double kGradcheckTolerance = 1e-4;

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::string worst_entry;  // "name[index]"
  std::size_t entries = 0;
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

// Compares the tape gradient of a scalar objective with central differences
// for every entry of every trainable parameter. `objective` must build its
// graph on the tape it is given and be deterministic.
GradCheckResult check_parameter_gradients(ParameterStore& store,
                                          const std::function<Var(Tape&)>& objective,
                                          double step = 1e-6, double floor = 1e-6);

// Same for a list of input tensors fed as leaves.
GradCheckResult check_input_gradients(std::vector<Tensor> inputs,
                                      const std::function<Var(Tape&, std::span<const Var>)>& objective,
                                      double step = 1e-6, double floor = 1e-6);

}  // namespace cuctx
