// Copyright 2026 The srinit Authors. All Rights Reserved.
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

#ifndef SRINIT_REINIT_HPP_
#define SRINIT_REINIT_HPP_

#include <cstdint>
#include <random>

#include "srinit/model.hpp"

namespace srinit {

// Kaiming re-initialization of a parameter bundle, in place:
//   weight tensors      <- i.i.d. N(0, 2 / fan_in)
//   biases, norm shift  <- 0
//   norm scale          <- 1
//   running mean / var  <- 0 / 1
// Weights are visited in bundle order and elements in storage order; each
// element is float(sqrt(2 / fan_in) * z) with z drawn from a single
// std::normal_distribution<double>(0, 1) fed by `rng`.
void kaiming_reset(ParamBundle& bundle, std::mt19937_64& rng);

// Copy of `bundle` re-initialized from the stream keyed by (seed, unit_id).
ParamBundle reinit_bundle(const ParamBundle& bundle, std::uint64_t seed, int unit_id);

// f_i': re-initialized copy of the unit's parameters. The unit is untouched.
ParamBundle reinit_unit(const UnitState& unit, std::uint64_t seed);

}  // namespace srinit

#endif  // SRINIT_REINIT_HPP_
