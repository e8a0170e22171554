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

#include "srinit/reinit.hpp"

#include <cmath>

#include "srinit/rng.hpp"

namespace srinit {

void kaiming_reset(ParamBundle& bundle, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& t : bundle) {
    switch (t.role) {
      case nn::ParamRole::kWeight: {
        const double stddev = std::sqrt(2.0 / static_cast<double>(t.fan_in));
        for (auto& v : t.value.data) v = static_cast<float>(stddev * normal(rng));
        break;
      }
      case nn::ParamRole::kNormScale:
      case nn::ParamRole::kRunningVar:
        t.value.fill(1.0f);
        break;
      case nn::ParamRole::kBias:
      case nn::ParamRole::kNormShift:
      case nn::ParamRole::kRunningMean:
        t.value.fill(0.0f);
        break;
    }
  }
}

ParamBundle reinit_bundle(const ParamBundle& bundle, std::uint64_t seed, int unit_id) {
  ParamBundle out = bundle;
  auto rng = make_stream(seed, static_cast<std::uint64_t>(unit_id));
  kaiming_reset(out, rng);
  return out;
}

ParamBundle reinit_unit(const UnitState& unit, std::uint64_t seed) {
  return reinit_bundle(unit_bundle(unit), seed, unit.id);
}

}  // namespace srinit
