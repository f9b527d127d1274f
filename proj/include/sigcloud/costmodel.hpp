// Copyright 2026 The sigcloud Authors
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

#include <cstddef>
#include <string>
#include <vector>

namespace sigcloud::costmodel {

// Hardware cost plus VM charges; network and storage charges are not modeled.
struct CostParams {
  double hardware_usd = 0.0;  // Cost_I
  double vms = 0.0;           // n_v
  double rate_usd_per_hour = 0.0;  // c_v
  double start_hour = 0.0;    // t_s
  double end_hour = 0.0;      // t_c
};

// t = t_c - t_s. Throws NegativeDuration.
double vm_hours(double start_hour, double end_hour);

// Cost_C = n_v * c_v * t. Throws NegativeInput.
double cloud_cost(double vms, double rate_usd_per_hour, double hours);

// Cost_T = Cost_I + Cost_C.
double total_cost(const CostParams& p);

struct ScalingRow {
  std::size_t vms = 0;
  double cost_usd = 0.0;
};

std::vector<ScalingRow> scaling_table(std::size_t first_vms, std::size_t last_vms, double rate_usd_per_hour,
                                      double hours, double hardware_usd = 0.0);

// "n_v,cost_usd" lines, two decimals.
std::string scaling_csv(const std::vector<ScalingRow>& rows);

}  // namespace sigcloud::costmodel
