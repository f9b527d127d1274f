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

#include "sigcloud/costmodel.hpp"

#include <cmath>

#include <fmt/format.h>

#include "sigcloud/error.hpp"

namespace sigcloud::costmodel {

namespace {

void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) raise(Errc::NegativeInput, std::string(what) + " must be a non-negative number");
}

}  // namespace

double vm_hours(double start_hour, double end_hour) {
  if (!std::isfinite(start_hour) || !std::isfinite(end_hour)) raise(Errc::NegativeInput, "times must be finite");
  if (end_hour < start_hour) raise(Errc::NegativeDuration, "completion precedes submission");
  return end_hour - start_hour;
}

double cloud_cost(double vms, double rate_usd_per_hour, double hours) {
  require_non_negative(vms, "VM count");
  require_non_negative(rate_usd_per_hour, "VM rate");
  require_non_negative(hours, "duration");
  return vms * rate_usd_per_hour * hours;
}

double total_cost(const CostParams& p) {
  require_non_negative(p.hardware_usd, "hardware cost");
  return p.hardware_usd + cloud_cost(p.vms, p.rate_usd_per_hour, vm_hours(p.start_hour, p.end_hour));
}

std::vector<ScalingRow> scaling_table(std::size_t first_vms, std::size_t last_vms, double rate_usd_per_hour,
                                      double hours, double hardware_usd) {
  if (last_vms < first_vms) raise(Errc::InvalidArgument, "empty VM range");
  require_non_negative(hardware_usd, "hardware cost");
  std::vector<ScalingRow> rows;
  for (std::size_t n = first_vms; n <= last_vms; ++n) {
    rows.push_back({n, hardware_usd + cloud_cost(static_cast<double>(n), rate_usd_per_hour, hours)});
  }
  return rows;
}

std::string scaling_csv(const std::vector<ScalingRow>& rows) {
  std::string out = "n_v,cost_usd\n";
  for (const auto& r : rows) out += fmt::format("{},{:.2f}\n", r.vms, r.cost_usd);
  return out;
}

}  // namespace sigcloud::costmodel
