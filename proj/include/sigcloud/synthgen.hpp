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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sigcloud/sigmodel.hpp"

namespace sigcloud::synthgen {

using sigmodel::kChannels;
using sigmodel::Label;
using sigmodel::RawSignatureSample;

struct ChannelRange {
  double lo = 0.0;
  double hi = 0.0;
  double span() const { return hi - lo; }
};

// Plausible value ranges per channel (m/s^2, mT, degrees, rad/s).
std::array<ChannelRange, kChannels> default_channel_ranges();

struct Distortion {
  double genuine_noise = 0.01;  // sigma_g, fraction of the channel span
  double forged_noise = 0.03;   // sigma_f, at least sigma_g
  double time_warp = 0.5;       // w in [0, 1)
  double amplitude_jitter = 0.15;  // a: per-channel scale drawn from [1 - a, 1 + a]
};

struct GenConfig {
  std::size_t n_users = 50;
  std::size_t n_genuine = 20;
  std::size_t n_forged = 20;
  std::size_t raw_length = 128;
  std::size_t knots = 8;
  std::uint64_t seed = 1;
  std::array<ChannelRange, kChannels> ranges = default_channel_ranges();
  Distortion distortion;

  void validate() const;
};

struct UserProfile {
  std::string user_id;
  std::uint64_t stream_seed = 0;  // root of the per-sample streams
  // kChannels x knots control points of the template curve.
  std::vector<std::array<double, kChannels>> knots;
  std::array<double, kChannels> channel_span{};
  double duration = 3.0;  // seconds
  Distortion distortion;
  std::size_t raw_length = 128;

  // Template curve value of `channel` at normalized time u in [0, 1].
  double curve(std::size_t channel, double u) const;
};

UserProfile gen_profile(std::uint64_t seed, const std::string& user_id, const GenConfig& cfg = {});

RawSignatureSample gen_sample(const UserProfile& profile, Label label, std::uint64_t sample_id);

// Noise-free template evaluated on the same time grid gen_sample would use.
RawSignatureSample template_sample(const UserProfile& profile, std::uint64_t sample_id);

// "u0001"-style identifiers, zero padded so lexical order equals numeric order.
std::string user_id_for(std::size_t index, std::size_t n_users);

// Canonical order: by user_id, then sample_id. Genuine samples take ids
// [0, n_genuine), forgeries follow.
std::vector<RawSignatureSample> gen_dataset(const GenConfig& cfg, std::size_t workers = 1);

// JSON lines, one sample per line, 17 significant digits.
void write_dataset(const std::vector<RawSignatureSample>& samples, const std::filesystem::path& path);
std::string serialize_sample(const RawSignatureSample& sample);
std::vector<RawSignatureSample> read_dataset(const std::filesystem::path& path);

}  // namespace sigcloud::synthgen
