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
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sigcloud::sigmodel {

// Sensor channels in capture order: acceleration, magnetic field, orientation,
// angular velocity, each as an x/y/z (or azimuth/pitch/roll) triplet.
inline constexpr std::size_t kChannels = 12;

inline constexpr std::array<std::string_view, kChannels> kChannelNames = {
    "X_accel", "Y_accel", "Z_accel",  //
    "X_mag",   "Y_mag",   "Z_mag",    //
    "azimuth", "pitch",   "roll",     //
    "X_gyro",  "Y_gyro",  "Z_gyro"};

enum class Label { Genuine, Forged };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);

struct SensorRow {
  double timestamp = 0.0;  // seconds
  std::array<double, kChannels> values{};

  bool operator==(const SensorRow&) const = default;
};

struct RawSignatureSample {
  std::string user_id;
  std::uint64_t sample_id = 0;
  Label label = Label::Genuine;
  std::vector<SensorRow> rows;

  bool operator==(const RawSignatureSample&) const = default;
};

// Throws TooFewRows, NonMonotonicTime or NonFiniteInput.
void validate(const RawSignatureSample& sample);

// Which channels enter the feature vector, indexed in kChannelNames order.
class FeatureMask {
 public:
  FeatureMask() = default;
  explicit FeatureMask(std::bitset<kChannels> bits);

  static FeatureMask all();
  static FeatureMask excluding(std::size_t channel);
  // "111111111110" style, position 0 first. Throws InvalidArgument / EmptyMask.
  static FeatureMask parse(std::string_view text);

  bool includes(std::size_t channel) const { return bits_.test(channel); }
  std::size_t count() const { return bits_.count(); }
  std::string to_string() const;

  bool operator==(const FeatureMask&) const = default;

 private:
  std::bitset<kChannels> bits_ = std::bitset<kChannels>().set();
};

// kChannels x L, one row per channel on a uniform time grid.
using ResampledSample = Eigen::Matrix<double, static_cast<int>(kChannels), Eigen::Dynamic>;

// Channel-major: all L values of the first included channel, then the next.
using FeatureVector = Eigen::VectorXd;

inline constexpr std::size_t kDefaultResampleLength = 64;

ResampledSample resample(const RawSignatureSample& sample, std::size_t length);
FeatureVector flatten(const ResampledSample& resampled, const FeatureMask& mask);

struct Record {
  FeatureVector x;
  Label label = Label::Genuine;
  std::string user_id;
  std::uint64_t sample_id = 0;
};

struct Dataset {
  std::vector<Record> records;
  std::size_t resample_length = kDefaultResampleLength;
  FeatureMask mask;
  std::uint64_t seed = 0;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  std::size_t dimension() const { return records.empty() ? 0 : static_cast<std::size_t>(records.front().x.size()); }
  std::vector<std::string> user_ids() const;  // in order of first appearance
  Dataset subset_for_user(const std::string& user_id) const;
  Dataset with_records(std::vector<Record> records) const;
};

// resample + flatten for each sample, in parallel.
Dataset featurize(const std::vector<RawSignatureSample>& samples, std::size_t length,
                  const FeatureMask& mask, std::size_t workers = 1, std::uint64_t seed = 0);

// For each (user, label) group, floor(fraction * count) samples go to train,
// clamped to [1, count - 1] when the group has two or more members.
std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double train_fraction,
                                             std::uint64_t seed);

}  // namespace sigcloud::sigmodel
