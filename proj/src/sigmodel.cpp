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

#include "sigcloud/sigmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "sigcloud/error.hpp"
#include "sigcloud/parallel.hpp"
#include "sigcloud/seeding.hpp"

namespace sigcloud::sigmodel {

std::string_view label_name(Label label) { return label == Label::Genuine ? "genuine" : "forged"; }

Label parse_label(std::string_view text) {
  if (text == "genuine") return Label::Genuine;
  if (text == "forged") return Label::Forged;
  raise(Errc::SchemaViolation, "unknown label '" + std::string(text) + "'");
}

void validate(const RawSignatureSample& sample) {
  if (sample.rows.size() < 2) {
    raise(Errc::TooFewRows, "sample " + sample.user_id + "/" + std::to_string(sample.sample_id) +
                                " has " + std::to_string(sample.rows.size()) + " rows");
  }
  for (std::size_t i = 0; i < sample.rows.size(); ++i) {
    const SensorRow& row = sample.rows[i];
    if (!std::isfinite(row.timestamp) ||
        !std::all_of(row.values.begin(), row.values.end(), [](double v) { return std::isfinite(v); })) {
      raise(Errc::NonFiniteInput, "row " + std::to_string(i));
    }
    if (i > 0 && !(row.timestamp > sample.rows[i - 1].timestamp)) {
      raise(Errc::NonMonotonicTime, "row " + std::to_string(i));
    }
  }
}

FeatureMask::FeatureMask(std::bitset<kChannels> bits) : bits_(bits) {
  if (bits_.none()) raise(Errc::EmptyMask, "no channel included");
}

FeatureMask FeatureMask::all() { return FeatureMask(); }

FeatureMask FeatureMask::excluding(std::size_t channel) {
  if (channel >= kChannels) raise(Errc::InvalidArgument, "channel index out of range");
  std::bitset<kChannels> bits;
  bits.set();
  bits.reset(channel);
  return FeatureMask(bits);
}

FeatureMask FeatureMask::parse(std::string_view text) {
  if (text.size() != kChannels) raise(Errc::InvalidArgument, "mask must have 12 digits");
  std::bitset<kChannels> bits;
  for (std::size_t i = 0; i < kChannels; ++i) {
    if (text[i] == '1') {
      bits.set(i);
    } else if (text[i] != '0') {
      raise(Errc::InvalidArgument, "mask digits must be 0 or 1");
    }
  }
  return FeatureMask(bits);
}

std::string FeatureMask::to_string() const {
  std::string out(kChannels, '0');
  for (std::size_t i = 0; i < kChannels; ++i) {
    if (bits_.test(i)) out[i] = '1';
  }
  return out;
}

ResampledSample resample(const RawSignatureSample& sample, std::size_t length) {
  if (length < 2) raise(Errc::InvalidArgument, "resample length must be at least 2");
  validate(sample);

  const auto& rows = sample.rows;
  const double t0 = rows.front().timestamp;
  const double t1 = rows.back().timestamp;
  const double span = t1 - t0;
  const double last = static_cast<double>(length - 1);

  ResampledSample out(static_cast<Eigen::Index>(kChannels), static_cast<Eigen::Index>(length));
  std::size_t seg = 0;
  for (std::size_t j = 0; j < length; ++j) {
    const double tau = (j + 1 == length) ? t1 : t0 + span * (static_cast<double>(j) / last);
    while (seg + 2 < rows.size() && rows[seg + 1].timestamp <= tau) ++seg;
    const SensorRow& a = rows[seg];
    const SensorRow& b = rows[seg + 1];
    const double frac = std::clamp((tau - a.timestamp) / (b.timestamp - a.timestamp), 0.0, 1.0);
    for (std::size_t c = 0; c < kChannels; ++c) {
      const double va = a.values[c];
      const double vb = b.values[c];
      const double v = va + frac * (vb - va);
      out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) =
          std::clamp(v, std::min(va, vb), std::max(va, vb));
    }
  }
  return out;
}

FeatureVector flatten(const ResampledSample& resampled, const FeatureMask& mask) {
  if (mask.count() == 0) raise(Errc::EmptyMask, "no channel included");
  const Eigen::Index length = resampled.cols();
  FeatureVector out(static_cast<Eigen::Index>(mask.count()) * length);
  Eigen::Index offset = 0;
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (!mask.includes(c)) continue;
    out.segment(offset, length) = resampled.row(static_cast<Eigen::Index>(c)).transpose();
    offset += length;
  }
  return out;
}

std::vector<std::string> Dataset::user_ids() const {
  std::vector<std::string> ids;
  for (const Record& r : records) {
    if (std::find(ids.begin(), ids.end(), r.user_id) == ids.end()) ids.push_back(r.user_id);
  }
  return ids;
}

Dataset Dataset::subset_for_user(const std::string& user_id) const {
  std::vector<Record> kept;
  for (const Record& r : records) {
    if (r.user_id == user_id) kept.push_back(r);
  }
  return with_records(std::move(kept));
}

Dataset Dataset::with_records(std::vector<Record> recs) const {
  Dataset out;
  out.records = std::move(recs);
  out.resample_length = resample_length;
  out.mask = mask;
  out.seed = seed;
  return out;
}

Dataset featurize(const std::vector<RawSignatureSample>& samples, std::size_t length,
                  const FeatureMask& mask, std::size_t workers, std::uint64_t seed) {
  Dataset ds;
  ds.resample_length = length;
  ds.mask = mask;
  ds.seed = seed;
  ds.records.resize(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const RawSignatureSample& s = samples[i];
    ds.records[i] = Record{flatten(resample(s, length), mask), s.label, s.user_id, s.sample_id};
  });
  return ds;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double train_fraction,
                                             std::uint64_t seed) {
  if (ds.empty()) raise(Errc::EmptyDataset, "nothing to split");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    raise(Errc::InvalidArgument, "train fraction must lie in (0, 1)");
  }

  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const Record& r = ds.records[i];
    groups[{r.user_id, static_cast<int>(r.label)}].push_back(i);
  }

  std::vector<bool> to_train(ds.records.size(), false);
  for (auto& [key, members] : groups) {
    const std::size_t count = members.size();
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(count) + 1e-9));
    if (count >= 2) n_train = std::clamp<std::size_t>(n_train, 1, count - 1);

    auto engine = derived_engine({seed, stable_hash(key.first), static_cast<std::uint64_t>(key.second)});
    std::shuffle(members.begin(), members.end(), engine);
    for (std::size_t j = 0; j < n_train; ++j) to_train[members[j]] = true;
  }

  std::vector<Record> train, test;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    (to_train[i] ? train : test).push_back(ds.records[i]);
  }
  return {ds.with_records(std::move(train)), ds.with_records(std::move(test))};
}

}  // namespace sigcloud::sigmodel
