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

#include "sigcloud/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include "json.hpp"

#include "sigcloud/error.hpp"
#include "sigcloud/parallel.hpp"
#include "sigcloud/seeding.hpp"

namespace sigcloud::synthgen {

namespace {

constexpr std::uint64_t kProfileStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kTimeStream = 0x7157ULL;

double uniform01(std::mt19937_64& engine) { return std::generate_canonical<double, 53>(engine); }

struct TimeGrid {
  std::vector<double> t;    // seconds
  std::vector<double> tau;  // normalized to [0, 1]
};

// Row timestamps depend only on (profile, sample_id) so that genuine and forged
// samples with equal ids share a grid.
TimeGrid time_grid(const UserProfile& p, std::uint64_t sample_id) {
  auto engine = derived_engine({p.stream_seed, sample_id, kTimeStream});
  const std::size_t n = p.raw_length;
  const double duration = p.duration * (0.95 + 0.1 * uniform01(engine));
  const double dt = duration / static_cast<double>(n - 1);
  TimeGrid g;
  g.t.resize(n);
  g.tau.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.t[i] = dt * (static_cast<double>(i) + 0.4 * uniform01(engine));
  const double first = g.t.front();
  const double span = g.t.back() - first;
  for (std::size_t i = 0; i < n; ++i) g.tau[i] = (g.t[i] - first) / span;
  return g;
}

}  // namespace

std::array<ChannelRange, kChannels> default_channel_ranges() {
  return {{
      {-6.0, 6.0}, {-6.0, 6.0}, {4.0, 14.0},       // acceleration
      {-50.0, 50.0}, {-50.0, 50.0}, {-50.0, 50.0},  // magnetic field
      {0.0, 360.0}, {-90.0, 90.0}, {-180.0, 180.0}, // orientation
      {-3.0, 3.0}, {-3.0, 3.0}, {-3.0, 3.0},       // angular velocity
  }};
}

void GenConfig::validate() const {
  if (raw_length < 2) raise(Errc::InvalidArgument, "raw_length must be at least 2");
  if (knots < 2) raise(Errc::InvalidArgument, "need at least 2 knots");
  const Distortion& d = distortion;
  if (d.genuine_noise < 0.0 || d.forged_noise < d.genuine_noise) {
    raise(Errc::InvalidArgument, "noise scales must satisfy 0 <= genuine <= forged");
  }
  if (d.time_warp < 0.0 || d.time_warp >= 1.0) raise(Errc::InvalidArgument, "time warp must lie in [0, 1)");
  if (d.amplitude_jitter < 0.0 || d.amplitude_jitter >= 1.0) {
    raise(Errc::InvalidArgument, "amplitude jitter must lie in [0, 1)");
  }
  for (const ChannelRange& r : ranges) {
    if (!(r.hi > r.lo)) raise(Errc::InvalidArgument, "channel range must be non-empty");
  }
}

double UserProfile::curve(std::size_t channel, double u) const {
  // Catmull-Rom through equally spaced knots, clamped at the ends.
  const std::size_t k = knots.size();
  const double x = std::clamp(u, 0.0, 1.0) * static_cast<double>(k - 1);
  const std::size_t seg = std::min(static_cast<std::size_t>(x), k - 2);
  const double s = x - static_cast<double>(seg);
  const double p0 = knots[seg == 0 ? 0 : seg - 1][channel];
  const double p1 = knots[seg][channel];
  const double p2 = knots[seg + 1][channel];
  const double p3 = knots[std::min(seg + 2, k - 1)][channel];
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * s + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s * s +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * s * s * s);
}

UserProfile gen_profile(std::uint64_t seed, const std::string& user_id, const GenConfig& cfg) {
  cfg.validate();
  auto engine = derived_engine({seed, stable_hash(user_id), kProfileStream});
  UserProfile p;
  p.user_id = user_id;
  p.stream_seed = engine();
  p.distortion = cfg.distortion;
  p.raw_length = cfg.raw_length;
  p.duration = 2.0 + 3.0 * uniform01(engine);
  p.knots.resize(cfg.knots);
  for (std::size_t c = 0; c < kChannels; ++c) p.channel_span[c] = cfg.ranges[c].span();
  for (auto& knot : p.knots) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      const ChannelRange& r = cfg.ranges[c];
      knot[c] = r.lo + r.span() * (0.1 + 0.8 * uniform01(engine));
    }
  }
  return p;
}

RawSignatureSample gen_sample(const UserProfile& p, Label label, std::uint64_t sample_id) {
  const TimeGrid grid = time_grid(p, sample_id);
  const std::size_t n = grid.t.size();
  auto engine = derived_engine({p.stream_seed, sample_id, label == Label::Genuine ? 1ULL : 2ULL});
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Distortion& d = p.distortion;

  RawSignatureSample s;
  s.user_id = p.user_id;
  s.sample_id = sample_id;
  s.label = label;
  s.rows.resize(n);

  if (label == Label::Genuine) {
    for (std::size_t i = 0; i < n; ++i) {
      s.rows[i].timestamp = grid.t[i];
      for (std::size_t c = 0; c < kChannels; ++c) {
        s.rows[i].values[c] = p.curve(c, grid.tau[i]) + d.genuine_noise * p.channel_span[c] * gauss(engine);
      }
    }
    return s;
  }

  // Skilled forgery: the shape is reproduced but the dynamics lag behind the
  // template, amplitudes drift per channel, and the trace is noisier.
  const double direction = uniform01(engine) < 0.5 ? -1.0 : 1.0;
  const double lag = direction * d.time_warp * (0.25 + (1.0 - 0.25) * uniform01(engine));
  std::array<double, kChannels> gain{};
  std::array<double, kChannels> center{};
  for (std::size_t c = 0; c < kChannels; ++c) {
    gain[c] = d.amplitude_jitter * (2.0 * uniform01(engine) - 1.0);
    double sum = 0.0;
    for (const auto& knot : p.knots) sum += knot[c];
    center[c] = sum / static_cast<double>(p.knots.size());
  }
  for (std::size_t i = 0; i < n; ++i) {
    s.rows[i].timestamp = grid.t[i];
    const double u = grid.tau[i];
    const double warped = u - lag * std::sin(std::numbers::pi * u) / std::numbers::pi;
    for (std::size_t c = 0; c < kChannels; ++c) {
      const double v = p.curve(c, warped);
      s.rows[i].values[c] = v + gain[c] * (v - center[c]) + d.forged_noise * p.channel_span[c] * gauss(engine);
    }
  }
  return s;
}

RawSignatureSample template_sample(const UserProfile& p, std::uint64_t sample_id) {
  const TimeGrid grid = time_grid(p, sample_id);
  RawSignatureSample s;
  s.user_id = p.user_id;
  s.sample_id = sample_id;
  s.rows.resize(grid.t.size());
  for (std::size_t i = 0; i < grid.t.size(); ++i) {
    s.rows[i].timestamp = grid.t[i];
    for (std::size_t c = 0; c < kChannels; ++c) s.rows[i].values[c] = p.curve(c, grid.tau[i]);
  }
  return s;
}

std::string user_id_for(std::size_t index, std::size_t n_users) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(n_users).size());
  return fmt::format("u{:0{}}", index + 1, width);
}

std::vector<RawSignatureSample> gen_dataset(const GenConfig& cfg, std::size_t workers) {
  cfg.validate();
  const std::size_t per_user = cfg.n_genuine + cfg.n_forged;
  std::vector<RawSignatureSample> out(cfg.n_users * per_user);
  parallel_for(cfg.n_users, workers, [&](std::size_t u) {
    const UserProfile profile = gen_profile(cfg.seed, user_id_for(u, cfg.n_users), cfg);
    for (std::size_t j = 0; j < per_user; ++j) {
      const Label label = j < cfg.n_genuine ? Label::Genuine : Label::Forged;
      out[u * per_user + j] = gen_sample(profile, label, j);
    }
  });
  return out;
}

std::string serialize_sample(const RawSignatureSample& s) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), R"({{"user_id": {}, "sample_id": {}, "label": "{}", "rows": [)",
                 nlohmann::json(s.user_id).dump(), s.sample_id, sigmodel::label_name(s.label));
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    if (i > 0) buf.push_back(',');
    fmt::format_to(std::back_inserter(buf), "[{:.17g}", s.rows[i].timestamp);
    for (double v : s.rows[i].values) fmt::format_to(std::back_inserter(buf), ",{:.17g}", v);
    buf.push_back(']');
  }
  buf.append(std::string_view("]}"));
  return fmt::to_string(buf);
}

void write_dataset(const std::vector<RawSignatureSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  for (const auto& s : samples) out << serialize_sample(s) << '\n';
  out.flush();
  if (!out) raise(Errc::IoFailure, "write failed for " + path.string());
}

std::vector<RawSignatureSample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoFailure, "cannot open " + path.string());

  std::vector<RawSignatureSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      raise(Errc::ParseFailure, where + ": " + e.what());
    }
    try {
      RawSignatureSample s;
      s.user_id = j.at("user_id").get<std::string>();
      s.sample_id = j.at("sample_id").get<std::uint64_t>();
      s.label = sigmodel::parse_label(j.at("label").get<std::string>());
      const auto& rows = j.at("rows");
      if (!rows.is_array()) raise(Errc::SchemaViolation, where + ": rows must be an array");
      s.rows.reserve(rows.size());
      for (const auto& row : rows) {
        if (!row.is_array() || row.size() != kChannels + 1) {
          raise(Errc::SchemaViolation, where + ": each row needs " + std::to_string(kChannels + 1) + " numbers");
        }
        sigmodel::SensorRow r;
        r.timestamp = row[0].get<double>();
        for (std::size_t c = 0; c < kChannels; ++c) r.values[c] = row[c + 1].get<double>();
        s.rows.push_back(r);
      }
      samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      raise(Errc::SchemaViolation, where + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == Errc::SchemaViolation && std::string_view(e.what()).find(where) != std::string_view::npos) throw;
      raise(Errc::SchemaViolation, where + ": " + e.what());
    }
  }
  return samples;
}

}  // namespace sigcloud::synthgen
