// Copyright 2026 The MTDA Authors.
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

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "mtda/data.hpp"
#include "mtda/error.hpp"
#include "mtda/random.hpp"

namespace mtda {
namespace {

// Full-strength domain transform (shift magnitude 1).
constexpr double kMaxRotationDeg = 60.0;
constexpr double kMaxHueShiftDeg = 90.0;
constexpr double kMaxNoiseStd = 0.2;
constexpr double kBaseNoiseStd = 0.02;
constexpr double kMaxContrastLoss = 0.6;  // glyph colour pulled toward the background

constexpr std::array<const char*, 8> kShapeNames = {"disk", "square", "triangle", "plus",
                                                     "ring", "bars", "ell", "cross"};

bool inside_base(int shape, double x, double y) {
  const double r = std::hypot(x, y);
  switch (shape) {
    case 0:
      return r <= 0.8;
    case 1:
      return std::max(std::abs(x), std::abs(y)) <= 0.7;
    case 2:
      return y >= -0.6 && y <= 0.8 && std::abs(x) <= 0.8 * (0.8 - y) / 1.4;
    case 3:
      return (std::abs(x) <= 0.25 && std::abs(y) <= 0.85) || (std::abs(y) <= 0.25 && std::abs(x) <= 0.85);
    case 4:
      return r >= 0.5 && r <= 0.85;
    case 5:
      return std::abs(x) <= 0.8 && (std::abs(y - 0.4) <= 0.17 || std::abs(y + 0.4) <= 0.17);
    case 6:
      return (x >= -0.7 && x <= -0.3 && std::abs(y) <= 0.8) || (y >= -0.8 && y <= -0.4 && std::abs(x) <= 0.7);
    default: {
      const double u = (x - y) * std::numbers::sqrt2 / 2.0;
      const double v = (x + y) * std::numbers::sqrt2 / 2.0;
      return inside_base(3, u, v);
    }
  }
}

bool inside(int class_index, double x, double y) {
  const int shape = class_index % 8;
  if (class_index < 8) return inside_base(shape, x, y);
  // Outline variant: the shape minus a shrunken copy of itself.
  constexpr double kInner = 0.6;
  return inside_base(shape, x, y) && !inside_base(shape, x / kInner, y / kInner);
}

std::array<double, 3> hsv_to_rgb(double h_deg, double s, double v) {
  double h = std::fmod(h_deg, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  std::array<double, 3> rgb{};
  if (hp < 1) rgb = {c, x, 0};
  else if (hp < 2) rgb = {x, c, 0};
  else if (hp < 3) rgb = {0, c, x};
  else if (hp < 4) rgb = {0, x, c};
  else if (hp < 5) rgb = {x, 0, c};
  else rgb = {c, 0, x};
  const double m = v - c;
  return {rgb[0] + m, rgb[1] + m, rgb[2] + m};
}

double gaussian(Rng& rng) {
  // Box-Muller keeps the stream identical across standard libraries.
  const double u1 = 1.0 - uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

}  // namespace

std::vector<float> render_glyph(int class_index, double shift, std::uint64_t sample_seed, const ImageShape& shape) {
  MTDA_REQUIRE(class_index >= 0 && class_index < kMaxSyntheticClasses, "glyph class out of range");
  MTDA_REQUIRE(shape.channels == 3, "synthetic glyphs are RGB");
  Rng rng(sample_seed);

  const double cx = uniform(rng, -0.15, 0.15);
  const double cy = uniform(rng, -0.15, 0.15);
  const double scale = uniform(rng, 0.75, 1.0);
  const double jitter_deg = uniform(rng, -10.0, 10.0);
  const double fg_hue = uniform(rng, 0.0, 60.0);
  const double fg_sat = uniform(rng, 0.7, 1.0);
  const double fg_val = uniform(rng, 0.7, 1.0);
  const double bg_hue = uniform(rng, 200.0, 260.0);
  const double bg_sat = uniform(rng, 0.3, 0.6);
  const double bg_val = uniform(rng, 0.1, 0.3);

  const double hue_shift = kMaxHueShiftDeg * shift;
  const auto bg = hsv_to_rgb(bg_hue + hue_shift, bg_sat, bg_val);
  auto fg = hsv_to_rgb(fg_hue + hue_shift, fg_sat, fg_val);
  const double contrast = 1.0 - kMaxContrastLoss * shift;
  for (int c = 0; c < 3; ++c) fg[c] = bg[c] + contrast * (fg[c] - bg[c]);
  const double angle = (jitter_deg + kMaxRotationDeg * shift) * std::numbers::pi / 180.0;
  const double cos_a = std::cos(angle), sin_a = std::sin(angle);
  const double noise_std = kBaseNoiseStd + kMaxNoiseStd * shift;

  const int h = shape.height, w = shape.width;
  const int plane = h * w;
  std::vector<float> image(static_cast<std::size_t>(shape.size()));
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      // 2x2 supersampled coverage.
      int hits = 0;
      for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx) {
          const double u = 2.0 * (px + 0.25 + 0.5 * sx) / w - 1.0 - cx;
          const double v = 1.0 - 2.0 * (py + 0.25 + 0.5 * sy) / h - cy;
          const double lx = (cos_a * u + sin_a * v) / scale;
          const double ly = (-sin_a * u + cos_a * v) / scale;
          hits += inside(class_index, lx, ly) ? 1 : 0;
        }
      const double alpha = hits / 4.0;
      for (int c = 0; c < 3; ++c) {
        const double value = bg[c] * (1.0 - alpha) + fg[c] * alpha + noise_std * gaussian(rng);
        image[static_cast<std::size_t>(c * plane + py * w + px)] = static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    }
  }
  return image;
}

DatasetRegistry make_synthetic(const SyntheticSpec& spec) {
  if (spec.num_targets != static_cast<int>(spec.shifts.size()))
    throw ConfigError("expected " + std::to_string(spec.num_targets) + " shift magnitudes, got " +
                          std::to_string(spec.shifts.size()),
                      "synthetic.shifts");
  if (spec.num_classes < 2 || spec.num_classes > kMaxSyntheticClasses)
    throw ConfigError("class count must be in [2, " + std::to_string(kMaxSyntheticClasses) + "]", "synthetic.n_c");
  if (spec.num_targets < 1) throw ConfigError("at least one target domain is required", "synthetic.N");
  if (spec.per_class < 10) throw ConfigError("per_class must be >= 10", "synthetic.per_class");
  for (double s : spec.shifts)
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("shift magnitudes must lie in [0, 1]", "synthetic.shifts");

  DatasetRegistry reg;
  reg.num_classes = spec.num_classes;
  for (int c = 0; c < spec.num_classes; ++c)
    reg.class_names.push_back(std::string(kShapeNames[static_cast<std::size_t>(c % 8)]) + (c >= 8 ? "_outline" : ""));

  auto build = [&](int domain_id, double shift, bool labeled, std::vector<std::optional<int>>* truth) {
    Dataset ds;
    ds.name = domain_id == 0 ? "source" : "t" + std::to_string(domain_id);
    ds.domain_id = domain_id;
    ds.shape = spec.shape;
    for (int i = 0; i < spec.per_class; ++i)
      for (int c = 0; c < spec.num_classes; ++c) {
        Sample s;
        s.domain_id = domain_id;
        s.index = static_cast<int>(ds.samples.size());
        s.image = render_glyph(c, shift, derive_seed(spec.seed, "glyph", {domain_id, c, i}), spec.shape);
        if (labeled) s.label = c;
        if (truth) truth->push_back(c);
        ds.samples.push_back(std::move(s));
      }
    return ds;
  };

  reg.source = build(0, 0.0, true, nullptr);
  for (int j = 0; j < spec.num_targets; ++j) {
    reg.hidden_truth.emplace_back();
    reg.targets.push_back(build(j + 1, spec.shifts[static_cast<std::size_t>(j)], false, &reg.hidden_truth.back()));
  }
  return reg;
}

DatasetRegistry make_synthetic(int num_classes, int num_targets, const std::vector<double>& shifts, int per_class,
                               std::uint64_t seed) {
  SyntheticSpec spec;
  spec.num_classes = num_classes;
  spec.num_targets = num_targets;
  spec.shifts = shifts;
  spec.per_class = per_class;
  spec.seed = seed;
  return make_synthetic(spec);
}

}  // namespace mtda
