/* Copyright 2026 The BiSR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "bisr/cassi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace bisr {

void CassiSystem::validate() const {
  const Shape& s = mask.shape();
  if (s.n != 1 || s.c != 1 || s.h == 0 || s.w == 0) throw DimensionError("mask must be (1, 1, H, W), got " + s.str());
  if (n_wavelengths == 0) throw DimensionError("n_wavelengths must be positive");
  for (float v : mask.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw DomainError("mask values must lie in [0, 1]");
  }
}

DenseTensor forward_capture(const DenseTensor& scene, const CassiSystem& sys) {
  sys.validate();
  const Shape& s = scene.shape();
  if (s.c != sys.n_wavelengths || s.h != sys.height() || s.w != sys.width()) {
    throw DimensionError("scene " + s.str() + " does not match mask " + sys.mask.shape().str() + " with " +
                         std::to_string(sys.n_wavelengths) + " bands");
  }
  const std::size_t W = s.w, Wy = sys.measurement_width();
  DenseTensor y(Shape{s.n, 1, s.h, Wy});
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t band = 0; band < s.c; ++band) {
      const std::size_t off = sys.step * band;
      for (std::size_t r = 0; r < s.h; ++r) {
        const float* src = scene.plane(b, band) + r * W;
        const float* m = sys.mask.plane(0, 0) + r * W;
        float* dst = y.plane(b, 0) + r * Wy + off;
        for (std::size_t x = 0; x < W; ++x) dst[x] += m[x] * src[x];
      }
    }
  }
  return y;
}

DenseTensor shift_back(const DenseTensor& measurement, const CassiSystem& sys) {
  const Shape& s = measurement.shape();
  if (s.c != 1 || s.h != sys.height() || s.w != sys.measurement_width()) {
    throw DimensionError("measurement " + s.str() + " should be (n, 1, " + std::to_string(sys.height()) + ", " +
                         std::to_string(sys.measurement_width()) + ")");
  }
  const std::size_t N = sys.n_wavelengths, W = sys.width();
  DenseTensor out(Shape{s.n, N, s.h, W});
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t band = 0; band < N; ++band) {
      for (std::size_t r = 0; r < s.h; ++r) {
        const float* src = measurement.plane(b, 0) + r * s.w + sys.step * band;
        std::copy(src, src + W, out.plane(b, band) + r * W);
      }
    }
  }
  return out;
}

DenseTensor shift_mask(const CassiSystem& sys) {
  sys.validate();
  // Shift right by d*n, then read back the window starting at d*n: every tap
  // lands inside the window, so nothing is zero-filled.
  const std::size_t N = sys.n_wavelengths, H = sys.height(), W = sys.width();
  const std::size_t Wy = sys.measurement_width();
  DenseTensor out(Shape{1, N, H, W});
  std::vector<float> row(Wy);
  for (std::size_t band = 0; band < N; ++band) {
    const std::size_t off = sys.step * band;
    for (std::size_t r = 0; r < H; ++r) {
      std::fill(row.begin(), row.end(), 0.0f);
      const float* m = sys.mask.plane(0, 0) + r * W;
      std::copy(m, m + W, row.begin() + off);
      std::copy(row.begin() + off, row.begin() + off + W, out.plane(0, band) + r * W);
    }
  }
  return out;
}

DenseTensor add_shot_noise(const DenseTensor& measurement, std::size_t bit_depth, std::uint64_t seed) {
  if (bit_depth == 0 || bit_depth > 24) throw ArgumentError("bit depth must be in [1, 24]");
  float peak = 0.0f;
  for (float v : measurement.data()) {
    if (!(v >= 0.0f)) throw DomainError("shot noise needs a non-negative measurement");
    peak = std::max(peak, v);
  }
  DenseTensor out(measurement.shape());
  if (peak < 1e-12f) return out;
  const double levels = std::ldexp(1.0, static_cast<int>(bit_depth)) - 1.0;
  const double gain = levels / peak;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < measurement.size(); ++i) {
    const double mean = measurement[i] * gain;
    if (mean <= 0.0) continue;
    std::poisson_distribution<long long> draw(mean);
    out[i] = static_cast<float>(static_cast<double>(draw(rng)) / gain);
  }
  return out;
}

DenseTensor synth_scene(std::uint64_t seed, std::size_t height, std::size_t width, std::size_t n_wavelengths) {
  if (height == 0 || width == 0 || n_wavelengths == 0) throw ArgumentError("scene dims must be positive");
  constexpr int kComponents = 8;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Wave {
    double fy, fx, phase, amp, centre, spread;
  };
  std::vector<Wave> waves(kComponents);
  for (auto& w : waves) {
    w.fy = (unit(rng) * 2.0 - 1.0) * 3.0;
    w.fx = (unit(rng) * 2.0 - 1.0) * 3.0;
    w.phase = unit(rng) * kTwoPi;
    w.amp = 0.1 + 0.2 * unit(rng);
    w.centre = unit(rng);
    w.spread = 0.15 + 0.3 * unit(rng);
  }
  const double base = 0.35 + 0.3 * unit(rng);

  DenseTensor out(Shape{1, n_wavelengths, height, width});
  std::vector<double> weight(kComponents);
  for (std::size_t band = 0; band < n_wavelengths; ++band) {
    const double t = n_wavelengths == 1 ? 0.5 : static_cast<double>(band) / static_cast<double>(n_wavelengths - 1);
    for (int k = 0; k < kComponents; ++k) {
      const double z = (t - waves[k].centre) / waves[k].spread;
      weight[k] = waves[k].amp * std::exp(-0.5 * z * z);
    }
    float* dst = out.plane(0, band);
    for (std::size_t r = 0; r < height; ++r) {
      const double v = static_cast<double>(r) / static_cast<double>(height);
      for (std::size_t c = 0; c < width; ++c) {
        const double u = static_cast<double>(c) / static_cast<double>(width);
        double acc = base;
        for (int k = 0; k < kComponents; ++k) {
          acc += weight[k] * std::cos(kTwoPi * (waves[k].fy * v + waves[k].fx * u) + waves[k].phase);
        }
        dst[r * width + c] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

DenseTensor random_mask(std::uint64_t seed, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ArgumentError("mask dims must be positive");
  std::mt19937_64 rng(seed);
  DenseTensor out(Shape{1, 1, height, width});
  for (auto& v : out.data()) v = (rng() >> 63) ? 1.0f : 0.0f;
  return out;
}

DenseTensor dihedral(const DenseTensor& x, unsigned t) {
  if (t >= 8) throw ArgumentError("dihedral index must be < 8");
  const bool transpose = t & 4u, flip_rows = t & 1u, flip_cols = t & 2u;
  const Shape& s = x.shape();
  if (transpose && s.h != s.w) throw DimensionError("transpose needs a square plane, got " + s.str());
  DenseTensor out(s);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t ch = 0; ch < s.c; ++ch) {
      for (std::size_t r = 0; r < s.h; ++r) {
        for (std::size_t c = 0; c < s.w; ++c) {
          std::size_t sr = transpose ? c : r, sc = transpose ? r : c;
          if (flip_rows) sr = s.h - 1 - sr;
          if (flip_cols) sc = s.w - 1 - sc;
          out.at(b, ch, r, c) = x.at(b, ch, sr, sc);
        }
      }
    }
  }
  return out;
}

namespace {

DenseTensor crop(const DenseTensor& x, std::size_t top, std::size_t left, std::size_t p) {
  DenseTensor out(Shape{x.n(), x.c(), p, p});
  for (std::size_t b = 0; b < x.n(); ++b) {
    for (std::size_t ch = 0; ch < x.c(); ++ch) {
      for (std::size_t r = 0; r < p; ++r) {
        const float* src = x.plane(b, ch) + (top + r) * x.w() + left;
        std::copy(src, src + p, out.plane(b, ch) + r * p);
      }
    }
  }
  return out;
}

void check_patch(const DenseTensor& scene, const DenseTensor& mask, std::size_t patch) {
  if (scene.h() != mask.h() || scene.w() != mask.w() || mask.c() != 1) {
    throw DimensionError("scene " + scene.shape().str() + " and mask " + mask.shape().str() + " are not aligned");
  }
  if (patch == 0 || patch > std::min(scene.h(), scene.w())) {
    throw ArgumentError("patch " + std::to_string(patch) + " does not fit " + scene.shape().str());
  }
}

}  // namespace

Patch crop_transform(const DenseTensor& scene, const DenseTensor& mask, std::size_t patch, std::size_t top,
                     std::size_t left, unsigned transform) {
  check_patch(scene, mask, patch);
  if (top + patch > scene.h() || left + patch > scene.w()) throw ArgumentError("crop window leaves the scene");
  Patch p;
  p.top = top;
  p.left = left;
  p.transform = transform;
  p.scene = dihedral(crop(scene, top, left, patch), transform);
  p.mask = dihedral(crop(mask, top, left, patch), transform);
  return p;
}

Patch crop_augment(const DenseTensor& scene, const DenseTensor& mask, std::size_t patch, std::uint64_t seed) {
  check_patch(scene, mask, patch);
  std::mt19937_64 rng(seed);
  const std::size_t top = rng() % (scene.h() - patch + 1);
  const std::size_t left = rng() % (scene.w() - patch + 1);
  const auto t = static_cast<unsigned>(rng() % 8);
  return crop_transform(scene, mask, patch, top, left, t);
}

DenseTensor network_input(const DenseTensor& measurement, const CassiSystem& sys) {
  DenseTensor h = shift_back(measurement, sys);
  h *= measurement_gain(sys.n_wavelengths);
  const DenseTensor m = shift_mask(sys);
  DenseTensor mb(Shape{h.n(), m.c(), m.h(), m.w()});
  for (std::size_t b = 0; b < h.n(); ++b) std::copy(m.data().begin(), m.data().end(), mb.plane(b, 0));
  return concat_channels(h, mb);
}

}  // namespace bisr
