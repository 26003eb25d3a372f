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

#pragma once

#include <cstdint>

#include "bisr/tensor.hpp"

namespace bisr {

inline constexpr std::size_t kDefaultStep = 2;
inline constexpr std::size_t kDefaultBitDepth = 11;

/// Single-disperser CASSI. `mask` is (1, 1, H, W) with values in [0, 1].
struct CassiSystem {
  DenseTensor mask;
  std::size_t step = kDefaultStep;
  std::size_t n_wavelengths = 28;

  std::size_t height() const { return mask.h(); }
  std::size_t width() const { return mask.w(); }
  std::size_t measurement_width() const { return width() + step * (n_wavelengths - 1); }
  /// Throws DimensionError / DomainError.
  void validate() const;
};

/// Scene cubes are (n, N, H, W); measurements (n, 1, H, W + d(N - 1)).
/// Band b is modulated by the mask, shifted right by d*b and summed.
DenseTensor forward_capture(const DenseTensor& scene, const CassiSystem& sys);

/// Channel b of the result is columns [d*b, d*b + W) of the measurement.
DenseTensor shift_back(const DenseTensor& measurement, const CassiSystem& sys);

/// (1, N, H, W) mask cube aligned with shift_back's channels.
DenseTensor shift_mask(const CassiSystem& sys);

/// Scales to [0, 2^bits - 1] by the measurement's own maximum, draws a
/// Poisson count per pixel, scales back.
DenseTensor add_shot_noise(const DenseTensor& measurement, std::size_t bit_depth, std::uint64_t seed);

/// Smooth synthetic cube (1, N, H, W) in [0, 1].
DenseTensor synth_scene(std::uint64_t seed, std::size_t height, std::size_t width, std::size_t n_wavelengths);
/// Bernoulli(0.5) binary mask (1, 1, H, W).
DenseTensor random_mask(std::uint64_t seed, std::size_t height, std::size_t width);

/// Element `t` in [0, 8) of the square's symmetry group: bit 0 flips rows,
/// bit 1 flips columns, then bit 2 transposes.
DenseTensor dihedral(const DenseTensor& x, unsigned t);

struct Patch {
  DenseTensor scene;  // (1, N, p, p)
  DenseTensor mask;   // (1, 1, p, p)
  std::size_t top = 0, left = 0;
  unsigned transform = 0;
};

/// Aligned random crop then one shared random dihedral transform.
Patch crop_augment(const DenseTensor& scene, const DenseTensor& mask, std::size_t patch, std::uint64_t seed);
/// Same crop/transform with explicit choices.
Patch crop_transform(const DenseTensor& scene, const DenseTensor& mask, std::size_t patch, std::size_t top,
                     std::size_t left, unsigned transform);

/// Gain applied to the shifted measurement before it enters the network;
/// brings the sum over N bands back to the scale of one band.
inline float measurement_gain(std::size_t n_wavelengths) { return 2.0f / static_cast<float>(n_wavelengths); }

/// (n, 2N, H, W): gain * shift_back(measurement) concatenated with shift_mask.
DenseTensor network_input(const DenseTensor& measurement, const CassiSystem& sys);

}  // namespace bisr
