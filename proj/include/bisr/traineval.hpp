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
#include <string>
#include <vector>

#include "bisr/cassi.hpp"
#include "bisr/network.hpp"

namespace bisr {

// ---------------------------------------------------------------------------
// Loss.

template <typename T>
struct LossResult {
  T loss = 0;
  Tensor<T> grad;  // d loss / d pred
};

inline constexpr double kLossFloor = 1e-12;

/// sqrt(mean((pred - target)^2)); the gradient divides by max(loss, 1e-12).
template <typename T>
LossResult<T> rmse_loss(const Tensor<T>& pred, const Tensor<T>& target);

// ---------------------------------------------------------------------------
// Optimizer.

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update. tanh sharpness parameters are clamped to
/// kMinAlpha afterwards. The first call sizes the state.
template <typename T>
void adam_step(std::vector<ParamRef<T>>& params, AdamState<T>& state, double lr, const AdamConfig& cfg = {});

/// lr_min + 0.5 (lr_max - lr_min)(1 + cos(pi t / total)).
double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min);

// ---------------------------------------------------------------------------
// Metrics. Images are (n, c, H, W); every (n, c) plane is scored separately
// and the scores are averaged.

inline constexpr double kPsnrCap = 100.0;
inline constexpr double kPsnrMseFloor = 1e-10;
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

double psnr(const DenseTensor& pred, const DenseTensor& target, double peak = 1.0);
/// Gaussian 11x11 (sigma 1.5) windows over the valid region; planes must be
/// at least 11x11.
double ssim(const DenseTensor& pred, const DenseTensor& target, double peak = 1.0);

// ---------------------------------------------------------------------------
// Training and evaluation.

struct TrainConfig {
  std::size_t steps = 300;
  std::size_t batch = 2;
  double lr_max = 4e-4;
  double lr_min = 1e-6;
  std::size_t patch = 48;
  std::uint64_t seed = 0;
  bool noise = true;
  std::size_t bit_depth = kDefaultBitDepth;
  std::size_t step = kDefaultStep;  // disperser shift d
  /// Random crop position and dihedral transform per sample.
  bool augment = true;

  /// Throws ConfigError.
  void validate() const;
};

struct Batch {
  DenseTensor input;   // (batch, 2N, p, p)
  DenseTensor target;  // (batch, N, p, p)
};

/// Deterministic in (scenes, mask, cfg, index): sample i of step `index`
/// picks a scene, crops and transforms it with its aligned mask, captures,
/// optionally adds shot noise, and shifts back.
Batch make_batch(const std::vector<DenseTensor>& scenes, const DenseTensor& mask, const TrainConfig& cfg,
                 std::size_t index);

struct StepRecord {
  std::size_t step = 0;
  double lr = 0;
  double loss = 0;
};

using History = std::vector<StepRecord>;

/// Runs cfg.steps Adam steps with a cosine schedule on RMSE.
History train(Network<float>& net, const TrainConfig& cfg, const std::vector<DenseTensor>& scenes,
              const DenseTensor& mask);

struct EvalRow {
  std::string scene;
  double psnr_db = 0;
  double ssim = 0;
};

struct EvalTable {
  std::vector<EvalRow> rows;
  EvalRow mean;  // scene = "mean"
};

/// Metrics of each prediction against its ground truth.
EvalTable score(const std::vector<std::string>& names, const std::vector<DenseTensor>& preds,
                const std::vector<DenseTensor>& targets);

/// Captures each scene with `mask`, reconstructs it and scores it.
EvalTable evaluate(Network<float>& net, const std::vector<std::string>& names, const std::vector<DenseTensor>& scenes,
                   const DenseTensor& mask, std::size_t step = kDefaultStep);

}  // namespace bisr
