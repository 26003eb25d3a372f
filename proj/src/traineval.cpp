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

#include "bisr/traineval.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace bisr {

template <typename T>
LossResult<T> rmse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("loss shapes differ: " + pred.shape().str() + " vs " + target.shape().str());
  }
  if (pred.empty()) throw DimensionError("loss of an empty tensor");
  double sq = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    sq += d * d;
  }
  const double n = static_cast<double>(pred.size());
  const double loss = std::sqrt(sq / n);
  const double denom = n * std::max(loss, kLossFloor);
  LossResult<T> out{static_cast<T>(loss), Tensor<T>(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out.grad[i] = static_cast<T>((static_cast<double>(pred[i]) - static_cast<double>(target[i])) / denom);
  }
  return out;
}

template <typename T>
void adam_step(std::vector<ParamRef<T>>& params, AdamState<T>& state, double lr, const AdamConfig& cfg) {
  if (state.m.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value->shape());
      state.v.emplace_back(p.value->shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("optimizer holds " + std::to_string(state.m.size()) + " moments for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params[i].value->shape();
    if (params[i].grad->shape() != s || state.m[i].shape() != s) {
      throw DimensionError("parameter " + params[i].name + " " + s.str() + " does not match its gradient or moments");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = *params[i].value;
    const auto& grad = *params[i].grad;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      const double mj = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      const double vj = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double update = lr * (mj / c1) / (std::sqrt(vj / c2) + cfg.eps);
      value[j] = static_cast<T>(static_cast<double>(value[j]) - update);
    }
    if (params[i].role == ParamRole::kSteAlpha) {
      for (auto& a : value.data()) a = std::max(a, static_cast<T>(kMinAlpha));
    }
  }
}

double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min) {
  if (t > total) throw ArgumentError("schedule step " + std::to_string(t) + " past total " + std::to_string(total));
  if (total == 0) return lr_max;
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

namespace {

void check_pair(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("metric shapes differ: " + a.shape().str() + " vs " + b.shape().str());
  if (a.empty()) throw DimensionError("metric of an empty tensor");
}

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWindow);
  const double mid = static_cast<double>(kSsimWindow / 2);
  double sum = 0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - mid;
    g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

double ssim_plane(const float* a, const float* b, std::size_t h, std::size_t w, double peak,
                  const std::vector<double>& g) {
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const std::size_t K = kSsimWindow;
  double total = 0;
  for (std::size_t y = 0; y + K <= h; ++y) {
    for (std::size_t x = 0; x + K <= w; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
          const double wt = g[i] * g[j];
          const double va = a[(y + i) * w + x + j], vb = b[(y + i) * w + x + j];
          ma += wt * va;
          mb += wt * vb;
          saa += wt * va * va;
          sbb += wt * vb * vb;
          sab += wt * va * vb;
        }
      }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return total / static_cast<double>((h - K + 1) * (w - K + 1));
}

}  // namespace

double psnr(const DenseTensor& pred, const DenseTensor& target, double peak) {
  check_pair(pred, target);
  const std::size_t planes = pred.n() * pred.c(), area = pred.shape().plane();
  double total = 0;
  for (std::size_t p = 0; p < planes; ++p) {
    const float* a = pred.data().data() + p * area;
    const float* b = target.data().data() + p * area;
    double sq = 0;
    for (std::size_t i = 0; i < area; ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      sq += d * d;
    }
    const double mse = sq / static_cast<double>(area);
    total += mse < kPsnrMseFloor ? kPsnrCap : 10.0 * std::log10(peak * peak / mse);
  }
  return total / static_cast<double>(planes);
}

double ssim(const DenseTensor& pred, const DenseTensor& target, double peak) {
  check_pair(pred, target);
  if (pred.h() < kSsimWindow || pred.w() < kSsimWindow) {
    throw DimensionError("ssim needs planes of at least 11x11, got " + pred.shape().str());
  }
  const auto g = gaussian_window();
  const std::size_t planes = pred.n() * pred.c(), area = pred.shape().plane();
  double total = 0;
  for (std::size_t p = 0; p < planes; ++p) {
    total += ssim_plane(pred.data().data() + p * area, target.data().data() + p * area, pred.h(), pred.w(), peak, g);
  }
  return total / static_cast<double>(planes);
}

void TrainConfig::validate() const {
  if (batch == 0) throw ConfigError("batch must be at least 1");
  if (!(lr_min >= 0) || !(lr_min <= lr_max)) throw ConfigError("need 0 <= lr_min <= lr_max");
  if (patch == 0 || patch % 4 != 0) throw ConfigError("patch must be a positive multiple of 4");
  if (bit_depth == 0 || bit_depth > 24) throw ConfigError("bit depth must be in [1, 24]");
}

Batch make_batch(const std::vector<DenseTensor>& scenes, const DenseTensor& mask, const TrainConfig& cfg,
                 std::size_t index) {
  if (scenes.empty()) throw ArgumentError("training needs at least one scene");
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  std::mt19937_64 rng(seq);
  const std::size_t N = scenes.front().c();
  const std::size_t p = cfg.patch;
  Batch out{DenseTensor(Shape{cfg.batch, 2 * N, p, p}), DenseTensor(Shape{cfg.batch, N, p, p})};
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    const DenseTensor& scene = scenes[rng() % scenes.size()];
    if (scene.c() != N || scene.n() != 1) throw DimensionError("training scenes must be (1, N, H, W)");
    const std::uint64_t crop_seed = rng();
    const std::uint64_t noise_seed = rng();
    Patch patch = cfg.augment ? crop_augment(scene, mask, p, crop_seed) : crop_transform(scene, mask, p, 0, 0, 0);
    CassiSystem sys{std::move(patch.mask), cfg.step, N};
    DenseTensor y = forward_capture(patch.scene, sys);
    if (cfg.noise) y = add_shot_noise(y, cfg.bit_depth, noise_seed);
    const DenseTensor in = network_input(y, sys);
    std::copy(in.data().begin(), in.data().end(), out.input.plane(b, 0));
    std::copy(patch.scene.data().begin(), patch.scene.data().end(), out.target.plane(b, 0));
  }
  return out;
}

History train(Network<float>& net, const TrainConfig& cfg, const std::vector<DenseTensor>& scenes,
              const DenseTensor& mask) {
  cfg.validate();
  if (!scenes.empty() && scenes.front().c() != net.config().n_wavelengths) {
    throw DimensionError("scenes have " + std::to_string(scenes.front().c()) + " bands, network expects " +
                         std::to_string(net.config().n_wavelengths));
  }
  net.set_mode(BinaryMode::kHard);
  auto params = net.parameters();
  AdamState<float> state;
  History history;
  history.reserve(cfg.steps);
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const Batch batch = make_batch(scenes, mask, cfg, t);
    const double lr = cosine_lr(t, cfg.steps, cfg.lr_max, cfg.lr_min);
    net.zero_grad();
    const auto loss = rmse_loss(net.forward(batch.input), batch.target);
    net.backward(loss.grad);
    adam_step(params, state, lr);
    history.push_back({t, lr, static_cast<double>(loss.loss)});
  }
  return history;
}

EvalTable score(const std::vector<std::string>& names, const std::vector<DenseTensor>& preds,
                const std::vector<DenseTensor>& targets) {
  if (names.size() != preds.size() || preds.size() != targets.size()) {
    throw ArgumentError("score needs one name, prediction and target per scene");
  }
  EvalTable table;
  table.mean.scene = "mean";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EvalRow row{names[i], psnr(preds[i], targets[i]), ssim(preds[i], targets[i])};
    table.mean.psnr_db += row.psnr_db;
    table.mean.ssim += row.ssim;
    table.rows.push_back(std::move(row));
  }
  if (!table.rows.empty()) {
    table.mean.psnr_db /= static_cast<double>(table.rows.size());
    table.mean.ssim /= static_cast<double>(table.rows.size());
  }
  return table;
}

EvalTable evaluate(Network<float>& net, const std::vector<std::string>& names, const std::vector<DenseTensor>& scenes,
                   const DenseTensor& mask, std::size_t step) {
  net.set_mode(BinaryMode::kHard);
  std::vector<DenseTensor> preds;
  preds.reserve(scenes.size());
  for (const auto& scene : scenes) {
    const CassiSystem sys{mask, step, scene.c()};
    preds.push_back(net.forward(network_input(forward_capture(scene, sys), sys)));
  }
  return score(names, preds, scenes);
}

template LossResult<float> rmse_loss(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> rmse_loss(const Tensor<double>&, const Tensor<double>&);
template void adam_step(std::vector<ParamRef<float>>&, AdamState<float>&, double, const AdamConfig&);
template void adam_step(std::vector<ParamRef<double>>&, AdamState<double>&, double, const AdamConfig&);

}  // namespace bisr
