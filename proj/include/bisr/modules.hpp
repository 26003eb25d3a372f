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

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "bisr/layers.hpp"

namespace bisr {

enum class ParamRole {
  kWeight,
  kBias,
  kRedistScale,
  kRedistShift,
  kSteAlpha,
  kRPReLUSlope,
  kRPReLUShiftIn,
  kRPReLUShiftOut,
};

std::string role_name(ParamRole role);
ParamRole parse_role(const std::string& name);

/// Non-owning handle on one learnable tensor and its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  ParamRole role;
  Tensor<T>* value;
  Tensor<T>* grad;
};

/// Learnable real values and convolution multiply-accumulates.
struct Cost {
  std::size_t params = 0;
  std::size_t macs = 0;

  Cost& operator+=(const Cost& o) {
    params += o.params;
    macs += o.macs;
    return *this;
  }
};

/// Layer with an explicit reverse pass. forward() caches what backward()
/// needs; backward() accumulates parameter gradients and returns the input
/// gradient. Parameters must not change between a forward and its backward.
template <typename T>
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) = 0;
  /// Output shape for input `in`; adds this module's cost.
  virtual Shape account(const Shape& in, Cost& cost) const = 0;
  virtual void set_mode(BinaryMode) {}
};

template <typename T>
using ModulePtr = std::unique_ptr<Module<T>>;

/// Binarization settings shared by every 1-bit layer of a network.
struct BinarySettings {
  SteKind ste = SteKind::scaled_tanh(1.0);
  bool redistribute = true;
  BinaryMode mode = BinaryMode::kHard;
};

// ---------------------------------------------------------------------------
// Full-precision layers.

template <typename T>
class Conv2dLayer final : public Module<T> {
 public:
  Conv2dLayer(std::size_t c_in, std::size_t c_out, std::size_t k, ConvGeometry geom, bool bias, std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  Shape account(const Shape& in, Cost& cost) const override;

  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }

 private:
  ConvGeometry geom_;
  bool has_bias_;
  Tensor<T> weight_, bias_;
  Tensor<T> grad_weight_, grad_bias_;
  Tensor<T> input_;
  bool cached_ = false;
};

inline constexpr double kBlockLeakySlope = 0.2;
inline constexpr std::size_t kBlockExpansion = 2;

/// Base-model convolutional block:
///   h = x + conv3x3(act(conv3x3(x)))
///   out = h + conv1x1(act(conv1x1_expand(h)))
/// with act a leaky rectifier of slope 0.2 and the pointwise pair expanding
/// to kBlockExpansion * C channels. Channel preserving.
template <typename T>
class ConvBlock final : public Module<T> {
 public:
  ConvBlock(std::size_t channels, std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  Shape account(const Shape& in, Cost& cost) const override;

  std::vector<Conv2dLayer<T>*> convs() { return {&conv_a_, &conv_b_, &point_a_, &point_b_}; }

 private:
  Conv2dLayer<T> conv_a_, conv_b_, point_a_, point_b_;
  Tensor<T> pre_a_, pre_c_;
};

/// Leaky rectifier used inside ConvBlock, exposed for tests.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);

// ---------------------------------------------------------------------------
// Binarized layers.

template <typename T>
class BiSRConvLayer final : public Module<T> {
 public:
  BiSRConvLayer(std::size_t channels, const BinarySettings& settings, std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  Shape account(const Shape& in, Cost& cost) const override;
  void set_mode(BinaryMode mode) override { settings_.mode = mode; }

  BiSRConvParams<T>& params() { return params_; }
  const BiSRConvParams<T>& params() const { return params_; }

 private:
  BinarySettings settings_;
  BiSRConvParams<T> params_;
  LayerGrads<T> grads_;
  BiSRConvCache<T> cache_;
};

/// Two BiSR-Convs in sequence; the binarized counterpart of ConvBlock.
template <typename T>
class BinarizedBlock final : public Module<T> {
 public:
  BinarizedBlock(std::size_t channels, const BinarySettings& settings, std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  Shape account(const Shape& in, Cost& cost) const override;
  void set_mode(BinaryMode mode) override;

  BiSRConvLayer<T>& first() { return first_; }
  BiSRConvLayer<T>& second() { return second_; }

 private:
  BiSRConvLayer<T> first_, second_;
};

enum class ReshapeKind {
  kDownsample,  // C -> 2C, H/2 x W/2: average pool, two BiSR-Convs, concat
  kFusionUp,    // C -> 2C, same size: two BiSR-Convs, concat
  kFusionDown,  // 2C -> C, same size: split, one BiSR-Conv per half, average
  kUpsample,    // 2C -> C, 2H x 2W: bilinear, then fusion down
};

const char* reshape_name(ReshapeKind kind);

/// The four dimension-matching binarized modules. Each BiSR-Conv sees an
/// input and output of the same shape, so its identity path carries the
/// full-precision signal through the module; with zero weights the module
/// reduces to pooling/upsampling/concat/split/average of its input.
template <typename T>
class BinarizedReshape final : public Module<T> {
 public:
  /// `in_channels` is the module's input channel count.
  BinarizedReshape(ReshapeKind kind, std::size_t in_channels, const BinarySettings& settings, std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  Shape account(const Shape& in, Cost& cost) const override;
  void set_mode(BinaryMode mode) override;

  ReshapeKind kind() const { return kind_; }
  BiSRConvLayer<T>& branch(std::size_t i) { return i == 0 ? first_ : second_; }

 private:
  Shape check_input(const Shape& in) const;

  ReshapeKind kind_;
  std::size_t in_channels_;
  BiSRConvLayer<T> first_, second_;
  std::size_t branch_channels_;
};

/// Plain 1-bit convolution: Sign then a scaled XNOR/popcount convolution,
/// with no redistribution, activation or identity path. Building block of
/// the "normal" modules used by the baseline ablation.
template <typename T>
class VanillaBinaryConv final : public Module<T> {
 public:
  VanillaBinaryConv(std::size_t c_in, std::size_t c_out, std::size_t k, ConvGeometry geom, bool upsample_first,
                    const BinarySettings& settings, std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  Shape account(const Shape& in, Cost& cost) const override;
  void set_mode(BinaryMode mode) override { settings_.mode = mode; }

  Tensor<T>& weight() { return weight_; }

 private:
  ConvGeometry geom_;
  bool upsample_first_;
  BinarySettings settings_;
  Tensor<T> weight_, alpha_;
  Tensor<T> grad_weight_, grad_alpha_;
  BinaryConvCache<T> cache_;
  bool cached_ = false;
};

/// Normal module counterparts: strided 1-bit conv4x4 (downsample), 1-bit
/// conv1x1 (fusion up/down), bilinear + 1-bit conv3x3 (upsample).
template <typename T>
ModulePtr<T> make_normal_module(ReshapeKind kind, std::size_t in_channels, const BinarySettings& settings,
                                std::mt19937_64& rng);

/// Full-precision counterparts used by the base model: strided conv4x4,
/// conv1x1, bilinear + conv3x3.
template <typename T>
ModulePtr<T> make_full_precision_module(ReshapeKind kind, std::size_t in_channels, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Composition.

template <typename T>
class Sequential final : public Module<T> {
 public:
  Sequential() = default;
  void add(std::string name, ModulePtr<T> m) { layers_.push_back({std::move(name), std::move(m)}); }

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  Shape account(const Shape& in, Cost& cost) const override;
  void set_mode(BinaryMode mode) override;

  std::size_t size() const { return layers_.size(); }
  Module<T>& at(std::size_t i) { return *layers_[i].module; }

 private:
  struct Entry {
    std::string name;
    ModulePtr<T> module;
  };
  std::vector<Entry> layers_;
};

/// Bilinear 2x upscale followed by an inner module.
template <typename T>
class Upsampled final : public Module<T> {
 public:
  explicit Upsampled(ModulePtr<T> inner) : inner_(std::move(inner)) {}

  Tensor<T> forward(const Tensor<T>& x) override { return inner_->forward(bilinear_up2(x)); }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    return bilinear_up2_backward(inner_->backward(grad_out));
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) override { inner_->collect(prefix, out); }
  Shape account(const Shape& in, Cost& cost) const override {
    return inner_->account(Shape{in.n, in.c, 2 * in.h, 2 * in.w}, cost);
  }
  void set_mode(BinaryMode mode) override { inner_->set_mode(mode); }

 private:
  ModulePtr<T> inner_;
};

}  // namespace bisr
