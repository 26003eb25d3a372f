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

#include "bisr/modules.hpp"

namespace bisr {

std::string role_name(ParamRole role) {
  switch (role) {
    case ParamRole::kWeight: return "weight";
    case ParamRole::kBias: return "bias";
    case ParamRole::kRedistScale: return "redist_scale";
    case ParamRole::kRedistShift: return "redist_shift";
    case ParamRole::kSteAlpha: return "ste_alpha";
    case ParamRole::kRPReLUSlope: return "rprelu_slope";
    case ParamRole::kRPReLUShiftIn: return "rprelu_shift_in";
    case ParamRole::kRPReLUShiftOut: return "rprelu_shift_out";
  }
  return "?";
}

ParamRole parse_role(const std::string& name) {
  for (ParamRole r : {ParamRole::kWeight, ParamRole::kBias, ParamRole::kRedistScale, ParamRole::kRedistShift,
                      ParamRole::kSteAlpha, ParamRole::kRPReLUSlope, ParamRole::kRPReLUShiftIn,
                      ParamRole::kRPReLUShiftOut}) {
    if (role_name(r) == name) return r;
  }
  throw ArgumentError("unknown parameter role '" + name + "'");
}

// --------------------------------------------------------------------------- Conv2dLayer

template <typename T>
Conv2dLayer<T>::Conv2dLayer(std::size_t c_in, std::size_t c_out, std::size_t k, ConvGeometry geom, bool bias,
                            std::mt19937_64& rng)
    : geom_(geom),
      has_bias_(bias),
      weight_(uniform_fan_in<T>(Shape{c_out, c_in, k, k}, rng)),
      bias_(bias ? Tensor<T>(Shape{1, c_out, 1, 1}) : Tensor<T>()),
      grad_weight_(weight_.shape()),
      grad_bias_(bias_.shape()) {}

template <typename T>
Tensor<T> Conv2dLayer<T>::forward(const Tensor<T>& x) {
  input_ = x;
  cached_ = true;
  return conv2d(x, weight_, std::span<const T>(bias_.data()), geom_, T(0));
}

template <typename T>
Tensor<T> Conv2dLayer<T>::backward(const Tensor<T>& grad_out) {
  if (!cached_) throw StateError("conv backward without forward");
  grad_weight_ += conv2d_backward_weight(grad_out, input_, weight_.h(), geom_, T(0));
  if (has_bias_) {
    const auto sums = channel_sums(grad_out);
    for (std::size_t c = 0; c < sums.size(); ++c) grad_bias_[c] += sums[c];
  }
  cached_ = false;
  return conv2d_backward_input(grad_out, weight_, input_.shape(), geom_);
}

template <typename T>
void Conv2dLayer<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "weight", ParamRole::kWeight, &weight_, &grad_weight_});
  if (has_bias_) out.push_back({prefix + "bias", ParamRole::kBias, &bias_, &grad_bias_});
}

template <typename T>
Shape Conv2dLayer<T>::account(const Shape& in, Cost& cost) const {
  if (in.c != weight_.c()) {
    throw DimensionError("conv expects " + std::to_string(weight_.c()) + " channels, got " + in.str());
  }
  const std::size_t k = weight_.h();
  const Shape out{in.n, weight_.n(), conv_out_size(in.h, k, geom_.stride, geom_.pad),
                  conv_out_size(in.w, k, geom_.stride, geom_.pad)};
  cost.params += weight_.size() + bias_.size();
  cost.macs += weight_.size() * out.h * out.w;
  return out;
}

// --------------------------------------------------------------------------- ConvBlock

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : slope * x[i];
  return out;
}

namespace {

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& grad_out, const Tensor<T>& pre, T slope) {
  Tensor<T> out(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > T(0) ? grad_out[i] : slope * grad_out[i];
  return out;
}

}  // namespace

template <typename T>
ConvBlock<T>::ConvBlock(std::size_t channels, std::mt19937_64& rng)
    : conv_a_(channels, channels, 3, {1, 1}, true, rng),
      conv_b_(channels, channels, 3, {1, 1}, true, rng),
      point_a_(channels, kBlockExpansion * channels, 1, {1, 0}, true, rng),
      point_b_(kBlockExpansion * channels, channels, 1, {1, 0}, true, rng) {}

template <typename T>
Tensor<T> ConvBlock<T>::forward(const Tensor<T>& x) {
  const T slope = static_cast<T>(kBlockLeakySlope);
  pre_a_ = conv_a_.forward(x);
  Tensor<T> h = x + conv_b_.forward(leaky_relu(pre_a_, slope));
  pre_c_ = point_a_.forward(h);
  Tensor<T> out = point_b_.forward(leaky_relu(pre_c_, slope));
  out += h;
  return out;
}

template <typename T>
Tensor<T> ConvBlock<T>::backward(const Tensor<T>& grad_out) {
  const T slope = static_cast<T>(kBlockLeakySlope);
  Tensor<T> g_h = grad_out;
  g_h += point_a_.backward(leaky_relu_backward(point_b_.backward(grad_out), pre_c_, slope));
  Tensor<T> g_x = g_h;
  g_x += conv_a_.backward(leaky_relu_backward(conv_b_.backward(g_h), pre_a_, slope));
  return g_x;
}

template <typename T>
void ConvBlock<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  conv_a_.collect(prefix + "conv_a.", out);
  conv_b_.collect(prefix + "conv_b.", out);
  point_a_.collect(prefix + "point_a.", out);
  point_b_.collect(prefix + "point_b.", out);
}

template <typename T>
Shape ConvBlock<T>::account(const Shape& in, Cost& cost) const {
  Shape s = conv_b_.account(conv_a_.account(in, cost), cost);
  return point_b_.account(point_a_.account(s, cost), cost);
}

// --------------------------------------------------------------------------- BiSRConvLayer

template <typename T>
BiSRConvLayer<T>::BiSRConvLayer(std::size_t channels, const BinarySettings& settings, std::mt19937_64& rng)
    : settings_(settings),
      params_(BiSRConvParams<T>::init(channels, rng, settings.redistribute)),
      grads_(LayerGrads<T>::zeros_like(params_)) {}

template <typename T>
Tensor<T> BiSRConvLayer<T>::forward(const Tensor<T>& x) {
  return bisr_conv_forward(x, params_, settings_.ste, settings_.mode, cache_);
}

template <typename T>
Tensor<T> BiSRConvLayer<T>::backward(const Tensor<T>& grad_out) {
  LayerGrads<T> g = bisr_conv_backward(grad_out, cache_, settings_.ste);
  cache_.valid = false;
  grads_.accumulate(g);
  return std::move(g.input);
}

template <typename T>
void BiSRConvLayer<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  if (settings_.redistribute) {
    out.push_back({prefix + "k", ParamRole::kRedistScale, &params_.k, &grads_.k});
    out.push_back({prefix + "b", ParamRole::kRedistShift, &params_.b, &grads_.b});
  }
  if (settings_.ste.is_tanh()) out.push_back({prefix + "alpha", ParamRole::kSteAlpha, &params_.alpha, &grads_.alpha});
  out.push_back({prefix + "weight", ParamRole::kWeight, &params_.weight, &grads_.weight});
  out.push_back({prefix + "beta", ParamRole::kRPReLUSlope, &params_.beta, &grads_.beta});
  out.push_back({prefix + "gamma", ParamRole::kRPReLUShiftIn, &params_.gamma, &grads_.gamma});
  out.push_back({prefix + "zeta", ParamRole::kRPReLUShiftOut, &params_.zeta, &grads_.zeta});
}

template <typename T>
Shape BiSRConvLayer<T>::account(const Shape& in, Cost& cost) const {
  const std::size_t C = params_.channels();
  if (in.c != C) throw DimensionError("BiSR-Conv expects " + std::to_string(C) + " channels, got " + in.str());
  cost.params += params_.weight.size() + 3 * C;
  if (settings_.redistribute) cost.params += 2 * C;
  if (settings_.ste.is_tanh()) cost.params += 1;
  cost.macs += params_.weight.size() * in.h * in.w;
  return in;
}

// --------------------------------------------------------------------------- BinarizedBlock

template <typename T>
BinarizedBlock<T>::BinarizedBlock(std::size_t channels, const BinarySettings& settings, std::mt19937_64& rng)
    : first_(channels, settings, rng), second_(channels, settings, rng) {}

template <typename T>
Tensor<T> BinarizedBlock<T>::forward(const Tensor<T>& x) {
  return second_.forward(first_.forward(x));
}

template <typename T>
Tensor<T> BinarizedBlock<T>::backward(const Tensor<T>& grad_out) {
  return first_.backward(second_.backward(grad_out));
}

template <typename T>
void BinarizedBlock<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  first_.collect(prefix + "bisr_a.", out);
  second_.collect(prefix + "bisr_b.", out);
}

template <typename T>
Shape BinarizedBlock<T>::account(const Shape& in, Cost& cost) const {
  return second_.account(first_.account(in, cost), cost);
}

template <typename T>
void BinarizedBlock<T>::set_mode(BinaryMode mode) {
  first_.set_mode(mode);
  second_.set_mode(mode);
}

// --------------------------------------------------------------------------- BinarizedReshape

const char* reshape_name(ReshapeKind kind) {
  switch (kind) {
    case ReshapeKind::kDownsample: return "downsample";
    case ReshapeKind::kFusionUp: return "fusion_up";
    case ReshapeKind::kFusionDown: return "fusion_down";
    case ReshapeKind::kUpsample: return "upsample";
  }
  return "?";
}

namespace {

bool halves_channels(ReshapeKind kind) {
  return kind == ReshapeKind::kFusionDown || kind == ReshapeKind::kUpsample;
}

std::size_t branch_width(ReshapeKind kind, std::size_t in_channels) {
  if (halves_channels(kind)) {
    if (in_channels < 2 || in_channels % 2 != 0) {
      throw DimensionError(std::string(reshape_name(kind)) + " needs an even channel count, got " +
                           std::to_string(in_channels));
    }
    return in_channels / 2;
  }
  if (in_channels == 0) throw DimensionError(std::string(reshape_name(kind)) + " needs channels");
  return in_channels;
}

}  // namespace

template <typename T>
BinarizedReshape<T>::BinarizedReshape(ReshapeKind kind, std::size_t in_channels, const BinarySettings& settings,
                                      std::mt19937_64& rng)
    : kind_(kind),
      in_channels_(in_channels),
      first_(branch_width(kind, in_channels), settings, rng),
      second_(branch_width(kind, in_channels), settings, rng),
      branch_channels_(branch_width(kind, in_channels)) {}

template <typename T>
Shape BinarizedReshape<T>::check_input(const Shape& in) const {
  if (in.c != in_channels_) {
    throw DimensionError(std::string(reshape_name(kind_)) + " expects " + std::to_string(in_channels_) +
                         " channels, got " + in.str());
  }
  switch (kind_) {
    case ReshapeKind::kDownsample:
      if (in.h % 2 != 0 || in.w % 2 != 0) throw DimensionError("downsample needs even spatial dims, got " + in.str());
      return Shape{in.n, 2 * in.c, in.h / 2, in.w / 2};
    case ReshapeKind::kFusionUp:
      return Shape{in.n, 2 * in.c, in.h, in.w};
    case ReshapeKind::kFusionDown:
      return Shape{in.n, in.c / 2, in.h, in.w};
    case ReshapeKind::kUpsample:
      return Shape{in.n, in.c / 2, 2 * in.h, 2 * in.w};
  }
  return in;
}

template <typename T>
Tensor<T> BinarizedReshape<T>::forward(const Tensor<T>& x) {
  check_input(x.shape());
  switch (kind_) {
    case ReshapeKind::kDownsample: {
      const Tensor<T> pooled = avg_pool2x2(x);
      return concat_channels(first_.forward(pooled), second_.forward(pooled));
    }
    case ReshapeKind::kFusionUp:
      return concat_channels(first_.forward(x), second_.forward(x));
    case ReshapeKind::kFusionDown:
    case ReshapeKind::kUpsample: {
      const auto [a, b] = split_channels(kind_ == ReshapeKind::kUpsample ? bilinear_up2(x) : x, branch_channels_);
      Tensor<T> out = first_.forward(a);
      out += second_.forward(b);
      out *= T(0.5);
      return out;
    }
  }
  return x;
}

template <typename T>
Tensor<T> BinarizedReshape<T>::backward(const Tensor<T>& grad_out) {
  switch (kind_) {
    case ReshapeKind::kDownsample:
    case ReshapeKind::kFusionUp: {
      const auto [ga, gb] = split_channels(grad_out, branch_channels_);
      Tensor<T> g = first_.backward(ga);
      g += second_.backward(gb);
      return kind_ == ReshapeKind::kDownsample ? avg_pool2x2_backward(g) : g;
    }
    case ReshapeKind::kFusionDown:
    case ReshapeKind::kUpsample: {
      const Tensor<T> half = grad_out * T(0.5);
      Tensor<T> g = concat_channels(first_.backward(half), second_.backward(half));
      return kind_ == ReshapeKind::kUpsample ? bilinear_up2_backward(g) : g;
    }
  }
  return grad_out;
}

template <typename T>
void BinarizedReshape<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  first_.collect(prefix + "branch_a.", out);
  second_.collect(prefix + "branch_b.", out);
}

template <typename T>
Shape BinarizedReshape<T>::account(const Shape& in, Cost& cost) const {
  const Shape out = check_input(in);
  Shape branch_in{in.n, branch_channels_, in.h, in.w};
  if (kind_ == ReshapeKind::kDownsample) branch_in = Shape{in.n, in.c, in.h / 2, in.w / 2};
  if (kind_ == ReshapeKind::kUpsample) branch_in = Shape{in.n, branch_channels_, 2 * in.h, 2 * in.w};
  first_.account(branch_in, cost);
  second_.account(branch_in, cost);
  return out;
}

template <typename T>
void BinarizedReshape<T>::set_mode(BinaryMode mode) {
  first_.set_mode(mode);
  second_.set_mode(mode);
}

// --------------------------------------------------------------------------- VanillaBinaryConv

template <typename T>
VanillaBinaryConv<T>::VanillaBinaryConv(std::size_t c_in, std::size_t c_out, std::size_t k, ConvGeometry geom,
                                        bool upsample_first, const BinarySettings& settings, std::mt19937_64& rng)
    : geom_(geom),
      upsample_first_(upsample_first),
      settings_(settings),
      weight_(uniform_fan_in<T>(Shape{c_out, c_in, k, k}, rng)),
      alpha_(Shape{1, 1, 1, 1}, T(1)),
      grad_weight_(weight_.shape()),
      grad_alpha_(alpha_.shape()) {}

template <typename T>
Tensor<T> VanillaBinaryConv<T>::forward(const Tensor<T>& x) {
  const SteKind used =
      settings_.ste.is_tanh() ? SteKind::scaled_tanh(static_cast<double>(alpha_[0])) : settings_.ste;
  cached_ = true;
  return binary_conv_forward(upsample_first_ ? bilinear_up2(x) : x, weight_, used, settings_.mode, geom_, cache_);
}

template <typename T>
Tensor<T> VanillaBinaryConv<T>::backward(const Tensor<T>& grad_out) {
  if (!cached_) throw StateError("binary conv backward without forward");
  cached_ = false;
  auto g = binary_conv_backward(grad_out, cache_);
  grad_weight_ += g.weight;
  grad_alpha_[0] += g.alpha;
  return upsample_first_ ? bilinear_up2_backward(g.pre) : std::move(g.pre);
}

template <typename T>
void VanillaBinaryConv<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  if (settings_.ste.is_tanh()) out.push_back({prefix + "alpha", ParamRole::kSteAlpha, &alpha_, &grad_alpha_});
  out.push_back({prefix + "weight", ParamRole::kWeight, &weight_, &grad_weight_});
}

template <typename T>
Shape VanillaBinaryConv<T>::account(const Shape& in, Cost& cost) const {
  if (in.c != weight_.c()) {
    throw DimensionError("binary conv expects " + std::to_string(weight_.c()) + " channels, got " + in.str());
  }
  const Shape src = upsample_first_ ? Shape{in.n, in.c, 2 * in.h, 2 * in.w} : in;
  const std::size_t k = weight_.h();
  const Shape out{in.n, weight_.n(), conv_out_size(src.h, k, geom_.stride, geom_.pad),
                  conv_out_size(src.w, k, geom_.stride, geom_.pad)};
  cost.params += weight_.size() + (settings_.ste.is_tanh() ? 1 : 0);
  cost.macs += weight_.size() * out.h * out.w;
  return out;
}

template <typename T>
ModulePtr<T> make_normal_module(ReshapeKind kind, std::size_t in_channels, const BinarySettings& settings,
                                std::mt19937_64& rng) {
  const std::size_t half = branch_width(kind, in_channels);
  switch (kind) {
    case ReshapeKind::kDownsample:
      return std::make_unique<VanillaBinaryConv<T>>(in_channels, 2 * in_channels, 4, ConvGeometry{2, 1}, false,
                                                    settings, rng);
    case ReshapeKind::kFusionUp:
      return std::make_unique<VanillaBinaryConv<T>>(in_channels, 2 * in_channels, 1, ConvGeometry{1, 0}, false,
                                                    settings, rng);
    case ReshapeKind::kFusionDown:
      return std::make_unique<VanillaBinaryConv<T>>(in_channels, half, 1, ConvGeometry{1, 0}, false, settings, rng);
    case ReshapeKind::kUpsample:
      return std::make_unique<VanillaBinaryConv<T>>(in_channels, half, 3, ConvGeometry{1, 1}, true, settings, rng);
  }
  return nullptr;
}

template <typename T>
ModulePtr<T> make_full_precision_module(ReshapeKind kind, std::size_t in_channels, std::mt19937_64& rng) {
  const std::size_t half = branch_width(kind, in_channels);
  switch (kind) {
    case ReshapeKind::kDownsample:
      return std::make_unique<Conv2dLayer<T>>(in_channels, 2 * in_channels, 4, ConvGeometry{2, 1}, true, rng);
    case ReshapeKind::kFusionUp:
      return std::make_unique<Conv2dLayer<T>>(in_channels, 2 * in_channels, 1, ConvGeometry{1, 0}, true, rng);
    case ReshapeKind::kFusionDown:
      return std::make_unique<Conv2dLayer<T>>(in_channels, half, 1, ConvGeometry{1, 0}, true, rng);
    case ReshapeKind::kUpsample:
      return std::make_unique<Upsampled<T>>(
          std::make_unique<Conv2dLayer<T>>(in_channels, half, 3, ConvGeometry{1, 1}, true, rng));
  }
  return nullptr;
}

// --------------------------------------------------------------------------- Sequential

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x) {
  Tensor<T> h = x;
  for (auto& e : layers_) h = e.module->forward(h);
  return h;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->module->backward(g);
  return g;
}

template <typename T>
void Sequential<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  for (auto& e : layers_) e.module->collect(prefix + e.name + ".", out);
}

template <typename T>
Shape Sequential<T>::account(const Shape& in, Cost& cost) const {
  Shape s = in;
  for (const auto& e : layers_) s = e.module->account(s, cost);
  return s;
}

template <typename T>
void Sequential<T>::set_mode(BinaryMode mode) {
  for (auto& e : layers_) e.module->set_mode(mode);
}

#define BISR_INSTANTIATE_MODULES(T)                                                                          \
  template class Conv2dLayer<T>;                                                                             \
  template class ConvBlock<T>;                                                                               \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                                        \
  template class BiSRConvLayer<T>;                                                                           \
  template class BinarizedBlock<T>;                                                                          \
  template class BinarizedReshape<T>;                                                                        \
  template class VanillaBinaryConv<T>;                                                                       \
  template class Sequential<T>;                                                                              \
  template ModulePtr<T> make_normal_module(ReshapeKind, std::size_t, const BinarySettings&, std::mt19937_64&); \
  template ModulePtr<T> make_full_precision_module(ReshapeKind, std::size_t, std::mt19937_64&);

BISR_INSTANTIATE_MODULES(float)
BISR_INSTANTIATE_MODULES(double)

#undef BISR_INSTANTIATE_MODULES

}  // namespace bisr
