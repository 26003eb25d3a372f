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

#include "bisr/network.hpp"

#include <cmath>

namespace bisr {

std::string module_style_name(ModuleStyle style) {
  return style == ModuleStyle::kNormal ? "normal" : "binarized";
}

ModuleStyle parse_module_style(const std::string& name) {
  if (name == "binarized") return ModuleStyle::kBinarized;
  if (name == "normal") return ModuleStyle::kNormal;
  throw ConfigError("unknown module style '" + name + "' (expected binarized or normal)");
}

const char* part_name(Part part) {
  switch (part) {
    case Part::kEmbedding: return "embedding";
    case Part::kEncoder: return "encoder";
    case Part::kBottleneck: return "bottleneck";
    case Part::kDecoder: return "decoder";
    case Part::kMapping: return "mapping";
  }
  return "?";
}

bool NetworkConfig::binarized(Part part) const {
  switch (part) {
    case Part::kEncoder: return binarize_encoder;
    case Part::kBottleneck: return binarize_bottleneck;
    case Part::kDecoder: return binarize_decoder;
    default: return false;
  }
}

void NetworkConfig::set_binarized(Part part, bool on) {
  switch (part) {
    case Part::kEncoder: binarize_encoder = on; break;
    case Part::kBottleneck: binarize_bottleneck = on; break;
    case Part::kDecoder: binarize_decoder = on; break;
    default:
      if (on) throw ConfigError(std::string(part_name(part)) + " is always full precision");
  }
}

void NetworkConfig::validate() const {
  if (channels < 4 || channels % 4 != 0) {
    throw ConfigError("channels must be a positive multiple of 4, got " + std::to_string(channels));
  }
  if (n_wavelengths == 0) throw ConfigError("n_wavelengths must be positive");
  if (ste.is_tanh() && !(ste.alpha >= kMinAlpha)) throw ConfigError("tanh sharpness below minimum");
}

std::uint64_t binarized_params(std::uint64_t params_f) {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(params_f) / kParamsDivisor));
}

std::uint64_t binarized_ops(std::uint64_t ops_f) {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(ops_f) / kOpsDivisor));
}

template <typename T>
ModulePtr<T> Network<T>::make_block(std::size_t ch, bool binarize, const BinarySettings& bs, std::mt19937_64& rng) {
  if (binarize) return std::make_unique<BinarizedBlock<T>>(ch, bs, rng);
  return std::make_unique<ConvBlock<T>>(ch, rng);
}

template <typename T>
ModulePtr<T> Network<T>::make_reshape(ReshapeKind kind, std::size_t in_ch, bool binarize, const BinarySettings& bs,
                                      std::mt19937_64& rng) {
  if (!binarize) return make_full_precision_module<T>(kind, in_ch, rng);
  if (cfg_.module_style == ModuleStyle::kNormal) return make_normal_module<T>(kind, in_ch, bs, rng);
  return std::make_unique<BinarizedReshape<T>>(kind, in_ch, bs, rng);
}

template <typename T>
Network<T>::Network(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t C = cfg_.channels, N = cfg_.n_wavelengths;
  const BinarySettings bs{cfg_.ste, cfg_.redistribution, BinaryMode::kHard};

  embedding_.add("conv_in", std::make_unique<Conv2dLayer<T>>(2 * N, C, 1, ConvGeometry{1, 0}, true, rng));
  embedding_.add("conv_feat", std::make_unique<Conv2dLayer<T>>(C, C, 3, ConvGeometry{1, 1}, false, rng));

  const bool be = cfg_.binarize_encoder, bb = cfg_.binarize_bottleneck, bd = cfg_.binarize_decoder;
  block1_ = make_block(C, be, bs, rng);
  down1_ = make_reshape(ReshapeKind::kDownsample, C, be, bs, rng);
  block2_ = make_block(2 * C, be, bs, rng);
  down2_ = make_reshape(ReshapeKind::kDownsample, 2 * C, be, bs, rng);

  bottleneck_ = make_block(4 * C, bb, bs, rng);

  up1_ = make_reshape(ReshapeKind::kUpsample, 4 * C, bd, bs, rng);
  fuse1_ = make_reshape(ReshapeKind::kFusionDown, 4 * C, bd, bs, rng);
  block3_ = make_block(2 * C, bd, bs, rng);
  up2_ = make_reshape(ReshapeKind::kUpsample, 2 * C, bd, bs, rng);
  fuse2_ = make_reshape(ReshapeKind::kFusionDown, 2 * C, bd, bs, rng);
  block4_ = make_block(C, bd, bs, rng);

  mapping_.add("conv_feat", std::make_unique<Conv2dLayer<T>>(C, C, 3, ConvGeometry{1, 1}, false, rng));
  mapping_.add("conv_out", std::make_unique<Conv2dLayer<T>>(C, N, 1, ConvGeometry{1, 0}, true, rng));
}

template <typename T>
void Network<T>::check_input(const Shape& s) const {
  if (s.c != 2 * cfg_.n_wavelengths) {
    throw DimensionError("network expects " + std::to_string(2 * cfg_.n_wavelengths) + " input channels, got " +
                         s.str());
  }
  if (s.n == 0 || s.h == 0 || s.w == 0 || s.h % 4 != 0 || s.w % 4 != 0) {
    throw DimensionError("network input needs nonzero spatial dims divisible by 4, got " + s.str());
  }
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input) {
  check_input(input.shape());
  cached_ = false;
  const Tensor<T> xs = embedding_.forward(input);
  const Tensor<T> e1 = block1_->forward(xs);
  const Tensor<T> e2 = block2_->forward(down1_->forward(e1));
  Tensor<T> h = bottleneck_->forward(down2_->forward(e2));
  h = block3_->forward(fuse1_->forward(concat_channels(up1_->forward(h), e2)));
  h = block4_->forward(fuse2_->forward(concat_channels(up2_->forward(h), e1)));
  h += xs;
  Tensor<T> out = mapping_.forward(h);
  input_shape_ = input.shape();
  cached_ = true;
  return out;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& h_shifted, const Tensor<T>& m_shifted) {
  const Shape hs = h_shifted.shape();
  const Shape ms = m_shifted.shape();
  if (hs != ms || hs.c != cfg_.n_wavelengths) {
    throw DimensionError("shifted measurement " + hs.str() + " and shifted mask " + ms.str() +
                         " must both be (n, " + std::to_string(cfg_.n_wavelengths) + ", H, W)");
  }
  return forward(concat_channels(h_shifted, m_shifted));
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_out) {
  if (!cached_) throw StateError("network backward needs a fresh forward pass");
  const Shape expect{input_shape_.n, cfg_.n_wavelengths, input_shape_.h, input_shape_.w};
  if (grad_out.shape() != expect) {
    throw DimensionError("output gradient " + grad_out.shape().str() + " does not match " + expect.str());
  }
  cached_ = false;
  const std::size_t C = cfg_.channels;
  const Tensor<T> g_sum = mapping_.backward(grad_out);

  Tensor<T> g = block4_->backward(g_sum);
  auto [g_up2, g_e1] = split_channels(fuse2_->backward(g), C);
  g = block3_->backward(up2_->backward(g_up2));
  auto [g_up1, g_e2] = split_channels(fuse1_->backward(g), 2 * C);
  g = bottleneck_->backward(up1_->backward(g_up1));

  g = down2_->backward(g);
  g += g_e2;
  g = down1_->backward(block2_->backward(g));
  g += g_e1;
  g = block1_->backward(g);
  g += g_sum;
  return embedding_.backward(g);
}

template <typename T>
std::vector<ParamRef<T>> Network<T>::parameters() {
  std::vector<ParamRef<T>> out;
  embedding_.collect("embedding.", out);
  block1_->collect("encoder.block1.", out);
  down1_->collect("encoder.down1.", out);
  block2_->collect("encoder.block2.", out);
  down2_->collect("encoder.down2.", out);
  bottleneck_->collect("bottleneck.block.", out);
  up1_->collect("decoder.up1.", out);
  fuse1_->collect("decoder.fuse1.", out);
  block3_->collect("decoder.block3.", out);
  up2_->collect("decoder.up2.", out);
  fuse2_->collect("decoder.fuse2.", out);
  block4_->collect("decoder.block4.", out);
  mapping_.collect("mapping.", out);
  return out;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : parameters()) p.grad->fill(T(0));
}

template <typename T>
void Network<T>::clamp_constrained() {
  for (auto& p : parameters()) {
    if (p.role != ParamRole::kSteAlpha) continue;
    for (auto& v : p.value->data()) v = std::max(v, static_cast<T>(kMinAlpha));
  }
}

template <typename T>
void Network<T>::set_mode(BinaryMode mode) {
  for (Module<T>* m : {static_cast<Module<T>*>(&embedding_), block1_.get(), down1_.get(), block2_.get(),
                       down2_.get(), bottleneck_.get(), up1_.get(), fuse1_.get(), block3_.get(), up2_.get(),
                       fuse2_.get(), block4_.get(), static_cast<Module<T>*>(&mapping_)}) {
    m->set_mode(mode);
  }
}

template <typename T>
Accounting Network<T>::count(std::size_t height, std::size_t width) const {
  const Shape in{1, 2 * cfg_.n_wavelengths, height, width};
  check_input(in);
  const std::size_t C = cfg_.channels;
  std::array<Cost, 5> cost{};
  auto& ce = cost[static_cast<std::size_t>(Part::kEncoder)];
  auto& cb = cost[static_cast<std::size_t>(Part::kBottleneck)];
  auto& cd = cost[static_cast<std::size_t>(Part::kDecoder)];

  const Shape xs = embedding_.account(in, cost[static_cast<std::size_t>(Part::kEmbedding)]);
  const Shape e1 = block1_->account(xs, ce);
  const Shape e2 = block2_->account(down1_->account(e1, ce), ce);
  Shape h = bottleneck_->account(down2_->account(e2, ce), cb);
  h = up1_->account(h, cd);
  h = block3_->account(fuse1_->account(Shape{h.n, h.c + e2.c, h.h, h.w}, cd), cd);
  h = up2_->account(h, cd);
  h = block4_->account(fuse2_->account(Shape{h.n, h.c + e1.c, h.h, h.w}, cd), cd);
  mapping_.account(Shape{1, C, height, width}, cost[static_cast<std::size_t>(Part::kMapping)]);

  Accounting acc;
  acc.height = height;
  acc.width = width;
  for (Part p : kAllParts) {
    const auto i = static_cast<std::size_t>(p);
    PartCost& pc = acc.parts[i];
    pc.part = p;
    pc.binarized = cfg_.binarized(p);
    pc.params_f = cost[i].params;
    pc.ops_f = cost[i].macs * kOpsPerMac;
    pc.params_b = binarized_params(pc.params_f);
    pc.ops_b = binarized_ops(pc.ops_f);
    acc.total_params += pc.params();
    acc.total_ops += pc.ops();
  }
  return acc;
}

template class Network<float>;
template class Network<double>;

}  // namespace bisr
