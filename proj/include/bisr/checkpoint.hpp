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

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bisr/network.hpp"

namespace bisr {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Keys: channels, n_wavelengths, binarize, ste, alpha, module_style, sr.
KeyValues config_entries(const NetworkConfig& cfg);
/// Unknown keys are ignored; missing keys keep their defaults.
NetworkConfig config_from_entries(const std::map<std::string, std::string>& kv);

/// "encoder,bottleneck,decoder", "none" or any subset.
std::string binarize_list(const NetworkConfig& cfg);
void apply_binarize_list(NetworkConfig& cfg, const std::string& list);

/// Writes `dir`/index.txt plus one .hst per parameter (exact float bits).
void save_checkpoint(const std::string& dir, Network<float>& net);
std::unique_ptr<Network<float>> load_checkpoint(const std::string& dir);

}  // namespace bisr
