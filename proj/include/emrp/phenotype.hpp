// Copyright 2026 The emrp Authors.
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

#ifndef EMRP_PHENOTYPE_HPP_
#define EMRP_PHENOTYPE_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "emrp/genome.hpp"

namespace emrp {

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MessageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kKernelSize = 3;
inline constexpr int kPatchFreq = 512;
inline constexpr int kPatchTime = 64;
inline constexpr int kMaskOutputs = 2;  // vocal, accompaniment

struct TensorShape {
  int freq = kPatchFreq;
  int time = kPatchTime;
  int channels = 1;

  long long pixels() const { return static_cast<long long>(freq) * time; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

// Where the residual of a group comes from when its skip bit is set.
enum class ResidualSource : std::uint8_t {
  none,         // skip bit off
  group_input,  // input and output widths match
  first_conv,   // widths differ: first convolution output is added instead
};

std::string_view to_string(ResidualSource r);

// Two consecutive 3x3 convolutions at `channels` output channels.
struct ConvGroupSpec {
  int in_channels = 0;
  int channels = 0;
  ResidualSource residual = ResidualSource::none;
  Activation first = Activation::relu;
  Activation second = Activation::relu;

  friend bool operator==(const ConvGroupSpec&, const ConvGroupSpec&) = default;
};

struct PoolingLayerSpec {
  int pool_time = 1;
  int pool_freq = 1;
  ConvGroupSpec pcg;  // runs at the pooled resolution

  friend bool operator==(const PoolingLayerSpec&, const PoolingLayerSpec&) = default;
};

struct BlockSpec {
  int in_channels = 0;
  std::optional<ConvGroupSpec> cg;  // empty: block input passes straight through
  std::vector<PoolingLayerSpec> active_pls;
  int concat_width = 0;
  ConvGroupSpec block_pcg;

  // Width of the tensor feeding the pooling layers and the concatenation.
  int trunk_channels() const { return cg ? cg->channels : in_channels; }

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct SkipConnection {
  int source = 0;  // 1-based block index
  int dest = 0;

  friend bool operator==(const SkipConnection&, const SkipConnection&) = default;
};

struct MaskHead {
  int in_channels = 0;
  int out_channels = kMaskOutputs;

  friend bool operator==(const MaskHead&, const MaskHead&) = default;
};

struct ArchitectureSpec {
  TensorShape input{kPatchFreq, kPatchTime, 1};
  int fc_channels = 0;
  std::vector<BlockSpec> blocks;
  std::vector<SkipConnection> skips;  // element-wise addition into dest input
  MaskHead head;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

ArchitectureSpec build_architecture(const GeneRecord& record);
ArchitectureSpec build_architecture(const Genome& genome, const GenomeLayout& layout = {});

enum class LayerKind : std::uint8_t { conv, avg_pool, upsample, concat, skip_add, mask_head };

std::string_view to_string(LayerKind k);

struct LayerShape {
  std::string name;  // e.g. "b2.pl1.pcg.conv1"
  LayerKind kind = LayerKind::conv;
  TensorShape in;
  TensorShape out;
  int in_channels = 0;   // conv only
  int out_channels = 0;  // conv only
};

// Every layer in execution order with its input/output shape.
std::vector<LayerShape> propagate_shapes(const ArchitectureSpec& arch);

// Weights plus biases of every convolution.
std::uint64_t count_params(const ArchitectureSpec& arch);
std::uint64_t count_weights(const ArchitectureSpec& arch);
// 2*K*K*Cin*Cout*H*W multiply-adds per convolution, evaluated on one patch.
std::uint64_t count_flops(const ArchitectureSpec& arch);

// Versioned JSON description consumed by the separation worker.
inline constexpr const char* kArchitectureSchema = "emrp.architecture/1";

nlohmann::json to_architecture_message(const ArchitectureSpec& arch);
ArchitectureSpec parse_architecture_message(const nlohmann::json& message);

}  // namespace emrp

#endif  // EMRP_PHENOTYPE_HPP_
