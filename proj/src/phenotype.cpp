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

#include "emrp/phenotype.hpp"

#include <fmt/format.h>

namespace emrp {

namespace {

ConvGroupSpec make_group(int in_channels, int channels, const ConvGroupGene& gene) {
  ConvGroupSpec g;
  g.in_channels = in_channels;
  g.channels = channels;
  g.first = gene.first;
  g.second = gene.second;
  if (gene.skip) {
    g.residual = in_channels == channels ? ResidualSource::group_input : ResidualSource::first_conv;
  }
  return g;
}

void append_group(std::vector<LayerShape>& out, const std::string& prefix,
                  const ConvGroupSpec& g, TensorShape in) {
  TensorShape mid{in.freq, in.time, g.channels};
  out.push_back({prefix + ".conv1", LayerKind::conv, in, mid, g.in_channels, g.channels});
  out.push_back({prefix + ".conv2", LayerKind::conv, mid, mid, g.channels, g.channels});
}

}  // namespace

std::string_view to_string(ResidualSource r) {
  switch (r) {
    case ResidualSource::none: return "none";
    case ResidualSource::group_input: return "group_input";
    case ResidualSource::first_conv: return "first_conv";
  }
  return "none";
}

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::avg_pool: return "avg_pool";
    case LayerKind::upsample: return "upsample";
    case LayerKind::concat: return "concat";
    case LayerKind::skip_add: return "skip_add";
    case LayerKind::mask_head: return "mask_head";
  }
  return "conv";
}

ArchitectureSpec build_architecture(const GeneRecord& record) {
  ArchitectureSpec arch;
  arch.fc_channels = record.fc_channels;

  const std::size_t n = record.blocks.size();
  for (std::size_t dest = 2; dest <= n; ++dest) {
    for (std::size_t source = 1; source < dest; ++source) {
      if (record.skip(source, dest)) {
        arch.skips.push_back({static_cast<int>(source), static_cast<int>(dest)});
      }
    }
  }

  int in_channels = arch.input.channels;
  for (const BlockGene& gene : record.blocks) {
    BlockSpec block;
    block.in_channels = in_channels;
    if (gene.has_cg()) block.cg = make_group(in_channels, gene.cg_channels, gene.cg);

    const int trunk = block.trunk_channels();
    block.concat_width = trunk;
    for (const PoolingLayerGene& pl : gene.pls) {
      if (pl.dormant()) continue;
      block.active_pls.push_back({pl.pool_time, pl.pool_freq, make_group(trunk, pl.channels, pl.pcg)});
      block.concat_width += pl.channels;
    }
    block.block_pcg = make_group(block.concat_width, record.fc_channels, gene.pcg);
    arch.blocks.push_back(std::move(block));
    in_channels = record.fc_channels;
  }
  arch.head.in_channels = record.fc_channels;
  return arch;
}

ArchitectureSpec build_architecture(const Genome& genome, const GenomeLayout& layout) {
  return build_architecture(decode_genome(genome, layout));
}

std::vector<LayerShape> propagate_shapes(const ArchitectureSpec& arch) {
  std::vector<LayerShape> out;
  const TensorShape full = arch.input;
  TensorShape current = arch.input;

  for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
    const BlockSpec& block = arch.blocks[b];
    const int index = static_cast<int>(b) + 1;
    const std::string prefix = fmt::format("b{}", index);

    if (current.channels != block.in_channels) {
      throw ShapeError(fmt::format("{} expects {} input channels, got {}", prefix,
                                   block.in_channels, current.channels));
    }
    for (const SkipConnection& s : arch.skips) {
      if (s.dest != index) continue;
      out.push_back({fmt::format("{}.skip_from_b{}", prefix, s.source), LayerKind::skip_add,
                     current, current, 0, 0});
    }

    TensorShape trunk = current;
    if (block.cg) {
      append_group(out, prefix + ".cg", *block.cg, current);
      trunk.channels = block.cg->channels;
    }

    for (std::size_t j = 0; j < block.active_pls.size(); ++j) {
      const PoolingLayerSpec& pl = block.active_pls[j];
      const std::string pl_prefix = fmt::format("{}.pl{}", prefix, j + 1);
      if (pl.pool_freq <= 0 || pl.pool_time <= 0 || trunk.freq % pl.pool_freq != 0 ||
          trunk.time % pl.pool_time != 0) {
        throw ShapeError(fmt::format("{}: pool {}x{} (time x freq) does not divide {}x{}",
                                     pl_prefix, pl.pool_time, pl.pool_freq, trunk.time,
                                     trunk.freq));
      }
      TensorShape pooled{trunk.freq / pl.pool_freq, trunk.time / pl.pool_time, trunk.channels};
      out.push_back({pl_prefix + ".pool", LayerKind::avg_pool, trunk, pooled, 0, 0});
      append_group(out, pl_prefix + ".pcg", pl.pcg, pooled);
      TensorShape up{trunk.freq, trunk.time, pl.pcg.channels};
      out.push_back({pl_prefix + ".upsample", LayerKind::upsample,
                     {pooled.freq, pooled.time, pl.pcg.channels}, up, 0, 0});
    }

    TensorShape concat{trunk.freq, trunk.time, block.concat_width};
    out.push_back({prefix + ".concat", LayerKind::concat, trunk, concat, 0, 0});
    append_group(out, prefix + ".pcg", block.block_pcg, concat);
    current = {trunk.freq, trunk.time, block.block_pcg.channels};
  }

  TensorShape mask{full.freq, full.time, arch.head.out_channels};
  out.push_back({"mask_head", LayerKind::mask_head, current, mask, arch.head.in_channels,
                 arch.head.out_channels});
  return out;
}

namespace {

template <typename F>
std::uint64_t sum_convs(const ArchitectureSpec& arch, F&& per_conv) {
  std::uint64_t total = 0;
  for (const LayerShape& l : propagate_shapes(arch)) {
    if (l.kind == LayerKind::conv || l.kind == LayerKind::mask_head) total += per_conv(l);
  }
  return total;
}

std::uint64_t conv_weights(const LayerShape& l) {
  return std::uint64_t{kKernelSize} * kKernelSize * static_cast<std::uint64_t>(l.in_channels) *
         static_cast<std::uint64_t>(l.out_channels);
}

}  // namespace

std::uint64_t count_weights(const ArchitectureSpec& arch) {
  return sum_convs(arch, conv_weights);
}

std::uint64_t count_params(const ArchitectureSpec& arch) {
  return sum_convs(arch, [](const LayerShape& l) {
    return conv_weights(l) + static_cast<std::uint64_t>(l.out_channels);
  });
}

std::uint64_t count_flops(const ArchitectureSpec& arch) {
  return sum_convs(arch, [](const LayerShape& l) {
    return 2 * conv_weights(l) * static_cast<std::uint64_t>(l.out.pixels());
  });
}

// Architecture message

namespace {

using nlohmann::json;

json shape_json(const TensorShape& s) {
  return {{"freq", s.freq}, {"time", s.time}, {"channels", s.channels}};
}

TensorShape shape_from(const json& j) {
  return {j.at("freq").get<int>(), j.at("time").get<int>(), j.at("channels").get<int>()};
}

json group_json(const ConvGroupSpec& g) {
  return {{"in_channels", g.in_channels},
          {"channels", g.channels},
          {"activations", {std::string(to_string(g.first)), std::string(to_string(g.second))}},
          {"residual", std::string(to_string(g.residual))}};
}

Activation activation_from(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw MessageError(fmt::format("unknown activation '{}'", s));
}

ConvGroupSpec group_from(const json& j) {
  ConvGroupSpec g;
  g.in_channels = j.at("in_channels").get<int>();
  g.channels = j.at("channels").get<int>();
  const auto& acts = j.at("activations");
  if (!acts.is_array() || acts.size() != 2) throw MessageError("group needs two activations");
  g.first = activation_from(acts[0]);
  g.second = activation_from(acts[1]);
  const auto r = j.at("residual").get<std::string>();
  if (r == "none") {
    g.residual = ResidualSource::none;
  } else if (r == "group_input") {
    g.residual = ResidualSource::group_input;
  } else if (r == "first_conv") {
    g.residual = ResidualSource::first_conv;
  } else {
    throw MessageError(fmt::format("unknown residual '{}'", r));
  }
  return g;
}

}  // namespace

json to_architecture_message(const ArchitectureSpec& arch) {
  json blocks = json::array();
  TensorShape trunk_shape = arch.input;
  for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
    const BlockSpec& block = arch.blocks[b];
    json pls = json::array();
    for (const PoolingLayerSpec& pl : block.active_pls) {
      pls.push_back({{"pool_time", pl.pool_time},
                     {"pool_freq", pl.pool_freq},
                     {"pooled_shape", shape_json({trunk_shape.freq / pl.pool_freq,
                                                  trunk_shape.time / pl.pool_time,
                                                  block.trunk_channels()})},
                     {"pcg", group_json(pl.pcg)}});
    }
    blocks.push_back({{"index", b + 1},
                      {"in_channels", block.in_channels},
                      {"cg", block.cg ? group_json(*block.cg) : json(nullptr)},
                      {"pooling_layers", std::move(pls)},
                      {"concat_width", block.concat_width},
                      {"pcg", group_json(block.block_pcg)}});
  }
  json skips = json::array();
  for (const SkipConnection& s : arch.skips) skips.push_back({{"source", s.source}, {"dest", s.dest}});

  return {{"schema", kArchitectureSchema},
          {"input_shape", shape_json(arch.input)},
          {"kernel_size", kKernelSize},
          {"fc_channels", arch.fc_channels},
          {"blocks", std::move(blocks)},
          {"skips", std::move(skips)},
          {"mask_head",
           {{"in_channels", arch.head.in_channels},
            {"out_channels", arch.head.out_channels},
            {"kernel_size", kKernelSize},
            {"activation", "linear"}}},
          {"params", count_params(arch)},
          {"flops", count_flops(arch)}};
}

ArchitectureSpec parse_architecture_message(const json& message) {
  try {
    const auto schema = message.at("schema").get<std::string>();
    if (schema != kArchitectureSchema) {
      throw MessageError(fmt::format("unsupported architecture schema '{}'", schema));
    }
    if (message.at("kernel_size").get<int>() != kKernelSize) {
      throw MessageError("only 3x3 kernels are supported");
    }
    ArchitectureSpec arch;
    arch.input = shape_from(message.at("input_shape"));
    arch.fc_channels = message.at("fc_channels").get<int>();
    for (const auto& jb : message.at("blocks")) {
      BlockSpec block;
      block.in_channels = jb.at("in_channels").get<int>();
      if (!jb.at("cg").is_null()) block.cg = group_from(jb.at("cg"));
      for (const auto& jp : jb.at("pooling_layers")) {
        block.active_pls.push_back(
            {jp.at("pool_time").get<int>(), jp.at("pool_freq").get<int>(), group_from(jp.at("pcg"))});
      }
      block.concat_width = jb.at("concat_width").get<int>();
      block.block_pcg = group_from(jb.at("pcg"));
      arch.blocks.push_back(std::move(block));
    }
    for (const auto& js : message.at("skips")) {
      arch.skips.push_back({js.at("source").get<int>(), js.at("dest").get<int>()});
    }
    const auto& head = message.at("mask_head");
    arch.head.in_channels = head.at("in_channels").get<int>();
    arch.head.out_channels = head.at("out_channels").get<int>();
    return arch;
  } catch (const json::exception& e) {
    throw MessageError(fmt::format("malformed architecture message: {}", e.what()));
  }
}

}  // namespace emrp
