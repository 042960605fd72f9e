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

#include "emrp/genome.hpp"

#include <algorithm>
#include <cctype>
#include <span>

#include <fmt/format.h>

namespace emrp {

namespace {

// Code order of every two-bit field: 00, 01, 11, 10.
int two_bit_index(bool hi, bool lo) {
  if (!hi) return lo ? 1 : 0;
  return lo ? 2 : 3;
}

void write_two_bit(Genome& g, std::size_t pos, int index) {
  static constexpr bool kHi[4] = {false, false, true, true};
  static constexpr bool kLo[4] = {false, true, true, false};
  g.set(pos, kHi[index]);
  g.set(pos + 1, kLo[index]);
}

int lookup_index(std::span<const int> table, int value, std::string_view field) {
  auto it = std::find(table.begin(), table.end(), value);
  if (it == table.end()) {
    throw CodecError(fmt::format("illegal value {} for field {}", value, field));
  }
  return static_cast<int>(it - table.begin());
}

Activation read_act(const Genome& g, std::size_t pos) {
  return g[pos] ? Activation::sigmoid : Activation::relu;
}

ConvGroupGene read_sa(const Genome& g, std::size_t pos) {
  return {g[pos], read_act(g, pos + 1), read_act(g, pos + 2)};
}

void write_sa(Genome& g, std::size_t pos, const ConvGroupGene& c) {
  g.set(pos, c.skip);
  g.set(pos + 1, c.first == Activation::sigmoid);
  g.set(pos + 2, c.second == Activation::sigmoid);
}

void check_layout(const GenomeLayout& layout) {
  if (layout.num_blocks == 0) throw CodecError("layout needs at least one block");
}

}  // namespace

std::string_view to_string(Activation a) {
  return a == Activation::relu ? "relu" : "sigmoid";
}

Genome::Genome(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] > 1) {
      throw CodecError(fmt::format("bit {} has value {}", i, bits_[i]));
    }
  }
}

std::string Genome::to_bitstring() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) s[i] = '1';
  }
  return s;
}

std::size_t Genome::hamming_distance(const Genome& other) const {
  if (other.size() != size()) {
    throw CodecError(fmt::format("hamming distance between genomes of length {} and {}",
                                 size(), other.size()));
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) d += bits_[i] != other.bits_[i];
  return d;
}

std::size_t fs_index(std::size_t source, std::size_t dest) {
  return (dest - 2) * (dest - 1) / 2 + (source - 1);
}

bool GeneRecord::skip(std::size_t source, std::size_t dest) const {
  if (source < 1 || dest <= source) return false;
  auto idx = fs_index(source, dest);
  return idx < fs.size() && fs[idx];
}

void GeneRecord::set_skip(std::size_t source, std::size_t dest, bool v) {
  if (source < 1 || dest <= source) {
    throw CodecError(fmt::format("skip {}->{} is not a forward connection", source, dest));
  }
  auto idx = fs_index(source, dest);
  if (idx >= fs.size()) {
    throw CodecError(fmt::format("skip {}->{} outside the {} FS flags", source, dest, fs.size()));
  }
  fs[idx] = v;
}

GeneRecord decode_genome(const Genome& genome, const GenomeLayout& layout) {
  check_layout(layout);
  if (genome.size() != layout.total_bits()) {
    throw CodecError(fmt::format("genome has {} bits, layout expects {}",
                                 genome.size(), layout.total_bits()));
  }

  GeneRecord r;
  r.fc_channels = kFcValues[two_bit_index(genome[0], genome[1])];
  r.fs.resize(layout.fs_bits());
  for (std::size_t i = 0; i < r.fs.size(); ++i) r.fs[i] = genome[GenomeLayout::kFcBits + i];

  r.blocks.resize(layout.num_blocks);
  for (std::size_t b = 0; b < layout.num_blocks; ++b) {
    std::size_t pos = layout.block_offset(b);
    BlockGene& block = r.blocks[b];
    block.cg_channels = kCgChannelValues[two_bit_index(genome[pos], genome[pos + 1])];
    block.cg = read_sa(genome, pos + 2);
    pos += GenomeLayout::kCgBits;

    block.pls.resize(layout.max_pooling_layers);
    for (auto& pl : block.pls) {
      pl.pool_time = kPoolSizeValues[two_bit_index(genome[pos], genome[pos + 1])];
      pl.pool_freq = kPoolSizeValues[two_bit_index(genome[pos + 2], genome[pos + 3])];
      pl.channels = kPcValues[two_bit_index(genome[pos + 4], genome[pos + 5])];
      pl.pcg = read_sa(genome, pos + 6);
      pos += GenomeLayout::kPlBits;
    }
    block.pcg = read_sa(genome, pos);
  }
  return r;
}

Genome encode_record(const GeneRecord& record, const GenomeLayout& layout) {
  check_layout(layout);
  if (record.fs.size() != layout.fs_bits()) {
    throw CodecError(fmt::format("field fs has {} flags, layout expects {}",
                                 record.fs.size(), layout.fs_bits()));
  }
  if (record.blocks.size() != layout.num_blocks) {
    throw CodecError(fmt::format("field blocks has {} entries, layout expects {}",
                                 record.blocks.size(), layout.num_blocks));
  }

  Genome g(layout.total_bits());
  write_two_bit(g, 0, lookup_index(kFcValues, record.fc_channels, "fc_channels"));
  for (std::size_t i = 0; i < record.fs.size(); ++i) g.set(GenomeLayout::kFcBits + i, record.fs[i]);

  for (std::size_t b = 0; b < layout.num_blocks; ++b) {
    const BlockGene& block = record.blocks[b];
    if (block.pls.size() != layout.max_pooling_layers) {
      throw CodecError(fmt::format("field blocks[{}].pls has {} entries, layout expects {}", b,
                                   block.pls.size(), layout.max_pooling_layers));
    }
    std::size_t pos = layout.block_offset(b);
    write_two_bit(g, pos,
                  lookup_index(kCgChannelValues, block.cg_channels,
                               fmt::format("blocks[{}].cg_channels", b)));
    write_sa(g, pos + 2, block.cg);
    pos += GenomeLayout::kCgBits;

    for (std::size_t j = 0; j < block.pls.size(); ++j) {
      const PoolingLayerGene& pl = block.pls[j];
      write_two_bit(g, pos,
                    lookup_index(kPoolSizeValues, pl.pool_time,
                                 fmt::format("blocks[{}].pls[{}].pool_time", b, j)));
      write_two_bit(g, pos + 2,
                    lookup_index(kPoolSizeValues, pl.pool_freq,
                                 fmt::format("blocks[{}].pls[{}].pool_freq", b, j)));
      write_two_bit(g, pos + 4,
                    lookup_index(kPcValues, pl.channels,
                                 fmt::format("blocks[{}].pls[{}].channels", b, j)));
      write_sa(g, pos + 6, pl.pcg);
      pos += GenomeLayout::kPlBits;
    }
    write_sa(g, pos, block.pcg);
  }
  return g;
}

std::string genome_to_text(const Genome& genome, const GenomeLayout& layout) {
  if (genome.size() != layout.total_bits()) {
    throw CodecError(fmt::format("genome has {} bits, layout expects {}",
                                 genome.size(), layout.total_bits()));
  }
  const std::string bits = genome.to_bitstring();
  std::string out = bits.substr(0, GenomeLayout::kFcBits);
  out += '|';
  out += bits.substr(GenomeLayout::kFcBits, layout.fs_bits());
  for (std::size_t b = 0; b < layout.num_blocks; ++b) {
    out += '|';
    out += bits.substr(layout.block_offset(b), layout.block_bits());
  }
  return out;
}

Genome genome_from_text(std::string_view text, const GenomeLayout& layout) {
  std::vector<std::uint8_t> bits;
  bits.reserve(layout.total_bits());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '0' || c == '1') {
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (c != '|' && !std::isspace(static_cast<unsigned char>(c))) {
      throw CodecError(fmt::format("invalid character '{}' at position {}", c, i));
    }
  }
  if (bits.size() != layout.total_bits()) {
    throw CodecError(fmt::format("genome text has {} bits, layout expects {}",
                                 bits.size(), layout.total_bits()));
  }
  return Genome(std::move(bits));
}

GeneRecord seed_record() {
  const ConvGroupGene sa{true, Activation::relu, Activation::relu};
  GeneRecord r;
  r.fc_channels = 128;
  r.fs.assign(GenomeLayout{}.fs_bits(), false);
  r.blocks.resize(5);
  for (auto& block : r.blocks) {
    block.cg_channels = 64;
    block.cg = sa;
    block.pls = {PoolingLayerGene{1, 16, 64, sa}, PoolingLayerGene{1, 1, 64, sa}};
    block.pcg = sa;
  }
  return r;
}

Genome seed_genome() { return encode_record(seed_record()); }

// JSON form of a gene record, used by the `encode` subcommand.

namespace {

nlohmann::json sa_json(const ConvGroupGene& c) {
  return {{"skip", c.skip},
          {"activations", {std::string(to_string(c.first)), std::string(to_string(c.second))}}};
}

Activation parse_activation(const nlohmann::json& j) {
  const auto s = j.get<std::string>();
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw CodecError(fmt::format("unknown activation '{}'", s));
}

ConvGroupGene sa_from_json(const nlohmann::json& j) {
  ConvGroupGene c;
  if (j.is_null()) return c;
  c.skip = j.value("skip", false);
  if (j.contains("activations")) {
    const auto& a = j.at("activations");
    if (!a.is_array() || a.size() != 2) throw CodecError("activations must list two entries");
    c.first = parse_activation(a[0]);
    c.second = parse_activation(a[1]);
  }
  return c;
}

}  // namespace

void to_json(nlohmann::json& j, const GeneRecord& r) {
  j = nlohmann::json::object();
  j["fc_channels"] = r.fc_channels;
  j["fs"] = r.fs;
  auto blocks = nlohmann::json::array();
  for (const auto& b : r.blocks) {
    auto pls = nlohmann::json::array();
    for (const auto& pl : b.pls) {
      pls.push_back({{"pool_time", pl.pool_time},
                     {"pool_freq", pl.pool_freq},
                     {"channels", pl.channels},
                     {"pcg", sa_json(pl.pcg)}});
    }
    blocks.push_back({{"cg_channels", b.cg_channels},
                      {"cg", sa_json(b.cg)},
                      {"pls", std::move(pls)},
                      {"pcg", sa_json(b.pcg)}});
  }
  j["blocks"] = std::move(blocks);
}

void from_json(const nlohmann::json& j, GeneRecord& r) {
  try {
    r.fc_channels = j.at("fc_channels").get<int>();
    r.fs = j.at("fs").get<std::vector<bool>>();
    r.blocks.clear();
    for (const auto& jb : j.at("blocks")) {
      BlockGene b;
      b.cg_channels = jb.value("cg_channels", 0);
      b.cg = sa_from_json(jb.value("cg", nlohmann::json()));
      for (const auto& jp : jb.at("pls")) {
        PoolingLayerGene pl;
        pl.pool_time = jp.value("pool_time", 1);
        pl.pool_freq = jp.value("pool_freq", 1);
        pl.channels = jp.value("channels", 16);
        pl.pcg = sa_from_json(jp.value("pcg", nlohmann::json()));
        b.pls.push_back(pl);
      }
      b.pcg = sa_from_json(jb.value("pcg", nlohmann::json()));
      r.blocks.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CodecError(fmt::format("malformed gene record: {}", e.what()));
  }
}

}  // namespace emrp
