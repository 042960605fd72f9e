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

#ifndef EMRP_GENOME_HPP_
#define EMRP_GENOME_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace emrp {

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation : std::uint8_t { relu = 0, sigmoid = 1 };

std::string_view to_string(Activation a);

// Sizes of the fixed-length bitstring. Every field width except the number
// of blocks and pooling-layer slots is fixed by the encoding table.
struct GenomeLayout {
  static constexpr std::size_t kFcBits = 2;
  static constexpr std::size_t kCgBits = 5;   // C:2 S:1 A:1 A:1
  static constexpr std::size_t kPlBits = 9;   // PS_T:2 PS_F:2 PC:2 S:1 A:1 A:1
  static constexpr std::size_t kPcgBits = 3;  // S:1 A:1 A:1

  std::size_t num_blocks = 5;
  std::size_t max_pooling_layers = 2;

  constexpr std::size_t fs_bits() const {
    return num_blocks * (num_blocks - 1) / 2;
  }
  constexpr std::size_t block_bits() const {
    return kCgBits + kPlBits * max_pooling_layers + kPcgBits;
  }
  constexpr std::size_t total_bits() const {
    return kFcBits + fs_bits() + num_blocks * block_bits();
  }
  // Bit offset of block `i` (0-based).
  constexpr std::size_t block_offset(std::size_t i) const {
    return kFcBits + fs_bits() + i * block_bits();
  }

  friend bool operator==(const GenomeLayout&, const GenomeLayout&) = default;
};

// A fixed-length bitstring. Bits are stored one per byte, each 0 or 1.
class Genome {
 public:
  Genome() = default;
  explicit Genome(std::size_t size) : bits_(size, 0) {}
  explicit Genome(std::vector<std::uint8_t> bits);

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  // Ungrouped "0101..." form; used as the cache key.
  std::string to_bitstring() const;
  std::size_t hamming_distance(const Genome& other) const;

  friend bool operator==(const Genome&, const Genome&) = default;
  friend auto operator<=>(const Genome&, const Genome&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct ConvGroupGene {
  bool skip = false;
  Activation first = Activation::relu;
  Activation second = Activation::relu;

  friend bool operator==(const ConvGroupGene&, const ConvGroupGene&) = default;
};

struct PoolingLayerGene {
  int pool_time = 1;  // T
  int pool_freq = 1;  // F
  int channels = 16;  // PC
  ConvGroupGene pcg;

  // A 1x1 pool removes the layer from the block; PC and PCG are kept only
  // so they can be inherited.
  bool dormant() const { return pool_time == 1 && pool_freq == 1; }

  friend bool operator==(const PoolingLayerGene&,
                         const PoolingLayerGene&) = default;
};

struct BlockGene {
  int cg_channels = 0;  // 0 means direct connection
  ConvGroupGene cg;
  std::vector<PoolingLayerGene> pls;
  ConvGroupGene pcg;

  bool has_cg() const { return cg_channels != 0; }

  friend bool operator==(const BlockGene&, const BlockGene&) = default;
};

struct GeneRecord {
  int fc_channels = 32;
  // Skip flags in genome order: group q (destination block q+1), bit p
  // (source block p), 1-based, for q = 1..num_blocks-1 and p = 1..q.
  std::vector<bool> fs;
  std::vector<BlockGene> blocks;

  // True when block `source` feeds block `dest` (1-based, source < dest).
  bool skip(std::size_t source, std::size_t dest) const;
  void set_skip(std::size_t source, std::size_t dest, bool v);

  friend bool operator==(const GeneRecord&, const GeneRecord&) = default;
};

// Index of the flag for skip source->dest (1-based blocks) inside fs.
std::size_t fs_index(std::size_t source, std::size_t dest);

// Two-bit value tables, indexed by the code order 00, 01, 11, 10.
inline constexpr int kFcValues[4] = {32, 64, 128, 256};
inline constexpr int kCgChannelValues[4] = {0, 32, 64, 128};
inline constexpr int kPoolSizeValues[4] = {1, 4, 16, 64};
inline constexpr int kPcValues[4] = {16, 32, 64, 128};

GeneRecord decode_genome(const Genome& genome,
                         const GenomeLayout& layout = {});
Genome encode_record(const GeneRecord& record,
                     const GenomeLayout& layout = {});

// Canonical text: "FC|FS|B1|...|Bn". Parsing ignores '|' and whitespace.
std::string genome_to_text(const Genome& genome,
                           const GenomeLayout& layout = {});
Genome genome_from_text(std::string_view text,
                        const GenomeLayout& layout = {});

// The hand-designed starting architecture: FC=128, no inter-block skips,
// every block CG(64,S,ReLU,ReLU), PL1 (T=1,F=16,PC=64), PL2 dormant with
// payload PC=64 S=1, and block PCG (S, ReLU, ReLU).
Genome seed_genome();
GeneRecord seed_record();

void to_json(nlohmann::json& j, const GeneRecord& r);
void from_json(const nlohmann::json& j, GeneRecord& r);

}  // namespace emrp

#endif  // EMRP_GENOME_HPP_
