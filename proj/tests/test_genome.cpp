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

#include <doctest.h>

#include <random>

#include "emrp/genome.hpp"
#include "oracles.hpp"

using namespace emrp;

TEST_CASE("layout arithmetic") {
  GenomeLayout layout;
  CHECK(layout.fs_bits() == 10);
  CHECK(layout.block_bits() == 26);
  CHECK(layout.total_bits() == 142);

  for (std::size_t j = 0; j < 6; ++j) {
    GenomeLayout a{5, j}, b{5, j + 1};
    CHECK(b.total_bits() - a.total_bits() == 9 * 5);
  }
  CHECK(GenomeLayout{3, 2}.fs_bits() == 3);
  CHECK(GenomeLayout{3, 2}.total_bits() == 2 + 3 + 3 * 26);
}

TEST_CASE("fs index follows b-bb-bbb-bbbb reading order") {
  CHECK(fs_index(1, 2) == 0);
  CHECK(fs_index(1, 3) == 1);
  CHECK(fs_index(2, 3) == 2);
  CHECK(fs_index(1, 4) == 3);
  CHECK(fs_index(3, 4) == 5);
  CHECK(fs_index(1, 5) == 6);
  CHECK(fs_index(4, 5) == 9);
}

TEST_CASE("decode the Table II seed") {
  const Genome g = genome_from_text(oracle::seed_text());
  CHECK(g == seed_genome());

  const GeneRecord r = decode_genome(g);
  CHECK(r.fc_channels == 128);
  CHECK(r.fs == std::vector<bool>(10, false));
  REQUIRE(r.blocks.size() == 5);
  for (const auto& b : r.blocks) {
    CHECK(b.cg_channels == 64);
    CHECK(b.cg == ConvGroupGene{true, Activation::relu, Activation::relu});
    REQUIRE(b.pls.size() == 2);
    CHECK(b.pls[0].pool_time == 1);
    CHECK(b.pls[0].pool_freq == 16);
    CHECK(b.pls[0].channels == 64);
    CHECK(b.pls[0].pcg.skip);
    CHECK_FALSE(b.pls[0].dormant());
    CHECK(b.pls[1].dormant());
    CHECK(b.pls[1].channels == 64);  // gray payload survives decoding
    CHECK(b.pcg == ConvGroupGene{true, Activation::relu, Activation::relu});
  }
  CHECK(r == seed_record());
}

TEST_CASE("all-zero genome decodes to the minimal record") {
  const GeneRecord r = decode_genome(Genome(142));
  CHECK(r.fc_channels == 32);
  for (bool f : r.fs) CHECK_FALSE(f);
  for (const auto& b : r.blocks) {
    CHECK_FALSE(b.has_cg());
    CHECK_FALSE(b.cg.skip);
    CHECK(b.cg.first == Activation::relu);
    for (const auto& pl : b.pls) {
      CHECK(pl.dormant());
      CHECK(pl.channels == 16);
      CHECK_FALSE(pl.pcg.skip);
    }
    CHECK_FALSE(b.pcg.skip);
    CHECK(b.pcg.second == Activation::relu);
  }
}

TEST_CASE("two-bit value maps") {
  GeneRecord r = decode_genome(Genome(142));
  SUBCASE("pool size bits 11,10 give (16, 64)") {
    Genome g(142);
    const std::size_t pl = GenomeLayout{}.block_offset(0) + 5;
    g.set(pl, true);
    g.set(pl + 1, true);
    g.set(pl + 2, true);
    g.set(pl + 3, false);
    const auto d = decode_genome(g);
    CHECK(d.blocks[0].pls[0].pool_time == 16);
    CHECK(d.blocks[0].pls[0].pool_freq == 64);
  }
  SUBCASE("fc=256 encodes as 10") {
    r.fc_channels = 256;
    const Genome g = encode_record(r);
    CHECK(g[0]);
    CHECK_FALSE(g[1]);
  }
  SUBCASE("every table round trips") {
    for (int fc : kFcValues) {
      r.fc_channels = fc;
      CHECK(decode_genome(encode_record(r)).fc_channels == fc);
    }
    for (int c : kCgChannelValues) {
      r.blocks[2].cg_channels = c;
      CHECK(decode_genome(encode_record(r)).blocks[2].cg_channels == c);
    }
    for (int pc : kPcValues) {
      r.blocks[4].pls[1].channels = pc;
      CHECK(decode_genome(encode_record(r)).blocks[4].pls[1].channels == pc);
    }
  }
}

TEST_CASE("skip bit maps to source/dest pair") {
  Genome g(142);
  g.set(GenomeLayout::kFcBits + 0, true);  // first b: block 1 -> block 2
  g.set(GenomeLayout::kFcBits + 2, true);  // second bit of "bb": block 2 -> block 3
  const auto r = decode_genome(g);
  CHECK(r.skip(1, 2));
  CHECK(r.skip(2, 3));
  CHECK_FALSE(r.skip(1, 3));
  CHECK_FALSE(r.skip(2, 1));
}

TEST_CASE("defaulted dormant payload encodes as zero bits") {
  GeneRecord r = seed_record();
  r.blocks[0].pls[1] = PoolingLayerGene{};
  const Genome g = encode_record(r);
  const std::size_t pl2 = GenomeLayout{}.block_offset(0) + 5 + 9;
  for (std::size_t i = pl2; i < pl2 + 9; ++i) CHECK_FALSE(g[i]);
}

TEST_CASE("codec errors") {
  CHECK_THROWS_AS(decode_genome(Genome(141)), CodecError);
  CHECK_THROWS_WITH_AS(decode_genome(Genome(143)), "genome has 143 bits, layout expects 142",
                       CodecError);
  GeneRecord r = seed_record();
  r.fc_channels = 100;
  CHECK_THROWS_WITH_AS(encode_record(r), "illegal value 100 for field fc_channels", CodecError);
  r = seed_record();
  r.blocks[3].pls[0].pool_freq = 8;
  CHECK_THROWS_WITH_AS(encode_record(r), "illegal value 8 for field blocks[3].pls[0].pool_freq",
                       CodecError);
  r = seed_record();
  r.blocks[1].cg_channels = 16;
  CHECK_THROWS_AS(encode_record(r), CodecError);
  r = seed_record();
  r.fs.pop_back();
  CHECK_THROWS_AS(encode_record(r), CodecError);
  CHECK_THROWS_AS(Genome(std::vector<std::uint8_t>{0, 1, 2}), CodecError);
}

TEST_CASE("genome text") {
  SUBCASE("all zeros") {
    const Genome g = genome_from_text(std::string(142, '0'));
    CHECK(g == Genome(142));
  }
  SUBCASE("canonical grouping") {
    const std::string text = genome_to_text(seed_genome());
    CHECK(text == oracle::seed_text());
    CHECK(std::count(text.begin(), text.end(), '|') == 6);
  }
  SUBCASE("separators and whitespace are ignored") {
    std::string messy = oracle::seed_text();
    messy.insert(7, " \n\t");
    std::replace(messy.begin(), messy.end(), '|', ' ');
    CHECK(genome_to_text(genome_from_text(messy)) == oracle::seed_text());
  }
  SUBCASE("141 bits rejected") {
    CHECK_THROWS_WITH_AS(genome_from_text(std::string(141, '1')),
                         "genome text has 141 bits, layout expects 142", CodecError);
  }
  SUBCASE("non-binary character names its position") {
    std::string bad(142, '0');
    bad[17] = '2';
    CHECK_THROWS_WITH_AS(genome_from_text(bad), "invalid character '2' at position 17", CodecError);
  }
}

TEST_CASE("property: random genomes round trip through the record") {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 2000; ++i) {
    const Genome g = oracle::random_genome(rng);
    CHECK(encode_record(decode_genome(g)) == g);
    CHECK(genome_from_text(genome_to_text(g)) == g);
  }
}

TEST_CASE("property: round trip under other layouts") {
  std::mt19937_64 rng(7);
  for (GenomeLayout layout : {GenomeLayout{3, 1}, GenomeLayout{6, 3}, GenomeLayout{1, 0}}) {
    for (int i = 0; i < 200; ++i) {
      const Genome g = oracle::random_genome(rng, layout.total_bits());
      CHECK(encode_record(decode_genome(g, layout), layout) == g);
    }
  }
}

TEST_CASE("gene record json round trip") {
  const GeneRecord r = seed_record();
  nlohmann::json j = r;
  CHECK(j.get<GeneRecord>() == r);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"fs": []})").get<GeneRecord>(), CodecError);
}
