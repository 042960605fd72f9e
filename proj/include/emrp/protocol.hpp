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

// Fitness wire protocol: one JSON object per line over the worker's stdin
// and stdout. See docs/protocol.md for the field-by-field schema.

#ifndef EMRP_PROTOCOL_HPP_
#define EMRP_PROTOCOL_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "emrp/fitness.hpp"

namespace emrp {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kProtocolVersion = "emrp-fitness/1";

inline constexpr int kDefaultTrainIterations = 1500;
inline constexpr int kDefaultBatchSize = 2;

struct Hello {
  std::string protocol = kProtocolVersion;
  std::string worker;               // empty on the engine side
  std::vector<std::string> modes;   // e.g. "train", "echo"
};

struct FitnessRequest {
  std::uint64_t request_id = 0;
  nlohmann::json architecture;  // see to_architecture_message()
  int train_iterations = kDefaultTrainIterations;
  int batch_size = kDefaultBatchSize;
  Split split = Split::test;
  std::uint64_t rng_seed = 0;
};

enum class ResultStatus : std::uint8_t { ok, error };

struct FitnessResult {
  std::optional<std::uint64_t> request_id;  // empty when the request could not be parsed
  ResultStatus status = ResultStatus::ok;
  double mean_sdr_db = 0.0;
  std::string diagnostics;
};

struct Shutdown {};

using Message = std::variant<Hello, FitnessRequest, FitnessResult, Shutdown>;

// Serialized form without the trailing newline.
std::string encode_message(const Message& message);
// Throws ProtocolError on malformed input.
Message decode_message(std::string_view line);

template <typename T>
T decode_as(std::string_view line) {
  Message m = decode_message(line);
  if (auto* v = std::get_if<T>(&m)) return std::move(*v);
  throw ProtocolError(fmt::format("unexpected message type in '{}'", line.substr(0, 80)));
}

}  // namespace emrp

#endif  // EMRP_PROTOCOL_HPP_
