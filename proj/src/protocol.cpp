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

#include "emrp/protocol.hpp"

#include <cmath>

namespace emrp {

using nlohmann::json;

namespace {

std::uint64_t unsigned_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) throw ProtocolError(fmt::format("'{}' must be a non-negative integer", key));
  return v.get<std::uint64_t>();
}

struct Encoder {
  json operator()(const Hello& h) const {
    json j{{"type", "hello"}, {"protocol", h.protocol}};
    if (!h.worker.empty()) j["worker"] = h.worker;
    if (!h.modes.empty()) j["modes"] = h.modes;
    return j;
  }
  json operator()(const FitnessRequest& r) const {
    return {{"type", "evaluate"},
            {"request_id", r.request_id},
            {"architecture", r.architecture},
            {"train_iterations", r.train_iterations},
            {"batch_size", r.batch_size},
            {"split", to_string(r.split)},
            {"rng_seed", r.rng_seed}};
  }
  json operator()(const FitnessResult& r) const {
    json j{{"type", "result"},
           {"request_id", r.request_id ? json(*r.request_id) : json(nullptr)},
           {"status", r.status == ResultStatus::ok ? "ok" : "error"},
           {"diagnostics", r.diagnostics}};
    if (r.status == ResultStatus::ok) j["mean_sdr_db"] = r.mean_sdr_db;
    return j;
  }
  json operator()(const Shutdown&) const { return {{"type", "shutdown"}}; }
};

}  // namespace

std::string encode_message(const Message& message) {
  return std::visit(Encoder{}, message).dump();
}

Message decode_message(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(fmt::format("unparseable line: {}", e.what()));
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw ProtocolError("message lacks a string 'type' field");
  }
  const auto type = j["type"].get<std::string>();
  try {
    if (type == "hello") {
      Hello h;
      h.protocol = j.at("protocol").get<std::string>();
      h.worker = j.value("worker", std::string());
      h.modes = j.value("modes", std::vector<std::string>{});
      return h;
    }
    if (type == "evaluate") {
      FitnessRequest r;
      r.request_id = unsigned_field(j, "request_id");
      r.architecture = j.at("architecture");
      r.train_iterations = j.value("train_iterations", kDefaultTrainIterations);
      r.batch_size = j.value("batch_size", kDefaultBatchSize);
      r.split = split_from_string(j.value("split", std::string("test")));
      if (j.contains("rng_seed")) r.rng_seed = unsigned_field(j, "rng_seed");
      if (r.train_iterations <= 0 || r.batch_size <= 0) {
        throw ProtocolError("train_iterations and batch_size must be positive");
      }
      return r;
    }
    if (type == "result") {
      FitnessResult r;
      if (!j.at("request_id").is_null()) r.request_id = unsigned_field(j, "request_id");
      const auto status = j.at("status").get<std::string>();
      if (status == "ok") {
        r.status = ResultStatus::ok;
        r.mean_sdr_db = j.at("mean_sdr_db").get<double>();
        if (!std::isfinite(r.mean_sdr_db)) throw ProtocolError("mean_sdr_db is not finite");
      } else if (status == "error") {
        r.status = ResultStatus::error;
      } else {
        throw ProtocolError(fmt::format("unknown status '{}'", status));
      }
      r.diagnostics = j.value("diagnostics", std::string());
      return r;
    }
    if (type == "shutdown") return Shutdown{};
  } catch (const json::exception& e) {
    throw ProtocolError(fmt::format("malformed '{}' message: {}", type, e.what()));
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(fmt::format("malformed '{}' message: {}", type, e.what()));
  }
  throw ProtocolError(fmt::format("unknown message type '{}'", type));
}

}  // namespace emrp
