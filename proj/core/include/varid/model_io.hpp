// Copyright 2026 The varid Authors
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

// JSON model descriptions. The schema is documented in docs/model_schema.md.

#ifndef VARID_MODEL_IO_HPP_
#define VARID_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "varid/chain.hpp"
#include "varid/pendulum.hpp"

namespace varid {

class LoadedModel {
 public:
  LoadedModel(std::shared_ptr<const Model> model, std::string kind, std::string canonical_json);

  const Model& model() const { return *model_; }
  std::shared_ptr<const Model> shared() const { return model_; }
  // "pendulum", "chain" or "closed_loop".
  const std::string& kind() const { return kind_; }
  // Null for the pendulum.
  const ChainModel* chain() const;
  const ClosedLoopModel* loop() const;
  // Compact JSON with sorted keys; stable input for hashing.
  const std::string& canonical_json() const { return canonical_; }
  std::uint64_t hash() const;
  // Rest angles (chains), the projected rest shape (loops) or zero.
  Vector reference_configuration() const;

 private:
  std::shared_ptr<const Model> model_;
  std::string kind_;
  std::string canonical_;
};

// Throws ConfigError on malformed input.
LoadedModel model_from_json(const std::string& text);
LoadedModel load_model(const std::filesystem::path& path);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace varid

#endif  // VARID_MODEL_IO_HPP_
