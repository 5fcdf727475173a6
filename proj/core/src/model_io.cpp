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

#include "varid/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "varid/errors.hpp"

namespace varid {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (allowed.count(it.key()) == 0) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return get_or<T>(j, key, T{}, where);
}

std::vector<int> stiffness_map_from(const json& j, int n_joints, const std::string& where) {
  if (!j.contains("stiffness_map")) return {};
  const json& s = j.at("stiffness_map");
  if (s.is_string()) {
    const auto name = s.get<std::string>();
    if (name == "alternating") return StiffnessGrouping::alternating(n_joints).group_map();
    if (name == "uniform") return StiffnessGrouping::uniform(n_joints).group_map();
    throw ConfigError(where + ": stiffness_map must be an array, \"alternating\" or \"uniform\"");
  }
  return get_or<std::vector<int>>(j, "stiffness_map", {}, where);
}

ChainParams chain_params_from(const json& j, const std::string& where) {
  ChainParams p;
  p.link_lengths = require<std::vector<double>>(j, "link_lengths", where);
  p.link_masses = require<std::vector<double>>(j, "link_masses", where);
  p.gravity = get_or<double>(j, "gravity", p.gravity, where);
  p.rest_angles = get_or<std::vector<double>>(j, "rest_angles", {}, where);
  p.stiffness_map = stiffness_map_from(j, static_cast<int>(p.link_lengths.size()), where);
  p.damping = get_or<double>(j, "damping", 0.0, where);
  return p;
}

}  // namespace

LoadedModel::LoadedModel(std::shared_ptr<const Model> model, std::string kind,
                         std::string canonical_json)
    : model_(std::move(model)), kind_(std::move(kind)), canonical_(std::move(canonical_json)) {
  if (!model_) throw ConfigError("LoadedModel: null model");
}

const ChainModel* LoadedModel::chain() const {
  return dynamic_cast<const ChainModel*>(model_.get());
}

const ClosedLoopModel* LoadedModel::loop() const {
  return dynamic_cast<const ClosedLoopModel*>(model_.get());
}

std::uint64_t LoadedModel::hash() const { return fnv1a64(canonical_); }

Vector LoadedModel::reference_configuration() const {
  if (const ClosedLoopModel* l = loop()) return l->reference_configuration();
  if (const ChainModel* c = chain()) return c->rest_angles();
  return Vector::Zero(model_->config_dim());
}

LoadedModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("model: expected a JSON object");
  const auto type = require<std::string>(j, "type", "model");
  const std::string where = "model(" + type + ")";
  const std::string canonical = j.dump();

  try {
    if (type == "pendulum") {
      reject_unknown(j, {"type", "mass", "length", "gravity", "spring", "damping"}, where);
      PendulumParams p;
      p.mass = get_or<double>(j, "mass", p.mass, where);
      p.length = get_or<double>(j, "length", p.length, where);
      p.gravity = get_or<double>(j, "gravity", p.gravity, where);
      p.spring = get_or<bool>(j, "spring", p.spring, where);
      p.damping = get_or<double>(j, "damping", p.damping, where);
      return LoadedModel(std::make_shared<PendulumModel>(p), type, canonical);
    }
    if (type == "chain") {
      reject_unknown(j, {"type", "link_lengths", "link_masses", "gravity", "rest_angles",
                         "stiffness_map", "damping"},
                     where);
      return LoadedModel(std::make_shared<ChainModel>(chain_params_from(j, where)), type,
                         canonical);
    }
    if (type == "closed_loop") {
      if (j.contains("regular_polygon")) {
        reject_unknown(j, {"type", "regular_polygon", "gravity", "stiffness_map", "damping"},
                       where);
        const json& poly = j.at("regular_polygon");
        if (!poly.is_object()) throw ConfigError(where + ": regular_polygon must be an object");
        reject_unknown(poly, {"links", "radius", "total_mass"}, where + ".regular_polygon");
        const int n = require<int>(poly, "links", where);
        const auto radius = require<double>(poly, "radius", where);
        const auto mass = require<double>(poly, "total_mass", where);
        auto model = std::make_shared<ClosedLoopModel>(ClosedLoopModel::regular_polygon(
            n, radius, mass, stiffness_map_from(j, n, where),
            get_or<double>(j, "gravity", 0.0, where), get_or<double>(j, "damping", 0.0, where)));
        return LoadedModel(model, type, canonical);
      }
      reject_unknown(j, {"type", "link_lengths", "link_masses", "gravity", "rest_angles",
                         "stiffness_map", "damping", "anchor"},
                     where);
      const auto anchor = require<std::vector<double>>(j, "anchor", where);
      if (anchor.size() != 2) throw ConfigError(where + ": anchor must have two entries");
      return LoadedModel(std::make_shared<ClosedLoopModel>(chain_params_from(j, where),
                                                           Point2(anchor[0], anchor[1])),
                         type, canonical);
    }
  } catch (const DimensionError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError("model: unknown type '" + type + "'");
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace varid
