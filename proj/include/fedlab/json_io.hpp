#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "fedlab/federation.hpp"

namespace fedlab {

/// Serializes like nlohmann::json::dump() but writes every floating-point
/// number with 17 significant digits so values round-trip exactly.
std::string dump_precise(const nlohmann::json& j, int indent = -1);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

nlohmann::json to_json(const ModelParams& params);
ModelParams model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const WeightedPrototypeSet& set);
WeightedPrototypeSet prototype_set_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GlobalPrototypes& protos);
GlobalPrototypes global_prototypes_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ClientUpdateMsg& msg);
ClientUpdateMsg client_update_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BroadcastMsg& msg);
BroadcastMsg broadcast_from_json(const nlohmann::json& j);

}  // namespace fedlab
