#pragma once

#include <string>

#include <json.hpp>

#include "stagehand/core.hpp"

namespace stagehand {

// Shared JSON encoders for the text documents (trajectories, configs, placements).
// `where` names the enclosing field in error messages.
CameraIntrinsics parse_intrinsics_json(const nlohmann::json& j, const std::string& where);
nlohmann::json intrinsics_json(const CameraIntrinsics& K);
CameraPose parse_pose_json(const nlohmann::json& j, const std::string& where);
nlohmann::json pose_json(const CameraPose& pose);

}  // namespace stagehand
